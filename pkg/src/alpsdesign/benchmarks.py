"""Forward models and target generators.

Two analytic benchmarks (a damped sinusoid and logistic growth), the
emissivity targets used for photonic-surface design, and a forward model
built from a random forest that predicts PCA scores of a response curve.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field

import numpy as np

from .core import (
    Bounds,
    BoundsError,
    DimensionError,
    EmptyInputError,
    InvalidInputError,
    TargetCurve,
    as_seed,
)
from .forest import PRESETS, ForestModel, ForestParams, forest_arrays, forest_fit, forest_from_arrays, forest_predict
from .pca import PcaModel, pca_arrays, pca_fit, pca_from_arrays, pca_inverse, pca_transform, reconstruction_rmse

log = logging.getLogger(__name__)

RFPCA_FORMAT_VERSION = 1

SINUSOID_BOUNDS = Bounds([2.0, 0.05, 0.0, 3.0], [5.0, 0.4, 2.0, 15.0])
LOGISTIC_BOUNDS = Bounds([100.0, 100.0, 0.01], [1200.0, 1400.0, 0.4])
SINUSOID_DEFAULT_TRUE = np.array([3.5, 0.09, 1.0, 6.0])
LOGISTIC_DEFAULT_TRUE = np.array([900.0, 150.0, 0.25])

# laser power [W], scanning speed [mm/s], line spacing [um]
MATERIAL_BOUNDS = {
    "inconel": Bounds([0.2, 10.0, 15.0], [1.3, 700.0, 28.0]),
    "stainless": Bounds([0.2, 10.0, 1.0], [1.3, 700.0, 42.0]),
}
WAVELENGTH_RANGE = (2.5, 12.5)
N_WAVELENGTHS = 822
DATASET_PARAM_COLUMNS = ["power_w", "speed_mm_s", "spacing_um"]


def wavelength_grid(n: int = N_WAVELENGTHS) -> np.ndarray:
    return np.linspace(*WAVELENGTH_RANGE, n)


class ForwardModel:
    """Deterministic map from an M-dimensional design to an N-dimensional response.

    ``policy`` decides what happens to designs outside ``bounds``: ``"clip"``
    projects them onto the box, ``"strict"`` raises :class:`BoundsError`.
    """

    bounds: Bounds
    output_dim: int
    policy: str = "clip"

    @property
    def input_dim(self) -> int:
        return self.bounds.dim

    def _response(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _prepare(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.input_dim:
            raise DimensionError(f"expected {self.input_dim} design values, got {X.shape[1]}")
        if not np.all(np.isfinite(X)):
            raise InvalidInputError("design contains non-finite values")
        inside = np.all((X >= self.bounds.lower) & (X <= self.bounds.upper), axis=1)
        if not inside.all():
            if self.policy == "strict":
                raise BoundsError(f"design {X[~inside][0]} outside bounds")
            X = self.bounds.clip(X)
        return X

    def evaluate(self, x) -> np.ndarray:
        return self.evaluate_many(np.asarray(x, dtype=float).reshape(1, -1))[0]

    def evaluate_many(self, X) -> np.ndarray:
        return self._response(self._prepare(X))

    __call__ = evaluate


@dataclass
class SinusoidModel(ForwardModel):
    """``A(t) = a exp(-beta t) sin(gamma t + phi)`` for ``x = [a, beta, gamma, phi]``."""

    n_steps: int = 100
    t_end: float = 20 * np.pi
    bounds: Bounds = SINUSOID_BOUNDS
    policy: str = "clip"
    t_grid: np.ndarray = field(init=False)

    def __post_init__(self):
        self.t_grid = np.linspace(0.0, self.t_end, self.n_steps)
        self.output_dim = self.n_steps

    def _response(self, X):
        a, beta, gamma, phi = (X[:, i:i + 1] for i in range(4))
        t = self.t_grid[None, :]
        return a * np.exp(-beta * t) * np.sin(gamma * t + phi)


@dataclass
class LogisticModel(ForwardModel):
    """``P(t) = K / (1 + (K - P0)/P0 * exp(-r t))`` for ``x = [K, P0, r]``."""

    n_steps: int = 50
    t_end: float = 10.0
    bounds: Bounds = LOGISTIC_BOUNDS
    policy: str = "clip"
    t_grid: np.ndarray = field(init=False)

    def __post_init__(self):
        self.t_grid = np.linspace(0.0, self.t_end, self.n_steps)
        self.output_dim = self.n_steps

    def _response(self, X):
        K, P0, r = (X[:, i:i + 1] for i in range(3))
        if np.any(P0 <= 0):
            raise InvalidInputError("initial population P0 must be positive")
        t = self.t_grid[None, :]
        return K / (1.0 + (K - P0) / P0 * np.exp(-r * t))


def sinusoid_eval(x, model: SinusoidModel | None = None) -> np.ndarray:
    return (model or SinusoidModel(policy="strict")).evaluate(x)


def logistic_eval(x, model: LogisticModel | None = None) -> np.ndarray:
    return (model or LogisticModel(policy="strict")).evaluate(x)


def make_target(model: ForwardModel, x_true) -> TargetCurve:
    """Target curve realised by ``x_true``, so zero discrepancy is attainable."""
    x_true = np.asarray(x_true, dtype=float)
    if x_true.size != model.input_dim:
        raise DimensionError(f"expected {model.input_dim} coefficients, got {x_true.size}")
    if not model.bounds.contains(x_true):
        raise BoundsError(f"true design {x_true} outside bounds")
    absc = getattr(model, "t_grid", None)
    if absc is None:
        absc = getattr(model, "wavelengths", None)
    return TargetCurve(model.evaluate(x_true), abscissa=absc)


def step_target(wavelengths, cutoff: float = 4.6) -> TargetCurve:
    """Emissivity 1 below ``cutoff`` microns and 0 at or above it."""
    wavelengths = np.asarray(wavelengths, dtype=float).ravel()
    if wavelengths.size == 0:
        raise EmptyInputError("wavelength grid is empty")
    return TargetCurve(np.where(wavelengths < cutoff, 1.0, 0.0), abscissa=wavelengths)


def near_perfect_target(n: int = N_WAVELENGTHS, wavelengths=None) -> TargetCurve:
    if n < 1:
        raise InvalidInputError("target length must be >= 1")
    if wavelengths is None and n > 1:
        wavelengths = np.linspace(*WAVELENGTH_RANGE, n)
    return TargetCurve(np.ones(n), abscissa=wavelengths)


@dataclass
class RfPcaModel(ForwardModel):
    """Forest predicting PCA scores, mapped back to the full response curve."""

    forest: ForestModel = None
    pca: PcaModel = None
    bounds: Bounds = None
    wavelengths: np.ndarray | None = None
    policy: str = "clip"

    def __post_init__(self):
        if self.forest.input_dim != self.bounds.dim:
            raise DimensionError("forest input width does not match the bounds")
        if self.forest.output_dim != self.pca.n_components:
            raise DimensionError("forest outputs do not match the PCA component count")
        self.output_dim = self.pca.n_features
        if self.wavelengths is None:
            self.wavelengths = wavelength_grid(self.output_dim)

    def _response(self, X):
        return pca_inverse(self.pca, forest_predict(self.forest, X))

    def save(self, path) -> None:
        meta = {
            "format": "alpsdesign-rfpca",
            "version": RFPCA_FORMAT_VERSION,
            "bounds": self.bounds.to_dict(),
        }
        arrays = {"rfpca_meta": np.array(json.dumps(meta)), "wavelengths": self.wavelengths}
        arrays.update(forest_arrays(self.forest, prefix="forest_"))
        arrays.update(pca_arrays(self.pca))
        with open(path, "wb") as fh:
            np.savez_compressed(fh, **arrays)

    @classmethod
    def load(cls, path) -> "RfPcaModel":
        try:
            with np.load(path, allow_pickle=False) as data:
                meta = json.loads(str(data["rfpca_meta"]))
                if meta.get("format") != "alpsdesign-rfpca" or meta.get("version") != RFPCA_FORMAT_VERSION:
                    raise InvalidInputError(f"unsupported RF-PCA model file {path}")
                return cls(
                    forest=forest_from_arrays(data, prefix="forest_"),
                    pca=pca_from_arrays(data),
                    bounds=Bounds(**meta["bounds"]),
                    wavelengths=np.asarray(data["wavelengths"], dtype=float),
                )
        except KeyError as exc:
            raise InvalidInputError(f"corrupt RF-PCA model file: missing {exc}") from exc
        except (OSError, ValueError) as exc:
            if isinstance(exc, InvalidInputError):
                raise
            raise InvalidInputError(f"cannot read RF-PCA model {path}: {exc}") from exc


def read_dataset(path) -> tuple[np.ndarray, np.ndarray]:
    """Read ``power_w,speed_mm_s,spacing_um,e_0,...`` rows into (params, curves)."""
    with open(path, newline="") as fh:
        rows = [row for row in csv.reader(fh) if row]
    if not rows:
        raise InvalidInputError(f"{path} is empty")
    header, body = [h.strip() for h in rows[0]], rows[1:]
    n_curve = len(header) - len(DATASET_PARAM_COLUMNS)
    expected = DATASET_PARAM_COLUMNS + [f"e_{i}" for i in range(n_curve)]
    if n_curve < 1 or header != expected:
        raise InvalidInputError(f"{path}: header must be {','.join(DATASET_PARAM_COLUMNS)},e_0,...")
    if not body:
        raise InvalidInputError(f"{path} has no data rows")
    data = np.empty((len(body), len(header)))
    for i, row in enumerate(body):
        if len(row) != len(header):
            raise InvalidInputError(f"{path}: row {i + 1} has {len(row)} fields, expected {len(header)}")
        try:
            data[i] = [float(v) for v in row]
        except ValueError as exc:
            raise InvalidInputError(f"{path}: row {i + 1}: {exc}") from exc
    if not np.all(np.isfinite(data)):
        raise InvalidInputError(f"{path} contains non-finite values")
    curves = data[:, 3:]
    if curves.min() < 0.0 or curves.max() > 1.0:
        raise InvalidInputError(f"{path}: emissivity values must lie in [0, 1]")
    return data[:, :3], curves


def write_dataset(path, params, curves) -> None:
    params = np.atleast_2d(params)
    curves = np.atleast_2d(curves)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(DATASET_PARAM_COLUMNS + [f"e_{i}" for i in range(curves.shape[1])])
        for p, c in zip(params, curves):
            writer.writerow([repr(float(v)) for v in p] + [repr(float(v)) for v in c])


def synthetic_emissivity(params, bounds: Bounds = MATERIAL_BOUNDS["stainless"], wavelengths=None) -> np.ndarray:
    """Smooth analytic stand-in for measured emissivity curves, values in [0, 1].

    Higher power raises the plateau, speed sharpens the edge and spacing
    moves the cutoff wavelength.
    """
    wl = wavelength_grid() if wavelengths is None else np.asarray(wavelengths, dtype=float)
    u = (np.atleast_2d(params) - bounds.lower) / np.where(bounds.width > 0, bounds.width, 1.0)
    p, s, d = (u[:, i:i + 1] for i in range(3))
    level = 0.2 + 0.7 * p * (1.0 - 0.4 * s)
    cutoff = 4.0 + 6.0 * d
    steep = 0.5 + 1.5 * s
    edge = 1.0 / (1.0 + np.exp(steep * (wl[None, :] - cutoff)))
    ripple = 0.02 * (1.0 + np.sin(wl[None, :] * (1.0 + 2.0 * p)))
    return np.clip(0.04 + level * edge + ripple, 0.0, 1.0)


def synthetic_dataset(n: int, seed=0, material: str = "stainless", n_wavelengths: int = N_WAVELENGTHS):
    bounds = MATERIAL_BOUNDS[material]
    rng = as_seed(seed).generator()
    params = bounds.lower + rng.random((n, 3)) * bounds.width
    return params, synthetic_emissivity(params, bounds, wavelength_grid(n_wavelengths))


def _curve_rmse(pred, truth) -> np.ndarray:
    return np.sqrt(np.mean((pred - truth) ** 2, axis=1))


@dataclass
class TrainingReport:
    n_train: int
    n_test: int
    n_components: int
    train_rmse: float
    test_rmse: float | None
    test_rmse_max: float | None
    test_rmse_std: float | None
    pca_test_rmse: float | None

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def rfpca_fit(params, curves, pca_k: int = 10, forest_params: ForestParams | str = "experimental",
              seed=0, test_fraction: float = 0.25, bounds: Bounds | None = None,
              wavelengths=None) -> tuple[RfPcaModel, TrainingReport]:
    """Fit PCA on the training curves and a forest from parameters to PCA scores."""
    params = np.atleast_2d(np.asarray(params, dtype=float))
    curves = np.atleast_2d(np.asarray(curves, dtype=float))
    if params.shape[0] != curves.shape[0]:
        raise DimensionError("parameter and curve row counts differ")
    if isinstance(forest_params, str):
        forest_params = PRESETS[forest_params]
    seed = as_seed(seed)
    n = params.shape[0]
    n_test = int(np.floor(test_fraction * n)) if n > 1 else 0
    order = seed.child("split").generator().permutation(n)
    test_idx, train_idx = order[:n_test], order[n_test:]
    Xtr, Ytr = params[train_idx], curves[train_idx]

    if Xtr.shape[0] == 1:
        # a single curve: mean-only PCA with one inert direction, constant predictor
        components = np.zeros((1, Ytr.shape[1]))
        components[0, 0] = 1.0
        pca = PcaModel(Ytr[0].copy(), components, np.zeros(1))
    else:
        k = min(int(pca_k), Xtr.shape[0], Ytr.shape[1])
        if k < pca_k:
            log.warning("reducing PCA components from %d to %d", pca_k, k)
        pca = pca_fit(Ytr, k)
    scores = pca_transform(pca, Ytr)
    forest = forest_fit(Xtr, scores, forest_params, seed.child("forest"))
    if bounds is None:
        bounds = Bounds(params.min(axis=0), params.max(axis=0))
    model = RfPcaModel(forest=forest, pca=pca, bounds=bounds, wavelengths=wavelengths)

    train_err = float(np.mean(_curve_rmse(model._response(Xtr), Ytr)))
    if n_test:
        Xte, Yte = params[test_idx], curves[test_idx]
        per_curve = _curve_rmse(model._response(Xte), Yte)
        report = TrainingReport(len(train_idx), n_test, pca.n_components, train_err,
                                float(per_curve.mean()), float(per_curve.max()),
                                float(per_curve.std()), reconstruction_rmse(pca, Yte))
    else:
        report = TrainingReport(len(train_idx), 0, pca.n_components, train_err, None, None, None, None)
    return model, report


def rfpca_train(csv_path, pca_k: int = 10, forest_preset: str = "experimental", seed=0,
                material: str | None = None, test_fraction: float = 0.25):
    """Train an RF-PCA forward model from a dataset CSV; returns ``(model, report)``."""
    params, curves = read_dataset(csv_path)
    bounds = MATERIAL_BOUNDS[material] if material else None
    return rfpca_fit(params, curves, pca_k=pca_k, forest_params=forest_preset, seed=seed,
                     test_fraction=test_fraction, bounds=bounds)
