"""Principal component compression of response curves."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import DimensionError, InvalidInputError


@dataclass(frozen=True)
class PcaModel:
    mean: np.ndarray
    components: np.ndarray  # k x N, orthonormal rows
    explained_variance: np.ndarray

    @property
    def n_components(self) -> int:
        return self.components.shape[0]

    @property
    def n_features(self) -> int:
        return self.mean.size

    def transform(self, Y) -> np.ndarray:
        return pca_transform(self, Y)

    def inverse(self, S) -> np.ndarray:
        return pca_inverse(self, S)


def pca_fit(Y, k: int) -> PcaModel:
    """Fit the top-``k`` principal directions of the centred rows of ``Y``.

    Each component is oriented so its largest-magnitude entry is positive.
    Scores are not whitened.
    """
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    n, N = Y.shape
    if n < 2:
        raise InvalidInputError("PCA needs at least two rows")
    if not np.all(np.isfinite(Y)):
        raise InvalidInputError("PCA input must be finite")
    if int(k) != k or not 1 <= k <= min(n, N):
        raise InvalidInputError(f"k must lie in [1, {min(n, N)}], got {k!r}")
    k = int(k)
    mean = Y.mean(axis=0)
    _, s, vt = np.linalg.svd(Y - mean, full_matrices=False)
    components = vt[:k].copy()
    pivot = np.argmax(np.abs(components), axis=1)
    signs = np.sign(components[np.arange(k), pivot])
    signs[signs == 0] = 1.0
    components *= signs[:, None]
    variance = s[:k] ** 2 / (n - 1)
    return PcaModel(mean, components, variance)


def pca_transform(model: PcaModel, Y) -> np.ndarray:
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    if Y.shape[1] != model.n_features:
        raise DimensionError(f"expected {model.n_features} columns, got {Y.shape[1]}")
    return (Y - model.mean) @ model.components.T


def pca_inverse(model: PcaModel, S) -> np.ndarray:
    S = np.atleast_2d(np.asarray(S, dtype=float))
    if S.shape[1] != model.n_components:
        raise DimensionError(f"expected {model.n_components} score columns, got {S.shape[1]}")
    return S @ model.components + model.mean


def reconstruction_rmse(model: PcaModel, Y) -> float:
    """Root mean square residual of ``Y`` against its projection onto the model."""
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    resid = Y - pca_inverse(model, pca_transform(model, Y))
    return float(np.sqrt(np.mean(resid * resid)))


def pca_arrays(model: PcaModel, prefix: str = "pca_") -> dict:
    return {
        prefix + "mean": model.mean,
        prefix + "components": model.components,
        prefix + "explained_variance": model.explained_variance,
    }


def pca_from_arrays(data, prefix: str = "pca_") -> PcaModel:
    return PcaModel(
        np.asarray(data[prefix + "mean"], dtype=float),
        np.asarray(data[prefix + "components"], dtype=float),
        np.asarray(data[prefix + "explained_variance"], dtype=float),
    )
