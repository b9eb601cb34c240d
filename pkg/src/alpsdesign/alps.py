"""Greedy surrogate-driven batch search for inverse design.

Each round draws a fresh Latin Hypercube pool, ranks it by the discrepancy
between the forest surrogate's predicted curve and the target, evaluates the
best ``n_batch`` candidates on the true model and refits the surrogate from
scratch on everything seen so far.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import (
    AlpsError,
    Bounds,
    DimensionError,
    EvaluationLedger,
    EvaluationRecord,
    InvalidInputError,
    TargetCurve,
    as_seed,
    rmse,
    rmse_rows,
)
from .forest import ForestModel, ForestParams, forest_arrays, forest_fit, forest_from_arrays, forest_predict
from .sampling import lhs

WARM_START_FORMAT_VERSION = 1


class SelectionMismatch(AlpsError, AssertionError):
    """The vectorised batch selection disagreed with the brute-force check."""


@dataclass(frozen=True)
class WarmStartModel:
    """A forest surrogate saved from an earlier run, reused to rank initial designs."""

    forest: ForestModel
    bounds: Bounds
    target_length: int

    def predict(self, X) -> np.ndarray:
        return forest_predict(self.forest, X)


@dataclass
class AlpsConfig:
    n_init: int = 5
    n_batch: int = 5
    n_s: int = 600
    n_max: int = 100
    forest_params: ForestParams = field(default_factory=ForestParams)
    warm_start: WarmStartModel | ForestModel | str | Path | None = None
    verify_selection: bool = False

    def __post_init__(self):
        for name in ("n_init", "n_batch", "n_s", "n_max"):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise InvalidInputError(f"{name} must be a positive integer, got {value!r}")
        if self.n_init > self.n_max:
            raise InvalidInputError(f"n_init={self.n_init} exceeds the budget n_max={self.n_max}")
        if self.n_batch > self.n_s:
            raise InvalidInputError(f"n_batch={self.n_batch} exceeds the pool size n_s={self.n_s}")
        if self.warm_start is not None and self.n_init > self.n_s:
            raise InvalidInputError("a warm start picks n_init designs from n_s candidates")


@dataclass
class AlpsResult:
    ledger: EvaluationLedger
    best: EvaluationRecord
    final_surrogate: ForestModel

    @property
    def trace(self) -> np.ndarray:
        return np.minimum.accumulate(self.ledger.discrepancies)


def _selection_order(pred_eps: np.ndarray) -> np.ndarray:
    # stable sort: equal predicted discrepancies keep candidate order
    return np.argsort(pred_eps, kind="stable")


def _brute_force_selection(predictions: np.ndarray, target: np.ndarray, n_batch: int) -> list[int]:
    scored = []
    for i, row in enumerate(predictions):
        scored.append((rmse(row, target), i))
    scored.sort()
    return [i for _, i in scored[:n_batch]]


def greedy_select(surrogate, candidates, target: TargetCurve, n_batch: int,
                  verify: bool = False, return_indices: bool = False):
    """Return the ``n_batch`` candidates with the smallest predicted discrepancy.

    Rows come back in ascending order of predicted discrepancy; ties keep the
    lower candidate index. ``surrogate`` is a :class:`ForestModel` or anything
    with a ``predict`` method returning one curve per row.
    """
    candidates = np.atleast_2d(np.asarray(candidates, dtype=float))
    if n_batch < 1 or candidates.shape[0] < n_batch:
        raise InvalidInputError(
            f"need at least n_batch={n_batch} candidates, got {candidates.shape[0]}"
        )
    target_values = target.values if isinstance(target, TargetCurve) else np.asarray(target, float)
    if isinstance(surrogate, ForestModel):
        predictions = forest_predict(surrogate, candidates)
    else:
        predictions = np.atleast_2d(surrogate.predict(candidates))
    pred_eps = rmse_rows(predictions, target_values)
    chosen = _selection_order(pred_eps)[:n_batch]
    if verify:
        expected = _brute_force_selection(predictions, target_values, n_batch)
        if list(chosen) != expected:
            raise SelectionMismatch(f"selected {list(chosen)}, brute force gives {expected}")
    if return_indices:
        return candidates[chosen], chosen
    return candidates[chosen]


def _evaluate_into(ledger: EvaluationLedger, model, X: np.ndarray) -> None:
    for x in X:
        ledger.record(x, model.evaluate(x))


def _resolve_warm_start(ws, bounds: Bounds, target: TargetCurve) -> WarmStartModel:
    if isinstance(ws, (str, Path)):
        ws = warm_start_load(ws, bounds=bounds)
    elif isinstance(ws, ForestModel):
        ws = WarmStartModel(ws, bounds, ws.output_dim)
    if ws.forest.input_dim != bounds.dim:
        raise DimensionError(
            f"warm-start model expects {ws.forest.input_dim} inputs, bounds have {bounds.dim}"
        )
    if ws.forest.output_dim != len(target):
        raise DimensionError(
            f"warm-start model predicts {ws.forest.output_dim} outputs, target has {len(target)}"
        )
    return ws


def alps_run(target: TargetCurve, model, bounds: Bounds, config: AlpsConfig | None = None,
             seed=0, ledger: EvaluationLedger | None = None) -> AlpsResult:
    """Run the batch greedy search until ``config.n_max`` true evaluations are spent.

    If the forward model raises, the exception propagates with the partially
    filled ledger attached as ``exc.ledger``.
    """
    config = config or AlpsConfig()
    seed = as_seed(seed)
    if getattr(model, "output_dim", len(target)) != len(target):
        raise DimensionError(f"model output length {model.output_dim} != target length {len(target)}")
    if ledger is None:
        ledger = EvaluationLedger(target, config.n_max)
    elif ledger.budget < config.n_max or len(ledger):
        raise InvalidInputError("supplied ledger must be empty with budget >= n_max")

    try:
        if config.warm_start is not None:
            ws = _resolve_warm_start(config.warm_start, bounds, target)
            pool = lhs(config.n_s, bounds, seed.child("warm-pool"))
            X0 = greedy_select(ws.forest, pool, target, config.n_init, verify=config.verify_selection)
        else:
            X0 = lhs(config.n_init, bounds, seed.child("init"))
        _evaluate_into(ledger, model, X0)
        surrogate = forest_fit(ledger.designs, ledger.responses, config.forest_params,
                               seed.child("forest", 0))

        rnd = 0
        while len(ledger) < config.n_max:
            rnd += 1
            pool = lhs(config.n_s, bounds, seed.child("pool", rnd))
            take = min(config.n_batch, config.n_max - len(ledger))
            Xb = greedy_select(surrogate, pool, target, take, verify=config.verify_selection)
            _evaluate_into(ledger, model, Xb)
            surrogate = forest_fit(ledger.designs, ledger.responses, config.forest_params,
                                   seed.child("forest", rnd))
    except Exception as exc:
        exc.ledger = ledger
        raise

    return AlpsResult(ledger=ledger, best=ledger.best, final_surrogate=surrogate)


def warm_start_export(result: AlpsResult | ForestModel, path, bounds: Bounds | None = None) -> None:
    """Save a run's final surrogate with its bounds and target length (npz container)."""
    if isinstance(result, AlpsResult):
        forest = result.final_surrogate
        if bounds is None:
            designs = result.ledger.designs
            bounds = Bounds(designs.min(axis=0), designs.max(axis=0))
    else:
        forest = result
    if forest is None:
        raise InvalidInputError("result holds no trained surrogate")
    if bounds is None:
        raise InvalidInputError("bounds are required when exporting a bare forest")
    meta = {
        "format": "alpsdesign-warmstart",
        "version": WARM_START_FORMAT_VERSION,
        "bounds": bounds.to_dict(),
        "target_length": forest.output_dim,
    }
    arrays = {"warmstart_meta": np.array(json.dumps(meta))}
    arrays.update(forest_arrays(forest, prefix="forest_"))
    with open(path, "wb") as fh:
        np.savez_compressed(fh, **arrays)


def warm_start_load(path, bounds: Bounds | None = None) -> WarmStartModel:
    """Load a saved surrogate; ``bounds`` (if given) must match its input width."""
    try:
        with np.load(path, allow_pickle=False) as data:
            meta = json.loads(str(data["warmstart_meta"]))
            if meta.get("format") != "alpsdesign-warmstart":
                raise InvalidInputError(f"{path} is not a warm-start model")
            if meta.get("version") != WARM_START_FORMAT_VERSION:
                raise InvalidInputError(
                    f"warm-start format version {meta.get('version')} != {WARM_START_FORMAT_VERSION}"
                )
            forest = forest_from_arrays(data, prefix="forest_")
    except KeyError as exc:
        raise InvalidInputError(f"corrupt warm-start file: missing {exc}") from exc
    except (OSError, ValueError) as exc:
        if isinstance(exc, InvalidInputError):
            raise
        raise InvalidInputError(f"cannot read warm-start file {path}: {exc}") from exc
    if bounds is not None and bounds.dim != forest.input_dim:
        raise DimensionError(f"model expects {forest.input_dim} inputs, bounds have {bounds.dim}")
    return WarmStartModel(forest, Bounds(**meta["bounds"]), int(meta["target_length"]))
