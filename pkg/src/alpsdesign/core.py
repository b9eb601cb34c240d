"""Domain types, the RMSE discrepancy, the evaluation ledger and seeding."""

from __future__ import annotations

import csv
import hashlib
from dataclasses import dataclass, field
from pathlib import Path

import numba
import numpy as np


class AlpsError(Exception):
    """Base class for all errors raised by this package."""


class DimensionError(AlpsError, ValueError):
    pass


class InvalidInputError(AlpsError, ValueError):
    pass


class EmptyInputError(AlpsError, ValueError):
    pass


class BudgetError(AlpsError, RuntimeError):
    """Raised when an evaluation is requested on an exhausted ledger."""


class BoundsError(AlpsError, ValueError):
    pass


class NumericalError(AlpsError, ArithmeticError):
    pass


def _as_vector(values, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.ndim != 1:
        raise DimensionError(f"{name} must be one-dimensional, got shape {arr.shape}")
    return arr


@dataclass(frozen=True)
class Bounds:
    """Box constraints ``lower <= x <= upper`` on an M-dimensional design."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = _as_vector(self.lower, "lower")
        upper = _as_vector(self.upper, "upper")
        if lower.size == 0 or lower.shape != upper.shape:
            raise DimensionError("lower and upper must have the same length >= 1")
        if not (np.all(np.isfinite(lower)) and np.all(np.isfinite(upper))):
            raise InvalidInputError("bounds must be finite")
        if np.any(lower > upper):
            raise InvalidInputError("lower must not exceed upper")
        lower.flags.writeable = False
        upper.flags.writeable = False
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @property
    def dim(self) -> int:
        return self.lower.size

    @property
    def width(self) -> np.ndarray:
        return self.upper - self.lower

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= self.lower) and np.all(x <= self.upper))

    def clip(self, x) -> np.ndarray:
        return np.clip(np.asarray(x, dtype=float), self.lower, self.upper)

    def to_dict(self) -> dict:
        return {"lower": self.lower.tolist(), "upper": self.upper.tolist()}


@dataclass(frozen=True)
class DesignVector:
    values: np.ndarray

    def __post_init__(self):
        values = _as_vector(self.values, "design")
        if not np.all(np.isfinite(values)):
            raise InvalidInputError("design vector must be finite")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    def __len__(self):
        return self.values.size


@dataclass(frozen=True)
class TargetCurve:
    """Target response vector with an optional strictly increasing abscissa."""

    values: np.ndarray
    abscissa: np.ndarray | None = None

    def __post_init__(self):
        values = _as_vector(self.values, "target")
        if values.size == 0:
            raise EmptyInputError("target curve is empty")
        if not np.all(np.isfinite(values)):
            raise InvalidInputError("target curve must be finite")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)
        if self.abscissa is not None:
            absc = _as_vector(self.abscissa, "abscissa")
            if absc.shape != values.shape:
                raise DimensionError("abscissa and values differ in length")
            if not np.all(np.isfinite(absc)) or np.any(np.diff(absc) <= 0):
                raise InvalidInputError("abscissa must be finite and strictly increasing")
            absc.flags.writeable = False
            object.__setattr__(self, "abscissa", absc)

    def __len__(self):
        return self.values.size

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            if self.abscissa is None:
                writer.writerow(["value"])
                writer.writerows([[repr(float(v))] for v in self.values])
            else:
                writer.writerow(["abscissa", "value"])
                writer.writerows(
                    [repr(float(a)), repr(float(v))] for a, v in zip(self.abscissa, self.values)
                )

    @classmethod
    def from_csv(cls, path) -> "TargetCurve":
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        if not rows:
            raise EmptyInputError(f"{path} is empty")
        header, body = rows[0], rows[1:]
        data = np.array([[float(v) for v in row] for row in body if row], dtype=float)
        if data.size == 0:
            raise EmptyInputError(f"{path} has no rows")
        if len(header) == 1:
            return cls(data[:, 0])
        if len(header) == 2:
            return cls(data[:, 1], abscissa=data[:, 0])
        raise InvalidInputError(f"unexpected target header {header!r}")


@numba.njit(cache=True)
def _rmse_kernel(R, t):
    # squares are accumulated left to right so equal inputs always round identically
    n, k = R.shape
    out = np.empty(n)
    for i in range(n):
        acc = 0.0
        for j in range(k):
            d = R[i, j] - t[j]
            acc += d * d
        out[i] = np.sqrt(acc / k)
    return out


def rmse(a, b) -> float:
    """Root mean square difference between two equal-length vectors."""
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if a.shape != b.shape:
        raise DimensionError(f"length mismatch: {a.size} vs {b.size}")
    if a.size == 0:
        raise EmptyInputError("rmse of empty vectors")
    if np.isnan(a).any() or np.isnan(b).any():
        raise InvalidInputError("rmse input contains NaN")
    return float(_rmse_kernel(np.ascontiguousarray(a).reshape(1, -1), np.ascontiguousarray(b))[0])


def rmse_rows(responses, target) -> np.ndarray:
    """Row-wise :func:`rmse` of a response matrix against one target vector."""
    responses = np.atleast_2d(np.asarray(responses, dtype=float))
    target = np.asarray(target, dtype=float).ravel()
    if responses.shape[1] != target.size:
        raise DimensionError(f"response width {responses.shape[1]} != target length {target.size}")
    return _rmse_kernel(np.ascontiguousarray(responses), np.ascontiguousarray(target))


@dataclass(frozen=True)
class EvaluationRecord:
    design: DesignVector
    response: np.ndarray
    discrepancy: float


@dataclass
class EvaluationLedger:
    """Append-only log of true-model evaluations against one target.

    The ledger is the evaluation budget: :meth:`record` refuses to append once
    ``budget`` rows are stored.
    """

    target: TargetCurve
    budget: int
    records: list[EvaluationRecord] = field(default_factory=list)

    def __post_init__(self):
        if int(self.budget) < 1:
            raise InvalidInputError("budget must be a positive integer")
        self.budget = int(self.budget)

    def __len__(self):
        return len(self.records)

    @property
    def remaining(self) -> int:
        return self.budget - len(self.records)

    @property
    def exhausted(self) -> bool:
        return len(self.records) >= self.budget

    def record(self, design, response) -> EvaluationRecord:
        return ledger_record(self, design, response)

    @property
    def best(self) -> EvaluationRecord:
        if not self.records:
            raise EmptyInputError("ledger is empty")
        # np.argmin returns the first minimum: earliest insertion wins ties
        return self.records[int(np.argmin(self.discrepancies))]

    @property
    def discrepancies(self) -> np.ndarray:
        return np.array([r.discrepancy for r in self.records], dtype=float)

    @property
    def designs(self) -> np.ndarray:
        return np.array([r.design.values for r in self.records], dtype=float)

    @property
    def responses(self) -> np.ndarray:
        return np.array([r.response for r in self.records], dtype=float)

    def to_csv(self, path, responses_path=None) -> None:
        """Write ``x_0..x_{M-1},eps`` rows; responses optionally to a sibling file."""
        if not self.records:
            raise EmptyInputError("ledger is empty")
        dim = len(self.records[0].design)
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow([f"x_{i}" for i in range(dim)] + ["eps"])
            for rec in self.records:
                writer.writerow([repr(float(v)) for v in rec.design.values] + [repr(rec.discrepancy)])
        if responses_path is not None:
            with open(responses_path, "w", newline="") as fh:
                writer = csv.writer(fh)
                for rec in self.records:
                    writer.writerow([repr(float(v)) for v in rec.response])


def ledger_record(ledger: EvaluationLedger, design, response) -> EvaluationRecord:
    """Score ``response`` against the ledger target and append it."""
    if ledger.exhausted:
        raise BudgetError(f"evaluation budget of {ledger.budget} exhausted")
    if not isinstance(design, DesignVector):
        design = DesignVector(design)
    response = _as_vector(response, "response").copy()
    if response.size != len(ledger.target):
        raise DimensionError(
            f"response length {response.size} != target length {len(ledger.target)}"
        )
    response.flags.writeable = False
    rec = EvaluationRecord(design, response, rmse(response, ledger.target.values))
    ledger.records.append(rec)
    return rec


def best_so_far_trace(ledger_or_values) -> np.ndarray:
    """Running minimum of the discrepancies in insertion order."""
    if isinstance(ledger_or_values, EvaluationLedger):
        values = ledger_or_values.discrepancies
    else:
        values = np.asarray(ledger_or_values, dtype=float).ravel()
    if values.size == 0:
        raise EmptyInputError("cannot trace an empty ledger")
    return np.minimum.accumulate(values)


_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class RngSeed:
    """Master seed with a splittable child-seed derivation.

    A child seed is the first 8 bytes of ``blake2b(master | label | index)``,
    so children are independent of the order and thread in which they are
    requested.
    """

    master: int

    def __post_init__(self):
        object.__setattr__(self, "master", int(self.master) & _MASK64)

    def child(self, label: str, index: int = 0) -> "RngSeed":
        h = hashlib.blake2b(digest_size=8)
        h.update(self.master.to_bytes(8, "little"))
        h.update(label.encode())
        h.update(b"\x00")
        h.update(int(index).to_bytes(8, "little", signed=True))
        return RngSeed(int.from_bytes(h.digest(), "little"))

    def generator(self) -> np.random.Generator:
        return np.random.Generator(np.random.PCG64(self.master))


def as_seed(seed) -> RngSeed:
    if isinstance(seed, RngSeed):
        return seed
    if seed is None:
        raise InvalidInputError("a seed is required; pass an int or RngSeed")
    return RngSeed(int(seed))


def ensure_dir(path) -> Path:
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    return path
