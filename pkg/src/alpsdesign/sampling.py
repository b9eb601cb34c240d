"""Latin Hypercube and uniform sampling inside box bounds."""

from __future__ import annotations

import numpy as np

from .core import Bounds, InvalidInputError, as_seed


def _check_n(n) -> int:
    if int(n) != n or n < 1:
        raise InvalidInputError(f"sample count must be a positive integer, got {n!r}")
    return int(n)


def lhs_unit(n: int, dim: int, rng: np.random.Generator) -> np.ndarray:
    """Stratified samples in [0, 1)^dim, one per stratum ``[k/n, (k+1)/n)`` per column."""
    u = rng.random((n, dim))
    strata = np.column_stack([rng.permutation(n) for _ in range(dim)]) if dim else np.empty((n, 0))
    pts = (strata + u) / n
    # (k + u)/n can round up to (k+1)/n for u close to 1
    return np.minimum(pts, np.nextafter((strata + 1) / n, -np.inf))


def lhs(n: int, bounds: Bounds, seed) -> np.ndarray:
    """Latin Hypercube sample of ``n`` rows inside ``bounds``.

    Each coordinate lands in its own equal-width stratum; positions inside a
    stratum are uniform. Degenerate dimensions (``lower == upper``) return the
    constant coordinate.
    """
    n = _check_n(n)
    rng = as_seed(seed).generator()
    unit = lhs_unit(n, bounds.dim, rng)
    return bounds.clip(bounds.lower + unit * bounds.width)


def uniform(n: int, bounds: Bounds, seed) -> np.ndarray:
    """``n`` i.i.d. uniform rows inside ``bounds``."""
    n = _check_n(n)
    rng = as_seed(seed).generator()
    return bounds.clip(bounds.lower + rng.random((n, bounds.dim)) * bounds.width)
