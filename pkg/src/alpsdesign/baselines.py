"""Comparison optimizers sharing the ``(objective, bounds, budget, seed)`` signature.

Every optimizer spends its budget through an :class:`ObjectiveAdapter`, whose
ledger counts and refuses evaluations past the budget.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve, cholesky, solve_triangular
from scipy.special import ndtr

from .core import (
    Bounds,
    BudgetError,
    EvaluationLedger,
    InvalidInputError,
    NumericalError,
    TargetCurve,
    as_seed,
    best_so_far_trace,
)
from .sampling import lhs, uniform


class FunctionModel:
    """Wrap a scalar function ``fun(x)`` as a one-output forward model."""

    output_dim = 1

    def __init__(self, fun, bounds: Bounds):
        self.fun = fun
        self.bounds = bounds

    @property
    def input_dim(self):
        return self.bounds.dim

    def evaluate(self, x):
        return np.array([float(self.fun(np.asarray(x, dtype=float)))])


@dataclass
class ObjectiveAdapter:
    """Scalar objective ``rmse(model(x), target)`` that logs every call to a ledger."""

    model: object
    target: TargetCurve
    ledger: EvaluationLedger

    @classmethod
    def create(cls, model, target: TargetCurve, budget: int) -> "ObjectiveAdapter":
        return cls(model, target, EvaluationLedger(target, budget))

    @classmethod
    def from_function(cls, fun, bounds: Bounds, budget: int) -> "ObjectiveAdapter":
        """Minimise a nonnegative scalar ``fun``: the discrepancy is ``|fun(x)|``."""
        return cls.create(FunctionModel(fun, bounds), TargetCurve([0.0]), budget)

    @property
    def remaining(self) -> int:
        return self.ledger.remaining

    def __call__(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return self.ledger.record(x, self.model.evaluate(x)).discrepancy


@dataclass
class ConvergenceTrace:
    """Best-so-far discrepancy after each evaluation, plus the ledger it came from."""

    values: np.ndarray
    ledger: EvaluationLedger

    @property
    def final(self) -> float:
        return float(self.values[-1])

    @property
    def best_design(self) -> np.ndarray:
        return self.ledger.best.design.values

    @classmethod
    def from_ledger(cls, ledger: EvaluationLedger) -> "ConvergenceTrace":
        return cls(best_so_far_trace(ledger), ledger)


def _adapter(objective, bounds: Bounds, budget: int) -> ObjectiveAdapter:
    if int(budget) != budget or budget < 1:
        raise InvalidInputError(f"budget must be a positive integer, got {budget!r}")
    if isinstance(objective, ObjectiveAdapter):
        if objective.ledger.budget != budget or len(objective.ledger):
            raise InvalidInputError("objective ledger must be empty with the requested budget")
        return objective
    return ObjectiveAdapter.from_function(objective, bounds, int(budget))


def random_search(objective, bounds: Bounds, budget: int, seed=0) -> ConvergenceTrace:
    obj = _adapter(objective, bounds, budget)
    for x in uniform(budget, bounds, as_seed(seed).child("random")):
        obj(x)
    return ConvergenceTrace.from_ledger(obj.ledger)


def pso_minimize(objective, bounds: Bounds, budget: int, seed=0, swarm_size: int = 10,
                 inertia: float = 0.72, cognitive: float = 1.49, social: float = 1.49) -> ConvergenceTrace:
    """Global-best particle swarm with velocity clamped to the bound widths."""
    obj = _adapter(objective, bounds, budget)
    if budget < swarm_size:
        raise InvalidInputError(f"budget {budget} is smaller than the swarm ({swarm_size})")
    rng = as_seed(seed).child("pso").generator()
    width = bounds.width
    pos = bounds.clip(bounds.lower + rng.random((swarm_size, bounds.dim)) * width)
    vel = (rng.random((swarm_size, bounds.dim)) * 2.0 - 1.0) * 0.1 * width
    pbest = pos.copy()
    pbest_f = np.array([obj(x) for x in pos])
    g = int(np.argmin(pbest_f))
    gbest, gbest_f = pbest[g].copy(), pbest_f[g]

    while obj.remaining > 0:
        r1 = rng.random((swarm_size, bounds.dim))
        r2 = rng.random((swarm_size, bounds.dim))
        vel = inertia * vel + cognitive * r1 * (pbest - pos) + social * r2 * (gbest - pos)
        vel = np.clip(vel, -width, width)
        pos = bounds.clip(pos + vel)
        for i in range(swarm_size):
            if obj.remaining == 0:
                break
            f = obj(pos[i])
            if f < pbest_f[i]:
                pbest[i], pbest_f[i] = pos[i], f
                if f < gbest_f:
                    gbest, gbest_f = pos[i].copy(), f
    return ConvergenceTrace.from_ledger(obj.ledger)


def de_minimize(objective, bounds: Bounds, budget: int, seed=0, pop: int = 10, F: float = 0.8,
                CR: float = 0.9, strategy: str = "rand/1/bin") -> ConvergenceTrace:
    """Differential evolution, rand/1/bin with generational greedy selection."""
    if strategy != "rand/1/bin":
        raise InvalidInputError(f"unsupported DE strategy {strategy!r}")
    obj = _adapter(objective, bounds, budget)
    if budget < pop:
        raise InvalidInputError(f"budget {budget} is smaller than the population ({pop})")
    if pop < 4:
        raise InvalidInputError("rand/1 mutation needs a population of at least 4")
    rng = as_seed(seed).child("de").generator()
    dim = bounds.dim
    X = bounds.clip(bounds.lower + rng.random((pop, dim)) * bounds.width)
    fx = np.array([obj(x) for x in X])

    while obj.remaining > 0:
        new_X, new_f = X.copy(), fx.copy()
        for i in range(pop):
            if obj.remaining == 0:
                break
            others = [j for j in range(pop) if j != i]
            r1, r2, r3 = rng.choice(others, size=3, replace=False)
            mutant = X[r1] + F * (X[r2] - X[r3])
            cross = rng.random(dim) < CR
            cross[rng.integers(dim)] = True
            trial = bounds.clip(np.where(cross, mutant, X[i]))
            f = obj(trial)
            if f <= fx[i]:
                new_X[i], new_f[i] = trial, f
        X, fx = new_X, new_f
    return ConvergenceTrace.from_ledger(obj.ledger)


def simplex_search(fun, x0, bounds: Bounds, max_evals: int, step: float = 0.05,
                   alpha: float = 1.0, gamma: float = 2.0, rho: float = 0.5, sigma: float = 0.5):
    """Bounded Nelder-Mead on ``fun`` starting from ``x0``; vertices are clipped to ``bounds``.

    Stops after ``max_evals`` calls, or when ``fun`` raises :class:`BudgetError`.
    Returns ``(x_best, f_best)``.
    """
    dim = bounds.dim
    evals = 0
    best = [None, np.inf]

    def f(x):
        nonlocal evals
        if evals >= max_evals:
            raise BudgetError("simplex evaluation cap reached")
        evals += 1
        val = float(fun(x))
        if val < best[1]:
            best[0], best[1] = x.copy(), val
        return val

    x0 = bounds.clip(x0)
    simplex = [x0]
    for i in range(dim):
        v = x0.copy()
        delta = step * bounds.width[i]
        v[i] = v[i] + delta if v[i] + delta <= bounds.upper[i] else v[i] - delta
        simplex.append(bounds.clip(v))
    simplex = np.array(simplex)
    try:
        fs = np.array([f(v) for v in simplex])
        while True:
            order = np.argsort(fs, kind="stable")
            simplex, fs = simplex[order], fs[order]
            centroid = simplex[:-1].mean(axis=0)
            worst = simplex[-1]
            xr = bounds.clip(centroid + alpha * (centroid - worst))
            fr = f(xr)
            if fs[0] <= fr < fs[-2]:
                simplex[-1], fs[-1] = xr, fr
                continue
            if fr < fs[0]:
                xe = bounds.clip(centroid + gamma * (xr - centroid))
                fe = f(xe)
                if fe < fr:
                    simplex[-1], fs[-1] = xe, fe
                else:
                    simplex[-1], fs[-1] = xr, fr
                continue
            if fr < fs[-1]:
                xc = bounds.clip(centroid + rho * (xr - centroid))
                fc = f(xc)
                if fc <= fr:
                    simplex[-1], fs[-1] = xc, fc
                    continue
            else:
                xcc = bounds.clip(centroid + rho * (worst - centroid))
                fcc = f(xcc)
                if fcc < fs[-1]:
                    simplex[-1], fs[-1] = xcc, fcc
                    continue
            for i in range(1, dim + 1):
                simplex[i] = bounds.clip(simplex[0] + sigma * (simplex[i] - simplex[0]))
                fs[i] = f(simplex[i])
    except BudgetError:
        pass
    return best[0], best[1]


def nelder_mead(objective, bounds: Bounds, budget: int, seed=0) -> ConvergenceTrace:
    """Nelder-Mead from a uniform random start with 5% bound-width initial steps."""
    if budget < bounds.dim + 2:
        raise InvalidInputError(f"Nelder-Mead needs a budget of at least {bounds.dim + 2}")
    obj = _adapter(objective, bounds, budget)
    x0 = uniform(1, bounds, as_seed(seed).child("nm-start"))[0]
    simplex_search(obj, x0, bounds, max_evals=budget)
    return ConvergenceTrace.from_ledger(obj.ledger)


def matern52(A, B, length_scale: float = 1.0) -> np.ndarray:
    A = np.atleast_2d(A)
    B = np.atleast_2d(B)
    d2 = np.sum(A * A, 1)[:, None] + np.sum(B * B, 1)[None, :] - 2.0 * A @ B.T
    r = np.sqrt(np.maximum(d2, 0.0)) * (np.sqrt(5.0) / length_scale)
    return (1.0 + r + r * r / 3.0) * np.exp(-r)


class GpModel:
    """Zero-mean GP on standardised targets with a fixed Matern-5/2 kernel.

    The diagonal jitter starts at ``jitter`` and grows tenfold (up to 1e-2)
    until the Cholesky factorisation succeeds.
    """

    max_jitter = 1e-2

    def __init__(self, length_scale: float = 1.0, jitter: float = 1e-8):
        self.length_scale = length_scale
        self.jitter = jitter

    def fit(self, X, y) -> "GpModel":
        X = np.atleast_2d(np.asarray(X, dtype=float))
        y = np.asarray(y, dtype=float).ravel()
        self.y_mean = y.mean()
        std = y.std()
        self.y_std = std if std > 0 else 1.0
        z = (y - self.y_mean) / self.y_std
        K = matern52(X, X, self.length_scale)
        jitter = self.jitter
        while True:
            try:
                self.L = cholesky(K + jitter * np.eye(len(X)), lower=True)
                break
            except np.linalg.LinAlgError:
                jitter *= 10.0
                if jitter > self.max_jitter * (1 + 1e-9):
                    raise NumericalError(
                        f"GP kernel not positive definite up to jitter {self.max_jitter:g} "
                        f"(n={len(X)}, min pairwise distance "
                        f"{_min_distance(X):.3g}, length scale {self.length_scale:g})"
                    ) from None
        self.used_jitter = jitter
        self.X = X
        self.alpha = cho_solve((self.L, True), z)
        return self

    def predict(self, Xs):
        """Posterior mean and standard deviation in the original target units."""
        Xs = np.atleast_2d(np.asarray(Xs, dtype=float))
        Ks = matern52(Xs, self.X, self.length_scale)
        mu = Ks @ self.alpha
        v = solve_triangular(self.L, Ks.T, lower=True)
        var = np.maximum(1.0 - np.sum(v * v, axis=0), 0.0)
        return self.y_mean + self.y_std * mu, self.y_std * np.sqrt(var)


def _min_distance(X):
    if len(X) < 2:
        return float("inf")
    d = np.sqrt(np.maximum(np.sum((X[:, None, :] - X[None, :, :]) ** 2, axis=2), 0))
    return float(d[np.triu_indices(len(X), 1)].min())


def expected_improvement(mu, sigma, best: float, xi: float = 0.01) -> np.ndarray:
    """EI for minimisation: ``(best - mu - xi) Phi(z) + sigma phi(z)``, nonnegative."""
    mu = np.asarray(mu, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    imp = best - mu - xi
    out = np.maximum(imp, 0.0)
    pos = sigma > 1e-300
    z = imp[pos] / sigma[pos]
    ei = imp[pos] * ndtr(z) + sigma[pos] * np.exp(-0.5 * z * z) / np.sqrt(2.0 * np.pi)
    out[pos] = np.maximum(ei, 0.0)
    return out


def maximize_ei(gp: GpModel, best: float, bounds: Bounds, rng, xi: float = 0.01,
                n_probe: int = 512, n_refine: int = 4, refine_evals: int = 60) -> np.ndarray:
    """Near-argmax of EI: uniform probes, then bounded simplex refinement of the top few."""
    probes = bounds.clip(bounds.lower + rng.random((n_probe, bounds.dim)) * bounds.width)
    ei = expected_improvement(*gp.predict(probes), best, xi)
    top = np.argsort(-ei, kind="stable")[:n_refine]
    best_x, best_ei = probes[top[0]], ei[top[0]]
    for i in top:
        x, neg = simplex_search(lambda x: -expected_improvement(*gp.predict(x), best, xi)[0],
                                probes[i], bounds, max_evals=refine_evals)
        if -neg > best_ei:
            best_x, best_ei = x, -neg
    return best_x


def bo_minimize(objective, bounds: Bounds, budget: int, seed=0, n_init: int = 5,
                xi: float = 0.01, length_scale: float = 1.0) -> ConvergenceTrace:
    """GP-EI Bayesian optimisation on the scalar discrepancy, seeded with an LHS design."""
    if budget <= n_init:
        raise InvalidInputError(f"budget {budget} must exceed n_init={n_init}")
    obj = _adapter(objective, bounds, budget)
    seed = as_seed(seed)
    for x in lhs(n_init, bounds, seed.child("bo-init")):
        obj(x)
    rng = seed.child("bo-acq").generator()
    while obj.remaining > 0:
        ledger = obj.ledger
        eps = ledger.discrepancies
        gp = GpModel(length_scale=length_scale).fit(ledger.designs, eps)
        obj(maximize_ei(gp, eps.min(), bounds, rng, xi))
    return ConvergenceTrace.from_ledger(obj.ledger)
