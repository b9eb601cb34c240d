import numpy as np
import pytest

from alpsdesign.baselines import (
    GpModel,
    ObjectiveAdapter,
    bo_minimize,
    de_minimize,
    expected_improvement,
    matern52,
    nelder_mead,
    pso_minimize,
    random_search,
    simplex_search,
)
from alpsdesign.benchmarks import SinusoidModel, make_target
from alpsdesign.core import Bounds, InvalidInputError, NumericalError

CUBE = Bounds([-5.0, -5.0], [5.0, 5.0])


def sphere(x):
    return float(np.sum(np.asarray(x) ** 2))


@pytest.mark.parametrize("optimizer", [random_search, pso_minimize, de_minimize, nelder_mead])
def test_budget_is_spent_exactly(optimizer):
    calls = []

    def f(x):
        calls.append(1)
        return sphere(x)

    trace = optimizer(f, CUBE, 37, seed=0)
    assert len(calls) == 37 and trace.values.shape == (37,)
    assert np.all(np.diff(trace.values) <= 0)
    assert all(CUBE.contains(x) for x in trace.ledger.designs)


def test_pso_reaches_sphere_minimum():
    assert pso_minimize(sphere, CUBE, 300, seed=1).final < 1e-2


def test_de_reaches_sphere_minimum():
    assert de_minimize(sphere, CUBE, 500, seed=1).final < 1e-2


def test_swarm_as_large_as_budget_is_one_generation():
    trace = pso_minimize(sphere, CUBE, 10, seed=2, swarm_size=10)
    assert len(trace.ledger) == 10
    trace = de_minimize(sphere, CUBE, 10, seed=2, pop=10)
    assert len(trace.ledger) == 10


def test_simplex_one_dimensional_quadratic():
    x, f = simplex_search(lambda x: float((x[0] - 1.3) ** 2), [3.5], Bounds([0.0], [4.0]), 200)
    assert abs(x[0] - 1.3) < 1e-3 and f < 1e-6


def test_simplex_started_at_optimum_stays_there():
    x, f = simplex_search(sphere, [0.0, 0.0], CUBE, 50)
    assert f == 0.0
    np.testing.assert_array_equal(x, [0.0, 0.0])


def test_nelder_mead_needs_room_for_a_simplex():
    with pytest.raises(InvalidInputError):
        nelder_mead(sphere, CUBE, 3)


def test_objective_adapter_on_forward_model():
    model = SinusoidModel()
    target = make_target(model, [3.0, 0.1, 1.0, 5.0])
    obj = ObjectiveAdapter.create(model, target, 5)
    assert obj([3.0, 0.1, 1.0, 5.0]) == 0.0
    assert obj.remaining == 4
    trace = random_search(ObjectiveAdapter.create(model, target, 8), model.bounds, 8, seed=0)
    assert trace.final == trace.ledger.best.discrepancy


def test_matern_kernel_values():
    np.testing.assert_allclose(matern52([[0.0]], [[0.0]]), [[1.0]])
    r = np.sqrt(5.0)
    np.testing.assert_allclose(matern52([[0.0]], [[1.0]]), [[(1 + r + r * r / 3) * np.exp(-r)]])


def test_gp_interpolates_training_points():
    rng = np.random.default_rng(0)
    X = rng.random((8, 2)) * 4
    y = np.sin(X[:, 0]) + X[:, 1]
    gp = GpModel().fit(X, y)
    mu, sigma = gp.predict(X)
    assert np.max(np.abs(mu - y)) < 1e-6
    assert np.max(sigma) < 1e-3


def test_ei_vanishes_at_observed_points():
    X = np.array([[0.5], [1.5], [2.5], [3.5]])
    y = (X[:, 0] - 2.0) ** 2
    gp = GpModel().fit(X, y)
    ei = expected_improvement(*gp.predict(X), y.min(), 0.01)
    assert np.all(ei < 1e-8)
    assert np.all(expected_improvement([0.0], [0.0], 1.0, 0.0) == 1.0)


def test_jitter_escalates_on_singular_kernel(monkeypatch):
    import alpsdesign.baselines as bl

    real = bl.cholesky
    seen = []

    def picky(K, lower):
        seen.append(K[0, 0] - 1.0)
        if K[0, 0] - 1.0 < 1e-5:
            raise np.linalg.LinAlgError("not positive definite")
        return real(K, lower=lower)

    monkeypatch.setattr(bl, "cholesky", picky)
    gp = GpModel().fit(np.zeros((3, 1)), [1.0, 2.0, 3.0])
    assert gp.used_jitter == pytest.approx(1e-5)
    assert len(seen) == 4
    assert np.all(np.isfinite(gp.predict([[0.5]])[0]))


def test_gp_failure_is_reported(monkeypatch):
    import alpsdesign.baselines as bl

    def broken(*args, **kwargs):
        raise np.linalg.LinAlgError("not positive definite")

    monkeypatch.setattr(bl, "cholesky", broken)
    with pytest.raises(NumericalError):
        GpModel().fit([[0.0], [1.0]], [0.0, 1.0])


def test_bo_finds_quadratic_minimum():
    trace = bo_minimize(lambda x: float((x[0] - 1.3) ** 2), Bounds([0.0], [4.0]), 30, seed=0)
    assert trace.final < 1e-2
    assert len(trace.ledger) == 30
