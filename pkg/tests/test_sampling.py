import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from oracles import stratum_violations

from alpsdesign.benchmarks import LOGISTIC_BOUNDS
from alpsdesign.core import Bounds, InvalidInputError
from alpsdesign.sampling import lhs, uniform


def test_lhs_single_point():
    x = lhs(1, Bounds([0.0], [1.0]), 0)
    assert x.shape == (1, 1) and 0.0 <= x[0, 0] < 1.0


@pytest.mark.parametrize("seed", range(10))
def test_lhs_quartiles(seed):
    x = np.sort(lhs(4, Bounds([0.0], [1.0]), seed)[:, 0])
    for k in range(4):
        assert k / 4 <= x[k] < (k + 1) / 4


def test_lhs_logistic_bounds_600():
    b = LOGISTIC_BOUNDS
    x = lhs(600, b, 7)
    assert x.shape == (600, 3)
    assert np.all(x >= b.lower) and np.all(x <= b.upper)
    assert stratum_violations(x, b.lower, b.upper) == 0


@given(st.integers(1, 200), st.integers(1, 5), st.integers(0, 2**32))
def test_lhs_stratified_for_any_size(n, dim, seed):
    b = Bounds(np.zeros(dim), np.arange(1, dim + 1, dtype=float))
    x = lhs(n, b, seed)
    assert stratum_violations(x, b.lower, b.upper) == 0


def test_lhs_is_deterministic_and_seed_dependent():
    b = Bounds([0, 0], [1, 1])
    np.testing.assert_array_equal(lhs(10, b, 3), lhs(10, b, 3))
    assert not np.array_equal(lhs(10, b, 3), lhs(10, b, 4))


def test_degenerate_dimension_is_constant():
    b = Bounds([0.0, 2.0], [1.0, 2.0])
    assert np.all(lhs(5, b, 0)[:, 1] == 2.0)
    np.testing.assert_array_equal(uniform(1, Bounds([3.0], [3.0]), 0), [[3.0]])


def test_zero_samples_rejected():
    with pytest.raises(InvalidInputError):
        lhs(0, Bounds([0.0], [1.0]), 0)
    with pytest.raises(InvalidInputError):
        uniform(0, Bounds([0.0], [1.0]), 0)


def test_uniform_mean_and_shape():
    x = uniform(1000, Bounds([0.0], [1.0]), 0)
    assert abs(x.mean() - 0.5) < 0.05
    y = uniform(3, Bounds([0, -1], [1, 1]), 1)
    assert y.shape == (3, 2)
    assert np.all(y >= [0, -1]) and np.all(y <= [1, 1])
