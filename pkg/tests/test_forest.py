import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from oracles import tree_predict_python

from alpsdesign.core import DimensionError, EmptyInputError, InvalidInputError
from alpsdesign.forest import (
    PRESETS,
    ForestParams,
    forest_fit,
    forest_predict,
    load_forest,
    save_forest,
)

SINGLE_TREE = ForestParams(n_trees=1, bootstrap=False)


def test_constant_response_predicts_constant():
    X = np.random.default_rng(0).random((30, 3))
    Y = np.full((30, 4), 2.5)
    model = forest_fit(X, Y, ForestParams(n_trees=10), seed=1)
    probes = np.random.default_rng(1).random((50, 3)) * 4 - 2
    np.testing.assert_array_equal(forest_predict(model, probes), 2.5)
    assert all(t.n_nodes == 1 for t in model.trees)


def test_single_row_is_constant_predictor():
    model = forest_fit([[1.0, 2.0]], [[3.0, 4.0]], ForestParams(n_trees=5), seed=0)
    np.testing.assert_array_equal(model.predict([[9.0, -9.0], [0.0, 0.0]]), [[3, 4], [3, 4]])


def test_step_function_is_split_at_midpoint():
    X = np.array([[0.0], [1.0], [2.0], [3.0]])
    Y = np.array([0.0, 0.0, 1.0, 1.0])
    model = forest_fit(X, Y, SINGLE_TREE)
    tree = model.tree(0)
    assert tree.feature[0] == 0 and tree.threshold[0] == 1.5
    np.testing.assert_array_equal(model.predict([[1.4], [1.5], [1.6]])[:, 0], [0, 0, 1])


def test_unbootstrapped_tree_interpolates_training_data():
    rng = np.random.default_rng(3)
    X = rng.random((80, 4))
    Y = rng.normal(size=(80, 6))
    model = forest_fit(X, Y, SINGLE_TREE)
    assert np.max(np.abs(model.predict(X) - Y)) < 1e-12


@given(st.integers(2, 40), st.integers(1, 4), st.integers(1, 5), st.integers(0, 10**6))
def test_predictions_stay_inside_training_range(n, dim, k, seed):
    rng = np.random.default_rng(seed)
    X = rng.random((n, dim))
    Y = rng.normal(size=(n, k))
    model = forest_fit(X, Y, ForestParams(n_trees=7), seed=seed)
    P = model.predict(rng.random((64, dim)) * 3 - 1)
    assert np.all(P >= Y.min(axis=0) - 1e-12)
    assert np.all(P <= Y.max(axis=0) + 1e-12)


@given(st.integers(0, 10**6))
def test_kernel_matches_python_traversal(seed):
    rng = np.random.default_rng(seed)
    X = rng.random((25, 3))
    Y = rng.normal(size=(25, 2))
    model = forest_fit(X, Y, ForestParams(n_trees=5, max_features_fraction=0.67), seed=seed)
    probes = rng.random((20, 3))
    fast = model.predict(probes)
    slow = np.array([tree_predict_python(model, x) for x in probes])
    np.testing.assert_array_equal(fast, slow)


def test_more_trees_keep_earlier_trees():
    rng = np.random.default_rng(5)
    X, Y = rng.random((40, 3)), rng.random((40, 2))
    small = forest_fit(X, Y, ForestParams(n_trees=3), seed=11)
    big = forest_fit(X, Y, ForestParams(n_trees=9), seed=11)
    for t in range(3):
        a, b = small.tree(t), big.tree(t)
        np.testing.assert_array_equal(a.feature, b.feature)
        np.testing.assert_array_equal(a.threshold, b.threshold)
        np.testing.assert_array_equal(a.value, b.value)


def test_fit_is_deterministic_per_seed():
    rng = np.random.default_rng(6)
    X, Y = rng.random((40, 3)), rng.random((40, 2))
    a = forest_fit(X, Y, ForestParams(n_trees=8), seed=2)
    b = forest_fit(X, Y, ForestParams(n_trees=8), seed=2)
    c = forest_fit(X, Y, ForestParams(n_trees=8), seed=3)
    np.testing.assert_array_equal(a.threshold, b.threshold)
    assert not np.array_equal(a.predict(X), c.predict(X))


def test_max_depth_is_respected():
    rng = np.random.default_rng(7)
    X, Y = rng.random((200, 2)), rng.random((200, 1))
    model = forest_fit(X, Y, ForestParams(n_trees=4, max_depth=3))
    assert max(t.depth for t in model.trees) <= 3
    assert PRESETS["experimental"].n_trees == 450 and PRESETS["experimental"].max_depth == 10


def test_min_samples_leaf_is_respected():
    rng = np.random.default_rng(8)
    X, Y = rng.random((60, 2)), rng.random((60, 1))
    model = forest_fit(X, Y, ForestParams(n_trees=1, bootstrap=False, min_samples_leaf=5))
    leaves = model.predict(X)[:, 0]
    _, counts = np.unique(leaves, return_counts=True)
    assert counts.min() >= 5


def test_save_load_round_trip(tmp_path):
    rng = np.random.default_rng(9)
    X, Y = rng.random((30, 2)), rng.random((30, 3))
    model = forest_fit(X, Y, ForestParams(n_trees=6, max_depth=4), seed=1)
    path = tmp_path / "forest.npz"
    save_forest(model, path)
    back = load_forest(path)
    assert back.params == model.params
    probes = rng.random((15, 2))
    np.testing.assert_array_equal(back.predict(probes), model.predict(probes))


def test_corrupt_files_are_rejected(tmp_path):
    bad = tmp_path / "bad.npz"
    bad.write_bytes(b"not a zip")
    with pytest.raises(InvalidInputError):
        load_forest(bad)
    model = forest_fit([[0.0], [1.0]], [0.0, 1.0], SINGLE_TREE)
    truncated = tmp_path / "trunc.npz"
    np.savez(truncated, feature=model.feature)
    with pytest.raises(InvalidInputError):
        load_forest(truncated)


def test_input_validation():
    with pytest.raises(EmptyInputError):
        forest_fit(np.empty((0, 2)), np.empty((0, 1)))
    with pytest.raises(DimensionError):
        forest_fit(np.zeros((3, 2)), np.zeros((4, 1)))
    with pytest.raises(InvalidInputError):
        forest_fit([[np.nan]], [[1.0]])
    with pytest.raises(InvalidInputError):
        ForestParams(min_samples_split=1)
    model = forest_fit([[0.0, 1.0]], [[1.0]])
    with pytest.raises(DimensionError):
        model.predict([[0.0]])
