"""Multi-output CART random forest regressor.

Trees are grown by exhaustive search over midpoints between consecutive
distinct feature values, minimising the summed within-node squared error over
all outputs. Features are scanned in a random order drawn per node and the
first best split found wins, so exactly tied splits (common in nodes of two or
three samples) do not all collapse onto the lowest-index feature. The hot loops are numba kernels; every tree draws its bootstrap
sample and per-node feature subsets from a counter-based splitmix64 stream
keyed on ``(forest seed, tree index)``, so a tree depends only on its own
index and adding trees never changes the earlier ones.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numba
import numpy as np

from .core import DimensionError, EmptyInputError, InvalidInputError, as_seed

FORMAT_VERSION = 1

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)


@dataclass(frozen=True)
class ForestParams:
    """Forest hyperparameters; defaults mirror the usual library regression defaults."""

    n_trees: int = 100
    max_depth: int | None = None
    min_samples_split: int = 2
    min_samples_leaf: int = 1
    max_features_fraction: float = 1.0
    bootstrap: bool = True

    def __post_init__(self):
        if self.n_trees < 1:
            raise InvalidInputError("n_trees must be >= 1")
        if self.max_depth is not None and self.max_depth < 1:
            raise InvalidInputError("max_depth must be >= 1 or None")
        if self.min_samples_split < 2:
            raise InvalidInputError("min_samples_split must be >= 2")
        if self.min_samples_leaf < 1:
            raise InvalidInputError("min_samples_leaf must be >= 1")
        if not 0.0 < self.max_features_fraction <= 1.0:
            raise InvalidInputError("max_features_fraction must lie in (0, 1]")

    @classmethod
    def experimental(cls) -> "ForestParams":
        """Preset used for the trained experimental forward models: 450 trees, depth 10."""
        return cls(n_trees=450, max_depth=10)


PRESETS = {
    "default": ForestParams(),
    "experimental": ForestParams.experimental(),
}


@numba.njit(cache=True, inline="always")
def _mix64(z):
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


@numba.njit(cache=True, inline="always")
def _draw(key, counter):
    return _mix64(key + _GOLDEN * np.uint64(counter + 1))


@numba.njit(cache=True)
def _tree_key(forest_key, tree_index):
    return _mix64(forest_key ^ _mix64(_GOLDEN * np.uint64(tree_index + 1)))


@numba.njit(cache=True)
def _grow_tree(X, Y, samples, max_depth, min_split, min_leaf, n_feat, key,
               feature, threshold, left, right, value):
    """Grow one tree in the preallocated node arrays; returns the node count."""
    m = samples.shape[0]
    n_features = X.shape[1]
    n_out = Y.shape[1]

    stack_node = np.empty(m * 2 + 1, np.int64)
    stack_lo = np.empty(m * 2 + 1, np.int64)
    stack_hi = np.empty(m * 2 + 1, np.int64)
    stack_depth = np.empty(m * 2 + 1, np.int64)
    buf = np.empty(m, np.int64)
    xs = np.empty(m, np.float64)
    total = np.empty(n_out, np.float64)
    run = np.empty(n_out, np.float64)
    fsel = np.empty(n_features, np.int64)

    node_count = 1
    top = 0
    stack_node[0] = 0
    stack_lo[0] = 0
    stack_hi[0] = m
    stack_depth[0] = 0
    draws = np.int64(m)

    while top >= 0:
        node = stack_node[top]
        lo = stack_lo[top]
        hi = stack_hi[top]
        depth = stack_depth[top]
        top -= 1
        cnt = hi - lo

        for k in range(n_out):
            total[k] = 0.0
        for i in range(lo, hi):
            r = samples[i]
            for k in range(n_out):
                total[k] += Y[r, k]
        for k in range(n_out):
            value[node, k] = total[k] / cnt
        feature[node] = -1
        threshold[node] = 0.0
        left[node] = -1
        right[node] = -1

        if max_depth >= 0 and depth >= max_depth:
            continue
        if cnt < min_split or cnt < 2 * min_leaf:
            continue
        r0 = samples[lo]
        constant = True
        for i in range(lo + 1, hi):
            r = samples[i]
            for k in range(n_out):
                if Y[r, k] != Y[r0, k]:
                    constant = False
                    break
            if not constant:
                break
        if constant:
            continue

        # visit features in a per-node random order; exact score ties go to the
        # first visited, and max_features keeps a prefix of the order
        for f in range(n_features):
            fsel[f] = f
        for f in range(n_features - 1, 0, -1):
            j = np.int64(_draw(key, draws) % np.uint64(f + 1))
            draws += 1
            tmp = fsel[f]
            fsel[f] = fsel[j]
            fsel[j] = tmp
        n_sel = min(n_feat, n_features)

        best_score = -np.inf
        best_f = -1
        best_thr = 0.0
        for j in range(n_sel):
            f = fsel[j]
            for i in range(cnt):
                xs[i] = X[samples[lo + i], f]
            order = np.argsort(xs[:cnt], kind="mergesort")
            if xs[order[0]] == xs[order[cnt - 1]]:
                continue
            for k in range(n_out):
                run[k] = 0.0
            for i in range(cnt - 1):
                r = samples[lo + order[i]]
                for k in range(n_out):
                    run[k] += Y[r, k]
                a = xs[order[i]]
                b = xs[order[i + 1]]
                if a == b:
                    continue
                nl = i + 1
                nr = cnt - nl
                if nl < min_leaf or nr < min_leaf:
                    continue
                sl = 0.0
                sr = 0.0
                for k in range(n_out):
                    sl += run[k] * run[k]
                    d = total[k] - run[k]
                    sr += d * d
                score = sl / nl + sr / nr
                if score > best_score:
                    best_score = score
                    best_f = f
                    thr = 0.5 * (a + b)
                    if thr >= b:
                        thr = a
                    best_thr = thr
        if best_f < 0:
            continue

        # stable partition of samples[lo:hi] on the chosen split
        nl = 0
        for i in range(lo, hi):
            if X[samples[i], best_f] <= best_thr:
                nl += 1
        li = 0
        ri = nl
        for i in range(lo, hi):
            r = samples[i]
            if X[r, best_f] <= best_thr:
                buf[li] = r
                li += 1
            else:
                buf[ri] = r
                ri += 1
        for i in range(cnt):
            samples[lo + i] = buf[i]

        feature[node] = best_f
        threshold[node] = best_thr
        lnode = node_count
        rnode = node_count + 1
        node_count += 2
        left[node] = lnode
        right[node] = rnode
        # push right first so the left subtree is grown first
        top += 1
        stack_node[top] = rnode
        stack_lo[top] = lo + nl
        stack_hi[top] = hi
        stack_depth[top] = depth + 1
        top += 1
        stack_node[top] = lnode
        stack_lo[top] = lo
        stack_hi[top] = lo + nl
        stack_depth[top] = depth + 1

    return node_count


@numba.njit(cache=True)
def _fit_forest(X, Y, n_trees, bootstrap, max_depth, min_split, min_leaf, n_feat, forest_key):
    n = X.shape[0]
    n_out = Y.shape[1]
    cap = 2 * n - 1
    feature = np.empty(n_trees * cap, np.int64)
    threshold = np.empty(n_trees * cap, np.float64)
    left = np.empty(n_trees * cap, np.int64)
    right = np.empty(n_trees * cap, np.int64)
    value = np.empty((n_trees * cap, n_out), np.float64)
    counts = np.empty(n_trees, np.int64)
    samples = np.empty(n, np.int64)
    for t in range(n_trees):
        key = _tree_key(forest_key, t)
        if bootstrap:
            for i in range(n):
                samples[i] = np.int64(_draw(key, i) % np.uint64(n))
            samples.sort()
        else:
            for i in range(n):
                samples[i] = i
        s = t * cap
        counts[t] = _grow_tree(
            X, Y, samples, max_depth, min_split, min_leaf, n_feat, key,
            feature[s:s + cap], threshold[s:s + cap], left[s:s + cap],
            right[s:s + cap], value[s:s + cap],
        )
    # compact into contiguous storage with absolute child indices
    total = counts.sum()
    offsets = np.zeros(n_trees, np.int64)
    for t in range(1, n_trees):
        offsets[t] = offsets[t - 1] + counts[t - 1]
    out_f = np.empty(total, np.int64)
    out_t = np.empty(total, np.float64)
    out_l = np.empty(total, np.int64)
    out_r = np.empty(total, np.int64)
    out_v = np.empty((total, n_out), np.float64)
    for t in range(n_trees):
        s = t * cap
        o = offsets[t]
        for j in range(counts[t]):
            out_f[o + j] = feature[s + j]
            out_t[o + j] = threshold[s + j]
            if left[s + j] >= 0:
                out_l[o + j] = left[s + j] + o
                out_r[o + j] = right[s + j] + o
            else:
                out_l[o + j] = -1
                out_r[o + j] = -1
            for k in range(n_out):
                out_v[o + j, k] = value[s + j, k]
    return out_f, out_t, out_l, out_r, out_v, offsets


@numba.njit(cache=True)
def _predict(X, feature, threshold, left, right, value, roots):
    n = X.shape[0]
    n_out = value.shape[1]
    n_trees = roots.shape[0]
    out = np.zeros((n, n_out), np.float64)
    for i in range(n):
        for t in range(n_trees):
            node = roots[t]
            while feature[node] >= 0:
                if X[i, feature[node]] <= threshold[node]:
                    node = left[node]
                else:
                    node = right[node]
            for k in range(n_out):
                out[i, k] += value[node, k]
        for k in range(n_out):
            out[i, k] /= n_trees
    return out


@dataclass(frozen=True)
class RegressionTree:
    """Read-only view of one fitted tree (node arrays with tree-local indices)."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    @property
    def n_nodes(self) -> int:
        return self.feature.size

    @property
    def depth(self) -> int:
        depth = np.zeros(self.n_nodes, dtype=int)
        for node in range(self.n_nodes):
            if self.feature[node] >= 0:
                depth[self.left[node]] = depth[node] + 1
                depth[self.right[node]] = depth[node] + 1
        return int(depth.max())

    def predict(self, X) -> np.ndarray:
        X = np.ascontiguousarray(X, dtype=float)
        return _predict(X, self.feature, self.threshold, self.left, self.right,
                        self.value, np.zeros(1, np.int64))


@dataclass(frozen=True)
class ForestModel:
    """Fitted forest stored as flat node arrays; ``roots[t]`` is tree ``t``'s first node."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    roots: np.ndarray
    input_dim: int
    output_dim: int
    params: ForestParams = field(default_factory=ForestParams)

    @property
    def n_trees(self) -> int:
        return self.roots.size

    def tree(self, t: int) -> RegressionTree:
        start = int(self.roots[t])
        stop = int(self.roots[t + 1]) if t + 1 < self.n_trees else self.feature.size
        shift = lambda a: np.where(a >= 0, a - start, -1)  # noqa: E731
        return RegressionTree(
            self.feature[start:stop].copy(),
            self.threshold[start:stop].copy(),
            shift(self.left[start:stop]),
            shift(self.right[start:stop]),
            self.value[start:stop].copy(),
        )

    @property
    def trees(self) -> list[RegressionTree]:
        return [self.tree(t) for t in range(self.n_trees)]

    def predict(self, X) -> np.ndarray:
        return forest_predict(self, X)

    def save(self, path) -> None:
        save_forest(self, path)


def _check_xy(X, Y):
    X = np.ascontiguousarray(np.atleast_2d(np.asarray(X, dtype=float)))
    Y = np.asarray(Y, dtype=float)
    if Y.ndim == 1:
        Y = Y.reshape(-1, 1)
    Y = np.ascontiguousarray(Y)
    if X.shape[0] == 0:
        raise EmptyInputError("cannot fit a forest on zero rows")
    if X.shape[0] != Y.shape[0]:
        raise DimensionError(f"X has {X.shape[0]} rows but Y has {Y.shape[0]}")
    if Y.shape[1] == 0 or X.shape[1] == 0:
        raise DimensionError("X and Y need at least one column")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(Y))):
        raise InvalidInputError("training data must be finite")
    return X, Y


def forest_fit(X, Y, params: ForestParams | None = None, seed=0) -> ForestModel:
    """Fit ``params.n_trees`` CART trees on bootstrap resamples of ``(X, Y)``."""
    params = params or ForestParams()
    X, Y = _check_xy(X, Y)
    n_feat = max(1, int(np.ceil(params.max_features_fraction * X.shape[1] - 1e-12)))
    f, t, l, r, v, roots = _fit_forest(
        X, Y,
        params.n_trees,
        params.bootstrap,
        -1 if params.max_depth is None else params.max_depth,
        params.min_samples_split,
        params.min_samples_leaf,
        n_feat,
        np.uint64(as_seed(seed).master),
    )
    return ForestModel(f, t, l, r, v, roots, X.shape[1], Y.shape[1], params)


def forest_predict(model: ForestModel, X) -> np.ndarray:
    """Mean of the per-tree leaf values for every row of ``X`` (shape n x K)."""
    X = np.ascontiguousarray(np.atleast_2d(np.asarray(X, dtype=float)))
    if X.shape[1] != model.input_dim:
        raise DimensionError(f"expected {model.input_dim} input columns, got {X.shape[1]}")
    return _predict(X, model.feature, model.threshold, model.left, model.right,
                    model.value, model.roots)


def forest_arrays(model: ForestModel, prefix: str = "") -> dict:
    meta = {
        "format": "alpsdesign-forest",
        "version": FORMAT_VERSION,
        "input_dim": model.input_dim,
        "output_dim": model.output_dim,
        "params": asdict(model.params),
    }
    return {
        prefix + "meta": np.array(json.dumps(meta)),
        prefix + "feature": model.feature,
        prefix + "threshold": model.threshold,
        prefix + "left": model.left,
        prefix + "right": model.right,
        prefix + "value": model.value,
        prefix + "roots": model.roots,
    }


def forest_from_arrays(data, prefix: str = "") -> ForestModel:
    try:
        meta = json.loads(str(data[prefix + "meta"]))
        if meta.get("format") != "alpsdesign-forest":
            raise InvalidInputError("not a forest model file")
        if meta.get("version") != FORMAT_VERSION:
            raise InvalidInputError(
                f"forest format version {meta.get('version')} != supported {FORMAT_VERSION}"
            )
        model = ForestModel(
            np.ascontiguousarray(data[prefix + "feature"], dtype=np.int64),
            np.ascontiguousarray(data[prefix + "threshold"], dtype=np.float64),
            np.ascontiguousarray(data[prefix + "left"], dtype=np.int64),
            np.ascontiguousarray(data[prefix + "right"], dtype=np.int64),
            np.ascontiguousarray(data[prefix + "value"], dtype=np.float64),
            np.ascontiguousarray(data[prefix + "roots"], dtype=np.int64),
            int(meta["input_dim"]),
            int(meta["output_dim"]),
            ForestParams(**meta["params"]),
        )
    except KeyError as exc:
        raise InvalidInputError(f"corrupt forest file: missing {exc}") from exc
    if model.value.ndim != 2 or model.value.shape[1] != model.output_dim:
        raise InvalidInputError("corrupt forest file: value array has wrong shape")
    n = model.feature.size
    if not (model.threshold.size == model.left.size == model.right.size == model.value.shape[0] == n):
        raise InvalidInputError("corrupt forest file: node arrays differ in length")
    internal = model.feature >= 0
    if np.any(model.feature[internal] >= model.input_dim) or np.any(
        (model.left[internal] >= n) | (model.right[internal] >= n) | (model.left[internal] < 0)
    ):
        raise InvalidInputError("corrupt forest file: node indices out of range")
    return model


def save_forest(model: ForestModel, path) -> None:
    with open(path, "wb") as fh:
        np.savez_compressed(fh, **forest_arrays(model))


def load_forest(path) -> ForestModel:
    try:
        with np.load(path, allow_pickle=False) as data:
            return forest_from_arrays(data)
    except (OSError, ValueError) as exc:
        if isinstance(exc, InvalidInputError):
            raise
        raise InvalidInputError(f"cannot read forest file {path}: {exc}") from exc
