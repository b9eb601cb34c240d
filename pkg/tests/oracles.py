"""Slow, independent reference computations used by the tests."""

import math

import numpy as np


def tree_predict_python(model, x):
    """Walk every tree with plain Python and average the leaf vectors."""
    acc = None
    for root in model.roots:
        node = int(root)
        while model.feature[node] >= 0:
            if x[model.feature[node]] <= model.threshold[node]:
                node = int(model.left[node])
            else:
                node = int(model.right[node])
        leaf = model.value[node]
        acc = leaf.copy() if acc is None else acc + leaf
    return acc / model.roots.size


def rmse_python(a, b):
    """Squares summed strictly in index order (builtin sum is compensated on newer Pythons)."""
    acc = 0.0
    for u, v in zip(a, b):
        d = float(u) - float(v)
        acc += d * d
    return math.sqrt(acc / len(a))


def brute_force_select(model, candidates, target, n_batch):
    """Predict every candidate, sort by (predicted rmse, index), take the first n_batch."""
    scored = sorted(
        (rmse_python(tree_predict_python(model, x), target), i) for i, x in enumerate(candidates)
    )
    return [i for _, i in scored[:n_batch]]


def stratum_violations(samples, lower, upper):
    """Count columns whose points do not occupy each of the n strata exactly once."""
    samples = np.atleast_2d(samples)
    n = samples.shape[0]
    bad = 0
    for d in range(samples.shape[1]):
        width = upper[d] - lower[d]
        if width == 0:
            continue
        u = (samples[:, d] - lower[d]) / width
        strata = np.floor(u * n).astype(int)
        if sorted(strata.tolist()) != list(range(n)):
            bad += 1
    return bad
