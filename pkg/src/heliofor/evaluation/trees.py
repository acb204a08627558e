"""Extremely randomised regression trees."""

from dataclasses import dataclass

import numpy as np

from .. import kernels


@dataclass(frozen=True, eq=False)
class ExtraTreesModel:
    """Forest stored as flat node arrays; ``roots[t]`` indexes tree ``t``."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    roots: np.ndarray
    n_trees: int
    min_samples_leaf: int
    max_features: int
    seed: int

    def tree_slices(self):
        ends = list(self.roots[1:]) + [self.feature.shape[0]]
        return [slice(int(s), int(e)) for s, e in zip(self.roots, ends)]


def extratrees_fit(X, y, n_trees=100, min_samples_leaf=5, max_features=None, seed=0) -> ExtraTreesModel:
    """Grow ``n_trees`` trees on the full data (no bootstrap).

    At every node ``max_features`` candidate features (default: all) get one
    uniform random threshold each inside the node's range, and the candidate
    with the largest variance reduction is kept.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError("empty data")
    if y.shape != (X.shape[0],):
        raise ValueError("need one target per row")
    if n_trees < 1 or min_samples_leaf < 1:
        raise ValueError("n_trees and min_samples_leaf must be >= 1")
    n, F = X.shape
    max_features = F if max_features is None else int(max_features)
    if not 1 <= max_features <= F:
        raise ValueError(f"max_features must lie in [1, {F}]")
    rng = np.random.default_rng(seed)
    cap = 2 * (n // min_samples_leaf) + 1
    parts = []
    roots = []
    offset = 0
    for _ in range(n_trees):
        U = rng.random((cap, 2 * F))
        feat, thr, left, right, val = kernels.grow_tree(X, y, int(min_samples_leaf), max_features, U)
        internal = feat >= 0
        left = np.where(internal, left + offset, -1)
        right = np.where(internal, right + offset, -1)
        parts.append((feat, thr, left, right, val))
        roots.append(offset)
        offset += feat.shape[0]
    cat = [np.concatenate([p[i] for p in parts]) for i in range(5)]
    return ExtraTreesModel(*cat, np.array(roots, dtype=np.int64), n_trees, min_samples_leaf, max_features, seed)


def extratrees_predict(model: ExtraTreesModel, query):
    Q = np.asarray(query, dtype=np.float64)
    single = Q.ndim == 1
    Q = np.ascontiguousarray(np.atleast_2d(Q))
    out = kernels.forest_predict(model.feature, model.threshold, model.left, model.right,
                                 model.value, model.roots, Q)
    return float(out[0]) if single else out


def leaf_sizes(model: ExtraTreesModel, X):
    """Training rows per leaf, for checking the ``min_samples_leaf`` invariant."""
    X = np.asarray(X, dtype=np.float64)
    counts = {}
    for root in model.roots:
        for row in X:
            node = root
            while model.feature[node] >= 0:
                node = model.left[node] if row[model.feature[node]] <= model.threshold[node] else model.right[node]
            counts[int(node)] = counts.get(int(node), 0) + 1
    return counts
