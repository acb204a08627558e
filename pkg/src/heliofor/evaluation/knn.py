"""Brute-force k-nearest-neighbour regression."""

from dataclasses import dataclass

import numpy as np

from .. import kernels


@dataclass(frozen=True, eq=False)
class KnnModel:
    X: np.ndarray
    y: np.ndarray
    k: int


def knn_fit(X, y, k: int) -> KnnModel:
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError("empty training set")
    if y.shape != (X.shape[0],):
        raise ValueError("need one target per training row")
    if not 1 <= k <= X.shape[0]:
        raise ValueError(f"k must lie in [1, {X.shape[0]}]")
    return KnnModel(X, y, int(k))


def knn_predict(model: KnnModel, query) -> np.ndarray:
    """Unweighted mean target of the ``k`` nearest rows (Euclidean).

    Accepts one query vector (returns a float) or a matrix of queries.
    """
    Q = np.asarray(query, dtype=np.float64)
    single = Q.ndim == 1
    Q = np.ascontiguousarray(np.atleast_2d(Q))
    if Q.shape[1] != model.X.shape[1]:
        raise ValueError("query width does not match the training width")
    out = kernels.knn_predict_batch(model.X, model.y, Q, model.k)
    return float(out[0]) if single else out
