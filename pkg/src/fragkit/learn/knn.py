"""Random-subspace ensemble of weighted k-nearest-neighbour learners."""
from __future__ import annotations

import numpy as np

from ..errors import InputError, ParameterError
from .tree import majority_vote

_CHUNK = 256


def knn_vote(train_X, train_y, train_w, n_classes, k, X) -> np.ndarray:
    """Weighted k-NN predictions; distance ties go to the lower training index."""
    X = np.asarray(X, dtype=np.float64)
    out = np.empty(X.shape[0], dtype=np.int64)
    tn = (train_X * train_X).sum(1)
    for s in range(0, X.shape[0], _CHUNK):
        q = X[s:s + _CHUNK]
        d = tn[None, :] - 2.0 * (q @ train_X.T) + (q * q).sum(1)[:, None]
        # stable sort: equal distances keep training order
        nbrs = np.argsort(d, axis=1, kind="stable")[:, :k]
        votes = np.zeros((q.shape[0], n_classes))
        rows = np.repeat(np.arange(q.shape[0]), nbrs.shape[1])
        np.add.at(votes, (rows, train_y[nbrs].ravel()), train_w[nbrs].ravel())
        out[s:s + q.shape[0]] = np.argmax(votes, axis=1)
    return out


class KNNEnsembleModel:
    kind = "knn"

    def __init__(self, X, y, w, n_classes, k, subsets):
        self.X = np.asarray(X, dtype=np.float64)
        self.y = np.asarray(y, dtype=np.int64)
        self.w = np.asarray(w, dtype=np.float64)
        self.n_classes = int(n_classes)
        self.k = int(k)
        self.subsets = np.asarray(subsets, dtype=np.int64)

    def predict(self, X):
        X = np.asarray(X, dtype=np.float64)
        votes = np.column_stack([
            knn_vote(self.X[:, sub], self.y, self.w, self.n_classes, self.k, X[:, sub]) for sub in self.subsets
        ])
        return majority_vote(votes, self.n_classes)

    def state(self):
        meta = {"n_classes": self.n_classes, "k": self.k}
        return meta, {"X": self.X, "y": self.y, "w": self.w, "subsets": self.subsets}

    @classmethod
    def from_state(cls, meta, arrays):
        return cls(arrays["X"], arrays["y"], arrays["w"], meta["n_classes"], meta["k"], arrays["subsets"])


def train_knn_ensemble(X, y, w, n_classes, n_features_per_learner, n_learners, k, rng_seed=0) -> KNNEnsembleModel:
    X = np.asarray(X, dtype=np.float64)
    n, F = X.shape
    if not 1 <= n_features_per_learner <= F:
        raise ParameterError(f"features per learner must be in 1..{F}")
    if n_learners < 1:
        raise ParameterError("number of learners must be >= 1")
    if k < 1:
        raise ParameterError("k must be >= 1")
    if k > n:
        raise InputError(f"k = {k} exceeds the {n} training rows")
    rng = np.random.default_rng(rng_seed)
    if n_features_per_learner == F:
        subsets = np.tile(np.arange(F), (n_learners, 1))
    else:
        subsets = np.array([np.sort(rng.choice(F, n_features_per_learner, replace=False)) for _ in range(n_learners)])
    return KNNEnsembleModel(X, y, w, n_classes, k, subsets)
