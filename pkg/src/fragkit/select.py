"""Feature selection: tree-based ranking and forward selection scored by LDA."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .dataset import Dataset, SplitSpec, apply_scaling, compute_weights, fit_scaling, split_indices
from .errors import InputError
from .learn.bayes import train_lda
from .learn.pipeline import cv_folds
from .learn.tree import train_decision_tree

log = logging.getLogger(__name__)

IMPROVEMENT_EPS = 1e-6


@dataclass
class SelectionReport:
    method: str
    ranking: list  # (descriptor, score), best first
    selected: list  # descriptors, in selection/ranking order
    trajectory: list = field(default_factory=list)  # wrapper: accuracy after each addition

    def to_dict(self):
        return {"report": "select", "method": self.method,
                "ranking": [[n, s] for n, s in self.ranking],
                "selected": self.selected, "trajectory": self.trajectory}

    def format(self):
        lines = [f"method: {self.method}"]
        if self.method == "embedded":
            lines += [f"{n:<32} {s:.4f}" for n, s in self.ranking]
        else:
            lines += [f"{k + 1:3d}. {n:<32} {a:.4f}" for k, (n, a) in enumerate(zip(self.selected, self.trajectory))]
        lines.append(f"selected {len(self.selected)} features")
        return "\n".join(lines)


def node_scores(tree, n_features) -> np.ndarray:
    """Per feature, the largest share of training weight reaching a node that splits on it."""
    scores = np.zeros(n_features)
    internal = np.flatnonzero(tree.feature >= 0)
    np.maximum.at(scores, tree.feature[internal], tree.node_weight[internal])
    return scores


def embedded_tree_selection(ds: Dataset, split: SplitSpec | None = None, min_leaf_fraction=0.001,
                            weighting="balanced", threshold=None) -> SelectionReport:
    """Rank features by a pruned tree's node sizes; keep scores above ``threshold``."""
    split = split or SplitSpec(0.0, 1.0, 80.0, 20.0)
    tr, va = split_indices(ds, split)
    w = compute_weights(ds.labels[tr], weighting, ds.n_classes).w
    wv = compute_weights(ds.labels[va], weighting, ds.n_classes).w
    model = train_decision_tree(ds.samples[tr], ds.labels[tr], w, ds.samples[va], ds.labels[va], wv,
                                ds.n_classes, min_leaf_fraction)
    scores = node_scores(model.tree, ds.n_features)
    used = np.flatnonzero(scores > 0)
    if used.size == 0:
        log.warning("the pruned tree is a single leaf; no feature ranking")
    order = used[np.lexsort((used, -scores[used]))]
    ranking = [(ds.descriptors[f], float(scores[f])) for f in order]
    selected = [n for n, s in ranking if s > threshold] if threshold is not None else []
    return SelectionReport("embedded", ranking, selected)


def balanced_accuracy(true, pred, n_classes) -> float:
    recalls = [np.mean(pred[true == c] == c) for c in range(n_classes) if np.any(true == c)]
    return float(np.mean(recalls))


def lda_cv_accuracy(X, y, n_classes, folds) -> float:
    """Pooled balanced accuracy of LDA over the given folds."""
    pred = np.empty_like(y)
    all_idx = np.arange(y.shape[0])
    for test in folds:
        mask = np.ones(y.shape[0], dtype=bool)
        mask[test] = False
        tr = all_idx[mask]
        sp = fit_scaling(X[tr], "zscore")
        w = compute_weights(y[tr], "balanced", n_classes).w
        model = train_lda(apply_scaling(X[tr], sp), y[tr], w, n_classes)
        pred[test] = model.predict(apply_scaling(X[test], sp))
    return balanced_accuracy(y, pred, n_classes)


def wrapper_sfs_lda(ds: Dataset, K=5, max_features=None) -> SelectionReport:
    """Sequential forward selection maximising K-fold balanced LDA accuracy."""
    if len(np.unique(ds.labels)) < 2:
        raise InputError("wrapper selection needs at least 2 classes present")
    folds = cv_folds(ds.file_ids, K)
    limit = ds.n_features if max_features is None else min(int(max_features), ds.n_features)
    chosen, trajectory = [], []
    best_acc = -np.inf
    while len(chosen) < limit:
        round_best, round_f = -np.inf, -1
        for f in range(ds.n_features):
            if f in chosen:
                continue
            acc = lda_cv_accuracy(ds.samples[:, chosen + [f]], ds.labels, ds.n_classes, folds)
            if acc > round_best:
                round_best, round_f = acc, f
        if round_f < 0 or round_best <= best_acc + IMPROVEMENT_EPS:
            break
        chosen.append(round_f)
        best_acc = round_best
        trajectory.append(round_best)
        log.info("added %s: accuracy %.4f", ds.descriptors[round_f], round_best)
    names = [ds.descriptors[f] for f in chosen]
    return SelectionReport("wrapper", list(zip(names, trajectory)), names, trajectory)
