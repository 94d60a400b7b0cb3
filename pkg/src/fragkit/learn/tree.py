"""CART decision trees (weighted Gini, reduced-error pruning) and random forests."""
from __future__ import annotations

import math

import numpy as np

from .. import kernels
from ..errors import InputError, ParameterError

MIN_TREE_VALIDATION = 0.15


def min_leaf_size(fraction: float, n: int) -> int:
    """Minimum leaf weight: fraction of the training-set size, rounded down."""
    if not 0.0 < fraction <= 0.5:
        raise ParameterError(f"minimum leaf fraction must be in (0, 0.5], got {fraction}")
    return int(math.floor(fraction * n + 1e-9))


def normalized_weights(w, n):
    w = np.asarray(w, dtype=np.float64)
    total = w.sum()
    if total <= 0:
        raise InputError("sample weights sum to zero")
    return w * (n / total)


class Tree:
    """Flat binary tree; a node is a leaf when ``feature[node] < 0``.

    Samples with ``x[feature] <= threshold`` go left.  ``value`` holds the
    training class weights reaching each node and ``node_weight`` their
    share of the total training weight.
    """

    def __init__(self, feature, threshold, left, right, value, node_weight):
        self.feature = np.asarray(feature, dtype=np.int64)
        self.threshold = np.asarray(threshold, dtype=np.float64)
        self.left = np.asarray(left, dtype=np.int64)
        self.right = np.asarray(right, dtype=np.int64)
        self.value = np.asarray(value, dtype=np.float64)
        self.node_weight = np.asarray(node_weight, dtype=np.float64)

    @property
    def n_nodes(self):
        return self.feature.shape[0]

    @property
    def n_classes(self):
        return self.value.shape[1]

    def node_class(self):
        return np.argmax(self.value, axis=1)

    def apply(self, X) -> np.ndarray:
        """Leaf index reached by each row."""
        X = np.asarray(X, dtype=np.float64)
        node = np.zeros(X.shape[0], dtype=np.int64)
        active = np.flatnonzero(self.feature[node] >= 0)
        while active.size:
            nd = node[active]
            go_left = X[active, self.feature[nd]] <= self.threshold[nd]
            node[active] = np.where(go_left, self.left[nd], self.right[nd])
            active = active[self.feature[node[active]] >= 0]
        return node

    def predict(self, X) -> np.ndarray:
        return self.node_class()[self.apply(X)]

    def leaves(self):
        return np.flatnonzero(self.feature < 0)

    def depth(self) -> int:
        best = 0
        stack = [(0, 0)]
        while stack:
            nd, d = stack.pop()
            best = max(best, d)
            if self.feature[nd] >= 0:
                stack.append((self.left[nd], d + 1))
                stack.append((self.right[nd], d + 1))
        return best

    def compact(self) -> "Tree":
        """Drop nodes unreachable from the root, keeping pre-order numbering."""
        order = []
        stack = [0]
        while stack:
            nd = stack.pop()
            order.append(nd)
            if self.feature[nd] >= 0:
                stack.append(self.right[nd])
                stack.append(self.left[nd])
        new = {old: k for k, old in enumerate(order)}
        idx = np.array(order)
        left = np.array([new[self.left[o]] if self.feature[o] >= 0 else -1 for o in order], dtype=np.int64)
        right = np.array([new[self.right[o]] if self.feature[o] >= 0 else -1 for o in order], dtype=np.int64)
        return Tree(self.feature[idx], self.threshold[idx], left, right, self.value[idx], self.node_weight[idx])

    def state(self, prefix=""):
        return {
            prefix + "feature": self.feature,
            prefix + "threshold": self.threshold,
            prefix + "left": self.left,
            prefix + "right": self.right,
            prefix + "value": self.value,
            prefix + "node_weight": self.node_weight,
        }

    @classmethod
    def from_state(cls, arrays, prefix=""):
        return cls(*(arrays[prefix + k] for k in ("feature", "threshold", "left", "right", "value", "node_weight")))


def grow_tree(X, y, w, n_classes, min_leaf, n_split_features=None, rng=None) -> Tree:
    """Grow an unpruned tree.

    ``w`` should already be normalised to sum to the sample count.  A node
    becomes a leaf when it is pure, weighs less than ``min_leaf`` or has no
    split leaving ``min_leaf`` weight on both sides.  With
    ``n_split_features`` set, each node searches a random feature subset
    of that size drawn from ``rng``.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    w = np.asarray(w, dtype=np.float64)
    n, F = X.shape
    # same summation as new_node so the root share is exactly 1
    total_w = np.bincount(y, weights=w, minlength=n_classes).sum()
    all_features = np.arange(F, dtype=np.int64)
    feature, threshold, left, right, value, node_weight = [], [], [], [], [], []

    def new_node(idx):
        cw = np.bincount(y[idx], weights=w[idx], minlength=n_classes)
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(cw)
        node_weight.append(cw.sum() / total_w if total_w > 0 else 0.0)
        return len(feature) - 1

    root = new_node(np.arange(n))
    stack = [(root, np.arange(n))]
    while stack:
        nd, idx = stack.pop()
        cw = value[nd]
        if np.count_nonzero(cw) <= 1 or cw.sum() < min_leaf or idx.size < 2:
            continue
        if n_split_features is None or n_split_features >= F:
            feats = all_features
        else:
            feats = np.sort(rng.choice(F, size=n_split_features, replace=False)).astype(np.int64)
        f, t, _ = kernels.best_split(X[idx], y[idx], w[idx], n_classes, float(min_leaf), feats)
        if f < 0:
            continue
        go_left = X[idx, f] <= t
        li, ri = idx[go_left], idx[~go_left]
        feature[nd] = int(f)
        threshold[nd] = float(t)
        left[nd] = new_node(li)
        right[nd] = new_node(ri)
        # right pushed first so the left subtree is expanded first
        stack.append((right[nd], ri))
        stack.append((left[nd], li))
    return Tree(feature, threshold, left, right, np.array(value).reshape(-1, n_classes), node_weight)


def prune_reduced_error(tree: Tree, X_val, y_val, w_val) -> Tree:
    """Bottom-up reduced-error pruning on validation data.

    A subtree collapses into a leaf when the leaf's weighted count of
    correct validation predictions is at least the subtree's.
    """
    X_val = np.asarray(X_val, dtype=np.float64)
    y_val = np.asarray(y_val, dtype=np.int64)
    w_val = np.asarray(w_val, dtype=np.float64)
    feature = tree.feature.copy()
    cls = tree.node_class()
    # validation rows reaching each node
    reach = [None] * tree.n_nodes
    reach[0] = np.arange(X_val.shape[0])
    order = []
    stack = [0]
    while stack:
        nd = stack.pop()
        order.append(nd)
        if feature[nd] >= 0:
            r = reach[nd]
            go_left = X_val[r, feature[nd]] <= tree.threshold[nd]
            reach[tree.left[nd]] = r[go_left]
            reach[tree.right[nd]] = r[~go_left]
            stack.append(tree.right[nd])
            stack.append(tree.left[nd])
    correct = np.zeros(tree.n_nodes)  # subtree's correct validation weight
    for nd in reversed(order):
        r = reach[nd]
        as_leaf = float(w_val[r][y_val[r] == cls[nd]].sum())
        if feature[nd] < 0:
            correct[nd] = as_leaf
            continue
        sub = correct[tree.left[nd]] + correct[tree.right[nd]]
        if as_leaf >= sub:
            feature[nd] = -1
            correct[nd] = as_leaf
        else:
            correct[nd] = sub
    pruned = Tree(feature, tree.threshold, tree.left, tree.right, tree.value, tree.node_weight)
    return pruned.compact()


class TreeModel:
    kind = "tree"

    def __init__(self, tree: Tree):
        self.tree = tree

    def predict(self, X):
        return self.tree.predict(X)

    def state(self):
        return {}, self.tree.state()

    @classmethod
    def from_state(cls, meta, arrays):
        return cls(Tree.from_state(arrays))


def fit_tree(X, y, w, n_classes, min_leaf_fraction, X_val=None, y_val=None, w_val=None) -> TreeModel:
    """CART tree, pruned on the validation rows when they are given."""
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[0]
    if n == 0:
        raise InputError("empty training set")
    min_leaf = min_leaf_size(min_leaf_fraction, n)
    tree = grow_tree(X, y, normalized_weights(w, n), n_classes, min_leaf)
    if X_val is not None:
        tree = prune_reduced_error(tree, X_val, y_val, w_val)
    return TreeModel(tree)


def train_decision_tree(X, y, w, X_val, y_val, w_val, n_classes, min_leaf_fraction) -> TreeModel:
    n_tr = np.asarray(X).shape[0]
    n_va = 0 if X_val is None else np.asarray(X_val).shape[0]
    if n_va == 0:
        raise InputError("a decision tree needs validation rows for pruning")
    if n_va < MIN_TREE_VALIDATION * (n_tr + n_va) - 1e-9:
        raise ParameterError(
            f"decision-tree validation share must be at least {MIN_TREE_VALIDATION:.0%} "
            f"(got {n_va} of {n_tr + n_va} rows)"
        )
    return fit_tree(X, y, w, n_classes, min_leaf_fraction, X_val, y_val, w_val)


def majority_vote(votes, n_classes) -> np.ndarray:
    """Row-wise plurality over columns of class indices; ties go to the lowest class."""
    votes = np.asarray(votes, dtype=np.int64)
    counts = np.zeros((votes.shape[0], n_classes), dtype=np.int64)
    for col in votes.T:
        counts[np.arange(votes.shape[0]), col] += 1
    return np.argmax(counts, axis=1)


class ForestModel:
    kind = "forest"

    def __init__(self, trees, n_classes):
        self.trees = list(trees)
        self.n_classes = n_classes

    def predict(self, X):
        votes = np.column_stack([t.predict(X) for t in self.trees])
        return majority_vote(votes, self.n_classes)

    def state(self):
        arrays = {}
        for k, t in enumerate(self.trees):
            arrays.update(t.state(f"t{k}_"))
        return {"n_trees": len(self.trees), "n_classes": self.n_classes}, arrays

    @classmethod
    def from_state(cls, meta, arrays):
        trees = [Tree.from_state(arrays, f"t{k}_") for k in range(meta["n_trees"])]
        return cls(trees, meta["n_classes"])


def train_random_forest(X, y, w, n_classes, n_trees, min_leaf_fraction, rng_seed=0,
                        n_split_features=None, bootstrap=True) -> ForestModel:
    """Bagged CART trees.

    Bootstrap draws pick samples with probability proportional to their
    weight; the resampled trees then use unit weights.  Each split searches
    ``n_split_features`` random features (default ceil(sqrt(F))).
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    w = np.asarray(w, dtype=np.float64)
    n, F = X.shape
    if n == 0:
        raise InputError("empty training set")
    if n_trees < 1:
        raise ParameterError("number of trees must be >= 1")
    m = n_split_features if n_split_features is not None else int(math.ceil(math.sqrt(F)))
    if not 1 <= m <= F:
        raise ParameterError(f"features per split must be in 1..{F}")
    min_leaf = min_leaf_size(min_leaf_fraction, n)
    p = w / w.sum()
    trees = []
    for k in range(n_trees):
        rng = np.random.default_rng([rng_seed, k])
        if bootstrap:
            idx = np.sort(rng.choice(n, size=n, replace=True, p=p))
            Xb, yb, wb = X[idx], y[idx], np.ones(n)
        else:
            Xb, yb, wb = X, y, normalized_weights(w, n)
        trees.append(grow_tree(Xb, yb, wb, n_classes, min_leaf, m, rng))
    return ForestModel(trees, n_classes)
