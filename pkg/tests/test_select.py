import numpy as np
import pytest

from conftest import make_dataset, two_blobs
from fragkit.errors import InputError
from fragkit.learn.tree import fit_tree
from fragkit.select import embedded_tree_selection, lda_cv_accuracy, node_scores, wrapper_sfs_lda


def _informative(n=200, seed=0):
    """Column 2 alone separates the classes; the rest is noise."""
    rng = np.random.default_rng(seed)
    y = rng.integers(0, 2, n)
    X = rng.normal(size=(n, 5))
    X[:, 2] = y * 10 + rng.normal(0, 0.1, n)
    return make_dataset(X, y)


def test_root_feature_scores_one_and_unused_score_zero():
    ds = _informative()
    rep = embedded_tree_selection(ds)
    assert rep.ranking[0] == ("f2", 1.0)
    assert [n for n, _ in rep.ranking] == ["f2"]
    assert rep.selected == []


def test_embedded_scores_sorted_and_in_unit_interval():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(400, 6))
    y = ((X[:, 0] + 0.5 * X[:, 3] + 0.3 * X[:, 5]) > 0).astype(int)
    ds = make_dataset(X, y)
    rep = embedded_tree_selection(ds, min_leaf_fraction=0.01, threshold=0.05)
    scores = [s for _, s in rep.ranking]
    assert scores == sorted(scores, reverse=True)
    assert scores[0] == 1.0 and all(0 < s <= 1 for s in scores)
    assert rep.selected == [n for n, s in rep.ranking if s > 0.05]


def test_node_scores_take_the_largest_node():
    X = np.array([[0.0, 0], [0, 1], [1, 0], [1, 1], [2, 0], [2, 1]])
    y = np.array([0, 1, 2, 2, 2, 2])
    t = fit_tree(X, y, np.ones(6), 3, 1 / 6).tree
    s = node_scores(t, 2)
    assert s[t.feature[0]] == 1.0
    assert 0 < s.min() < 1


def test_single_leaf_tree_gives_empty_ranking(caplog):
    ds = make_dataset(np.ones((20, 2)), [0, 1] * 10)
    rep = embedded_tree_selection(ds)
    assert rep.ranking == [] and "single leaf" in caplog.text


def test_wrapper_picks_discriminative_feature_then_stops():
    ds = _informative()
    rep = wrapper_sfs_lda(ds, K=5)
    assert rep.selected == ["f2"] and rep.trajectory == [1.0]


def test_wrapper_keeps_one_of_two_redundant_copies():
    ds = _informative()
    X = np.column_stack([ds.samples, ds.samples[:, 2]])
    ds2 = make_dataset(X, ds.labels)
    rep = wrapper_sfs_lda(ds2, K=5)
    assert rep.selected == ["f2"]


def test_wrapper_trajectory_non_decreasing_and_deterministic():
    rng = np.random.default_rng(3)
    X = rng.normal(size=(150, 5))
    y = ((X[:, 0] + X[:, 1] + 0.5 * rng.normal(size=150)) > 0).astype(int)
    ds = make_dataset(X, y)
    a = wrapper_sfs_lda(ds, K=3)
    b = wrapper_sfs_lda(ds, K=3)
    assert a.selected == b.selected and a.trajectory == b.trajectory
    assert all(q > p for p, q in zip(a.trajectory, a.trajectory[1:]))
    assert wrapper_sfs_lda(ds, K=3, max_features=1).selected == a.selected[:1]
    before = ds.samples.copy()
    wrapper_sfs_lda(ds, K=3, max_features=2)
    assert np.array_equal(before, ds.samples)


def test_wrapper_first_round_matches_exhaustive_search():
    X, y = two_blobs(40, n_features=3, gap=1.0, seed=2)
    ds = make_dataset(X, y)
    from fragkit.learn.pipeline import cv_folds

    folds = cv_folds(ds.file_ids, 5)
    accs = [lda_cv_accuracy(X[:, [f]], y, 2, folds) for f in range(3)]
    rep = wrapper_sfs_lda(ds, K=5, max_features=1)
    assert rep.selected == [f"f{int(np.argmax(accs))}"]
    assert rep.trajectory[0] == max(accs)


def test_wrapper_needs_two_classes():
    with pytest.raises(InputError):
        wrapper_sfs_lda(make_dataset(np.random.default_rng(0).normal(size=(10, 2)), [0] * 10))
