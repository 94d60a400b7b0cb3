"""Train/validation runs, test runs and K-fold cross-validation over datasets."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..dataset import (
    Dataset,
    SplitSpec,
    apply_scaling,
    compute_weights,
    fit_scaling,
    group_starts,
    next_group_boundary,
    parse_header_line,
    range_indices,
    split_indices,
)
from ..errors import FormatError, InputError, ParameterError
from ..fragstore import atomic_write
from .bayes import train_lda, train_naive_bayes
from .knn import train_knn_ensemble
from .machine import MODEL_KINDS, ConfusionMatrix, DecisionMachine, evaluate
from .nnet import train_neural_net
from .svm import GramSpec, train_svm_ova
from .tree import fit_tree, train_decision_tree, train_random_forest

DEFAULT_PARAMS = {
    "tree": {"min_leaf_fraction": 0.001},
    "forest": {"n_trees": 50, "min_leaf_fraction": 0.001, "n_split_features": None},
    "svm": {"kernel": "rbf", "scale": 1.0, "order": 3, "box": 1.0},
    "knn": {"n_features": None, "n_learners": 10, "k": 1},
    "nb": {},
    "lda": {},
    "nn": {"hidden": 10},
}
# models that consume the validation rows while training
USES_VALIDATION = ("tree", "nn")
CV_CARVE_OUT = SplitSpec(0.0, 1.0, 80.0, 20.0)


def model_params(kind, params=None) -> dict:
    if kind not in DEFAULT_PARAMS:
        raise ParameterError(f"model must be one of {MODEL_KINDS}, got {kind!r}")
    out = dict(DEFAULT_PARAMS[kind])
    for k, v in (params or {}).items():
        if k not in out:
            raise ParameterError(f"unknown parameter {k!r} for model {kind}")
        out[k] = v
    return out


def fit_model(kind, params, X, y, w, n_classes, X_val=None, y_val=None, w_val=None, rng_seed=0):
    """Train the model object for ``kind`` on already-scaled rows."""
    p = model_params(kind, params)
    if kind == "tree":
        return train_decision_tree(X, y, w, X_val, y_val, w_val, n_classes, p["min_leaf_fraction"])
    if kind == "forest":
        return train_random_forest(X, y, w, n_classes, int(p["n_trees"]), p["min_leaf_fraction"], rng_seed,
                                   p["n_split_features"])
    if kind == "svm":
        spec = GramSpec(p["kernel"], float(p["scale"]), int(p["order"]), float(p["box"]))
        return train_svm_ova(X, y, w, n_classes, spec)
    if kind == "knn":
        F = X.shape[1]
        nf = p["n_features"] if p["n_features"] is not None else int(math.ceil(math.sqrt(F)))
        return train_knn_ensemble(X, y, w, n_classes, int(nf), int(p["n_learners"]), int(p["k"]), rng_seed)
    if kind == "nb":
        return train_naive_bayes(X, y, w, n_classes)
    if kind == "lda":
        return train_lda(X, y, w, n_classes)
    return train_neural_net(X, y, w, n_classes, int(p["hidden"]), X_val, y_val, w_val, rng_seed)


@dataclass
class TrainReport:
    kind: str
    params: dict
    train: ConfusionMatrix
    validation: ConfusionMatrix | None
    n_train: int
    n_validation: int
    extra: dict = field(default_factory=dict)

    @property
    def train_accuracy(self):
        return self.train.accuracy

    @property
    def validation_accuracy(self):
        return self.validation.accuracy if self.validation is not None else None

    def to_dict(self):
        return {
            "report": "train",
            "model": self.kind,
            "params": self.params,
            "n_train": self.n_train,
            "n_validation": self.n_validation,
            "train": self.train.to_dict(),
            "validation": self.validation.to_dict() if self.validation is not None else None,
            **self.extra,
        }

    def format(self) -> str:
        out = [f"model: {self.kind} {json.dumps(self.params)}",
               f"train rows: {self.n_train}  accuracy: {100 * self.train_accuracy:.2f}%",
               self.train.format(percent=True)]
        if self.validation is not None:
            out += [f"validation rows: {self.n_validation}  accuracy: {100 * self.validation_accuracy:.2f}%",
                    self.validation.format(percent=True)]
        return "\n".join(out)


def _scaling_for(kind, method):
    if method in (None, "none"):
        if kind == "svm":
            raise ParameterError("SVM training requires feature scaling (zscore or minmax)")
        return None
    return method


def _weights(labels, method, n_classes):
    return compute_weights(labels, method, n_classes).w


def _fit_on(ds: Dataset, kind, params, tr, va, weighting, scaling, rng_seed):
    """Fit scaling on ``tr`` rows, then the model; returns the machine."""
    method = _scaling_for(kind, scaling)
    sp = fit_scaling(ds.samples[tr], method) if method else None
    X = ds.samples[tr] if sp is None else apply_scaling(ds.samples[tr], sp)
    Xv = ds.samples[va] if sp is None else apply_scaling(ds.samples[va], sp)
    y, yv = ds.labels[tr], ds.labels[va]
    w, wv = _weights(y, weighting, ds.n_classes), _weights(yv, weighting, ds.n_classes)
    use_val = kind in USES_VALIDATION
    model = fit_model(kind, params, X, y, w, ds.n_classes,
                      Xv if use_val else None, yv if use_val else None, wv if use_val else None, rng_seed)
    return DecisionMachine(kind, model, list(ds.class_names), list(ds.descriptors), model_params(kind, params),
                           ds.feature_config, sp)


def train_machine(ds: Dataset, kind, params=None, split: SplitSpec | None = None, weighting="balanced",
                  scaling="zscore", rng_seed=0):
    """Split, scale, train and report accuracy on both parts."""
    split = split or SplitSpec()
    tr, va = split_indices(ds, split)
    if tr.size == 0:
        raise InputError("training split is empty")
    machine = _fit_on(ds, kind, params, tr, va, weighting, scaling, rng_seed)
    machine.params = {**machine.params, "rng_seed": rng_seed, "weighting": weighting}
    train_cm, _ = evaluate(machine, ds.samples[tr], ds.labels[tr], _weights(ds.labels[tr], weighting, ds.n_classes))
    val_cm = None
    if va.size:
        val_cm, _ = evaluate(machine, ds.samples[va], ds.labels[va], _weights(ds.labels[va], weighting, ds.n_classes))
    report = TrainReport(kind, model_params(kind, params), train_cm, val_cm, int(tr.size), int(va.size),
                         {"split": [split.start, split.end], "percents": [split.train_percent,
                                                                          split.validation_percent],
                          "weighting": weighting, "scaling": scaling or "none", "rng_seed": rng_seed})
    return machine, report


@dataclass
class TestReport:
    confusion: ConfusionMatrix
    n_samples: int
    model: str

    @property
    def accuracy(self):
        return self.confusion.accuracy

    def to_dict(self):
        return {"report": "test", "model": self.model, "n_samples": self.n_samples,
                "test": self.confusion.to_dict()}

    def format(self):
        return "\n".join([f"model: {self.model}",
                          f"test rows: {self.n_samples}  accuracy: {100 * self.accuracy:.2f}%",
                          self.confusion.format(percent=True)])


def test_machine(machine: DecisionMachine, ds: Dataset, start=0.0, end=1.0, weighting="balanced") -> TestReport:
    machine.check_dataset(ds)
    lo, hi = range_indices(ds.n_samples, start, end)
    if hi <= lo:
        raise InputError("the selected range holds no samples")
    idx = np.arange(lo, hi)
    labels = machine.label_map(ds)[ds.labels[idx]]
    w = _weights(labels, weighting, machine.n_classes)
    cm, _ = evaluate(machine, ds.samples[idx], labels, w)
    return TestReport(cm, int(idx.size), machine.kind)


# keep pytest from collecting the function above as a test
test_machine.__test__ = False
TestReport.__test__ = False


# ---------------------------------------------------------------- cross-validation


def cv_folds(file_ids, K: int):
    """K contiguous folds whose edges sit on file-group boundaries."""
    file_ids = np.asarray(file_ids)
    S = file_ids.shape[0]
    if K < 2:
        raise ParameterError("K must be >= 2")
    n_groups = group_starts(file_ids).shape[0]
    if n_groups < K:
        raise InputError(f"{n_groups} file groups cannot fill {K} folds")
    edges = [0]
    for k in range(1, K):
        e = next_group_boundary(file_ids, int(round(k * S / K)), S)
        edges.append(max(e, edges[-1]))
    edges.append(S)
    edges = np.array(edges)
    if np.any(np.diff(edges) == 0):
        # group sizes too uneven for proportional edges: fall back to splitting group starts
        starts = group_starts(file_ids)
        pick = [int(round(k * n_groups / K)) for k in range(K)]
        edges = np.append(starts[pick], S)
    return [np.arange(edges[k], edges[k + 1]) for k in range(K)]


@dataclass
class CVReport:
    kind: str
    params: dict
    K: int
    folds: list  # per-fold ConfusionMatrix
    fold_sizes: list

    @property
    def pooled(self) -> ConfusionMatrix:
        total = self.folds[0]
        for cm in self.folds[1:]:
            total = total + cm
        return total

    @property
    def accuracy(self):
        return self.pooled.accuracy

    @property
    def fold_accuracies(self):
        return [cm.accuracy for cm in self.folds]

    def to_dict(self):
        return {"report": "crossval", "model": self.kind, "params": self.params, "K": self.K,
                "fold_sizes": self.fold_sizes, "fold_accuracy": self.fold_accuracies,
                "folds": [cm.to_dict() for cm in self.folds], "pooled": self.pooled.to_dict()}

    def format(self):
        lines = [f"model: {self.kind} {json.dumps(self.params)}  K = {self.K}"]
        for k, (n, a) in enumerate(zip(self.fold_sizes, self.fold_accuracies)):
            lines.append(f"fold {k + 1}: {n} rows  accuracy {100 * a:.2f}%")
        lines += [f"pooled accuracy: {100 * self.accuracy:.2f}%", self.pooled.format(percent=True)]
        return "\n".join(lines)


def cross_validate(ds: Dataset, kind, params=None, K=5, weighting="balanced", scaling="zscore",
                   rng_seed=0) -> CVReport:
    """Train on K-1 folds and test on the remaining one, rotating.

    Models that need validation rows carve the last 20% (by file group) off
    each training part.  Scaling is refit on every training part.
    """
    params = model_params(kind, params)
    folds = cv_folds(ds.file_ids, K)
    cms = []
    for k, test_idx in enumerate(folds):
        train_idx = np.concatenate([f for j, f in enumerate(folds) if j != k])
        if kind in USES_VALIDATION:
            a, b = split_indices(ds.file_ids[train_idx], CV_CARVE_OUT)
            tr, va = train_idx[a], train_idx[b]
        else:
            tr, va = train_idx, train_idx[:0]
        machine = _fit_on(ds, kind, params, tr, va, weighting, scaling, rng_seed + k)
        yt = ds.labels[test_idx]
        cm, _ = evaluate(machine, ds.samples[test_idx], yt, _weights(yt, weighting, ds.n_classes))
        cms.append(cm)
    return CVReport(kind, params, K, cms, [int(f.size) for f in folds])


# ---------------------------------------------------------------- results files

RESULTS_MAGIC = b"FRAGKIT-RESULTS"
RESULTS_VERSION = 1


def save_results(report_dict: dict, path):
    text = json.dumps({"kind": "results", "version": RESULTS_VERSION, **report_dict}, indent=1).encode("utf-8")
    atomic_write(path, RESULTS_MAGIC + b" %d %d\n" % (RESULTS_VERSION, len(text)) + text)


def load_results(path) -> dict:
    buf = Path(path).read_bytes()
    version, n, pos = parse_header_line(buf, RESULTS_MAGIC)
    if version != RESULTS_VERSION:
        raise FormatError(f"unsupported results version {version}", 0)
    try:
        return json.loads(buf[pos:pos + n].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"corrupt results file: {exc}", pos) from None
