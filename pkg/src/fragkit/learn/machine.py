"""Trained decision machines, their file format, prediction and evaluation.

Machine file layout (``.fdm``)::

    b"FRAGKIT-MACHINE 1 <header bytes>\\n"
    <UTF-8 JSON header: kind, params, class_names, descriptors,
     feature_config, scaling, model meta>
    <npz archive of the learned arrays>
"""
from __future__ import annotations

import io
import json
import zipfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..dataset import ScalingParams, apply_scaling, parse_header_line
from ..errors import CompatibilityError, FormatError
from ..features.config import FeatureConfig
from ..fragstore import atomic_write
from .bayes import LDAModel, NaiveBayesModel
from .knn import KNNEnsembleModel
from .nnet import NeuralNetModel
from .svm import SVMModel
from .tree import ForestModel, TreeModel

MACHINE_MAGIC = b"FRAGKIT-MACHINE"
MACHINE_VERSION = 1

MODEL_TYPES = {
    m.kind: m for m in (TreeModel, ForestModel, SVMModel, KNNEnsembleModel, NaiveBayesModel, LDAModel, NeuralNetModel)
}
MODEL_KINDS = tuple(MODEL_TYPES)


@dataclass
class DecisionMachine:
    kind: str
    model: object
    class_names: list
    descriptors: list
    params: dict = field(default_factory=dict)
    feature_config: FeatureConfig | None = None
    scaling: ScalingParams | None = None

    @property
    def n_features(self):
        return len(self.descriptors)

    @property
    def n_classes(self):
        return len(self.class_names)

    def prepare(self, rows) -> np.ndarray:
        rows = np.asarray(rows, dtype=np.float64)
        if rows.ndim != 2 or rows.shape[1] != self.n_features:
            raise CompatibilityError(
                f"machine expects {self.n_features} features, got {rows.shape[1] if rows.ndim == 2 else '?'}"
            )
        return apply_scaling(rows, self.scaling) if self.scaling is not None else rows

    def predict(self, rows) -> np.ndarray:
        rows = self.prepare(rows)
        if rows.shape[0] == 0:
            return np.zeros(0, dtype=np.int64)
        return np.asarray(self.model.predict(rows), dtype=np.int64)

    def check_dataset(self, ds):
        """Raise CompatibilityError unless ``ds`` has this machine's feature set."""
        if ds.descriptors != self.descriptors:
            if len(ds.descriptors) != self.n_features:
                raise CompatibilityError(
                    f"dataset has {len(ds.descriptors)} features, machine expects {self.n_features}"
                )
            k = next(i for i, (a, b) in enumerate(zip(ds.descriptors, self.descriptors)) if a != b)
            raise CompatibilityError(
                f"feature {k} is {ds.descriptors[k]!r} in the dataset but {self.descriptors[k]!r} in the machine"
            )

    def label_map(self, ds) -> np.ndarray:
        """Dataset class index -> machine class index, matched by name."""
        out = np.empty(ds.n_classes, dtype=np.int64)
        for c, name in enumerate(ds.class_names):
            if name not in self.class_names:
                raise CompatibilityError(f"class {name!r} was not seen when the machine was trained")
            out[c] = self.class_names.index(name)
        return out


# ---------------------------------------------------------------- confusion


@dataclass
class ConfusionMatrix:
    counts: np.ndarray  # rows: true class, columns: predicted class
    class_names: list

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=np.float64)

    @classmethod
    def from_predictions(cls, true, pred, weights, class_names):
        C = len(class_names)
        m = np.zeros((C, C))
        np.add.at(m, (np.asarray(true, dtype=np.int64), np.asarray(pred, dtype=np.int64)), np.asarray(weights, float))
        return cls(m, list(class_names))

    @property
    def total(self):
        return float(self.counts.sum())

    @property
    def accuracy(self) -> float:
        t = self.total
        return float(np.trace(self.counts) / t) if t > 0 else 0.0

    def __add__(self, other):
        if self.class_names != other.class_names:
            raise CompatibilityError("confusion matrices cover different classes")
        return ConfusionMatrix(self.counts + other.counts, self.class_names)

    def to_dict(self):
        return {"class_names": self.class_names, "counts": self.counts.tolist(), "accuracy": self.accuracy}

    def format(self, percent=False, digits=2) -> str:
        values = row_percent(self) if percent else self.counts
        names = self.class_names
        width = max(8, *(len(n) for n in names)) + 1
        lines = ["true\\pred".ljust(width) + "".join(n.rjust(width) for n in names)]
        for n, row in zip(names, values):
            lines.append(n.ljust(width) + "".join(f"{v:{width}.{digits}f}" for v in row))
        return "\n".join(lines)


def row_percent(matrix) -> np.ndarray:
    """Rows scaled to sum to 100; all-zero rows stay zero."""
    m = matrix.counts if isinstance(matrix, ConfusionMatrix) else np.asarray(matrix, dtype=np.float64)
    s = m.sum(axis=1, keepdims=True)
    return np.divide(100.0 * m, s, out=np.zeros_like(m), where=s > 0)


def evaluate(machine: DecisionMachine, rows, labels, weights):
    """(confusion matrix, weighted accuracy); labels use the machine's class indices."""
    pred = machine.predict(rows)
    cm = ConfusionMatrix.from_predictions(labels, pred, weights, machine.class_names)
    return cm, cm.accuracy


# ---------------------------------------------------------------- persistence


def encode_machine(m: DecisionMachine) -> bytes:
    meta, arrays = m.model.state()
    header = {
        "kind": "machine",
        "version": MACHINE_VERSION,
        "model": m.kind,
        "params": m.params,
        "class_names": m.class_names,
        "descriptors": m.descriptors,
        "feature_config": m.feature_config.to_list() if m.feature_config is not None else None,
        "scaling": m.scaling.to_dict() if m.scaling is not None else None,
        "model_meta": meta,
    }
    text = json.dumps(header).encode("utf-8")
    buf = io.BytesIO()
    np.savez(buf, **arrays)
    return MACHINE_MAGIC + b" %d %d\n" % (MACHINE_VERSION, len(text)) + text + buf.getvalue()


def read_machine_header(buf: bytes):
    version, n, pos = parse_header_line(buf, MACHINE_MAGIC)
    if version != MACHINE_VERSION:
        raise FormatError(f"unsupported machine version {version}", 0)
    try:
        header = json.loads(buf[pos:pos + n].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"corrupt machine header: {exc}", pos) from None
    return header, pos + n


def decode_machine(buf: bytes) -> DecisionMachine:
    header, pos = read_machine_header(buf)
    kind = header.get("model")
    if kind not in MODEL_TYPES:
        raise FormatError(f"unknown model kind {kind!r}", 0)
    try:
        with np.load(io.BytesIO(buf[pos:]), allow_pickle=False) as z:
            arrays = {k: z[k] for k in z.files}
    except (ValueError, OSError, zipfile.BadZipFile) as exc:
        raise FormatError(f"corrupt machine state: {exc}", pos) from None
    try:
        model = MODEL_TYPES[kind].from_state(header["model_meta"], arrays)
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"machine state is missing or malformed: {exc}", pos) from None
    cfg = header.get("feature_config")
    sc = header.get("scaling")
    return DecisionMachine(
        kind, model, header["class_names"], header["descriptors"], header.get("params", {}),
        FeatureConfig(cfg) if cfg is not None else None,
        ScalingParams.from_dict(sc) if sc is not None else None,
    )


def save_machine(m: DecisionMachine, path):
    atomic_write(path, encode_machine(m))


def load_machine(path) -> DecisionMachine:
    return decode_machine(Path(path).read_bytes())
