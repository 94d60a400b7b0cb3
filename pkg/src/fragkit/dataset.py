"""Feature datasets: construction, manipulation, scaling, weighting and splits.

Dataset file layout (``.fds``)::

    b"FRAGKIT-DATASET 1 <header bytes>\\n"
    <UTF-8 JSON header: kind, version, n_samples, n_features, class_names,
     descriptors, feature_config>
    <float64 little-endian, row-major, S x (F + 2): features, label, file_id>
"""
from __future__ import annotations

import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from ._accel import thread_count
from .errors import CompatibilityError, FormatError, InputError, ParameterError
from .features.config import FeatureConfig, extract_checked, sanitize_names
from .fragstore import atomic_write

log = logging.getLogger(__name__)

DATASET_MAGIC = b"FRAGKIT-DATASET"
DATASET_VERSION = 1
MIN_TRAIN_PERCENT = 70.0


@dataclass(eq=False)
class Dataset:
    samples: np.ndarray
    labels: np.ndarray
    file_ids: np.ndarray
    class_names: list
    descriptors: list
    feature_config: FeatureConfig | None = None

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 2:
            self.samples = self.samples.reshape(len(self.labels), -1)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        self.file_ids = np.asarray(self.file_ids, dtype=np.int64)
        self.class_names = list(self.class_names)
        self.descriptors = list(self.descriptors)
        S, F = self.samples.shape
        if self.labels.shape != (S,) or self.file_ids.shape != (S,):
            raise InputError("labels and file ids need one entry per sample")
        if len(self.descriptors) != F:
            raise InputError(f"{F} feature columns but {len(self.descriptors)} descriptors")
        if S and (self.labels.min() < 0 or self.labels.max() >= len(self.class_names)):
            raise InputError("label outside the class-name table")
        if not np.all(np.isfinite(self.samples)):
            raise InputError("dataset contains non-finite values")

    @property
    def n_samples(self):
        return self.samples.shape[0]

    @property
    def n_features(self):
        return self.samples.shape[1]

    @property
    def n_classes(self):
        return len(self.class_names)

    def class_counts(self):
        return np.bincount(self.labels, minlength=self.n_classes)

    def take(self, idx) -> "Dataset":
        idx = np.asarray(idx)
        return replace(self, samples=self.samples[idx], labels=self.labels[idx], file_ids=self.file_ids[idx])

    def equals(self, other) -> bool:
        return (
            np.array_equal(self.samples, other.samples)
            and np.array_equal(self.labels, other.labels)
            and np.array_equal(self.file_ids, other.file_ids)
            and self.class_names == other.class_names
            and self.descriptors == other.descriptors
        )


def group_starts(file_ids) -> np.ndarray:
    """Indices where a new run of equal file ids begins (always includes 0)."""
    file_ids = np.asarray(file_ids)
    if file_ids.shape[0] == 0:
        return np.zeros(0, dtype=np.int64)
    return np.concatenate([[0], np.flatnonzero(np.diff(file_ids) != 0) + 1])


def groups_contiguous(file_ids) -> bool:
    starts = group_starts(file_ids)
    ids = np.asarray(file_ids)[starts]
    return len(np.unique(ids)) == len(ids)


# ---------------------------------------------------------------- construction


def _extract_chunk(args):
    config_json, start, payloads = args
    config = FeatureConfig.from_json(config_json)
    return [extract_checked(config, p, start + k) for k, p in enumerate(payloads)]


def extract_matrix(config: FeatureConfig, fragments, threads=None) -> np.ndarray:
    """Feature matrix for a list of fragments (bytes), in input order."""
    threads = thread_count() if threads is None else threads
    F = config.n_features
    if not fragments:
        return np.zeros((0, F))
    if threads > 1 and len(fragments) > 64:
        text = config.to_json()
        step = -(-len(fragments) // (threads * 4))
        jobs = [(text, s, fragments[s:s + step]) for s in range(0, len(fragments), step)]
        with ProcessPoolExecutor(max_workers=threads) as pool:
            rows = [r for chunk in pool.map(_extract_chunk, jobs) for r in chunk]
    else:
        rows = [extract_checked(config, f, k) for k, f in enumerate(fragments)]
    return np.vstack(rows)


def build_dataset(archives, config: FeatureConfig, class_names=None, threads=None) -> Dataset:
    """One sample per fragment and one class per archive, in archive order.

    Similarity categories are resolved against ``archives`` first.  File ids
    are renumbered so that every (archive, source file) pair gets a distinct,
    contiguous id.
    """
    if not archives:
        raise InputError("at least one archive is required")
    config = config if config.resolved else config.resolve(archives)
    names = sanitize_names(class_names or [a.class_name for a in archives])
    fragments, labels, fids = [], [], []
    next_id = 0
    for c, arch in enumerate(archives):
        last = object()
        for r in arch.records:
            if r.file_id != last:
                last = r.file_id
                next_id += 1
            fragments.append(r.data)
            labels.append(c)
            fids.append(next_id - 1)
        log.info("class %s: %d fragments", names[c], len(arch))
    X = extract_matrix(config, fragments, threads)
    return Dataset(X, np.array(labels, dtype=np.int64), np.array(fids, dtype=np.int64), names,
                   config.descriptors(), config)


def dataset_for_machine(archives, machine, class_names=None, threads=None) -> Dataset:
    """Dataset whose features match a trained machine's stored configuration."""
    config = getattr(machine, "feature_config", None)
    if config is None:
        raise CompatibilityError("machine carries no feature configuration")
    if not config.resolved:
        raise CompatibilityError("machine's feature configuration lacks its representative payloads")
    return build_dataset(archives, config, class_names, threads)


# ---------------------------------------------------------------- operations


def permute_dataset(ds: Dataset, rng_seed: int = 0) -> Dataset:
    """Shuffle file groups as blocks, keeping each group's internal order."""
    starts = group_starts(ds.file_ids)
    ends = np.append(starts[1:], ds.n_samples)
    order = np.random.default_rng(rng_seed).permutation(len(starts))
    idx = np.concatenate([np.arange(starts[g], ends[g]) for g in order]) if len(starts) else np.zeros(0, int)
    return ds.take(idx)


def expand_dataset(a: Dataset, b: Dataset) -> Dataset:
    """Append b's feature columns to a; samples must line up exactly."""
    if a.n_samples != b.n_samples:
        raise CompatibilityError(f"sample counts differ: {a.n_samples} vs {b.n_samples}")
    diff = np.flatnonzero(a.labels != b.labels)
    if diff.size:
        raise CompatibilityError(f"labels differ first at sample {diff[0]}")
    diff = np.flatnonzero(a.file_ids != b.file_ids)
    if diff.size:
        raise CompatibilityError(f"file ids differ first at sample {diff[0]}")
    dup = set(a.descriptors) & set(b.descriptors)
    if dup:
        raise CompatibilityError(f"duplicate feature names: {', '.join(sorted(dup)[:5])}")
    config = None
    if a.feature_config is not None and b.feature_config is not None:
        config = FeatureConfig(a.feature_config.entries + b.feature_config.entries)
        if config.descriptors() != a.descriptors + b.descriptors:
            config = None
    return Dataset(np.hstack([a.samples, b.samples]), a.labels, a.file_ids, a.class_names,
                   a.descriptors + b.descriptors, config)


def merge_labels(ds: Dataset, groups, new_names) -> Dataset:
    """Fold each group of classes into one class.

    ``groups`` holds class indices or names.  Merged classes take the slot
    of their lowest member; untouched classes keep their relative order.
    """
    if len(groups) != len(new_names):
        raise ParameterError("one new name per group is required")
    idx_groups = [[_class_index(ds, c) for c in g] for g in groups]
    flat = [c for g in idx_groups for c in g]
    if len(flat) != len(set(flat)):
        raise ParameterError("label groups overlap")
    if any(not g for g in idx_groups):
        raise ParameterError("empty label group")
    target = {}
    for g, name in zip(idx_groups, new_names):
        for c in g:
            target[c] = (min(g), name)
    slots = []
    names = []
    mapping = np.empty(ds.n_classes, dtype=np.int64)
    for c in range(ds.n_classes):
        key, name = target.get(c, (c, ds.class_names[c]))
        if key not in slots:
            slots.append(key)
            names.append(name)
        mapping[c] = slots.index(key)
    names = sanitize_names(names)
    return Dataset(ds.samples, mapping[ds.labels], ds.file_ids, names, ds.descriptors, ds.feature_config)


def _class_index(ds, c):
    if isinstance(c, (int, np.integer)):
        if not 0 <= c < ds.n_classes:
            raise ParameterError(f"class index {c} out of range")
        return int(c)
    if c not in ds.class_names:
        raise ParameterError(f"unknown class {c!r}; classes are {', '.join(ds.class_names)}")
    return ds.class_names.index(c)


def _feature_index(ds, f):
    if isinstance(f, (int, np.integer)):
        if not 0 <= f < ds.n_features:
            raise ParameterError(f"feature index {f} out of range")
        return int(f)
    if f not in ds.descriptors:
        raise ParameterError(f"unknown feature {f!r}")
    return ds.descriptors.index(f)


def sub_dataset(ds: Dataset, keep_classes=None, keep_features=None) -> Dataset:
    """Keep the listed classes (rows) and features (columns); None keeps all."""
    cls = list(range(ds.n_classes)) if keep_classes is None else sorted({_class_index(ds, c) for c in keep_classes})
    feats = list(range(ds.n_features)) if keep_features is None else [_feature_index(ds, f) for f in keep_features]
    if not cls or not feats:
        raise ParameterError("sub-dataset selection must keep at least one class and one feature")
    if len(set(feats)) != len(feats):
        raise ParameterError("feature selection repeats a column")
    remap = np.full(ds.n_classes, -1)
    remap[cls] = np.arange(len(cls))
    rows = np.flatnonzero(remap[ds.labels] >= 0)
    config = ds.feature_config if feats == list(range(ds.n_features)) else None
    return Dataset(ds.samples[np.ix_(rows, feats)], remap[ds.labels[rows]], ds.file_ids[rows],
                   [ds.class_names[c] for c in cls], [ds.descriptors[f] for f in feats], config)


# ---------------------------------------------------------------- scaling & weights


@dataclass
class ScalingParams:
    method: str
    center: np.ndarray  # mean (zscore) or minimum (minmax)
    scale: np.ndarray  # std (zscore) or max - min (minmax); 0 marks a degenerate feature

    def to_dict(self):
        return {"method": self.method, "center": self.center.tolist(), "scale": self.scale.tolist()}

    @classmethod
    def from_dict(cls, d):
        return cls(d["method"], np.asarray(d["center"], dtype=np.float64), np.asarray(d["scale"], dtype=np.float64))


SCALING_METHODS = ("zscore", "minmax")


def fit_scaling(rows, method: str) -> ScalingParams:
    rows = np.asarray(rows, dtype=np.float64)
    if method == "zscore":
        if rows.shape[0] < 2:
            raise InputError("z-score scaling needs at least 2 training rows")
        center = rows.mean(axis=0)
        scale = rows.std(axis=0, ddof=1)
    elif method == "minmax":
        if rows.shape[0] < 1:
            raise InputError("min-max scaling needs training rows")
        center = rows.min(axis=0)
        scale = rows.max(axis=0) - center
    else:
        raise ParameterError(f"scaling method must be one of {SCALING_METHODS}, got {method!r}")
    # constant columns: relative spread below rounding error
    tiny = scale <= 1e-12 * np.maximum(np.abs(center), 1.0)
    scale = np.where(tiny, 0.0, scale)
    return ScalingParams(method, center, scale)


def apply_scaling(rows, params: ScalingParams) -> np.ndarray:
    rows = np.asarray(rows, dtype=np.float64)
    ok = params.scale > 0
    out = np.zeros_like(rows)
    out[:, ok] = (rows[:, ok] - params.center[ok]) / params.scale[ok]
    return out


@dataclass
class SampleWeights:
    w: np.ndarray
    method: str


WEIGHTING_METHODS = ("balanced", "uniform")


def compute_weights(labels, method: str = "balanced", n_classes=None) -> SampleWeights:
    """Uniform weights are 1; balanced weights give each present class total S/C."""
    labels = np.asarray(labels, dtype=np.int64)
    if method == "uniform":
        return SampleWeights(np.ones(labels.shape[0]), method)
    if method != "balanced":
        raise ParameterError(f"weighting must be one of {WEIGHTING_METHODS}, got {method!r}")
    if labels.shape[0] == 0:
        return SampleWeights(np.zeros(0), method)
    counts = np.bincount(labels, minlength=n_classes or 0)
    present = np.count_nonzero(counts)
    S = labels.shape[0]
    per_class = np.zeros(counts.shape[0])
    per_class[counts > 0] = S / (present * counts[counts > 0])
    return SampleWeights(per_class[labels], method)


# ---------------------------------------------------------------- splits


@dataclass(frozen=True)
class SplitSpec:
    start: float = 0.0
    end: float = 1.0
    train_percent: float = 80.0
    validation_percent: float = 20.0

    def __post_init__(self):
        if not (0.0 <= self.start < self.end <= 1.0):
            raise ParameterError(f"range must satisfy 0 <= start < end <= 1, got [{self.start}, {self.end}]")
        if abs(self.train_percent + self.validation_percent - 100.0) > 1e-9:
            raise ParameterError("train and validation percentages must sum to 100")
        if self.validation_percent < 0:
            raise ParameterError("validation percentage must be >= 0")
        if self.train_percent < MIN_TRAIN_PERCENT:
            raise ParameterError(f"training share must be at least {MIN_TRAIN_PERCENT:g}%")


def range_indices(n: int, start: float, end: float):
    lo = int(np.floor(start * n + 1e-9))
    hi = int(np.ceil(end * n - 1e-9))
    return lo, min(hi, n)


def next_group_boundary(file_ids, pos: int, stop: int) -> int:
    """First index >= pos that starts a new file group (or ``stop``)."""
    while 0 < pos < stop and file_ids[pos] == file_ids[pos - 1]:
        pos += 1
    return pos


def split_indices(ds_or_file_ids, spec: SplitSpec):
    """(train indices, validation indices) with no file straddling the cut."""
    fids = ds_or_file_ids.file_ids if isinstance(ds_or_file_ids, Dataset) else np.asarray(ds_or_file_ids)
    lo, hi = range_indices(fids.shape[0], spec.start, spec.end)
    if hi <= lo:
        raise InputError("the selected range holds no samples")
    cut = lo + int(np.floor((hi - lo) * spec.train_percent / 100.0 + 1e-9))
    cut = next_group_boundary(fids, cut, hi)
    return np.arange(lo, cut), np.arange(cut, hi)


def split_dataset(ds: Dataset, spec: SplitSpec):
    tr, va = split_indices(ds, spec)
    return ds.take(tr), ds.take(va)


# ---------------------------------------------------------------- persistence


def _header_line(magic: bytes, version: int, n: int) -> bytes:
    return magic + b" %d %d\n" % (version, n)


def parse_header_line(buf: bytes, magic: bytes):
    nl = buf.find(b"\n", 0, 128)
    if nl < 0 or not buf.startswith(magic + b" "):
        raise FormatError(f"not a {magic.decode()} file (bad magic)", 0)
    try:
        _, version, n = buf[:nl].split(b" ")
        version, n = int(version), int(n)
    except ValueError:
        raise FormatError("malformed header line", 0) from None
    return version, n, nl + 1


def encode_dataset(ds: Dataset) -> bytes:
    header = {
        "kind": "dataset",
        "version": DATASET_VERSION,
        "n_samples": ds.n_samples,
        "n_features": ds.n_features,
        "class_names": ds.class_names,
        "descriptors": ds.descriptors,
        "feature_config": ds.feature_config.to_list() if ds.feature_config is not None else None,
    }
    text = json.dumps(header).encode("utf-8")
    body = np.hstack([ds.samples, ds.labels[:, None].astype(np.float64), ds.file_ids[:, None].astype(np.float64)])
    return _header_line(DATASET_MAGIC, DATASET_VERSION, len(text)) + text + body.astype("<f8").tobytes()


def read_dataset_header(buf: bytes):
    version, n, pos = parse_header_line(buf, DATASET_MAGIC)
    if version != DATASET_VERSION:
        raise FormatError(f"unsupported dataset version {version}", 0)
    if pos + n > len(buf):
        raise FormatError("truncated header", len(buf))
    try:
        header = json.loads(buf[pos:pos + n].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"corrupt header: {exc}", pos) from None
    return header, pos + n


def decode_dataset(buf: bytes) -> Dataset:
    header, pos = read_dataset_header(buf)
    S, F = header["n_samples"], header["n_features"]
    need = S * (F + 2) * 8
    if len(buf) - pos != need:
        raise FormatError(f"matrix holds {len(buf) - pos} bytes, expected {need}", pos)
    body = np.frombuffer(buf, dtype="<f8", offset=pos).reshape(S, F + 2).astype(np.float64)
    cfg = header.get("feature_config")
    return Dataset(body[:, :F].copy(), body[:, F].astype(np.int64), body[:, F + 1].astype(np.int64),
                   header["class_names"], header["descriptors"], FeatureConfig(cfg) if cfg is not None else None)


def save_dataset(ds: Dataset, path):
    atomic_write(path, encode_dataset(ds))


def load_dataset(path) -> Dataset:
    return decode_dataset(Path(path).read_bytes())
