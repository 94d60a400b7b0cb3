"""Representative-based features: longest common substring/subsequence and
centroid (cosine / Mahalanobis) similarity to a class BFD model."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .. import kernels
from ..errors import InputError, ParameterError
from .basic import as_array, bfd

PLACEMENTS = ("begin", "end", "random")
MAHALANOBIS_DAMPING = 0.01


@dataclass
class RepresentativeSet:
    class_name: str
    fragments: list = field(default_factory=list)  # list[bytes]
    placement: str = "begin"

    def __post_init__(self):
        self.fragments = [bytes(f.data) if hasattr(f, "data") else bytes(f) for f in self.fragments]
        if not self.fragments:
            raise InputError("a representative set needs at least one fragment")
        if self.placement not in PLACEMENTS:
            raise ParameterError(f"placement must be one of {PLACEMENTS}")

    @property
    def count(self):
        return len(self.fragments)


@dataclass
class CentroidModel:
    class_name: str
    mean: np.ndarray
    std: np.ndarray


def select_representatives(archive, count: int, placement: str = "begin", rng_seed: int = 0) -> RepresentativeSet:
    """Pick ``count`` records from the start, the end or at random."""
    n = len(archive.records)
    if placement not in PLACEMENTS:
        raise ParameterError(f"placement must be one of {PLACEMENTS}, got {placement!r}")
    if count < 1:
        raise ParameterError("representative count must be >= 1")
    if count > n:
        raise InputError(f"class {archive.class_name} has {n} records, cannot take {count} representatives")
    if placement == "begin":
        idx = range(count)
    elif placement == "end":
        idx = range(n - count, n)
    else:
        idx = np.sort(np.random.default_rng(rng_seed).choice(n, size=count, replace=False))
    return RepresentativeSet(archive.class_name, [archive.records[i].data for i in idx], placement)


def build_centroid(reps: RepresentativeSet) -> CentroidModel:
    vecs = np.array([bfd(f) for f in reps.fragments])
    mean = vecs.mean(axis=0)
    std = vecs.std(axis=0, ddof=1) if len(vecs) > 1 else np.zeros(vecs.shape[1])
    return CentroidModel(reps.class_name, mean, std)


def centroid_features(fragment, models) -> np.ndarray:
    """Cosine similarity and damped Mahalanobis distance to each model."""
    if not models:
        raise ParameterError("at least one centroid model is required")
    v = bfd(fragment)
    nv = np.sqrt(v @ v)
    out = []
    for m in models:
        nm = np.sqrt(m.mean @ m.mean)
        cos = float(v @ m.mean / (nv * nm)) if nm > 0 else 0.0
        maha = float(np.sqrt(((v - m.mean) ** 2 / (MAHALANOBIS_DAMPING + m.std)).sum()))
        out.extend([cos, maha])
    return np.array(out)


def mean_lcs_lengths(fragment, rep_sets, kind: str) -> np.ndarray:
    """Per set, the mean longest common ``substring`` or ``subsequence`` length."""
    fn = {"substring": kernels.lcsubstring_length, "subsequence": kernels.lcsubsequence_length}[kind]
    x = as_array(fragment)
    return np.array([
        float(np.mean([fn(x, np.frombuffer(r, dtype=np.uint8)) for r in reps.fragments])) for reps in rep_sets
    ])


def lcs_features(fragment, rep_sets) -> np.ndarray:
    """Per set: mean longest-common-substring and mean subsequence length in bytes."""
    sub = mean_lcs_lengths(fragment, rep_sets, "substring")
    seq = mean_lcs_lengths(fragment, rep_sets, "subsequence")
    return np.column_stack([sub, seq]).ravel()
