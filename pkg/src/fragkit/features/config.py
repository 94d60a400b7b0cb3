"""Feature configuration: which categories to extract, with what parameters,
and the descriptor naming every output column.

A configuration is an ordered list of entries such as
``{"type": "ngram", "n": [2, 3]}``.  Similarity categories additionally
carry a payload (representative fragments or centroid models) once they are
resolved against the training archives; the payload travels with datasets
and machines so features can be regenerated later without re-sampling.
"""
from __future__ import annotations

import base64
import copy
import json
import re

import numpy as np

from ..errors import InputError, ParameterError
from . import advanced, basic, similarity

CATEGORIES = (
    "bfd",
    "roc",
    "streak",
    "ngram",
    "concentration",
    "basic",
    "higher",
    "bicoherence",
    "window",
    "autocorr",
    "freq",
    "binary_ratio",
    "entropy",
    "video",
    "audio",
    "kolmogorov",
    "fnn",
    "lyapunov",
    "gist",
    "lcsubsequence",
    "lcsubstring",
    "centroid",
)

SIMILARITY = ("lcsubsequence", "lcsubstring", "centroid")

_DEFAULTS = {
    "ngram": {"n": [2]},
    "window": {"size": 256},
    "autocorr": {"max_lag": 5},
    "freq": {"bands": 4},
    "fnn": {"ratio": 10.0, "d_min": 1, "d_max": 3},
    "lyapunov": {"d_min": 1, "d_max": 3},
    "gist": {"row_size": 32, "grid": 4, "orientations": [8, 8, 8, 8]},
    "lcsubsequence": {"classes": None, "count": 5, "placement": "begin", "seed": 0},
    "lcsubstring": {"classes": None, "count": 5, "placement": "begin", "seed": 0},
    "centroid": {"classes": None, "count": 20, "placement": "begin", "seed": 0},
}

# configuration used in the textual-format walkthrough: 566 columns
EXAMPLE_566 = [
    {"type": "bfd"},
    {"type": "roc"},
    {"type": "streak"},
    {"type": "ngram", "n": [2, 3]},
    {"type": "concentration"},
    {"type": "basic"},
    {"type": "higher"},
    {"type": "window", "size": 256},
    {"type": "autocorr", "max_lag": 5},
    {"type": "freq", "bands": 4},
    {"type": "entropy"},
]


def _video_names():
    names = []
    seen = {}
    for fmt, pat in advanced.VIDEO_PATTERNS:
        base = f"Video_{fmt}_{pat.hex().upper()}"
        seen[base] = seen.get(base, 0) + 1
        names.append(base if seen[base] == 1 else f"{base}_{seen[base]}")
    return names


def _entry_descriptors(e) -> list[str]:
    t = e["type"]
    if t == "bfd":
        return [f"BFD_{i}" for i in range(256)] + ["SdFreq", "ModesFreq", "CorNextFreq", "ChiSq"]
    if t == "roc":
        return [f"RoC_{i}" for i in range(256)] + ["MeanRoC"]
    if t == "streak":
        return ["LongestStreak"]
    if t == "ngram":
        return [f"{n}gram_{k:0{n}b}" for n in e["n"] for k in range(1 << n)]
    if t == "concentration":
        return ["Low", "ASCII", "High"]
    if t == "basic":
        return ["Mean", "STD", "Mode", "Median", "MAD", "GeometricMean", "HarmonicMean"]
    if t == "higher":
        return ["Kurtosis", "Skewness"]
    if t == "bicoherence":
        return ["Bicoherence"]
    if t == "window":
        return ["DeltaMean", "DeltaDeltaMean", "DeltaSTD", "DeltaDeltaSTD", "DevSTD"]
    if t == "autocorr":
        return [f"AutoCorr_{k}" for k in range(1, e["max_lag"] + 1)]
    if t == "freq":
        return [f"{s}_band{b}" for b in range(1, e["bands"] + 1) for s in ("Mean", "Variance", "Skewness")]
    if t == "binary_ratio":
        return ["BRO"]
    if t == "entropy":
        return ["Entropy", "EntropyDiff"]
    if t == "video":
        return _video_names()
    if t == "audio":
        return [f"Audio_{fmt}" for fmt, _ in advanced.AUDIO_PATTERNS]
    if t == "kolmogorov":
        return ["Kolmogorov"]
    if t == "fnn":
        return [
            f"{s}_D{d}"
            for d in range(e["d_min"], e["d_max"] + 1)
            for s in ("FNF", "MeanNeighborDist", "RMSNeighborDist")
        ]
    if t == "lyapunov":
        return [f"Lyapunov_D{d}" for d in range(e["d_min"], e["d_max"] + 1)]
    if t == "gist":
        m = e["grid"]
        return [
            f"GIST_s{s + 1}_o{o + 1}_{r + 1}_{c + 1}"
            for s, n_or in enumerate(e["orientations"])
            for o in range(n_or)
            for r in range(m)
            for c in range(m)
        ]
    if t in SIMILARITY:
        classes = [sanitize_name(c) for c in _entry_classes(e)]
        if t == "lcsubsequence":
            return [f"LCSubsequence_{c}" for c in classes]
        if t == "lcsubstring":
            return [f"LCSubstring_{c}" for c in classes]
        return [f"{s}_{c}" for c in classes for s in ("Cosine", "Mahalanobis")]
    raise ParameterError(f"unknown feature type {t!r}")


def _entry_classes(e):
    if "payload" in e:
        return [p["class_name"] for p in e["payload"]]
    if not e.get("classes"):
        raise ParameterError(f"{e['type']} needs its representative classes resolved first")
    return list(e["classes"])


def _check_int_list(v, name):
    if not isinstance(v, (list, tuple)) or not v:
        raise ParameterError(f"{name} must be a non-empty list of integers")
    return [int(a) for a in v]


def normalize_entry(entry) -> dict:
    if isinstance(entry, str):
        entry = {"type": entry}
    e = dict(entry)
    t = e.get("type")
    if t not in CATEGORIES:
        raise ParameterError(f"unknown feature type {t!r}; choose from {', '.join(CATEGORIES)}")
    for k, v in _DEFAULTS.get(t, {}).items():
        e.setdefault(k, copy.deepcopy(v))
    if t == "ngram":
        e["n"] = _check_int_list(e["n"], "n")
        for n in e["n"]:
            if not 1 <= n <= advanced.MAX_NGRAM:
                raise ParameterError(f"n-gram length must be in 1..{advanced.MAX_NGRAM}, got {n}")
    elif t == "window":
        e["size"] = int(e["size"])
        if e["size"] < 1:
            raise ParameterError("window size must be >= 1")
    elif t == "autocorr":
        e["max_lag"] = int(e["max_lag"])
        if e["max_lag"] < 1:
            raise ParameterError("maximum lag must be >= 1")
    elif t == "freq":
        e["bands"] = int(e["bands"])
        if not 1 <= e["bands"] <= 8:
            raise ParameterError("number of sub-bands must be in 1..8")
    elif t in ("fnn", "lyapunov"):
        e["d_min"], e["d_max"] = int(e["d_min"]), int(e["d_max"])
        if not 1 <= e["d_min"] <= e["d_max"]:
            raise ParameterError("need 1 <= d_min <= d_max")
        if t == "fnn":
            e["ratio"] = float(e["ratio"])
            if e["ratio"] <= 0:
                raise ParameterError("ratio factor must be positive")
    elif t == "gist":
        p = advanced.GistParams(int(e["row_size"]), int(e["grid"]), tuple(e["orientations"]))
        e["row_size"], e["grid"], e["orientations"] = p.row_size, p.grid, list(p.orientations)
    elif t in SIMILARITY:
        e["count"] = int(e["count"])
        if e["count"] < 1:
            raise ParameterError("representative count must be >= 1")
        if e["placement"] not in similarity.PLACEMENTS:
            raise ParameterError(f"placement must be one of {similarity.PLACEMENTS}")
        e["seed"] = int(e["seed"])
    return e


class FeatureConfig:
    """Ordered feature categories with their parameters and payloads."""

    def __init__(self, entries):
        self.entries = [normalize_entry(e) for e in entries]
        self._models = None

    # -- description -------------------------------------------------
    @property
    def resolved(self):
        return all("payload" in e for e in self.entries if e["type"] in SIMILARITY)

    def descriptors(self) -> list[str]:
        out = []
        for e in self.entries:
            out.extend(_entry_descriptors(e))
        if len(set(out)) != len(out):
            dup = sorted({d for d in out if out.count(d) > 1})
            raise ParameterError(f"feature configuration repeats columns: {', '.join(dup[:5])}")
        return out

    @property
    def n_features(self):
        return len(self.descriptors())

    def min_length(self) -> int:
        """Shortest fragment every category in this configuration accepts."""
        need = 1
        for e in self.entries:
            t = e["type"]
            if t in ("roc", "basic"):
                need = max(need, 2)
            elif t == "higher":
                need = max(need, 4)
            elif t == "window":
                need = max(need, 3 * e["size"])
            elif t == "autocorr":
                need = max(need, e["max_lag"] + 1)
            elif t == "freq":
                need = max(need, 2 * e["bands"])
            elif t == "bicoherence":
                need = max(need, 2 * advanced.BICOHERENCE_SEGMENT)
            elif t in ("fnn", "lyapunov"):
                need = max(need, e["d_max"] + 2)
            elif t == "gist":
                need = max(need, e["row_size"])
            elif t == "ngram":
                need = max(need, -(-max(e["n"]) // 8))
        return need

    # -- resolution ----------------------------------------------------
    def resolve(self, archives) -> "FeatureConfig":
        """Return a copy whose similarity entries carry their payload."""
        by_name = {}
        for a in archives:
            by_name[a.class_name] = a
            by_name.setdefault(sanitize_name(a.class_name), a)
        entries = []
        for e in self.entries:
            e = copy.deepcopy(e)
            if e["type"] in SIMILARITY and "payload" not in e:
                classes = e.get("classes") or [a.class_name for a in archives]
                payload = []
                for c in classes:
                    if c not in by_name:
                        raise ParameterError(f"representative class {c!r} is not among the archives")
                    reps = similarity.select_representatives(by_name[c], e["count"], e["placement"], e["seed"])
                    if e["type"] == "centroid":
                        m = similarity.build_centroid(reps)
                        payload.append(
                            {"class_name": c, "mean": m.mean.tolist(), "std": m.std.tolist()}
                        )
                    else:
                        payload.append(
                            {
                                "class_name": c,
                                "fragments": [base64.b64encode(f).decode("ascii") for f in reps.fragments],
                                "placement": reps.placement,
                            }
                        )
                e["classes"] = list(classes)
                e["payload"] = payload
            entries.append(e)
        return FeatureConfig(entries)

    def _payload_models(self, e):
        if self._models is None:
            self._models = {}
        key = id(e)
        if key not in self._models:
            if "payload" not in e:
                raise ParameterError(f"{e['type']} features need resolved representatives")
            if e["type"] == "centroid":
                self._models[key] = [
                    similarity.CentroidModel(p["class_name"], np.asarray(p["mean"]), np.asarray(p["std"]))
                    for p in e["payload"]
                ]
            else:
                self._models[key] = [
                    similarity.RepresentativeSet(
                        p["class_name"], [base64.b64decode(f) for f in p["fragments"]], p.get("placement", "begin")
                    )
                    for p in e["payload"]
                ]
        return self._models[key]

    # -- extraction ------------------------------------------------------
    def extract(self, fragment) -> np.ndarray:
        x = basic.as_array(fragment)
        parts = []
        chaotic = {}
        for e in self.entries:
            parts.append(self._extract_entry(e, x, chaotic))
        return np.concatenate(parts) if parts else np.zeros(0)

    def _extract_entry(self, e, x, chaotic):
        t = e["type"]
        if t == "bfd":
            return basic.bfd_features(x)
        if t == "roc":
            return basic.roc_features(x)
        if t == "streak":
            return basic.longest_streak(x)
        if t == "ngram":
            return advanced.ngram_features(x, e["n"])
        if t == "concentration":
            return basic.byte_concentration(x)
        if t == "basic":
            return basic.basic_stats(x)
        if t == "higher":
            return basic.higher_order_stats(x)
        if t == "bicoherence":
            return advanced.bicoherence(x)
        if t == "window":
            return basic.window_stats(x, e["size"])
        if t == "autocorr":
            return basic.autocorrelation(x, e["max_lag"])
        if t == "freq":
            return basic.frequency_domain_stats(x, e["bands"])
        if t == "binary_ratio":
            return basic.binary_ratio(x)
        if t == "entropy":
            return basic.entropy_features(x)
        if t == "video":
            return advanced.video_patterns(x)
        if t == "audio":
            return advanced.audio_patterns(x)
        if t == "kolmogorov":
            return advanced.kolmogorov_complexity(x)
        if t in ("fnn", "lyapunov"):
            ratio = e.get("ratio", 10.0)
            rows = []
            for d in range(e["d_min"], e["d_max"] + 1):
                key = (d, ratio if t == "fnn" else None)
                if key not in chaotic:
                    # lyapunov ignores the ratio, so reuse any cached dimension
                    hit = next((v for (dd, _), v in chaotic.items() if dd == d), None) if t == "lyapunov" else None
                    chaotic[key] = hit if hit is not None else advanced.chaotic_features(x, ratio, d, d)
                rows.append(chaotic[key])
            if t == "fnn":
                return np.concatenate([r[:3] for r in rows])
            return np.array([r[3] for r in rows])
        if t == "gist":
            return advanced.gist_features(x, advanced.GistParams(e["row_size"], e["grid"], tuple(e["orientations"])))
        if t == "centroid":
            return similarity.centroid_features(x, self._payload_models(e))
        if t in ("lcsubsequence", "lcsubstring"):
            kind = "substring" if t == "lcsubstring" else "subsequence"
            return similarity.mean_lcs_lengths(x, self._payload_models(e), kind)
        raise ParameterError(f"unknown feature type {t!r}")

    # -- serialisation ---------------------------------------------------
    def to_list(self):
        return copy.deepcopy(self.entries)

    def to_json(self):
        return json.dumps(self.entries)

    @classmethod
    def from_json(cls, text):
        data = json.loads(text)
        if isinstance(data, dict):
            data = data.get("features", data.get("entries"))
        if not isinstance(data, list):
            raise ParameterError("feature configuration must be a list of entries")
        return cls(data)

    def __eq__(self, other):
        return isinstance(other, FeatureConfig) and self.entries == other.entries

    def __repr__(self):
        return f"FeatureConfig({[e['type'] for e in self.entries]})"


_IDENT = re.compile(r"[^0-9A-Za-z_]")


def sanitize_name(name: str) -> str:
    """Identifier-safe class name: non-identifier characters become ``_``."""
    s = _IDENT.sub("_", name)
    if not s or s[0].isdigit():
        s = "C_" + s
    return s


def sanitize_names(names) -> list[str]:
    """Sanitise a list of names, suffixing ``_2``, ``_3``... on collisions."""
    out = []
    used = set()
    for n in names:
        s = sanitize_name(n)
        base, k = s, 1
        while s in used:
            k += 1
            s = f"{base}_{k}"
        used.add(s)
        out.append(s)
    return out


def extract_checked(config: FeatureConfig, fragment, index: int) -> np.ndarray:
    try:
        v = config.extract(fragment)
    except (InputError, ParameterError) as exc:
        raise InputError(f"feature extraction failed on fragment {index}: {exc}") from exc
    if not np.all(np.isfinite(v)):
        bad = np.flatnonzero(~np.isfinite(v))[:5]
        names = config.descriptors()
        raise InputError(
            f"feature extraction produced non-finite values on fragment {index}: "
            + ", ".join(names[i] for i in bad)
        )
    return v
