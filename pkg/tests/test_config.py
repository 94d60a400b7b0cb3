from types import SimpleNamespace

import numpy as np
import pytest

from fragkit.dataset import build_dataset, dataset_for_machine
from fragkit.errors import CompatibilityError, InputError, ParameterError
from fragkit.features import basic, similarity
from fragkit.features.config import (
    CATEGORIES,
    EXAMPLE_566,
    FeatureConfig,
    extract_checked,
    normalize_entry,
    sanitize_name,
    sanitize_names,
)
from fragkit.fragstore import Fragment, FragmentArchive

EXPECTED_BLOCKS = [("BFD_0", 260), ("RoC_0", 257), ("LongestStreak", 1), ("2gram_00", 12), ("Low", 3),
                   ("Mean", 7), ("Kurtosis", 2), ("DeltaMean", 5), ("AutoCorr_1", 5), ("Mean_band1", 12),
                   ("Entropy", 2)]


def _archive(name, n, L=300, seed=0, files=None):
    rng = np.random.default_rng(seed)
    files = files or list(range(n))
    return FragmentArchive(name, [Fragment(rng.integers(0, 256, L, dtype=np.uint8).tobytes(), files[k], 0)
                                  for k in range(n)])


def test_example_configuration_has_566_columns_in_block_order():
    names = FeatureConfig(EXAMPLE_566).descriptors()
    assert len(names) == 566
    pos = 0
    for first, size in EXPECTED_BLOCKS:
        assert names[pos] == first
        pos += size
    assert pos == 566
    assert names[256:260] == ["SdFreq", "ModesFreq", "CorNextFreq", "ChiSq"]
    assert names[518:530] == [f"{n}gram_{k:0{n}b}" for n in (2, 3) for k in range(1 << n)]


def test_extract_length_matches_descriptors():
    cfg = FeatureConfig(EXAMPLE_566)
    v = cfg.extract(bytes(range(256)) * 4)
    assert v.shape == (566,) and np.all(np.isfinite(v))


def test_every_category_extracts_its_descriptor_count():
    arch = [_archive("A", 3), _archive("B", 3, seed=1)]
    entries = [{"type": t, "count": 2} if t in ("lcsubsequence", "lcsubstring", "centroid") else t
               for t in CATEGORIES]
    cfg = FeatureConfig(entries).resolve(arch)
    frag = np.random.default_rng(5).integers(0, 256, 1024, dtype=np.uint8).tobytes()
    v = cfg.extract(frag)
    assert v.shape == (cfg.n_features,)
    assert np.all(np.isfinite(v))


def test_json_round_trip_preserves_entries_and_payload():
    cfg = FeatureConfig(["bfd", {"type": "ngram", "n": [1, 4]}, {"type": "centroid", "count": 2},
                         {"type": "lcsubstring", "count": 1}]).resolve([_archive("A", 3), _archive("B", 2)])
    back = FeatureConfig.from_json(cfg.to_json())
    assert back == cfg
    frag = b"\x01\x02" * 100
    assert np.array_equal(back.extract(frag), cfg.extract(frag))


@pytest.mark.parametrize("entry", [
    {"type": "nope"}, {"type": "ngram", "n": [0]}, {"type": "ngram", "n": []}, {"type": "window", "size": 0},
    {"type": "autocorr", "max_lag": 0}, {"type": "freq", "bands": 9}, {"type": "fnn", "d_min": 3, "d_max": 2},
    {"type": "fnn", "ratio": 0}, {"type": "centroid", "count": 0}, {"type": "centroid", "placement": "middle"},
])
def test_invalid_entries_are_rejected(entry):
    with pytest.raises(ParameterError):
        normalize_entry(entry)


def test_unresolved_similarity_has_no_descriptors():
    with pytest.raises(ParameterError):
        FeatureConfig(["centroid"]).descriptors()
    assert FeatureConfig([{"type": "centroid", "classes": ["X"]}]).descriptors() == ["Cosine_X", "Mahalanobis_X"]


def test_resolve_selects_representatives_per_class():
    a, b = _archive("A", 4), _archive("B", 4, seed=3)
    cfg = FeatureConfig([{"type": "lcsubsequence", "count": 2, "placement": "end"}]).resolve([a, b])
    assert cfg.resolved
    assert cfg.descriptors() == ["LCSubsequence_A", "LCSubsequence_B"]
    frag = a.records[-1].data
    v = cfg.extract(frag)
    assert v[0] == pytest.approx((similarity.lcs_features(frag, [similarity.RepresentativeSet("A", [r.data for r in a.records[2:]])])[1]))
    with pytest.raises(ParameterError):
        FeatureConfig([{"type": "centroid", "classes": ["Z"]}]).resolve([a])


def test_dataset_for_machine_uses_stored_centroid():
    a, b = _archive("A", 5), _archive("B", 5, seed=2)
    ds = build_dataset([a, b], FeatureConfig([{"type": "centroid", "count": 2}]))
    machine = SimpleNamespace(feature_config=ds.feature_config)
    # new archives would give a different centroid if it were recomputed
    a2, b2 = _archive("A", 3, seed=7), _archive("B", 3, seed=8)
    again = dataset_for_machine([a2, b2], machine)
    stored = similarity.build_centroid(similarity.RepresentativeSet("A", [r.data for r in a.records[:2]]))
    frag = a2.records[0].data
    v = basic.bfd(frag)
    cos = v @ stored.mean / np.linalg.norm(v) / np.linalg.norm(stored.mean)
    assert again.samples[0, 0] == pytest.approx(cos, rel=1e-12)
    with pytest.raises(CompatibilityError):
        dataset_for_machine([a2], SimpleNamespace(feature_config=None))
    with pytest.raises(CompatibilityError):
        dataset_for_machine([a2], SimpleNamespace(feature_config=FeatureConfig(["centroid"])))


def test_build_dataset_renumbers_file_ids_per_archive():
    a = _archive("A", 4, files=[7, 7, 9, 9])
    b = _archive("B", 3, files=[7, 7, 8])
    ds = build_dataset([a, b], FeatureConfig(["streak"]))
    assert ds.file_ids.tolist() == [0, 0, 1, 1, 2, 2, 3]
    assert ds.labels.tolist() == [0] * 4 + [1] * 3
    assert ds.class_names == ["A", "B"]


def test_sanitize_names():
    assert sanitize_name("my class.v2") == "my_class_v2"
    assert sanitize_name("3gp") == "C_3gp"
    assert sanitize_name("") == "C_"
    assert sanitize_names(["a-b", "a.b", "a_b"]) == ["a_b", "a_b_2", "a_b_3"]


def test_similarity_descriptors_use_sanitized_names():
    a = _archive("my pdf", 3)
    cfg = FeatureConfig([{"type": "lcsubstring", "count": 1}]).resolve([a])
    assert cfg.descriptors() == ["LCSubstring_my_pdf"]


def test_extract_checked_reports_fragment_index():
    cfg = FeatureConfig([{"type": "window", "size": 10}])
    with pytest.raises(InputError, match="fragment 12"):
        extract_checked(cfg, b"short", 12)


def test_min_length_is_accepted_by_every_category():
    cfg = FeatureConfig([t for t in CATEGORIES if t not in ("lcsubsequence", "lcsubstring", "centroid")])
    n = cfg.min_length()
    v = extract_checked(cfg, bytes(np.random.default_rng(0).integers(0, 256, n, dtype=np.uint8)), 0)
    assert v.shape == (cfg.n_features,)
