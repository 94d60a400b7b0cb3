import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fragkit.errors import InputError, ParameterError
from fragkit.features import advanced
from oracles import bits_of, count_overlapping, lz76_bruteforce, ngram_counts, nearest_neighbors_brute

fragments = st.binary(min_size=2, max_size=200)


def _rand(n, seed=0):
    return np.random.default_rng(seed).integers(0, 256, n).astype(np.uint8)


def test_ngram_worked_example():
    # bit vector 1011 1001 0110 1000
    v = advanced.ngram_features(bytes([0xB9, 0x68]), [2])
    assert v[0] == pytest.approx(0.2, abs=1e-12)
    assert v.sum() == pytest.approx(1.0)


def test_ngram_all_zero():
    assert advanced.ngram_features(bytes(4), [1]).tolist() == [1.0, 0.0]


@given(fragments, st.lists(st.integers(1, 6), min_size=1, max_size=3))
def test_ngram_matches_oracle_and_sums_to_one(x, ns):
    v = advanced.ngram_features(x, ns)
    pos = 0
    for n in ns:
        block = v[pos:pos + (1 << n)]
        assert block.sum() == pytest.approx(1.0, abs=1e-9)
        assert np.allclose(block, ngram_counts(x, n), atol=1e-15)
        pos += 1 << n


def test_ngram_range_checked():
    with pytest.raises(ParameterError):
        advanced.ngram_features(bytes(4), [14])
    with pytest.raises(ParameterError):
        advanced.ngram_features(bytes(4), [0])


def test_video_pattern_ogg():
    x = bytearray(100)
    x[40:44] = bytes.fromhex("4F676753")
    v = advanced.video_patterns(bytes(x))
    ogg = [i for i, (fmt, _) in enumerate(advanced.VIDEO_PATTERNS) if fmt == "OGV"][0]
    assert v[ogg] == pytest.approx(2 ** 32 / 97, rel=1e-15)
    assert len(v) == 17


def test_video_patterns_absent_and_repeated():
    assert advanced.video_patterns(b"\x11" * 50).tolist() == [0.0] * 17
    pat = bytes.fromhex("419A")
    x = pat * 7
    i = [k for k, (_, p) in enumerate(advanced.VIDEO_PATTERNS) if p == pat][0]
    assert advanced.video_patterns(x)[i] == pytest.approx(7 / 13 * 2 ** 16)
    assert count_overlapping(x, pat) == 7


@given(st.binary(min_size=1, max_size=120))
def test_pattern_counters_match_naive_scan(x):
    v = advanced.video_patterns(x)
    for k, (_, pat) in enumerate(advanced.VIDEO_PATTERNS):
        if len(x) >= len(pat):
            assert v[k] == count_overlapping(x, pat) / (len(x) - len(pat) + 1) * 2.0 ** (8 * len(pat))
        else:
            assert v[k] == 0
    a = advanced.audio_patterns(x)
    b = bits_of(x)
    for k, (_, pat) in enumerate(advanced.AUDIO_PATTERNS):
        lp = len(pat)
        expected = count_overlapping(b, pat.tolist()) / (len(b) - lp + 1) * 2.0 ** lp if len(b) >= lp else 0.0
        assert a[k] == expected


def test_audio_patterns():
    assert advanced.audio_patterns(bytes([0xFF, 0xF0]))[0] == pytest.approx(2 ** 12 / 5)
    assert advanced.audio_patterns(bytes(8)).tolist() == [0, 0]
    assert advanced.audio_patterns(b"\xff" * 16)[0] == pytest.approx(2 ** 12)


def test_kolmogorov_examples():
    zero = np.zeros(64, dtype=np.uint8)
    assert advanced.lz76_complexity(zero)[0] == 2
    assert advanced.lz76_complexity(bytes([0x55] * 8))[0] == 3
    c, norm = advanced.lz76_complexity(_rand(4096))
    assert abs(norm - 1) < 0.2
    assert norm == pytest.approx(c * math.log2(8 * 4096) / (8 * 4096))


@given(st.binary(min_size=1, max_size=8))
def test_kolmogorov_matches_brute_force(x):
    assert advanced.lz76_complexity(x)[0] == lz76_bruteforce(bits_of(x))


@given(st.binary(min_size=2, max_size=40))
def test_lz76_monotone_under_extension(x):
    counts = [advanced.lz76_complexity(x[:k])[0] for k in range(1, len(x) + 1)]
    assert counts == sorted(counts)


def _chaotic_oracle(x, D, ratio):
    """Re-derive the four chaotic outputs from brute-force neighbours."""
    x = [int(v) for v in x]
    L = len(x)
    nn, d2 = nearest_neighbors_brute(x, D)
    n = L - D + 1
    d = [math.sqrt(v) for v in d2]
    ext = [(i, nn[i]) for i in range(n) if i + D < L and nn[i] + D < L and d2[i] > 0]
    false = sum(1 for i, j in ext if math.sqrt(d2[i] + (x[i + D] - x[j + D]) ** 2) / math.sqrt(d2[i]) > ratio)
    fnf = false / len(ext) if ext else 0.0
    logs = []
    for i in range(n):
        j = nn[i]
        if i + 1 < n and j + 1 < n and d2[i] > 0:
            s = sum((x[i + 1 + k] - x[j + 1 + k]) ** 2 for k in range(D))
            if s > 0:
                logs.append(0.5 * math.log(s / d2[i]))
    lam = sum(logs) / len(logs) if logs else 0.0
    return [fnf, sum(d) / n, math.sqrt(sum(d2) / n), lam]


@pytest.mark.parametrize("seed", range(6))
def test_chaotic_matches_oracle(seed):
    x = _rand(60, seed) // 32
    out = advanced.chaotic_features(x, 2.0, 1, 3)
    expected = sum((_chaotic_oracle(x, D, 2.0) for D in (1, 2, 3)), [])
    assert np.allclose(out, expected, rtol=1e-12, atol=1e-12)


def test_chaotic_degenerate_and_periodic():
    assert advanced.chaotic_features(bytes(40), 10, 1, 3).tolist() == [0.0] * 12
    periodic = bytes([3, 90, 17] * 30)
    lam = advanced.chaotic_features(periodic, 10, 3, 5)[3::4]
    assert np.all(lam == 0)
    with pytest.raises(InputError):
        advanced.chaotic_features(bytes(4), 10, 1, 3)
    with pytest.raises(ParameterError):
        advanced.chaotic_features(bytes(40), 0, 1, 3)


def test_false_neighbours_drop_with_dimension():
    x = _rand(256, 3)
    low = advanced.chaotic_features(x, 2.0, 1, 1)[0]
    high = advanced.chaotic_features(x, 2.0, 8, 8)[0]
    assert low > high


@given(st.binary(min_size=6, max_size=80))
def test_chaotic_outputs_finite_and_fnf_bounded(x):
    out = advanced.chaotic_features(x, 10.0, 1, 3)
    assert np.all(np.isfinite(out))
    assert np.all((out[0::4] >= 0) & (out[0::4] <= 1))


def _to_bytes(v):
    v = (v - v.min()) / (v.max() - v.min())
    return np.round(v * 255).astype(np.uint8)


def test_bicoherence_cases():
    assert advanced.bicoherence(bytes([9] * 1024))[0] == 0
    rng = np.random.default_rng(0)
    noise = advanced.bicoherence(_to_bytes(rng.normal(size=4096)))[0]
    assert noise < 0.3
    t = np.arange(4096)
    f1, f2 = 10 / 128, 17 / 128
    tones = np.cos(2 * np.pi * f1 * t + 0.3) + np.cos(2 * np.pi * f2 * t + 1.1)
    coupled = tones + np.cos(2 * np.pi * (f1 + f2) * t + 1.4)
    assert advanced.bicoherence(_to_bytes(coupled))[0] > noise
    # quadratic phase coupling spread over all frequencies, not just one pair
    g = rng.normal(size=4096)
    assert advanced.bicoherence(_to_bytes(g + 0.6 * (g * g - 1)))[0] > noise + 0.05
    with pytest.raises(InputError):
        advanced.bicoherence(bytes(255))


def test_gist_shape_and_zero_dc():
    p = advanced.GistParams(32, 4, (8, 8, 8, 8))
    assert p.n_features == 512
    x = _rand(1024)
    assert advanced.gist_features(x, p).shape == (512,)
    assert np.max(np.abs(advanced.gist_features(bytes([200] * 1024), p))) < 1e-6
    for G in advanced.gabor_bank((32, 32), (4, 6)):
        assert G[0, 0] == 0


@given(st.integers(8, 300), st.integers(1, 5), st.lists(st.integers(1, 5), min_size=1, max_size=3))
def test_gist_length_formula(L, grid, orients):
    p = advanced.GistParams(8, grid, tuple(orients))
    out = advanced.gist_features(_rand(L), p)
    assert out.shape == (grid * grid * sum(orients),)
    assert np.all(np.isfinite(out))


def test_gist_params_validated():
    with pytest.raises(ParameterError):
        advanced.GistParams(0, 4, (8,))
    with pytest.raises(ParameterError):
        advanced.GistParams(32, 4, (8, 0))
