import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fragkit.errors import InputError, ParameterError
from fragkit.features import basic
from fragkit.special import chi2_sf, gammaincc
from oracles import longest_run_fraction, pearson, truncated_uniform_entropy_series

fragments = st.binary(min_size=1, max_size=600)
fragments2 = st.binary(min_size=2, max_size=600)
UNIFORM = bytes(range(256))
STREAK_EXAMPLE = bytes([12, 123, 123, 123, 43, 123, 43, 43, 43, 43, 43, 123, 43, 76, 54, 54, 54, 54])


def test_bfd_uniform():
    v = basic.bfd_features(UNIFORM)
    assert v.shape == (260,)
    assert np.all(v[:256] == 1.0)
    assert v[256] == 0.0 and v[257] == 4.0 and v[258] == 0.0
    assert v[259] == pytest.approx(1.0, abs=1e-12)


def test_bfd_simple_cases():
    z = basic.bfd(bytes(10))
    assert z[0] == 256 and z[1:].sum() == 0
    v = basic.bfd(bytes([0, 1, 0, 1]))
    assert v[0] == v[1] == 128 and v[2:].sum() == 0


@given(fragments)
def test_bfd_invariants(x):
    v = basic.bfd_features(x)
    assert abs(v[:256].sum() - 256) < 1e-9
    assert 0.0 <= v[259] <= 1.0
    assert -1 - 1e-12 <= v[258] <= 1 + 1e-12
    assert np.all(np.isfinite(v))


@given(st.binary(min_size=3, max_size=300))
def test_bfd_summary_statistics_match_oracles(x):
    v = basic.bfd_features(x)
    bfd = v[:256]
    assert v[256] == pytest.approx(math.sqrt(((bfd - bfd.mean()) ** 2).mean()), abs=1e-12)
    assert v[257] == pytest.approx(sum(sorted(bfd)[-4:]), abs=1e-12)
    assert v[258] == pytest.approx(pearson(bfd[:-1], bfd[1:]), abs=1e-12)


def test_chi_square_against_scipy():
    stats = pytest.importorskip("scipy.stats")
    special = pytest.importorskip("scipy.special")
    for t in [0.0, 1.0, 100.0, 254.9, 255.0, 300.0, 500.0, 2000.0, 1e5]:
        assert chi2_sf(t, 255) == pytest.approx(stats.chi2.sf(t, 255), rel=1e-10, abs=1e-300)
    for a in [0.5, 1.0, 3.7, 127.5, 400.0]:
        for x in [1e-3, 0.5, a, a + 1, 3 * a + 5]:
            assert gammaincc(a, x) == pytest.approx(special.gammaincc(a, x), rel=1e-10, abs=1e-300)


def test_roc_examples():
    v = basic.roc_features(bytes(50))
    assert v[0] == 256 and v[1:256].sum() == 0 and v[256] == 0
    v = basic.roc_features(bytes([0, 255]))
    assert v[255] == 32768 and v[256] == 255
    v = basic.roc_features(bytes([10, 13, 9]))
    assert v[3] == pytest.approx(65536 / (2 * 253) * 0.5, rel=1e-15)
    assert v[4] == pytest.approx(65536 / (2 * 252) * 0.5, rel=1e-15)
    assert v[256] == 3.5
    with pytest.raises(InputError):
        basic.roc_features(b"a")


@given(fragments2)
def test_roc_raw_frequencies_sum_to_one(x):
    v = basic.roc_features(x)
    j = np.arange(256)
    scale = np.where(j == 0, 256.0, 65536 / (2.0 * (256 - j)))
    assert (v[:256] / scale).sum() == pytest.approx(1.0, abs=1e-12)
    assert np.all(v >= 0)


def test_longest_streak_examples():
    assert basic.longest_streak(STREAK_EXAMPLE)[0] == pytest.approx(5 / 18, abs=1e-15)
    assert basic.longest_streak(bytes(9))[0] == 1.0
    assert basic.longest_streak(bytes([1, 2] * 10))[0] == 1 / 20


@given(fragments)
def test_longest_streak_matches_oracle(x):
    v = basic.longest_streak(x)[0]
    assert v == pytest.approx(float(longest_run_fraction(x)), abs=1e-15)
    assert 0 < v <= 1
    assert (v == 1.0) == (len(set(x)) == 1)


def test_concentration():
    assert basic.byte_concentration(b" " * 8).tolist() == [0, 256, 0]
    assert basic.byte_concentration(UNIFORM).tolist() == [32, 96, 64]
    assert basic.byte_concentration(b"\xff" * 5)[2] == 256


@given(fragments)
def test_concentration_bounded(x):
    assert basic.byte_concentration(x).sum() <= 256 + 1e-9


def test_basic_stats_two_bytes():
    mu, sigma, mode, median, mad, geo, harm = basic.basic_stats(bytes([2, 8]))
    assert (mu, mode, median, mad) == (5, 2, 5, 3)
    assert sigma == pytest.approx(math.sqrt(18), rel=1e-15)
    assert geo == pytest.approx(4, rel=1e-14) and harm == pytest.approx(3.2, rel=1e-14)


def test_basic_stats_degenerate():
    assert basic.basic_stats(bytes([0, 5, 9]))[5:].tolist() == [0, 0]
    v = basic.basic_stats(bytes([7] * 6))
    assert v.tolist() == [7, 0, 7, 7, 0, pytest.approx(7), pytest.approx(7)]
    with pytest.raises(InputError):
        basic.basic_stats(b"a")


@given(st.binary(min_size=2, max_size=300).filter(lambda b: 0 not in b))
def test_mean_ordering(x):
    mu, _, _, _, mad, geo, harm = basic.basic_stats(x)
    assert harm <= geo * (1 + 1e-12) and geo <= mu * (1 + 1e-12)
    assert mad >= 0


def test_higher_order_examples():
    k, s = basic.higher_order_stats(bytes([1, 2, 3, 4]))
    assert k == pytest.approx(1.8, abs=1e-12) and s == pytest.approx(0.0, abs=1e-15)
    assert basic.higher_order_stats(bytes(10)).tolist() == [0, 0]
    with pytest.raises(InputError):
        basic.higher_order_stats(b"abc")


def test_higher_order_against_scipy():
    stats = pytest.importorskip("scipy.stats")
    x = np.random.default_rng(4).integers(0, 256, 999).astype(np.uint8)
    k, s = basic.higher_order_stats(x)
    assert k == pytest.approx(stats.kurtosis(x.astype(float), fisher=False, bias=False), rel=1e-10)
    assert s == pytest.approx(stats.skew(x.astype(float), bias=False), rel=1e-10)


def test_higher_order_gaussian_like_sample():
    rng = np.random.default_rng(7)
    n = 20000
    x = np.clip(np.round(rng.normal(128, 20, n)), 0, 255).astype(np.uint8)
    k, s = basic.higher_order_stats(x)
    assert abs(k - 3) < 3 * math.sqrt(24 / n)
    assert abs(s) < 3 * math.sqrt(6 / n)


@given(st.binary(min_size=4, max_size=300))
def test_higher_order_reversal_invariant(x):
    a = basic.higher_order_stats(x)
    b = basic.higher_order_stats(x[::-1])
    assert np.allclose(a, b, rtol=1e-9, atol=1e-12)


def test_window_stats():
    assert basic.window_stats(bytes(1024), 256).tolist() == [0] * 5
    x = bytes([0] * 4 + [10] * 4 + [0] * 4 + [10] * 4)
    v = basic.window_stats(x, 4)
    assert v[0] == 10 and v[1] == 0
    assert v[2] == 0 and v[3] == 0
    with pytest.raises(InputError, match="3 windows"):
        basic.window_stats(bytes(100), 34)
    with pytest.raises(ParameterError):
        basic.window_stats(bytes(100), 0)


@given(st.binary(min_size=12, max_size=400), st.integers(1, 4))
def test_window_stats_non_negative(x, w):
    assert np.all(basic.window_stats(x, w) >= 0)


def test_autocorrelation_examples():
    r = basic.autocorrelation(bytes([0, 255] * 512), 1)
    assert r[0] <= -0.99
    assert basic.autocorrelation(bytes(50), 3).tolist() == [0, 0, 0]
    x = np.random.default_rng(3).integers(0, 256, 4096).astype(np.uint8)
    assert np.all(np.abs(basic.autocorrelation(x, 5)) < 0.08)
    with pytest.raises(InputError):
        basic.autocorrelation(bytes(5), 5)


@given(st.binary(min_size=2, max_size=300), st.integers(1, 6))
def test_autocorrelation_bounded(x, lag):
    if lag >= len(x):
        return
    assert np.all(np.abs(basic.autocorrelation(x, lag)) <= 1 + 1e-9)


def test_frequency_domain():
    x = np.random.default_rng(1).integers(0, 256, 1024).astype(np.uint8)
    assert basic.frequency_domain_stats(x, 4).shape == (12,)
    assert basic.frequency_domain_stats(bytes([77] * 1024), 4).tolist() == [0] * 12
    t = np.arange(1024)
    # tone at bin 320: bins 1..512 split into bands of 128, so it lands in band 2
    wave = np.round(127.5 + 127 * np.sin(2 * np.pi * 320 * t / 1024 + 0.3)).astype(np.uint8)
    v = basic.frequency_domain_stats(wave, 4)
    means = v[0::3]
    assert np.argmax(means) == 2 and means[2] > means[[0, 1, 3]].max()
    for bad in (0, 9):
        with pytest.raises(ParameterError):
            basic.frequency_domain_stats(x, bad)


def test_frequency_domain_oracle():
    x = np.random.default_rng(2).integers(0, 256, 100).astype(np.uint8)
    mag = np.abs(np.fft.fft(x.astype(float)))[1:51]
    v = basic.frequency_domain_stats(x, 3)
    bands = [mag[0:16], mag[16:32], mag[32:50]]
    for b, seg in enumerate(bands):
        d = seg - seg.mean()
        assert v[3 * b] == pytest.approx(seg.mean(), rel=1e-10)
        assert v[3 * b + 1] == pytest.approx((d * d).mean(), rel=1e-10)
        assert v[3 * b + 2] == pytest.approx((d ** 3).mean() / (d * d).mean() ** 1.5, rel=1e-8)


def test_binary_ratio():
    assert basic.binary_ratio(b"\xff" * 4)[0] == 0
    assert basic.binary_ratio(b"\x0f" * 4)[0] == 1
    assert basic.binary_ratio(bytes(4))[0] == 32
    assert basic.binary_ratio(b"\x01")[0] == 7


def test_entropy_examples():
    assert basic.entropy_features(bytes(30))[0] == 0
    assert basic.entropy_features(UNIFORM)[0] == pytest.approx(8.0, abs=1e-12)


@given(fragments)
def test_entropy_bounds(x):
    h, diff = basic.entropy_features(x)
    assert 0 <= h <= 8 + 1e-12
    assert np.isfinite(diff)


@pytest.mark.parametrize("length", [1, 16, 256, 1024, 4096, 65536])
def test_truncated_uniform_entropy_matches_direct_series(length):
    assert basic.truncated_uniform_entropy(length) == pytest.approx(
        truncated_uniform_entropy_series(length), abs=1e-9
    )
    assert basic.truncated_uniform_entropy(length) <= 8


def test_truncated_uniform_entropy_matches_monte_carlo():
    rng = np.random.default_rng(0)
    L = 4096
    emp = np.mean([basic.shannon_entropy(rng.integers(0, 256, L).astype(np.uint8)) for _ in range(200)])
    assert abs(basic.truncated_uniform_entropy(L) - emp) < 0.2


def test_as_array_accepts_several_inputs():
    from fragkit.fragstore import Fragment

    ref = basic.bfd(b"abc")
    assert np.array_equal(basic.bfd(bytearray(b"abc")), ref)
    assert np.array_equal(basic.bfd(np.frombuffer(b"abc", np.uint8)), ref)
    assert np.array_equal(basic.bfd(Fragment(b"abc", 0, 0)), ref)
    with pytest.raises(InputError):
        basic.bfd(b"")
