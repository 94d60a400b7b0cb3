"""Byte-distribution, statistical, windowed, spectral and entropy features.

Every function takes a fragment as bytes or a uint8 array and returns a
float64 vector.  Degenerate inputs (zero variance, constant fragments) map
to 0 rather than NaN so datasets stay finite.
"""
from __future__ import annotations

import math

import numpy as np

from ..errors import InputError, ParameterError
from ..special import chi2_sf

N_SYMBOLS = 256


def as_array(fragment) -> np.ndarray:
    if isinstance(fragment, np.ndarray):
        arr = fragment.astype(np.uint8, copy=False)
    elif hasattr(fragment, "data") and isinstance(fragment.data, (bytes, bytearray)):
        arr = np.frombuffer(fragment.data, dtype=np.uint8)
    else:
        arr = np.frombuffer(bytes(fragment), dtype=np.uint8)
    if arr.ndim != 1:
        raise InputError("fragment must be one-dimensional")
    return arr


def _require(x, n, what):
    if x.shape[0] < n:
        raise InputError(f"{what} needs a fragment of at least {n} bytes, got {x.shape[0]}")


def _pearson(a, b):
    da = a - a.mean()
    db = b - b.mean()
    den = math.sqrt(float(da @ da) * float(db @ db))
    if den == 0.0:
        return 0.0
    return float(da @ db) / den


def byte_counts(fragment) -> np.ndarray:
    x = as_array(fragment)
    return np.bincount(x, minlength=N_SYMBOLS).astype(np.float64)


def bfd(fragment) -> np.ndarray:
    """Byte frequency distribution scaled to sum to 256."""
    x = as_array(fragment)
    _require(x, 1, "BFD")
    return np.bincount(x, minlength=N_SYMBOLS) * (N_SYMBOLS / x.shape[0])


def bfd_features(fragment) -> np.ndarray:
    """BFD_0..BFD_255 followed by SdFreq, ModesFreq, CorNextFreq and ChiSq."""
    x = as_array(fragment)
    _require(x, 1, "BFD")
    f = np.bincount(x, minlength=N_SYMBOLS).astype(np.float64)
    L = x.shape[0]
    v = f * (N_SYMBOLS / L)
    sd = float(v.std())
    modes = float(np.sort(v)[-4:].sum())
    cor = _pearson(v[:-1], v[1:])
    expected = L / N_SYMBOLS
    t = float(((f - expected) ** 2).sum() / expected)
    chi = chi2_sf(t, N_SYMBOLS - 1)
    return np.concatenate([v, [sd, modes, cor, chi]])


def roc_features(fragment) -> np.ndarray:
    """Normalised rate-of-change histogram (256 bins) plus the mean change."""
    x = as_array(fragment)
    _require(x, 2, "rate of change")
    d = np.abs(np.diff(x.astype(np.int16)))
    y = np.bincount(d, minlength=N_SYMBOLS) / d.shape[0]
    j = np.arange(N_SYMBOLS)
    scale = np.empty(N_SYMBOLS)
    scale[0] = N_SYMBOLS
    scale[1:] = N_SYMBOLS * N_SYMBOLS / (2.0 * (N_SYMBOLS - j[1:]))
    return np.concatenate([scale * y, [d.mean()]])


def longest_streak(fragment) -> np.ndarray:
    x = as_array(fragment)
    _require(x, 1, "streak")
    change = np.flatnonzero(np.diff(x) != 0)
    edges = np.concatenate([[-1], change, [x.shape[0] - 1]])
    return np.array([np.diff(edges).max() / x.shape[0]])


def byte_concentration(fragment) -> np.ndarray:
    """Low, ASCII and High sums of the BFD."""
    v = bfd(fragment)
    return np.array([v[:32].sum(), v[32:128].sum(), v[192:].sum()])


def basic_stats(fragment) -> np.ndarray:
    """Arithmetic mean, STD, mode, median, MAD, geometric and harmonic means."""
    x = as_array(fragment)
    _require(x, 2, "basic statistics")
    xf = x.astype(np.float64)
    mu = xf.mean()
    sigma = math.sqrt(((xf - mu) ** 2).sum() / (x.shape[0] - 1))
    mode = float(np.argmax(np.bincount(x, minlength=N_SYMBOLS)))
    median = float(np.median(xf))
    mad = float(np.abs(xf - mu).mean())
    if (x == 0).any():
        geo = harm = 0.0
    else:
        geo = float(np.exp(np.log(xf).mean()))
        harm = float(x.shape[0] / (1.0 / xf).sum())
    return np.array([mu, sigma, mode, median, mad, geo, harm])


def higher_order_stats(fragment) -> np.ndarray:
    """Bias-corrected kurtosis and skewness."""
    x = as_array(fragment)
    _require(x, 4, "kurtosis/skewness")
    L = x.shape[0]
    d = x.astype(np.float64) - x.mean()
    m2 = (d ** 2).mean()
    if m2 == 0.0:
        return np.zeros(2)
    m3 = (d ** 3).mean()
    m4 = (d ** 4).mean()
    K = m4 / m2 ** 2
    S = m3 / m2 ** 1.5
    kurt = (L - 1) / ((L - 2) * (L - 3)) * ((L + 1) * K - 3 * (L - 1)) + 3
    skew = math.sqrt(L * (L - 1)) / (L - 2) * S
    return np.array([kurt, skew])


def window_stats(fragment, window: int) -> np.ndarray:
    """Delta and delta-squared of windowed means/STDs, and deviation from the STD."""
    x = as_array(fragment)
    if window < 1:
        raise ParameterError("window size must be >= 1")
    J = x.shape[0] // window
    if J < 3:
        raise InputError(
            f"window statistics need at least 3 windows ({3 * window} bytes for W={window}), "
            f"got {x.shape[0]} bytes"
        )
    blocks = x[: J * window].reshape(J, window).astype(np.float64)
    mu = blocks.mean(axis=1)
    if window > 1:
        sig = blocks.std(axis=1, ddof=1)
    else:
        sig = np.zeros(J)
    sigma = basic_stats(x)[1]

    def delta(v):
        d1 = np.abs(np.diff(v))
        d2 = np.abs(np.diff(d1))
        return d1.mean(), d2.mean()

    dmu, ddmu = delta(mu)
    dsig, ddsig = delta(sig)
    return np.array([dmu, ddmu, dsig, ddsig, np.abs(sig - sigma).mean()])


def autocorrelation(fragment, max_lag: int) -> np.ndarray:
    x = as_array(fragment)
    if max_lag < 1:
        raise ParameterError("maximum lag must be >= 1")
    L = x.shape[0]
    if max_lag >= L:
        raise InputError(f"maximum lag {max_lag} needs a fragment longer than {max_lag} bytes")
    d = x.astype(np.float64) - x.mean()
    c0 = (d @ d) / (L - 1)
    if c0 == 0.0:
        return np.zeros(max_lag)
    ck = np.array([d[: L - k] @ d[k:] for k in range(1, max_lag + 1)]) / (L - 1)
    return ck / c0


def _skewness(v):
    d = v - v.mean()
    m2 = (d ** 2).mean()
    if m2 <= 0.0:
        return 0.0
    return float((d ** 3).mean() / m2 ** 1.5)


def frequency_domain_stats(fragment, bands: int) -> np.ndarray:
    """Mean, variance and skewness of the magnitude spectrum in equal sub-bands.

    The one-sided spectrum of the raw bytes is used with the DC bin dropped;
    leftover bins join the last band.
    """
    if not 1 <= bands <= 8:
        raise ParameterError(f"number of sub-bands must be in 1..8, got {bands}")
    x = as_array(fragment)
    _require(x, 2 * bands, f"{bands}-band spectrum")
    mag = np.abs(np.fft.rfft(x.astype(np.float64)))[1:]
    # bins that are exactly zero come back as FFT rounding dust
    mag[mag < 1e-10 * N_SYMBOLS * x.shape[0]] = 0.0
    if mag.shape[0] < bands:
        raise InputError(f"fragment too short for {bands} sub-bands")
    width = mag.shape[0] // bands
    out = np.empty(3 * bands)
    for b in range(bands):
        seg = mag[b * width:] if b == bands - 1 else mag[b * width:(b + 1) * width]
        out[3 * b] = seg.mean()
        out[3 * b + 1] = seg.var()
        out[3 * b + 2] = _skewness(seg)
    return out


def bits(fragment) -> np.ndarray:
    """Bitstream of the fragment, most significant bit first."""
    return np.unpackbits(as_array(fragment))


def binary_ratio(fragment) -> np.ndarray:
    """Zero bits over one bits; capped at 8L when there are no ones."""
    x = as_array(fragment)
    _require(x, 1, "binary ratio")
    ones = int(np.unpackbits(x).sum())
    n = 8 * x.shape[0]
    if ones == 0:
        return np.array([float(n)])
    return np.array([(n - ones) / ones])


def shannon_entropy(fragment) -> float:
    x = as_array(fragment)
    p = np.bincount(x, minlength=N_SYMBOLS) / x.shape[0]
    p = p[p > 0]
    return float(max(0.0, -(p * np.log2(p)).sum()))


def truncated_uniform_entropy(length: int, m: int = N_SYMBOLS, tol: float = 1e-12) -> float:
    """Expected empirical entropy (bits) of ``length`` uniform draws over ``m`` symbols.

    The series weights are Poisson(c) probabilities with c = length / m,
    evaluated in log space so large loads do not underflow.
    """
    c = length / m
    log_c = math.log(c)
    total = 0.0
    j = 1
    while True:
        w = math.exp((j - 1) * log_c - math.lgamma(j) - c)
        total += w * math.log2(j)
        if j - 1 > c and w < tol:
            break
        j += 1
    return math.log2(m) + math.log2(c) - total


def entropy_features(fragment) -> np.ndarray:
    """Shannon entropy and its shortfall from the length-matched uniform entropy."""
    x = as_array(fragment)
    _require(x, 1, "entropy")
    h = shannon_entropy(x)
    return np.array([h, truncated_uniform_entropy(x.shape[0]) - h])
