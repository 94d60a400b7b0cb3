"""Bit/byte pattern, complexity, chaotic, bispectral and texture features."""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .. import kernels
from ..errors import InputError, ParameterError
from .basic import as_array

MAX_NGRAM = 13

# (format, pattern) in the order the video feature block is emitted.  MP4's
# 0x6588 is listed twice on purpose; the block must have exactly 17 entries.
VIDEO_PATTERNS = (
    ("MKV", bytes.fromhex("A0")),
    ("MKV", bytes.fromhex("A3")),
    ("AVI", bytes.fromhex("30306463")),
    ("AVI", bytes.fromhex("30317762")),
    ("RMVB", bytes.fromhex("0000")),
    ("RMVB", bytes.fromhex("0001")),
    ("OGV", bytes.fromhex("4F676753")),
    ("MP4", bytes.fromhex("419A")),
    ("MP4", bytes.fromhex("019E")),
    ("MP4", bytes.fromhex("019F")),
    ("MP4", bytes.fromhex("419B")),
    ("MP4", bytes.fromhex("6742")),
    ("MP4", bytes.fromhex("419E")),
    ("MP4", bytes.fromhex("419F")),
    ("MP4", bytes.fromhex("6588")),
    ("MP4", bytes.fromhex("68CE")),
    ("MP4", bytes.fromhex("6588")),
)

AUDIO_PATTERNS = (
    ("MP3", np.array([1] * 12, dtype=np.uint8)),
    ("FLAC", np.array([1] * 13 + [0], dtype=np.uint8)),
)


def _bitstream(x):
    return np.unpackbits(x)


def ngram_features(fragment, n_values) -> np.ndarray:
    """Normalised overlapping bit n-gram counts, patterns in ascending order."""
    x = as_array(fragment)
    b = _bitstream(x)
    out = []
    for n in n_values:
        n = int(n)
        if not 1 <= n <= MAX_NGRAM:
            raise ParameterError(f"n-gram length must be in 1..{MAX_NGRAM}, got {n}")
        if b.shape[0] < n:
            raise InputError(f"{n}-grams need at least {n} bits")
        windows = b.shape[0] - n + 1
        codes = np.zeros(windows, dtype=np.int64)
        for k in range(n):
            codes = (codes << 1) | b[k:k + windows]
        out.append(np.bincount(codes, minlength=1 << n) / windows)
    return np.concatenate(out) if out else np.zeros(0)


def count_occurrences(seq: np.ndarray, pattern: np.ndarray) -> int:
    """Overlapping occurrences of ``pattern`` in ``seq``."""
    m = pattern.shape[0]
    if seq.shape[0] < m:
        return 0
    # narrow the candidate starts one pattern position at a time
    cand = np.flatnonzero(seq[: seq.shape[0] - m + 1] == pattern[0])
    for k in range(1, m):
        if cand.size == 0:
            break
        cand = cand[seq[cand + k] == pattern[k]]
    return int(cand.size)


def video_patterns(fragment) -> np.ndarray:
    x = as_array(fragment)
    L = x.shape[0]
    out = np.zeros(len(VIDEO_PATTERNS))
    for i, (_, pat) in enumerate(VIDEO_PATTERNS):
        lp = len(pat)
        if L < lp:
            continue
        frq = count_occurrences(x, np.frombuffer(pat, dtype=np.uint8))
        out[i] = frq / (L - lp + 1) * 2.0 ** (8 * lp)
    return out


def audio_patterns(fragment) -> np.ndarray:
    x = as_array(fragment)
    b = _bitstream(x)
    out = np.zeros(len(AUDIO_PATTERNS))
    for i, (_, pat) in enumerate(AUDIO_PATTERNS):
        lp = pat.shape[0]
        if b.shape[0] < lp:
            continue
        frq = count_occurrences(b, pat)
        out[i] = frq / (b.shape[0] - lp + 1) * 2.0 ** lp
    return out


def lz76_complexity(fragment) -> tuple[int, float]:
    """LZ76 phrase count of the bitstream and its c*log2(n)/n normalisation."""
    b = _bitstream(as_array(fragment))
    n = b.shape[0]
    c = int(kernels.lz76_phrase_count(b))
    if n < 2:
        return c, float(c)
    return c, c * math.log2(n) / n


def kolmogorov_complexity(fragment) -> np.ndarray:
    return np.array([lz76_complexity(fragment)[1]])


def chaotic_features(fragment, ratio: float, d_min: int, d_max: int) -> np.ndarray:
    """False-neighbour fraction, mean and RMS neighbour distance, and Lyapunov
    exponent for each embedding dimension in ``d_min..d_max``.

    Output is grouped per dimension: ``[FNF, mean, RMS, lambda] * dims``.
    """
    if ratio <= 0:
        raise ParameterError("ratio factor must be positive")
    if not 1 <= d_min <= d_max:
        raise ParameterError(f"need 1 <= D_min <= D_max, got {d_min}, {d_max}")
    x = as_array(fragment).astype(np.int64)
    L = x.shape[0]
    if L < d_max + 2:
        raise InputError(f"chaotic features need at least {d_max + 2} bytes, got {L}")
    out = []
    for D in range(d_min, d_max + 1):
        out.extend(_chaotic_one(x, D, ratio))
    return np.array(out, dtype=np.float64)


def _chaotic_one(x, D, ratio):
    L = x.shape[0]
    n = L - D + 1
    if n < 2:
        raise InputError("fewer than 2 embedding vectors")
    nn, d2 = kernels.nearest_neighbors(x, D)
    d = np.sqrt(d2.astype(np.float64))
    mean_d = float(d.mean())
    rms_d = float(math.sqrt((d2.astype(np.float64)).mean()))
    i = np.arange(n)
    # pairs that can be extended by one coordinate and are not coincident
    ext = (i + D < L) & (nn + D < L) & (d2 > 0)
    if ext.any():
        extra = (x[i[ext] + D] - x[nn[ext] + D]) ** 2
        d_next = np.sqrt((d2[ext] + extra).astype(np.float64))
        fnf = float((d_next / d[ext] > ratio).sum() / ext.sum())
    else:
        fnf = 0.0
    # successor pairs for the divergence rate
    ok = (i + 1 < n) & (nn + 1 < n) & (d2 > 0)
    lam = 0.0
    if ok.any():
        ii = i[ok] + 1
        jj = nn[ok] + 1
        vecs = np.lib.stride_tricks.sliding_window_view(x, D)
        diff = vecs[ii] - vecs[jj]
        succ = (diff * diff).sum(axis=1)
        good = succ > 0
        if good.any():
            ratio_d = np.sqrt(succ[good].astype(np.float64) / d2[ok][good].astype(np.float64))
            lam = float(np.log(ratio_d).mean())
    return [fnf, mean_d, rms_d, lam]


BICOHERENCE_SEGMENT = 128


def bicoherence(fragment) -> np.ndarray:
    """Mean bicoherence magnitude over the principal domain.

    Segments of 128 bytes, mean removed, no overlap and no taper.
    """
    x = as_array(fragment).astype(np.float64)
    N = BICOHERENCE_SEGMENT
    if x.shape[0] < 2 * N:
        raise InputError(f"bicoherence needs at least {2 * N} bytes, got {x.shape[0]}")
    K = x.shape[0] // N
    seg = x[: K * N].reshape(K, N)
    seg = seg - seg.mean(axis=1, keepdims=True)
    X = np.fft.fft(seg, axis=1)
    half = N // 2
    f1, f2 = np.meshgrid(np.arange(1, half + 1), np.arange(1, half + 1), indexing="ij")
    region = (f2 <= f1) & (f1 + f2 <= half)
    a = f1[region]
    b = f2[region]
    B = (X[:, a] * X[:, b] * np.conj(X[:, a + b])).mean(axis=0)
    P = (np.abs(X) ** 2).mean(axis=0)
    den = np.sqrt(P[a] * P[b] * P[a + b])
    # rounding dust in the denominator counts as zero power
    floor = 1e-12 * max(float(P.max()), 1.0) ** 1.5
    mag = np.where(den > floor, np.abs(B) / np.where(den > floor, den, 1.0), 0.0)
    return np.array([float(mag.mean())])


@dataclass(frozen=True)
class GistParams:
    row_size: int = 32
    grid: int = 4
    orientations: tuple = (8, 8, 8, 8)

    def __post_init__(self):
        object.__setattr__(self, "orientations", tuple(int(o) for o in self.orientations))
        if self.row_size < 1 or self.grid < 1:
            raise ParameterError("GIST row size and grid must be >= 1")
        if not self.orientations or any(o < 1 for o in self.orientations):
            raise ParameterError("every scale needs at least one orientation")

    @property
    def n_features(self):
        return self.grid * self.grid * sum(self.orientations)


def gabor_bank(shape, orientations) -> list[np.ndarray]:
    """Log-Gabor transfer functions, scale-major then orientation.

    Centre frequencies halve per scale starting at 0.25 cycles/pixel; every
    filter is exactly 0 at DC.
    """
    h, w = shape
    fy = np.fft.fftfreq(h)[:, None]
    fx = np.fft.fftfreq(w)[None, :]
    r = np.sqrt(fx * fx + fy * fy)
    theta = np.arctan2(fy, fx)
    r_safe = np.where(r == 0, 1.0, r)
    bank = []
    sigma_ratio = 0.55
    for s, n_or in enumerate(orientations):
        f0 = 0.25 / (2.0 ** s)
        radial = np.exp(-(np.log(r_safe / f0) ** 2) / (2.0 * math.log(sigma_ratio) ** 2))
        radial[r == 0] = 0.0
        sigma_theta = math.pi / n_or / 1.2
        for o in range(n_or):
            angle = math.pi * o / n_or
            dtheta = np.angle(np.exp(1j * (theta - angle)))
            # even symmetric in orientation so the spatial response is real-valued
            dtheta2 = np.angle(np.exp(1j * (theta - angle - math.pi)))
            ang = np.exp(-(dtheta ** 2) / (2 * sigma_theta ** 2)) + np.exp(-(dtheta2 ** 2) / (2 * sigma_theta ** 2))
            bank.append(radial * ang)
    return bank


@lru_cache(maxsize=32)
def _gabor_stack(shape, orientations) -> np.ndarray:
    stack = np.stack(gabor_bank(shape, orientations))
    stack.flags.writeable = False
    return stack


def _grid_edges(n, m):
    return np.floor(np.linspace(0, n, m + 1)).astype(int)


def gist_features(fragment, params: GistParams) -> np.ndarray:
    """Grid-pooled Gabor energy of the fragment viewed as a grayscale image."""
    x = as_array(fragment)
    if x.shape[0] < params.row_size:
        raise InputError(f"GIST needs at least one full row of {params.row_size} bytes")
    rows = -(-x.shape[0] // params.row_size)
    img = np.zeros(rows * params.row_size)
    img[: x.shape[0]] = x
    img = img.reshape(rows, params.row_size)
    bank = _gabor_stack(img.shape, params.orientations)
    resp = np.abs(np.fft.ifft2(np.fft.fft2(img) * bank, axes=(-2, -1)))
    # cell means from a zero-padded integral image; empty cells (grid finer than the image) give 0
    integral = np.zeros((bank.shape[0], rows + 1, params.row_size + 1))
    integral[:, 1:, 1:] = resp.cumsum(axis=1).cumsum(axis=2)
    ry = _grid_edges(rows, params.grid)
    rx = _grid_edges(params.row_size, params.grid)
    y0, x0 = np.meshgrid(ry[:-1], rx[:-1], indexing="ij")
    y1, x1 = np.meshgrid(ry[1:], rx[1:], indexing="ij")
    sums = integral[:, y1, x1] - integral[:, y0, x1] - integral[:, y1, x0] + integral[:, y0, x0]
    size = (y1 - y0) * (x1 - x0)
    means = np.divide(sums, size, out=np.zeros_like(sums), where=size > 0)
    return means.reshape(-1)
