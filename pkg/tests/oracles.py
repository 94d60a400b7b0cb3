"""Independent reference implementations used to check the package.

Everything here is deliberately naive: plain Python loops or textbook
formulas, written without looking at the optimised code paths.
"""
from __future__ import annotations

import math
from fractions import Fraction

import numpy as np


def lcsubstring_dp(a, b) -> int:
    a, b = list(a), list(b)
    best = 0
    table = [[0] * (len(b) + 1) for _ in range(len(a) + 1)]
    for i in range(1, len(a) + 1):
        for j in range(1, len(b) + 1):
            if a[i - 1] == b[j - 1]:
                table[i][j] = table[i - 1][j - 1] + 1
                best = max(best, table[i][j])
    return best


def lcsubsequence_dp(a, b) -> int:
    a, b = list(a), list(b)
    table = [[0] * (len(b) + 1) for _ in range(len(a) + 1)]
    for i in range(1, len(a) + 1):
        for j in range(1, len(b) + 1):
            if a[i - 1] == b[j - 1]:
                table[i][j] = table[i - 1][j - 1] + 1
            else:
                table[i][j] = max(table[i - 1][j], table[i][j - 1])
    return table[len(a)][len(b)]


def lz76_bruteforce(bits) -> int:
    """LZ76 phrase count by the textbook definition.

    Each new phrase is the shortest extension of the current position that
    is not a substring of everything before its last symbol.
    """
    s = "".join("1" if b else "0" for b in bits)
    n = len(s)
    if n == 0:
        return 0
    count = 0
    pos = 0
    while pos < n:
        length = 1
        # grow while the candidate phrase can be copied from earlier text
        while pos + length <= n and s[pos:pos + length] in s[:pos + length - 1]:
            length += 1
        count += 1
        pos += length
    return count


def count_overlapping(seq, pattern) -> int:
    seq, pattern = list(seq), list(pattern)
    m = len(pattern)
    return sum(1 for i in range(len(seq) - m + 1) if seq[i:i + m] == pattern)


def bits_of(data) -> list:
    out = []
    for byte in data:
        out.extend((byte >> (7 - k)) & 1 for k in range(8))
    return out


def ngram_counts(data, n) -> list:
    """Normalised counts of every n-bit pattern, pattern value ascending."""
    b = bits_of(data)
    windows = len(b) - n + 1
    counts = [0] * (1 << n)
    for i in range(windows):
        v = 0
        for bit in b[i:i + n]:
            v = (v << 1) | bit
        counts[v] += 1
    return [c / windows for c in counts]


def longest_run_fraction(data) -> Fraction:
    best = run = 1
    for prev, cur in zip(data, data[1:]):
        run = run + 1 if cur == prev else 1
        best = max(best, run)
    return Fraction(best, len(data))


def truncated_uniform_entropy_series(length, m=256, terms=4000) -> float:
    """Direct partial sum of the Poisson-weighted series, no log-space tricks."""
    c = length / m
    total = 0.0
    weight = math.exp(-c)  # j = 1 term weight c^0/0! e^-c
    for j in range(1, terms):
        total += weight * math.log2(j)
        weight *= c / j
    return math.log2(m) + math.log2(c) - total


def nearest_neighbors_brute(x, dim):
    x = [int(v) for v in x]
    vecs = [x[i:i + dim] for i in range(len(x) - dim + 1)]
    nn, dist = [], []
    for i, v in enumerate(vecs):
        best_j, best_d = -1, None
        for j, u in enumerate(vecs):
            if j == i:
                continue
            d = sum((a - b) ** 2 for a, b in zip(u, v))
            if best_d is None or d < best_d:
                best_j, best_d = j, d
        nn.append(best_j)
        dist.append(best_d)
    return nn, dist


def best_split_brute(X, y, w, n_classes, min_leaf, features):
    """Exhaustive weighted-Gini split search; ties keep the earliest candidate."""
    best = (-1, 0.0, math.inf)
    for f in features:
        vals = sorted(set(X[:, f].tolist()))
        for lo, hi in zip(vals, vals[1:]):
            t = (lo + hi) / 2.0
            left = X[:, f] <= t
            wl, wr = w[left].sum(), w[~left].sum()
            if wl < min_leaf or wr < min_leaf:
                continue
            score = 0.0
            for side, ws in ((left, wl), (~left, wr)):
                cw = np.bincount(y[side], weights=w[side], minlength=n_classes)
                score += ws - (cw * cw).sum() / ws
            if score < best[2] - 1e-12 * max(1.0, abs(score)):
                best = (f, t, score)
    return best


def central_difference_gradient(f, x, h=1e-6):
    g = np.zeros_like(x)
    for i in range(x.shape[0]):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (f(x + e) - f(x - e)) / (2 * h)
    return g


def pearson(a, b):
    a, b = np.asarray(a, float), np.asarray(b, float)
    da, db = a - a.mean(), b - b.mean()
    den = math.sqrt((da * da).sum() * (db * db).sum())
    return 0.0 if den == 0 else float((da * db).sum() / den)
