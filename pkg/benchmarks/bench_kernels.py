"""Compare the numba-compiled kernels with their pure-numpy fallbacks.

Usage::

    python3 benchmarks/bench_kernels.py [--repeat N] [--end-to-end]

The first table times every ``*_loop`` / ``*_numpy`` pair in one process
(compilation is excluded by a warm-up call) and checks that both return the
same result.  ``--end-to-end`` additionally extracts the 566-column example
configuration in two subprocesses, one with ``FRAGKIT_NUMBA=0``.
"""
import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from fragkit import kernels


def _cases(rng):
    bits = rng.integers(0, 2, 8192).astype(np.uint8)
    a = rng.integers(0, 256, 1024).astype(np.uint8)
    b = rng.integers(0, 256, 1024).astype(np.uint8)
    series = rng.integers(0, 256, 1024).astype(np.int64)
    X = rng.normal(size=(2000, 8))
    y = (X[:, 0] + X[:, 1] > 0).astype(np.int64)
    w = np.ones(2000)
    feats = np.arange(8, dtype=np.int64)
    Xs = rng.normal(size=(300, 2))
    ys = np.where(Xs[:, 0] + 0.3 * rng.normal(size=300) > 0, 1.0, -1.0)
    K = np.exp(-((Xs[:, None, :] - Xs[None, :, :]) ** 2).sum(-1))
    C = np.ones(300)
    return [
        ("lz76 (8192 bits)", "lz76", (bits,)),
        ("lcsubstring (1 KiB x 1 KiB)", "lcsubstring", (a, b)),
        ("lcsubsequence (1 KiB x 1 KiB)", "lcsubsequence", (a, b)),
        ("nearest neighbours (1 KiB, D=3)", "nearest_neighbors", (series, 3)),
        ("best split (2000 x 8)", "best_split", (X, y, w, 2, 2.0, feats)),
        ("SMO (300 samples, rbf)", "smo", (K, ys, C, 1e-3, 100_000)),
    ]


def _same(r1, r2):
    if isinstance(r1, tuple):
        return all(_same(p, q) for p, q in zip(r1, r2))
    return np.allclose(np.asarray(r1, dtype=float), np.asarray(r2, dtype=float), rtol=1e-7, atol=1e-9)


def kernel_table(repeat):
    rng = np.random.default_rng(0)
    rows = []
    for label, name, args in _cases(rng):
        compiled = getattr(kernels, f"{name}_loop")
        fallback = getattr(kernels, f"{name}_numpy")
        r1, r2 = compiled(*args), fallback(*args)
        t_c = min(timeit.repeat(lambda: compiled(*args), number=1, repeat=repeat))
        t_n = min(timeit.repeat(lambda: fallback(*args), number=1, repeat=repeat))
        rows.append((label, t_c * 1e3, t_n * 1e3, _same(r1, r2)))
    print(f"{'kernel':<34}{'numba ms':>10}{'numpy ms':>10}{'speed-up':>10}  agree")
    for label, tc, tn, agree in rows:
        print(f"{label:<34}{tc:>10.3f}{tn:>10.3f}{tn / tc:>10.1f}  {'yes' if agree else 'NO'}")
    return all(r[3] for r in rows)


_EXTRACT = """
import time, numpy as np
from fragkit import kernels
from fragkit.dataset import extract_matrix
from fragkit.features.config import EXAMPLE_566, FeatureConfig
cfg = FeatureConfig(EXAMPLE_566 + [{"type": "kolmogorov"}, {"type": "fnn"}, {"type": "lyapunov"}])
rng = np.random.default_rng(0)
frags = [rng.integers(0, 256, 1024, dtype=np.uint8).tobytes() for _ in range(200)]
extract_matrix(cfg, frags[:2], threads=1)
t = time.perf_counter()
X = extract_matrix(cfg, frags, threads=1)
print(kernels.BACKEND, time.perf_counter() - t, float(X.sum()))
"""


def end_to_end():
    print("\nfeature extraction, 200 fragments x 1 KiB, 566 columns + LZ76 + chaotic features")
    for flag in ("1", "0"):
        env = dict(os.environ, FRAGKIT_NUMBA=flag, FRAGKIT_THREADS="1")
        out = subprocess.run([sys.executable, "-c", _EXTRACT], env=env, capture_output=True, text=True, check=True)
        backend, secs, checksum = out.stdout.split()
        print(f"  {backend:<6} {float(secs):8.2f} s   checksum {float(checksum):.6e}")


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--end-to-end", action="store_true")
    args = ap.parse_args(argv)
    ok = kernel_table(args.repeat)
    if args.end_to_end:
        end_to_end()
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
