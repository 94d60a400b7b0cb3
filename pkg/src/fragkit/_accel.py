"""Selects the compiled or the pure-numpy path for the hot kernels.

Set ``FRAGKIT_NUMBA=0`` before import to force the numpy fallbacks.  When
numba is missing the fallbacks are used regardless.
"""
import os

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

HAVE_NUMBA = numba is not None
USE_NUMBA = HAVE_NUMBA and os.environ.get("FRAGKIT_NUMBA", "1").strip().lower() not in (
    "0",
    "false",
    "no",
    "off",
)


def njit(*args, **kwargs):
    """``numba.njit`` when available, otherwise the identity decorator.

    Kernels decorated with this stay callable as plain Python when numba is
    absent, which keeps the reference loops usable in tests.
    """
    if not HAVE_NUMBA:
        if args and callable(args[0]):
            return args[0]
        return lambda fn: fn
    kwargs.setdefault("cache", True)
    return numba.njit(*args, **kwargs)


def thread_count():
    """Parallelism cap from ``FRAGKIT_THREADS`` (default 1)."""
    raw = os.environ.get("FRAGKIT_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        return 1
    return max(1, min(n, os.cpu_count() or 1))
