"""Backend switch for the compiled kernels.

Numba is used when it imports cleanly and ``CANDLECNN_DISABLE_NUMBA`` is
unset (or set to ``0``). Setting it to ``1`` forces the pure-numpy
implementations everywhere, which is useful for debugging and for
comparing the two paths in ``benchmarks/bench_kernels.py``.
"""
import os

_flag = os.environ.get("CANDLECNN_DISABLE_NUMBA", "0").strip().lower()
DISABLED_BY_ENV = _flag not in ("", "0", "false", "no")

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and not DISABLED_BY_ENV


def njit(fn):
    """``numba.njit(cache=True)`` when numba is present, else a no-op."""
    if not HAVE_NUMBA:
        return fn
    return numba.njit(cache=True)(fn)


def backend_name():
    return "numba" if USE_NUMBA else "numpy"
