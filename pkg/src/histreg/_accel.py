"""Numba switch.

Kernels in :mod:`histreg.kernels` come in two flavours: explicit loops that are
compiled with ``numba.njit`` and vectorized numpy equivalents. The loop versions
are used when numba imports and ``HISTREG_DISABLE_NUMBA`` is unset (or "0").
"""
import os

try:
    import numba
except ImportError:  # pragma: no cover - exercised only without numba
    numba = None

HAVE_NUMBA = numba is not None
ENABLE_NUMBA = HAVE_NUMBA and os.environ.get("HISTREG_DISABLE_NUMBA", "0").lower() in ("", "0", "false", "no")
CACHE_NUMBA = True


def jit(func):
    """Compile ``func`` in nopython mode when numba is available, else return it unchanged."""
    if HAVE_NUMBA:
        return numba.njit(cache=CACHE_NUMBA, nogil=True)(func)
    return func
