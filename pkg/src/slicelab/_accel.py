"""Optional numba acceleration.

Set ``SLICELAB_NUMBA=0`` before import to force the pure-numpy kernels even
when numba is installed.
"""
import os

try:
    import numba
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    numba = None
    HAVE_NUMBA = False


def _flag():
    value = os.environ.get("SLICELAB_NUMBA", "1").strip().lower()
    return value not in ("0", "false", "no", "off")


USE_NUMBA = HAVE_NUMBA and _flag()


def jit(func):
    """``numba.njit(cache=True, nogil=True)`` when enabled, identity otherwise."""
    if USE_NUMBA:
        return numba.njit(cache=True, nogil=True)(func)
    return func
