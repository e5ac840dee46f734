"""Numba acceleration toggle.

Hot kernels are compiled with numba's @njit by default. Setting the
environment variable ``PROBECAST_PURE_NUMPY=1`` (before import) selects the
pure-numpy fallback implementations instead; the fallback is also used
automatically when numba is not installed. ``benchmarks/bench_kernels.py``
compares the two paths.
"""

import os

_flag = os.environ.get("PROBECAST_PURE_NUMPY", "").strip().lower()
PURE_NUMPY_REQUESTED = _flag not in ("", "0", "false", "no")

try:
    import numba
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised via subprocess tests
    numba = None
    HAVE_NUMBA = False

USING_NUMBA = HAVE_NUMBA and not PURE_NUMPY_REQUESTED


def jit(**options):
    """Return numba.njit(...) when acceleration is on, identity otherwise.

    Used for single-source kernels whose body is both valid numba and
    acceptable (vectorized) numpy.
    """
    def decorate(fn):
        if USING_NUMBA:
            return numba.njit(cache=True, **options)(fn)
        return fn
    return decorate
