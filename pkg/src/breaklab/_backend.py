"""Kernel backend selection.

Every hot numeric loop in :mod:`breaklab.kernels` exists twice: a
numba-jitted scalar loop and a vectorized pure-numpy fallback.  The active
implementation is chosen once at import time from the ``BREAKLAB_BACKEND``
environment variable:

* unset or ``auto`` -- numba when importable, numpy otherwise
* ``numba``         -- force numba (warns and falls back if unavailable)
* ``numpy``         -- force the pure-numpy path

``benchmarks/bench_kernels.py`` times both paths side by side.
"""

import os
import warnings

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    numba = None
    HAVE_NUMBA = False


def _select_backend():
    requested = os.environ.get("BREAKLAB_BACKEND", "auto").strip().lower() or "auto"
    if requested not in ("auto", "numba", "numpy"):
        warnings.warn(
            f"unknown BREAKLAB_BACKEND={requested!r}; falling back to 'auto'",
            RuntimeWarning,
        )
        requested = "auto"
    if requested == "numpy":
        return "numpy"
    if requested == "numba" and not HAVE_NUMBA:
        warnings.warn(
            "BREAKLAB_BACKEND=numba requested but numba is not importable; "
            "using the numpy fallback",
            RuntimeWarning,
        )
        return "numpy"
    return "numba" if HAVE_NUMBA else "numpy"


BACKEND = _select_backend()


def jit_compile(func):
    """Return the numba-compiled version of ``func``, or None without numba."""
    if not HAVE_NUMBA:
        return None
    return numba.njit(cache=True)(func)
