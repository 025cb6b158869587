"""Backend switch for the compiled kernels.

Kernels are plain Python functions over numpy arrays. When numba is importable
and ``RANK_KNOCKOFFS_BACKEND`` is not ``numpy``, they are compiled with
``numba.njit``; otherwise the interpreted versions run unchanged. Compiled
dispatchers keep the original function reachable as ``.py_func``, which is what
the benchmark and the parity tests use.
"""

import os

BACKEND_ENV = "RANK_KNOCKOFFS_BACKEND"

try:
    import numba

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    _HAVE_NUMBA = False


def _requested_backend():
    value = os.environ.get(BACKEND_ENV, "numba").strip().lower()
    if value not in ("numba", "numpy"):
        raise ValueError(f"{BACKEND_ENV} must be 'numba' or 'numpy', got {value!r}")
    return value


USE_NUMBA = _HAVE_NUMBA and _requested_backend() == "numba"
BACKEND = "numba" if USE_NUMBA else "numpy"


def kernel(fn):
    """Compile ``fn`` with numba when the numba backend is active."""
    if USE_NUMBA:
        return numba.njit(cache=True, nogil=True)(fn)
    return fn


def python_version(fn):
    """Return the interpreted implementation behind a (possibly compiled) kernel."""
    return getattr(fn, "py_func", fn)
