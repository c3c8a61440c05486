"""Backend selection for the hot O(n^2) assembly kernels.

Two implementations exist for each hot kernel: a numba @njit version and a
pure-numpy one.  The active backend is chosen at import time from the
environment variable HARTREE_LAB_NUMBA:

    auto (default)  use numba if importable, else numpy
    1 / on / true   require numba (ImportError if missing)
    0 / off / false numpy fallback, never JIT

``benchmarks/bench_backends.py`` times both paths side by side.
"""

import os


def _read_flag():
    val = os.environ.get("HARTREE_LAB_NUMBA", "auto").strip().lower()
    if val in ("1", "on", "true", "yes"):
        return "numba"
    if val in ("0", "off", "false", "no"):
        return "numpy"
    return "auto"


_FLAG = _read_flag()
_HAVE_NUMBA = False

if _FLAG in ("auto", "numba"):
    try:
        from numba import njit

        _HAVE_NUMBA = True
    except ImportError:
        if _FLAG == "numba":
            raise
        _HAVE_NUMBA = False

if not _HAVE_NUMBA:

    def njit(*args, **kwargs):
        """No-op stand-in so decorated functions stay plain Python."""
        if args and callable(args[0]):
            return args[0]

        def wrap(fn):
            return fn

        return wrap


def backend():
    """Name of the active backend: 'numba' or 'numpy'."""
    return "numba" if _HAVE_NUMBA else "numpy"


def using_numba():
    return _HAVE_NUMBA
