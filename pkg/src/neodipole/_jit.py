"""JIT plumbing: numba @njit for the hot kernels, with a pure-Python/numpy
fallback selected by the environment flag NEODIPOLE_DISABLE_NUMBA=1 (or when
numba is not importable).  All numeric kernels in this package are written in
scalar numpy-compatible style so the same source runs on both paths; the
benchmark in bench/ compares the two.
"""

import os

DISABLE = os.environ.get("NEODIPOLE_DISABLE_NUMBA", "0") not in ("0", "", "false", "False")

if not DISABLE:
    try:
        from numba import njit as _numba_njit

        HAVE_NUMBA = True
    except Exception:  # pragma: no cover
        HAVE_NUMBA = False
else:
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and not DISABLE


def njit(*args, **kwargs):
    """@njit when numba is active, identity decorator otherwise."""
    if USE_NUMBA:
        kwargs.setdefault("cache", True)
        return _numba_njit(*args, **kwargs)
    # plain fallback: strip decorator arguments
    if len(args) == 1 and callable(args[0]):
        return args[0]

    def wrap(func):
        return func

    return wrap
