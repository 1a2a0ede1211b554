"""Numba/numpy backend selection.

Hot kernels ship in two versions: an @njit one and a vectorized numpy one.
Set ZDMN_NO_NUMBA=1 to force the numpy path; it is also used automatically
when numba is not importable.
"""

import os

try:
    import numba

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - depends on environment
    numba = None
    HAS_NUMBA = False

_ENV_FLAG = "ZDMN_NO_NUMBA"


def numba_enabled() -> bool:
    """True when the jitted kernels should be used (checked per call)."""
    if not HAS_NUMBA:
        return False
    return os.environ.get(_ENV_FLAG, "").strip().lower() not in ("1", "true", "yes")


def njit(*args, **kwargs):
    """numba.njit when available, else a decorator that returns f unchanged."""
    if HAS_NUMBA:
        return numba.njit(*args, **kwargs)
    if args and callable(args[0]):
        return args[0]

    def deco(f):
        return f

    return deco


def backend_name() -> str:
    return "numba" if numba_enabled() else "numpy"
