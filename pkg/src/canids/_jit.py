"""Numba shim.

Set ``CANIDS_NUMBA=0`` to force the pure-numpy kernels even when numba is
installed. The selection happens once, at import time.
"""
import os
import warnings

_requested = os.environ.get("CANIDS_NUMBA", "1").strip().lower() not in ("0", "false", "no", "off")

try:
    from numba import njit as _numba_njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False
    _numba_njit = None
    if _requested:
        warnings.warn("numba is not installed - falling back to numpy kernels")

USE_NUMBA = HAVE_NUMBA and _requested


def njit(*args, **kw):
    """``numba.njit`` when numba is importable, otherwise a passthrough."""
    if HAVE_NUMBA:
        kw.setdefault("cache", True)
        return _numba_njit(*args, **kw)
    if len(args) == 1 and callable(args[0]) and not kw:
        return args[0]
    return lambda f: f
