"""Optional numba acceleration.

Hot kernels are decorated with :func:`njit`.  When numba is missing, or the
environment variable ``ASEPCONVOY_NO_NUMBA`` is set to a non-empty value other
than ``0``, the decorator is a no-op and callers dispatch to vectorised numpy
implementations instead (see ``USE_NUMBA``).
"""
from __future__ import annotations

import os

_flag = os.environ.get("ASEPCONVOY_NO_NUMBA", "").strip()
_disabled = _flag not in ("", "0")

try:
    if _disabled:
        raise ImportError("numba disabled by ASEPCONVOY_NO_NUMBA")
    import numba as _numba

    NUMBA_OK = True
except ImportError:  # pragma: no cover - depends on environment
    _numba = None
    NUMBA_OK = False

USE_NUMBA = NUMBA_OK


def njit(*args, **kwargs):
    """``numba.njit`` when available, identity decorator otherwise."""
    if NUMBA_OK:
        kwargs.setdefault("cache", True)
        return _numba.njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]

    def wrap(fn):
        return fn

    return wrap


prange = _numba.prange if NUMBA_OK else range


def set_threads(n: int | None) -> None:
    """Set the numba worker count (no-op without numba)."""
    if NUMBA_OK and n:
        _numba.set_num_threads(max(1, min(int(n), _numba.config.NUMBA_NUM_THREADS)))


def default_threads() -> int | None:
    v = os.environ.get("ASEPCONVOY_THREADS")
    return int(v) if v else None


set_threads(default_threads())
