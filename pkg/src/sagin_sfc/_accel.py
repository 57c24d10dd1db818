"""Optional numba acceleration.

Kernels are written once in the numba-compatible subset of Python/numpy and
wrapped with :func:`maybe_njit`.  Setting ``SAGIN_SFC_NO_NUMBA=1`` (or running
without numba installed) leaves them as plain interpreted functions, which is
the reference path used by the benchmark comparison.
"""

from __future__ import annotations

import os

_DISABLED = os.environ.get("SAGIN_SFC_NO_NUMBA", "").strip().lower() in {"1", "true", "yes"}

try:
    if _DISABLED:
        raise ImportError
    from numba import njit as _njit

    NUMBA_ENABLED = True
except ImportError:  # pragma: no cover - depends on environment
    _njit = None
    NUMBA_ENABLED = False


def maybe_njit(fn):
    if NUMBA_ENABLED:
        return _njit(cache=True, nogil=True)(fn)
    return fn
