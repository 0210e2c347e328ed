"""Kernel backend selection.

``SYNCACTION_BACKEND=numpy`` forces the vectorized numpy kernels; anything
else (or unset) uses numba when it imports cleanly.
"""
from __future__ import annotations

import os

_requested = os.environ.get("SYNCACTION_BACKEND", "numba").strip().lower()

try:
    import numba  # noqa: F401

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a hard dependency in CI
    HAS_NUMBA = False

USE_NUMBA = HAS_NUMBA and _requested != "numpy"
BACKEND = "numba" if USE_NUMBA else "numpy"


def njit(*args, **kwargs):
    """``numba.njit`` when available, identity decorator otherwise."""
    if HAS_NUMBA:
        from numba import njit as _njit

        return _njit(*args, **kwargs)

    def wrap(fn):
        return fn

    if args and callable(args[0]):
        return args[0]
    return wrap
