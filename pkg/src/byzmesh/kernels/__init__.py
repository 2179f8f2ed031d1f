"""Aggregation kernel backend.

The compiled Cython extension is preferred; the pure-NumPy module is a
drop-in replacement producing identical results.  Set ``BYZMESH_PURE=1``
to force the fallback (used by the backend benchmark and parity tests).
"""
from __future__ import annotations

import os

from . import pure

BACKEND = "pure"

if os.environ.get("BYZMESH_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _fast as _impl

        BACKEND = "cython"
    except ImportError:
        _impl = pure
else:
    _impl = pure

weighted_sum = _impl.weighted_sum
coomed = _impl.coomed
trimean = _impl.trimean
ios_aggregate = _impl.ios_aggregate
krum_select = _impl.krum_select

__all__ = [
    "BACKEND",
    "pure",
    "weighted_sum",
    "coomed",
    "trimean",
    "ios_aggregate",
    "krum_select",
]
