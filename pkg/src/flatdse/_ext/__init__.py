"""Kernel backend selection.

The Cython build is used when importable; set ``FLATDSE_PURE_PYTHON=1`` to
force the pure-Python fallback.
"""

import os

import numpy as np

from . import _fallback

if os.environ.get("FLATDSE_PURE_PYTHON") == "1":
    _impl = _fallback
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl

        BACKEND = "cython"
    except ImportError:
        _impl = _fallback
        BACKEND = "python"


def scalar_attention(q, k, v):
    q, k, v = (np.ascontiguousarray(x, dtype=np.float64) for x in (q, k, v))
    return _impl.scalar_attention(q, k, v)


def pareto_mask(pts):
    pts = np.ascontiguousarray(pts, dtype=np.float64)
    if pts.ndim != 2:
        raise ValueError("pareto_mask expects a 2-D array")
    if pts.shape[0] == 0:
        return np.zeros(0, dtype=bool)
    return np.asarray(_impl.pareto_mask(pts), dtype=bool)
