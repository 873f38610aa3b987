"""Backend selection for the per-frame kernels.

The compiled extension is preferred; set ``VAPKIT_PURE_PYTHON=1`` to force
the numpy fallback.
"""
from __future__ import annotations

import os

from . import _pykernels

BACKEND = "python"

if os.environ.get("VAPKIT_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _impl

        BACKEND = "cython"
    except ImportError:
        _impl = _pykernels
else:
    _impl = _pykernels

window_counts = _impl.window_counts
run_lengths = _impl.run_lengths

__all__ = ["BACKEND", "window_counts", "run_lengths"]
