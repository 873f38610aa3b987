"""Reference numpy implementations of the per-frame kernels.

These are used when the compiled extension is unavailable (or when
``VAPKIT_PURE_PYTHON=1``). Signatures and outputs match ``_ckernels``.
"""
from __future__ import annotations

import numpy as np


def window_counts(x: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """Count ones of ``x`` in ``[t + lo[j], t + hi[j])`` for every frame ``t``.

    Ranges are clipped to ``[0, len(x))``. Returns an ``(n, k)`` int32 array.
    """
    x = np.ascontiguousarray(x, dtype=np.uint8)
    lo = np.asarray(lo, dtype=np.int64)
    hi = np.asarray(hi, dtype=np.int64)
    n = x.shape[0]
    csum = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(x, out=csum[1:])
    t = np.arange(n, dtype=np.int64)[:, None]
    a = np.clip(t + lo[None, :], 0, n)
    b = np.clip(t + hi[None, :], 0, n)
    b = np.maximum(a, b)
    return (csum[b] - csum[a]).astype(np.int32)


def run_lengths(mask: np.ndarray) -> np.ndarray:
    """Length of the run of ones ending at (and including) each frame; 0 on zeros."""
    m = np.asarray(mask, dtype=bool)
    n = m.shape[0]
    idx = np.arange(1, n + 1, dtype=np.int64)
    # index of the most recent zero at or before t (0 means "before frame 0")
    last_zero = np.where(m, 0, idx)
    np.maximum.accumulate(last_zero, out=last_zero)
    return np.where(m, idx - last_zero, 0).astype(np.int32)
