from __future__ import annotations

import numpy as np

from vapkit.timeline import FrameRate, Speaker, VaSegment, VaTimeline, rasterize


def tl_from_seconds(duration_s, a=(), b=(), fps=100) -> VaTimeline:
    """Build a timeline from lists of (start_s, end_s) intervals per speaker."""
    segs = [VaSegment(Speaker.A, s, e) for s, e in a] + [VaSegment(Speaker.B, s, e) for s, e in b]
    return rasterize(segs, FrameRate(fps), duration_s)


def tl_from_frames(n, a=(), b=()) -> VaTimeline:
    fa = np.zeros(n, dtype=np.uint8)
    fb = np.zeros(n, dtype=np.uint8)
    for s, e in a:
        fa[s:e] = 1
    for s, e in b:
        fb[s:e] = 1
    return VaTimeline(fa, fb)


def random_timeline(rng: np.random.Generator, max_s: float = 60.0) -> VaTimeline:
    """Alternating on/off runs per speaker with a wide spread of durations."""
    n = int(rng.integers(500, int(max_s * 100) + 1))
    streams = []
    for _ in range(2):
        x = np.zeros(n, dtype=np.uint8)
        t = int(rng.integers(0, 300))
        on = bool(rng.integers(2))
        while t < n:
            scale = rng.choice([15, 60, 150, 400])
            d = max(1, int(rng.exponential(scale)))
            if on:
                x[t : t + d] = 1
            t += d
            on = not on
        streams.append(x)
    return VaTimeline(*streams)
