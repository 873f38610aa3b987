from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import tl_from_frames
from vapkit.errors import ConfigurationError, IngestionError
from vapkit.timeline import (
    FrameRate,
    Speaker,
    VaSegment,
    VaTimeline,
    mutual_silences,
    rasterize,
    runs,
    va_history,
    va_history_at,
)


def overlap_oracle(start_s, end_s, fps, n):
    """Frames whose overlap with [start, end) exceeds half a frame, in exact arithmetic."""
    s = Fraction(str(start_s)) * fps
    e = Fraction(str(end_s)) * fps
    return {f for f in range(n) if min(e, f + 1) - max(s, f) > Fraction(1, 2)}


def test_rasterize_empty():
    tl = rasterize([], FrameRate(100), 1.0)
    assert tl.length == 100
    assert tl.frames_a.sum() == 0 and tl.frames_b.sum() == 0


def test_rasterize_frame_aligned():
    tl = rasterize([VaSegment(Speaker.A, 0.0, 0.5)], FrameRate(100), 1.0)
    assert tl.frames_a.tolist() == [1] * 50 + [0] * 50


def test_rasterize_partial_frames():
    # [0.104, 0.126) covers 0.6 of frame 10, all of frame 11 and 0.6 of frame 12
    tl = rasterize([VaSegment(Speaker.A, 0.104, 0.126)], FrameRate(100), 1.0)
    got = set(np.flatnonzero(tl.frames_a).tolist())
    assert got == overlap_oracle(0.104, 0.126, 100, 100)
    assert got == {10, 11, 12}


def test_rasterize_merges_same_speaker_overlaps():
    tl = rasterize(
        [VaSegment("A", 0.0, 0.3), VaSegment("A", 0.2, 0.5), VaSegment("B", 0.1, 0.2)], FrameRate(100), 1.0
    )
    assert runs(tl.frames_a) == [(0, 50)]
    assert runs(tl.frames_b) == [(10, 20)]


def test_rasterize_errors():
    with pytest.raises(IngestionError, match="outside"):
        rasterize([VaSegment("A", 0.5, 1.5)], FrameRate(100), 1.0)
    with pytest.raises(ConfigurationError):
        rasterize([], FrameRate(100), 0.0)
    with pytest.raises(IngestionError):
        VaSegment("A", 0.5, 0.5)
    with pytest.raises(ConfigurationError):
        FrameRate(0)


def test_frame_rate_rejects_fractional_durations():
    assert FrameRate(100).frames(0.05) == 5
    with pytest.raises(ConfigurationError, match="whole number"):
        FrameRate(30).frames(0.05)


segments = st.lists(
    st.tuples(st.sampled_from("AB"), st.integers(0, 990), st.integers(1, 300)),
    max_size=12,
).map(lambda xs: [VaSegment(s, a / 1000, min(a + d, 1000) / 1000) for s, a, d in xs if a + d > a and a < 1000])


@given(segments)
@settings(max_examples=80, deadline=None)
def test_rasterize_roundtrip_is_idempotent(segs):
    first = rasterize(segs, FrameRate(100), 1.0)
    second = rasterize(first.segments(), FrameRate(100), 1.0)
    assert second == first


@given(segments)
@settings(max_examples=50, deadline=None)
def test_rasterize_matches_exact_overlap_oracle(segs):
    tl = rasterize(segs, FrameRate(100), 1.0)
    for spk in "AB":
        # oracle over the merged intervals
        iv = sorted((s.start_s, s.end_s) for s in segs if s.speaker.value == spk)
        merged = []
        for s, e in iv:
            if merged and Fraction(str(s)) <= Fraction(str(merged[-1][1])):
                merged[-1][1] = max(merged[-1][1], e)
            else:
                merged.append([s, e])
        expected = set()
        for s, e in merged:
            expected |= overlap_oracle(s, e, 100, 100)
        assert set(np.flatnonzero(tl.frames(Speaker(spk))).tolist()) == expected


def test_history_all_silent():
    tl = tl_from_frames(1000)
    assert va_history_at(tl, 700).ratios == (0.5,) * 5


def test_history_single_speaker_saturates():
    tl = tl_from_frames(8000, a=[(0, 8000)])
    assert va_history_at(tl, 7999).ratios == (1.0,) * 5


def test_history_regions_hand_count():
    tl = tl_from_frames(500, a=[(0, 100)], b=[(100, 300)])
    h = va_history_at(tl, 400).ratios
    # only the most recent (5s..0s) region holds frames; it spans [0, 400)
    assert h[:4] == (0.5, 0.5, 0.5, 0.5)
    assert h[4] == pytest.approx(1 / 3)


def test_history_excludes_current_frame():
    tl = tl_from_frames(10, a=[(5, 6)])
    assert va_history_at(tl, 5).ratios[4] == 0.5
    assert va_history_at(tl, 6).ratios[4] == 1.0


def test_history_index_error():
    with pytest.raises(IndexError):
        va_history_at(tl_from_frames(10), 10)


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=25, deadline=None)
def test_history_properties(seed):
    rng = np.random.default_rng(seed)
    n = 7000
    a = (rng.random(n) < 0.3).astype(np.uint8)
    b = (rng.random(n) < 0.2).astype(np.uint8)
    tl, sw = VaTimeline(a, b), VaTimeline(b, a)
    vec = va_history(tl)
    for t in rng.integers(0, n, size=5):
        h = np.array(va_history_at(tl, int(t)).ratios)
        hs = np.array(va_history_at(sw, int(t)).ratios)
        assert ((0 <= h) & (h <= 1)).all()
        np.testing.assert_allclose(vec[t], h)
        active = (h != 0.5) | (hs != 0.5)
        np.testing.assert_allclose((h + hs)[active], 1.0)


def test_mutual_silences_examples():
    assert mutual_silences(tl_from_frames(50)) == [(0, 50)]
    assert mutual_silences(tl_from_frames(50, a=[(0, 50)])) == []
    assert mutual_silences(tl_from_frames(300, a=[(0, 100)], b=[(150, 300)])) == [(100, 150)]


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=40, deadline=None)
def test_mutual_silences_match_frame_scan(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 400))
    a = (rng.random(n) < 0.4).astype(np.uint8)
    b = (rng.random(n) < 0.4).astype(np.uint8)
    got = mutual_silences(VaTimeline(a, b))
    covered = [0] * n
    prev_end = -1
    for s, e in got:
        assert prev_end < s < e  # disjoint, sorted and maximal
        prev_end = e
        for f in range(s, e):
            covered[f] = 1
    assert covered == [int(a[f] == 0 and b[f] == 0) for f in range(n)]
    assert got == mutual_silences(VaTimeline(b, a))


def test_timeline_rejects_bad_frames():
    with pytest.raises(IngestionError):
        VaTimeline([0, 1, 2], [0, 0, 0])
    with pytest.raises(IngestionError):
        VaTimeline([0, 1], [0, 0, 0])
