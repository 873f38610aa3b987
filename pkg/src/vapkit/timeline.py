"""Two-party voice activity as aligned binary frame streams."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigurationError, IngestionError


class Speaker(str, enum.Enum):
    A = "A"
    B = "B"

    @property
    def other(self) -> "Speaker":
        return Speaker.B if self is Speaker.A else Speaker.A


@dataclass(frozen=True)
class FrameRate:
    frames_per_second: int = 100

    def __post_init__(self) -> None:
        fps = self.frames_per_second
        if isinstance(fps, bool) or not isinstance(fps, int) or fps < 1:
            raise ConfigurationError(f"frames_per_second must be a positive integer, got {fps!r}")

    def frames(self, seconds: float, name: str = "duration") -> int:
        """Convert a duration to a whole number of frames, or raise."""
        exact = seconds * self.frames_per_second
        n = round(exact)
        if abs(exact - n) > 1e-6:
            raise ConfigurationError(
                f"{name}={seconds}s is not a whole number of frames at {self.frames_per_second} fps"
            )
        return int(n)

    def seconds(self, frames: int) -> float:
        return frames / self.frames_per_second


@dataclass(frozen=True)
class VaSegment:
    speaker: Speaker
    start_s: float
    end_s: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "speaker", Speaker(self.speaker))
        if not (self.start_s >= 0):
            raise IngestionError(f"segment {self}: start must be >= 0")
        if not (self.end_s > self.start_s):
            raise IngestionError(f"segment {self}: end must be greater than start")


def _frozen_bits(x) -> np.ndarray:
    arr = np.array(x, dtype=np.uint8).reshape(-1)
    if arr.size and arr.max() > 1:
        raise IngestionError("voice activity frames must be 0 or 1")
    arr.setflags(write=False)
    return arr


class VaTimeline:
    """Immutable pair of per-speaker binary VA streams at a fixed frame rate."""

    __slots__ = ("rate", "frames_a", "frames_b")

    def __init__(self, frames_a, frames_b, rate: FrameRate | None = None):
        a = _frozen_bits(frames_a)
        b = _frozen_bits(frames_b)
        if a.shape != b.shape:
            raise IngestionError(f"speaker streams differ in length: {a.size} vs {b.size}")
        self.rate = rate or FrameRate()
        self.frames_a = a
        self.frames_b = b

    @property
    def length(self) -> int:
        return int(self.frames_a.shape[0])

    def __len__(self) -> int:
        return self.length

    def frames(self, speaker: Speaker) -> np.ndarray:
        return self.frames_a if Speaker(speaker) is Speaker.A else self.frames_b

    def swapped(self) -> "VaTimeline":
        return VaTimeline(self.frames_b, self.frames_a, self.rate)

    def segments(self) -> list[VaSegment]:
        """Maximal runs of activity as frame-aligned segments, A before B."""
        fps = self.rate.frames_per_second
        out = []
        for spk in Speaker:
            for s, e in runs(self.frames(spk)):
                out.append(VaSegment(spk, s / fps, e / fps))
        return out

    def __eq__(self, other) -> bool:
        if not isinstance(other, VaTimeline):
            return NotImplemented
        return (
            self.rate == other.rate
            and np.array_equal(self.frames_a, other.frames_a)
            and np.array_equal(self.frames_b, other.frames_b)
        )

    def __repr__(self) -> str:
        return f"VaTimeline(length={self.length}, fps={self.rate.frames_per_second})"


def runs(x: np.ndarray) -> list[tuple[int, int]]:
    """Maximal ``[start, end)`` runs of nonzero values."""
    x = np.asarray(x, dtype=np.int8)
    d = np.diff(np.concatenate(([0], (x != 0).astype(np.int8), [0])))
    starts = np.flatnonzero(d == 1)
    ends = np.flatnonzero(d == -1)
    return [(int(s), int(e)) for s, e in zip(starts, ends)]


def _merge(intervals: Iterable[tuple[float, float]]) -> list[tuple[float, float]]:
    merged: list[list[float]] = []
    for s, e in sorted(intervals):
        if merged and s <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], e)
        else:
            merged.append([s, e])
    return [(s, e) for s, e in merged]


def rasterize(segments: Sequence[VaSegment], rate: FrameRate | None = None, duration_s: float = 0.0) -> VaTimeline:
    """Turn segments into frames.

    A frame is active when a (merged) segment covers more than half of it.
    """
    rate = rate or FrameRate()
    if not (duration_s > 0):
        raise ConfigurationError(f"duration_s must be positive, got {duration_s}")
    fps = rate.frames_per_second
    n = int(round(duration_s * fps))
    tol = 1e-9
    per_speaker: dict[Speaker, list[tuple[float, float]]] = {Speaker.A: [], Speaker.B: []}
    for seg in segments:
        if seg.start_s < 0 or seg.end_s > duration_s + tol:
            raise IngestionError(f"segment {seg} lies outside [0, {duration_s}]")
        per_speaker[Speaker(seg.speaker)].append((seg.start_s * fps, seg.end_s * fps))

    streams = {}
    for spk, intervals in per_speaker.items():
        x = np.zeros(n, dtype=np.uint8)
        for s, e in _merge(intervals):
            first = int(math.floor(s + tol))
            last = min(int(math.ceil(e - tol)) - 1, n - 1)
            if last < first:
                continue
            if first == last:
                if e - s > 0.5 + tol:
                    x[first] = 1
                continue
            x[first + 1 : last] = 1
            if (first + 1) - s > 0.5 + tol:
                x[first] = 1
            if e - last > 0.5 + tol:
                x[last] = 1
        streams[spk] = x
    return VaTimeline(streams[Speaker.A], streams[Speaker.B], rate)


# (start, end) seconds before "now"; None = unbounded past
HISTORY_REGIONS_S: tuple[tuple[float | None, float], ...] = (
    (None, 60.0),
    (60.0, 30.0),
    (30.0, 10.0),
    (10.0, 5.0),
    (5.0, 0.0),
)


@dataclass(frozen=True)
class VaHistory:
    """A-share of activity in each lookback region, oldest region first."""

    ratios: tuple[float, float, float, float, float]


def _region_bounds(rate: FrameRate) -> list[tuple[int | None, int]]:
    fps = rate.frames_per_second
    return [(None if a is None else int(round(a * fps)), int(round(b * fps))) for a, b in HISTORY_REGIONS_S]


def va_history_at(tl: VaTimeline, t: int) -> VaHistory:
    """History ratios at frame ``t``; frame ``t`` itself is excluded."""
    if not (0 <= t < tl.length):
        raise IndexError(f"frame {t} out of range for timeline of length {tl.length}")
    ratios = []
    for far, near in _region_bounds(tl.rate):
        lo = 0 if far is None else max(0, t - far)
        hi = max(0, t - near)
        lo = min(lo, hi)
        ca = int(tl.frames_a[lo:hi].sum())
        cb = int(tl.frames_b[lo:hi].sum())
        ratios.append(ca / (ca + cb) if ca + cb else 0.5)
    return VaHistory(tuple(ratios))


def va_history(tl: VaTimeline) -> np.ndarray:
    """Vectorised ``va_history_at`` for every frame, shape ``(n, 5)``."""
    from .kernels import window_counts

    lo, hi = [], []
    for far, near in _region_bounds(tl.rate):
        lo.append(-(tl.length + 1) if far is None else -far)
        hi.append(-near)
    ca = window_counts(tl.frames_a, np.array(lo), np.array(hi)).astype(np.float64)
    cb = window_counts(tl.frames_b, np.array(lo), np.array(hi)).astype(np.float64)
    tot = ca + cb
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(tot > 0, ca / np.where(tot > 0, tot, 1), 0.5)


def mutual_silences(tl: VaTimeline) -> list[tuple[int, int]]:
    """Maximal ``[start, end)`` frame spans where neither speaker is active."""
    silent = (tl.frames_a == 0) & (tl.frames_b == 0)
    return runs(silent)
