"""Projection-window labels and the 256-state discrete codec.

Bit layout of a state index: speaker A occupies the high nibble, speaker B
the low nibble, and within each nibble bin 1 (nearest future) is the most
significant bit::

    index = a1*128 + a2*64 + a3*32 + a4*16 + b1*8 + b2*4 + b3*2 + b4
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import CodecError, ConfigurationError, HeadFormatError, NormalizationError, WindowBoundsError
from .kernels import window_counts
from .timeline import FrameRate, VaTimeline

N_BINS = 4
N_STATES = 256
INDEPENDENT40_BIN_MS = 50


@dataclass(frozen=True)
class BinConfig:
    bin_durations_ms: tuple[int, ...] = (200, 400, 600, 800)
    activation_threshold: float = 0.5

    def __post_init__(self) -> None:
        durs = tuple(int(d) for d in self.bin_durations_ms)
        object.__setattr__(self, "bin_durations_ms", durs)
        if len(durs) != N_BINS:
            raise ConfigurationError(f"expected {N_BINS} bin durations, got {len(durs)}")
        if any(d <= 0 for d in durs):
            raise ConfigurationError(f"bin durations must be positive: {durs}")
        if not (0 < self.activation_threshold <= 1):
            raise ConfigurationError(f"activation_threshold must be in (0, 1], got {self.activation_threshold}")

    @property
    def horizon_ms(self) -> int:
        return sum(self.bin_durations_ms)

    def bin_frames(self, rate: FrameRate) -> list[int]:
        return [rate.frames(d / 1000, f"bin duration {d}ms") for d in self.bin_durations_ms]

    def horizon_frames(self, rate: FrameRate) -> int:
        return sum(self.bin_frames(rate))

    def edges(self, rate: FrameRate) -> np.ndarray:
        """Frame offsets ``[0, e1, e2, e3, horizon]`` of the future bins."""
        return np.concatenate(([0], np.cumsum(self.bin_frames(rate)))).astype(np.int64)


def encode_state(bits: Sequence[int]) -> int:
    if len(bits) != 2 * N_BINS:
        raise CodecError(f"expected 8 bits, got {len(bits)}")
    index = 0
    for b in bits:
        if b not in (0, 1):
            raise CodecError(f"bits must be 0 or 1, got {b!r}")
        index = (index << 1) | int(b)
    return index


def decode_state(index: int) -> tuple[int, ...]:
    if not (0 <= index < N_STATES) or int(index) != index:
        raise CodecError(f"state index must be in [0, 255], got {index!r}")
    return tuple((int(index) >> (7 - i)) & 1 for i in range(8))


# (256, 8) table of decoded bits, row = state index
STATE_BITS = np.array([decode_state(i) for i in range(N_STATES)], dtype=np.uint8)
STATE_BITS.setflags(write=False)
_PLACE = (1 << np.arange(7, -1, -1)).astype(np.int64)


def encode_bits_array(bits: np.ndarray) -> np.ndarray:
    """Vectorised ``encode_state`` over an ``(..., 8)`` array."""
    return (np.asarray(bits, dtype=np.int64) * _PLACE).sum(axis=-1)


def swap_nibbles(index):
    return ((np.asarray(index) & 0x0F) << 4) | (np.asarray(index) >> 4)


def _bin_bits(x: np.ndarray, edges: np.ndarray, threshold: float) -> np.ndarray:
    lengths = np.diff(edges)
    counts = window_counts(x, edges[:-1], edges[1:])
    # integer comparison avoids float rounding at the boundary
    return (counts * 1.0 >= threshold * lengths - 1e-9).astype(np.uint8)


def window_bits(tl: VaTimeline, t: int, cfg: BinConfig | None = None) -> tuple[int, ...]:
    """Thresholded bin activity for the window ``[t, t + horizon)``."""
    cfg = cfg or BinConfig()
    edges = cfg.edges(tl.rate)
    if t < 0 or t + edges[-1] > tl.length:
        raise WindowBoundsError(f"window at frame {t} exceeds dialog of length {tl.length}")
    bits = []
    for x in (tl.frames_a, tl.frames_b):
        for i in range(N_BINS):
            active = int(x[t + edges[i] : t + edges[i + 1]].sum())
            bits.append(int(active >= cfg.activation_threshold * (edges[i + 1] - edges[i]) - 1e-9))
    return tuple(bits)


@dataclass
class VapLabels:
    discrete: np.ndarray  # (n,) int
    independent4: np.ndarray  # (n, 2, 4) uint8
    independent40: np.ndarray  # (n, 2, 40) uint8
    comparative: np.ndarray  # (n,) float
    valid_mask: np.ndarray  # (n,) uint8

    def __len__(self) -> int:
        return int(self.discrete.shape[0])


def make_labels(tl: VaTimeline, cfg: BinConfig | None = None) -> VapLabels:
    cfg = cfg or BinConfig()
    rate = tl.rate
    n = tl.length
    edges = cfg.edges(rate)
    horizon = int(edges[-1])
    step = rate.frames(INDEPENDENT40_BIN_MS / 1000, "independent-40 bin")
    edges40 = np.arange(0, horizon + 1, step, dtype=np.int64)
    if edges40[-1] != horizon:
        raise ConfigurationError(f"horizon {cfg.horizon_ms}ms is not a multiple of {INDEPENDENT40_BIN_MS}ms")

    valid = np.zeros(n, dtype=np.uint8)
    if n >= horizon:
        valid[: n - horizon + 1] = 1

    bits4 = np.stack(
        [_bin_bits(x, edges, cfg.activation_threshold) for x in (tl.frames_a, tl.frames_b)], axis=1
    )
    bits40 = np.stack(
        [_bin_bits(x, edges40, cfg.activation_threshold) for x in (tl.frames_a, tl.frames_b)], axis=1
    )
    discrete = encode_bits_array(bits4.reshape(n, 8))

    whole = np.array([0], dtype=np.int64), np.array([horizon], dtype=np.int64)
    ca = window_counts(tl.frames_a, *whole)[:, 0].astype(np.float64)
    cb = window_counts(tl.frames_b, *whole)[:, 0].astype(np.float64)
    tot = ca + cb
    comparative = np.where(tot > 0, ca / np.where(tot > 0, tot, 1), 0.5)

    invalid = valid == 0
    discrete[invalid] = 0
    bits4[invalid] = 0
    bits40[invalid] = 0
    comparative[invalid] = 0.5
    return VapLabels(discrete, bits4, bits40, comparative, valid)


class HeadKind(str, enum.Enum):
    DISCRETE = "discrete"
    INDEPENDENT4 = "independent4"
    INDEPENDENT40 = "independent40"
    COMPARATIVE = "comparative"


_ROW_SHAPES = {
    HeadKind.DISCRETE: (N_STATES,),
    HeadKind.INDEPENDENT4: (2, N_BINS),
    HeadKind.INDEPENDENT40: (2, 40),
    HeadKind.COMPARATIVE: (),
}


@dataclass
class HeadOutput:
    """Per-frame probabilities from one predictor head.

    ``values`` has shape ``(n, 256)``, ``(n, 2, 4)``, ``(n, 2, 40)`` or
    ``(n,)``. The comparative value is the probability mass on speaker A.
    """

    kind: HeadKind
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.kind = HeadKind(self.kind)
        self.values = np.asarray(self.values, dtype=np.float64)
        check_rows(self.kind, self.values)

    def __len__(self) -> int:
        return int(self.values.shape[0])


def check_rows(kind: HeadKind, values: np.ndarray, atol: float = 1e-6) -> None:
    shape = _ROW_SHAPES[HeadKind(kind)]
    if values.ndim != len(shape) + 1 or values.shape[1:] != shape:
        raise HeadFormatError(f"{kind.value} head expects rows of shape {shape}, got {values.shape[1:]}")
    if values.size and (np.nanmin(values) < -atol or np.nanmax(values) > 1 + atol or np.isnan(values).any()):
        raise HeadFormatError(f"{kind.value} head has probabilities outside [0, 1]")
    if kind is HeadKind.DISCRETE and values.size:
        sums = values.sum(axis=1)
        if np.abs(sums - 1).max() > atol:
            raise HeadFormatError("discrete head rows must sum to 1")


def marginal_bins(d: np.ndarray, atol: float = 1e-6) -> np.ndarray:
    """Per-bin activation probabilities implied by discrete state rows.

    Accepts one row ``(256,)`` or a batch ``(n, 256)``; returns ``(2, 4)`` or
    ``(n, 2, 4)``.
    """
    d = np.asarray(d, dtype=np.float64)
    if d.shape[-1] != N_STATES:
        raise HeadFormatError(f"expected 256 state probabilities, got {d.shape[-1]}")
    sums = d.sum(axis=-1)
    if np.any(np.abs(sums - 1) > atol):
        raise NormalizationError("discrete rows must sum to 1")
    m = d @ STATE_BITS.astype(np.float64)
    return m.reshape(d.shape[:-1] + (2, N_BINS))
