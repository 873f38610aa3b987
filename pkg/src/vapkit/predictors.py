"""Head-output producers: a ground-truth oracle and a count-based Markov model.

The Markov model conditions the 256-way projection distribution on a small
discrete context key computed from the voice activity up to the current frame.
It is a desk-scale stand-in for a learned sequence model.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .codec import N_STATES, STATE_BITS, BinConfig, HeadKind, HeadOutput, VapLabels, encode_bits_array, marginal_bins
from .errors import ConfigurationError, IngestionError, TrainingError
from .kernels import run_lengths, window_counts
from .timeline import FrameRate, VaTimeline, va_history

MODEL_MAGIC = "VAPKIT-MARKOV"
MODEL_VERSION = 1

N_CURRENT = 4
SILENCE_EDGES_MS = (200, 500, 1000)
N_SILENCE = len(SILENCE_EDGES_MS) + 2
N_HISTORY = 5
N_KEYS = N_STATES * N_CURRENT * N_SILENCE * N_HISTORY


@dataclass(frozen=True)
class ContextKey:
    recent_pattern: int  # 8-bit past-window state, bin 1 = most recent
    current_va: int  # a*2 + b at the current frame
    silence_bucket: int  # 0 = not silent, then (0,200], (200,500], (500,1000], >1000 ms
    history_bucket: int  # A-share of the last 5s, quantised to 5 levels

    @property
    def index(self) -> int:
        return ((self.recent_pattern * N_CURRENT + self.current_va) * N_SILENCE + self.silence_bucket) * N_HISTORY + self.history_bucket

    @classmethod
    def from_index(cls, index: int) -> "ContextKey":
        index, hist = divmod(int(index), N_HISTORY)
        index, sil = divmod(index, N_SILENCE)
        pattern, cur = divmod(index, N_CURRENT)
        if not 0 <= pattern < N_STATES:
            raise ValueError(f"context index out of range: {index}")
        return cls(pattern, cur, sil, hist)


def context_keys(tl: VaTimeline, bins: BinConfig | None = None) -> np.ndarray:
    """Context key index for every frame, shape ``(n,)``."""
    bins = bins or BinConfig()
    edges = bins.edges(tl.rate)
    lengths = np.diff(edges)
    lo, hi = -edges[1:], -edges[:-1]
    past = [
        window_counts(x, lo, hi) >= bins.activation_threshold * lengths - 1e-9
        for x in (tl.frames_a, tl.frames_b)
    ]
    pattern = encode_bits_array(np.concatenate(past, axis=1))
    current = tl.frames_a.astype(np.int64) * 2 + tl.frames_b
    silent = (tl.frames_a == 0) & (tl.frames_b == 0)
    run_ms = run_lengths(silent.astype(np.uint8)).astype(np.float64) * (1000.0 / tl.rate.frames_per_second)
    sil = np.where(run_ms > 0, 1 + np.searchsorted(SILENCE_EDGES_MS, run_ms, side="left"), 0)
    hist = np.minimum((va_history(tl)[:, -1] * N_HISTORY).astype(np.int64), N_HISTORY - 1)
    return ((pattern * N_CURRENT + current) * N_SILENCE + sil) * N_HISTORY + hist


@dataclass
class MarkovModel:
    smoothing_alpha: float = 1.0
    bins: BinConfig = field(default_factory=BinConfig)
    frames_per_second: int = 100
    counts: dict[int, np.ndarray] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.smoothing_alpha > 0:
            raise ConfigurationError(f"smoothing_alpha must be positive, got {self.smoothing_alpha}")

    def rows(self, keys: np.ndarray) -> np.ndarray:
        """Smoothed distributions for an array of context key indices."""
        keys = np.asarray(keys, dtype=np.int64)
        a = self.smoothing_alpha
        out = np.empty((keys.shape[0], N_STATES), dtype=np.float64)
        uniq, inverse = np.unique(keys, return_inverse=True)
        table = np.empty((uniq.shape[0], N_STATES), dtype=np.float64)
        for i, k in enumerate(uniq):
            c = self.counts.get(int(k))
            if c is None:
                table[i] = 1.0 / N_STATES
            else:
                table[i] = (c + a) / (c.sum() + N_STATES * a)
        out[:] = table[inverse]
        return out

    def predict_key(self, key: ContextKey | int) -> np.ndarray:
        k = key.index if isinstance(key, ContextKey) else int(key)
        return self.rows(np.array([k]))[0]

    # -- persistence -------------------------------------------------------

    def to_json(self) -> dict:
        entries = {}
        for k in sorted(self.counts):
            c = self.counts[k]
            nz = np.flatnonzero(c)
            entries[str(k)] = [[int(s), int(c[s])] for s in nz]
        return {
            "magic": MODEL_MAGIC,
            "version": MODEL_VERSION,
            "smoothing_alpha": self.smoothing_alpha,
            "frames_per_second": self.frames_per_second,
            "bins": {
                "bin_durations_ms": list(self.bins.bin_durations_ms),
                "activation_threshold": self.bins.activation_threshold,
            },
            "counts": entries,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "MarkovModel":
        if obj.get("magic") != MODEL_MAGIC:
            raise IngestionError("not a vapkit Markov model file (bad magic)")
        if obj.get("version") != MODEL_VERSION:
            raise IngestionError(f"unsupported model version {obj.get('version')!r}")
        counts = {}
        for k, pairs in obj["counts"].items():
            c = np.zeros(N_STATES, dtype=np.int64)
            for s, n in pairs:
                c[int(s)] = int(n)
            counts[int(k)] = c
        return cls(
            float(obj["smoothing_alpha"]),
            BinConfig(tuple(obj["bins"]["bin_durations_ms"]), float(obj["bins"]["activation_threshold"])),
            int(obj["frames_per_second"]),
            counts,
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), sort_keys=True, separators=(",", ":")) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "MarkovModel":
        try:
            obj = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise IngestionError(f"{path}: invalid model file: {exc}") from exc
        return cls.from_json(obj)


def train_markov(
    corpus: Iterable[tuple[VaTimeline, VapLabels]], alpha: float = 1.0, bins: BinConfig | None = None
) -> MarkovModel:
    bins = bins or BinConfig()
    model = MarkovModel(alpha, bins)
    seen = False
    fps = None
    for tl, labels in corpus:
        seen = True
        if len(labels) != tl.length:
            raise TrainingError(f"labels ({len(labels)}) and timeline ({tl.length}) differ in length")
        if fps is None:
            fps = tl.rate.frames_per_second
        elif fps != tl.rate.frames_per_second:
            raise TrainingError("corpus mixes frame rates")
        valid = labels.valid_mask.astype(bool)
        if not valid.any():
            continue
        joint = context_keys(tl, bins)[valid] * N_STATES + labels.discrete[valid]
        uniq, cnt = np.unique(joint, return_counts=True)
        for j, c in zip(uniq, cnt):
            key, state = divmod(int(j), N_STATES)
            row = model.counts.get(key)
            if row is None:
                row = model.counts[key] = np.zeros(N_STATES, dtype=np.int64)
            row[state] += int(c)
    if not seen:
        raise TrainingError("cannot train on an empty corpus")
    model.frames_per_second = fps or 100
    return model


def markov_predict(model: MarkovModel, tl: VaTimeline) -> HeadOutput:
    if tl.rate.frames_per_second != model.frames_per_second:
        raise ConfigurationError(
            f"model trained at {model.frames_per_second} fps, timeline is {tl.rate.frames_per_second} fps"
        )
    return HeadOutput(HeadKind.DISCRETE, model.rows(context_keys(tl, model.bins)))


@dataclass(frozen=True)
class OracleConfig:
    noise_epsilon: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0 <= self.noise_epsilon < 1:
            raise ConfigurationError(f"noise_epsilon must be in [0, 1), got {self.noise_epsilon}")


def oracle_predict(tl: VaTimeline, labels: VapLabels, cfg: OracleConfig | None = None) -> HeadOutput:
    """Ground-truth rows with ``epsilon`` spread uniformly over the other 255 states."""
    cfg = cfg or OracleConfig()
    if len(labels) != tl.length:
        raise IngestionError(f"labels ({len(labels)}) and timeline ({tl.length}) differ in length")
    eps = cfg.noise_epsilon
    n = tl.length
    rows = np.full((n, N_STATES), eps / (N_STATES - 1))
    rows[np.arange(n), labels.discrete] = 1.0 - eps
    rows[labels.valid_mask == 0] = 1.0 / N_STATES
    return HeadOutput(HeadKind.DISCRETE, rows, {"predictor": "oracle", "epsilon": eps})


# bins 200/400/600/800ms -> 4/8/12/16 copies of 50ms
def _independent40_repeats(bins: BinConfig) -> list[int]:
    reps = []
    for d in bins.bin_durations_ms:
        if d % 50:
            raise ConfigurationError(f"bin duration {d}ms is not a multiple of 50ms")
        reps.append(d // 50)
    return reps


def derive_heads(d: HeadOutput, bins: BinConfig | None = None) -> dict[HeadKind, HeadOutput]:
    """Independent and comparative heads implied by a discrete head.

    The 40-bin head is an approximation: each 4-bin marginal is copied into
    its constituent 50ms bins.
    """
    if d.kind is not HeadKind.DISCRETE:
        raise ConfigurationError("derive_heads needs a discrete head")
    bins = bins or BinConfig()
    ind4 = marginal_bins(d.values)
    ind40 = np.repeat(ind4, _independent40_repeats(bins), axis=2)
    w = np.asarray(bins.bin_durations_ms, dtype=np.float64)
    mass = (ind4 * w).sum(axis=2)
    tot = mass.sum(axis=1)
    comp = np.where(tot > 0, mass[:, 0] / np.where(tot > 0, tot, 1), 0.5)
    return {
        HeadKind.DISCRETE: d,
        HeadKind.INDEPENDENT4: HeadOutput(HeadKind.INDEPENDENT4, ind4),
        HeadKind.INDEPENDENT40: HeadOutput(HeadKind.INDEPENDENT40, ind40, {"approximate": True}),
        HeadKind.COMPARATIVE: HeadOutput(HeadKind.COMPARATIVE, np.clip(comp, 0.0, 1.0)),
    }


def cross_entropy(d: HeadOutput, labels: VapLabels) -> float:
    """Mean negative log-likelihood of the true states over valid frames (reporting only)."""
    valid = labels.valid_mask.astype(bool)
    if not valid.any():
        return float("nan")
    p = d.values[np.flatnonzero(valid), labels.discrete[valid]]
    return float(-np.log(np.clip(p, 1e-12, 1.0)).mean())
