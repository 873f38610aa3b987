"""Turn-taking evaluation events extracted from a VA timeline.

Four tasks are supported:

* ``SH``     -- SHIFT vs HOLD at qualified mutual silences
* ``SPred``  -- the 500ms before a SHIFT vs far-from-shift single-speaker spans
* ``BCPred`` -- the 500ms before a backchannel vs spans with no listener activity
* ``SL``     -- onsets of backchannels (SHORT) vs onsets after a SHIFT (LONG)

All spans are half-open frame intervals. Every span starts at or after the
minimum context and ends before the label mask (the final horizon of the
dialog) begins.
"""
from __future__ import annotations

import enum
import logging
from collections import Counter
from dataclasses import dataclass, field, fields
from typing import Iterable

import numpy as np

from .codec import BinConfig
from .errors import ConfigurationError
from .timeline import FrameRate, Speaker, VaTimeline, mutual_silences, runs

log = logging.getLogger(__name__)


class Task(str, enum.Enum):
    SH = "SH"
    SPRED = "SPred"
    BCPRED = "BCPred"
    SL = "SL"


POSITIVE_LABEL = {Task.SH: "SHIFT", Task.SPRED: "positive", Task.BCPRED: "positive", Task.SL: "SHORT"}
NEGATIVE_LABEL = {Task.SH: "HOLD", Task.SPRED: "negative", Task.BCPRED: "negative", Task.SL: "LONG"}


@dataclass(frozen=True)
class EventParams:
    pre_offset_s: float = 1.0
    post_onset_s: float = 1.0
    sh_eval_delay_s: float = 0.05
    sh_eval_dur_s: float = 0.10
    pred_region_s: float = 0.5
    neg_min_gap_s: float = 2.0
    bc_max_dur_s: float = 1.0
    bc_pre_silence_s: float = 1.0
    bc_post_silence_s: float = 2.0
    sl_onset_dur_s: float = 0.2
    min_context_s: float = 3.0

    def __post_init__(self) -> None:
        for f in fields(self):
            if not getattr(self, f.name) > 0:
                raise ConfigurationError(f"events.{f.name} must be positive")

    def frames(self, rate: FrameRate) -> dict[str, int]:
        """All parameters as whole frame counts, keyed without the ``_s`` suffix."""
        return {f.name[:-2]: rate.frames(getattr(self, f.name), f"events.{f.name}") for f in fields(self)}


@dataclass(frozen=True)
class EventInstance:
    task: Task
    label: str
    eval_start: int
    eval_end: int
    context_speaker: Speaker
    dialog: str = ""

    @property
    def positive(self) -> bool:
        return self.label == POSITIVE_LABEL[self.task]

    @property
    def target_speaker(self) -> Speaker:
        """The non-context speaker: next speaker / backchanneler / onset speaker."""
        return self.context_speaker.other

    def to_json(self) -> dict:
        return {
            "dialog": self.dialog,
            "task": self.task.value,
            "label": self.label,
            "eval_start_frame": self.eval_start,
            "eval_end_frame": self.eval_end,
            "context_speaker": self.context_speaker.value,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "EventInstance":
        return cls(
            Task(obj["task"]),
            obj["label"],
            int(obj["eval_start_frame"]),
            int(obj["eval_end_frame"]),
            Speaker(obj["context_speaker"]),
            obj.get("dialog", ""),
        )


@dataclass
class EventSet:
    instances: list[EventInstance] = field(default_factory=list)
    skips: Counter = field(default_factory=Counter)

    def by_task(self, task: Task) -> list[EventInstance]:
        task = Task(task)
        return [e for e in self.instances if e.task is task]

    def extend(self, other: "EventSet") -> None:
        self.instances.extend(other.instances)
        self.skips.update(other.skips)

    def __len__(self) -> int:
        return len(self.instances)


def subsample(candidates: list, k: int, seed) -> list:
    """Seeded choice of ``k`` candidates, preserving their order."""
    if len(candidates) <= k:
        return list(candidates)
    rng = np.random.default_rng(seed)
    idx = np.sort(rng.choice(len(candidates), size=k, replace=False))
    return [candidates[i] for i in idx]


class _Ctx:
    """Frame-converted parameters plus O(1) activity counts for one timeline."""

    def __init__(self, tl: VaTimeline, p: EventParams | None, bins: BinConfig | None):
        self.tl = tl
        self.n = tl.length
        self.f = (p or EventParams()).frames(tl.rate)
        self.horizon = (bins or BinConfig()).horizon_frames(tl.rate)
        self.csum = {}
        for spk in Speaker:
            c = np.zeros(self.n + 1, dtype=np.int64)
            np.cumsum(tl.frames(spk), out=c[1:])
            self.csum[spk] = c

    def count(self, spk: Speaker, lo: int, hi: int) -> int:
        lo = max(lo, 0)
        hi = min(hi, self.n)
        if hi <= lo:
            return 0
        c = self.csum[spk]
        return int(c[hi] - c[lo])

    def usable(self, start: int, end: int) -> str | None:
        """Reason a span cannot be evaluated, or None."""
        if start < self.f["min_context"]:
            return "before_min_context"
        if end > self.n - self.horizon + 1:
            return "past_valid_mask"
        return None

    def sole_speaker(self, lo: int, hi: int) -> tuple[Speaker | None, str | None]:
        ca = self.count(Speaker.A, lo, hi)
        cb = self.count(Speaker.B, lo, hi)
        if ca and cb:
            return None, "both"
        if not (ca or cb):
            return None, "empty"
        return (Speaker.A if ca else Speaker.B), None


@dataclass(frozen=True)
class _Shift:
    silence_start: int
    silence_end: int
    pre: Speaker
    post: Speaker


def _qualified_silences(c: _Ctx, skips: Counter) -> list[_Shift]:
    f = c.f
    out = []
    for s0, s1 in mutual_silences(c.tl):
        if s0 - f["pre_offset"] < 0:
            skips["sh_pre_window_out_of_bounds"] += 1
            continue
        if s1 + f["post_onset"] > c.n:
            skips["sh_post_window_out_of_bounds"] += 1
            continue
        pre, why = c.sole_speaker(s0 - f["pre_offset"], s0)
        if pre is None:
            skips[f"sh_pre_window_{why}"] += 1
            continue
        post, why = c.sole_speaker(s1, s1 + f["post_onset"])
        if post is None:
            skips[f"sh_post_window_{why}"] += 1
            continue
        if s0 + f["sh_eval_delay"] + f["sh_eval_dur"] > s1:
            skips["sh_silence_too_short"] += 1
            continue
        out.append(_Shift(s0, s1, pre, post))
    return out


def _shift_hold(c: _Ctx, silences: list[_Shift], skips: Counter) -> list[EventInstance]:
    f = c.f
    out = []
    for q in silences:
        start = q.silence_start + f["sh_eval_delay"]
        end = start + f["sh_eval_dur"]
        why = c.usable(start, end)
        if why:
            skips[f"sh_{why}"] += 1
            continue
        label = "SHIFT" if q.pre is not q.post else "HOLD"
        out.append(EventInstance(Task.SH, label, start, end, q.pre))
    return out


def _shift_pred_positives(c: _Ctx, silences: list[_Shift], skips: Counter) -> list[EventInstance]:
    f = c.f
    region = f["pred_region"]
    x = c.tl.frames
    out = []
    for q in silences:
        if q.pre is q.post:
            continue
        seg_end = q.silence_start
        seg_start = seg_end
        frames = x(q.pre)
        while seg_start > 0 and frames[seg_start - 1]:
            seg_start -= 1
        if seg_end - seg_start < region:
            skips["spred_segment_too_short"] += 1
            continue
        start, end = seg_end - region, seg_end
        why = c.usable(start, end)
        if why:
            skips[f"spred_{why}"] += 1
            continue
        out.append(EventInstance(Task.SPRED, "positive", start, end, q.pre))
    return out


def _overlaps(start: int, end: int, spans: Iterable[EventInstance]) -> bool:
    return any(start < e.eval_end and e.eval_start < end for e in spans)


def _shift_pred_negatives(c: _Ctx, positives: list[EventInstance], skips: Counter, seed) -> list[EventInstance]:
    f = c.f
    region, gap = f["pred_region"], f["neg_min_gap"]
    cands = []
    for start in range(0, c.n - region + 1, region):
        end = start + region
        if end + gap > c.n:
            break
        for spk in Speaker:
            if c.count(spk, start, end) == region and c.count(spk.other, start, end + gap) == 0:
                if c.usable(start, end) is None and not _overlaps(start, end, positives):
                    cands.append(EventInstance(Task.SPRED, "negative", start, end, spk))
                break
    chosen = subsample(cands, len(positives), seed)
    skips["spred_negative_candidates_dropped"] += len(cands) - len(chosen)
    return chosen


def extract_shift_hold(
    tl: VaTimeline, p: EventParams | None = None, *, bins: BinConfig | None = None, skips: Counter | None = None
) -> list[EventInstance]:
    c = _Ctx(tl, p, bins)
    skips = Counter() if skips is None else skips
    return _shift_hold(c, _qualified_silences(c, skips), skips)


def extract_shift_pred(
    tl: VaTimeline,
    p: EventParams | None = None,
    *,
    bins: BinConfig | None = None,
    seed: int = 0,
    skips: Counter | None = None,
) -> list[EventInstance]:
    c = _Ctx(tl, p, bins)
    skips = Counter() if skips is None else skips
    pos = _shift_pred_positives(c, _qualified_silences(c, Counter()), skips)
    return pos + _shift_pred_negatives(c, pos, skips, [seed, 1])


def _backchannels(c: _Ctx, skips: Counter) -> list[tuple[Speaker, int, int]]:
    f = c.f
    out = []
    for spk in Speaker:
        for r0, r1 in runs(c.tl.frames(spk)):
            if r1 - r0 > f["bc_max_dur"]:
                continue
            lo, hi = r0 - f["bc_pre_silence"], r1 + f["bc_post_silence"]
            if lo < 0 or hi > c.n:
                skips["bc_window_out_of_bounds"] += 1
                continue
            if c.count(spk, lo, r0) or c.count(spk, r1, hi):
                skips["bc_not_isolated"] += 1
                continue
            if not c.count(spk.other, lo, r0):
                skips["bc_no_preceding_other"] += 1
                continue
            out.append((spk, r0, r1))
    out.sort(key=lambda b: (b[1], b[0].value))
    return out


def extract_backchannels(
    tl: VaTimeline, p: EventParams | None = None, *, skips: Counter | None = None
) -> list[tuple[Speaker, int, int]]:
    """Short, isolated segments preceded by the other speaker: ``(speaker, start, end)``."""
    return _backchannels(_Ctx(tl, p, None), Counter() if skips is None else skips)


def _last_active(c: _Ctx, before: int) -> Speaker | None:
    """Sole speaker at the latest active frame before ``before``; None if none or both."""
    a, b = c.tl.frames_a, c.tl.frames_b
    active = np.flatnonzero((a[:before] | b[:before]) != 0)
    if active.size == 0:
        return None
    i = active[-1]
    if a[i] and b[i]:
        return None
    return Speaker.A if a[i] else Speaker.B


def _bc_pred(c: _Ctx, bcs, skips: Counter, seed) -> list[EventInstance]:
    f = c.f
    region, gap = f["pred_region"], f["neg_min_gap"]
    pos = []
    for spk, r0, _ in bcs:
        start, end = r0 - region, r0
        why = c.usable(start, end)
        if why:
            skips[f"bcpred_{why}"] += 1
            continue
        pos.append(EventInstance(Task.BCPRED, "positive", start, end, spk.other))
    cands = []
    for start in range(0, c.n - region + 1, region):
        end = start + region
        if end + gap > c.n:
            break
        ctx = _last_active(c, end)
        if ctx is None:
            continue
        if c.count(ctx.other, start, end + gap) == 0:
            if c.usable(start, end) is None and not _overlaps(start, end, pos):
                cands.append(EventInstance(Task.BCPRED, "negative", start, end, ctx))
    chosen = subsample(cands, len(pos), seed)
    skips["bcpred_negative_candidates_dropped"] += len(cands) - len(chosen)
    return pos + chosen


def extract_bc_pred(
    tl: VaTimeline,
    p: EventParams | None = None,
    *,
    bins: BinConfig | None = None,
    seed: int = 0,
    skips: Counter | None = None,
) -> list[EventInstance]:
    c = _Ctx(tl, p, bins)
    skips = Counter() if skips is None else skips
    return _bc_pred(c, _backchannels(c, Counter()), skips, [seed, 2])


def _short_long(c: _Ctx, bcs, silences: list[_Shift], skips: Counter) -> list[EventInstance]:
    dur = c.f["sl_onset_dur"]
    out = []
    for spk, r0, _ in bcs:
        why = c.usable(r0, r0 + dur)
        if why:
            skips[f"sl_{why}"] += 1
            continue
        out.append(EventInstance(Task.SL, "SHORT", r0, r0 + dur, spk.other))
    for q in silences:
        if q.pre is q.post:
            continue
        start = q.silence_end
        why = c.usable(start, start + dur)
        if why:
            skips[f"sl_{why}"] += 1
            continue
        out.append(EventInstance(Task.SL, "LONG", start, start + dur, q.pre))
    return out


def extract_short_long(
    tl: VaTimeline, p: EventParams | None = None, *, bins: BinConfig | None = None, skips: Counter | None = None
) -> list[EventInstance]:
    c = _Ctx(tl, p, bins)
    skips = Counter() if skips is None else skips
    return _short_long(c, _backchannels(c, Counter()), _qualified_silences(c, Counter()), skips)


def bc_shift_conflicts(tl: VaTimeline, p: EventParams | None = None) -> list[tuple[Speaker, int, int]]:
    """Backchannels whose onset is also the post-silence onset of a qualified SHIFT."""
    c = _Ctx(tl, p, None)
    onsets = {(q.post, q.silence_end) for q in _qualified_silences(c, Counter()) if q.pre is not q.post}
    return [b for b in _backchannels(c, Counter()) if (b[0], b[1]) in onsets]


def extract_all(
    tl: VaTimeline,
    p: EventParams | None = None,
    *,
    bins: BinConfig | None = None,
    seed: int = 0,
    dialog: str = "",
) -> EventSet:
    """Every task's instances for one dialog, with skip-reason counts."""
    c = _Ctx(tl, p, bins)
    skips: Counter = Counter()
    silences = _qualified_silences(c, skips)
    bcs = _backchannels(c, skips)
    sh = _shift_hold(c, silences, skips)
    sp = _shift_pred_positives(c, silences, skips)
    sp += _shift_pred_negatives(c, sp, skips, [seed, 1])
    bp = _bc_pred(c, bcs, skips, [seed, 2])
    sl = _short_long(c, bcs, silences, skips)
    conflicts = {(q.post, q.silence_end) for q in silences if q.pre is not q.post} & {(s, r0) for s, r0, _ in bcs}
    if conflicts:
        skips["bc_onset_is_shift_onset"] += len(conflicts)
        log.info("dialog %s: %d backchannel onsets double as SHIFT onsets", dialog or "?", len(conflicts))
    insts = [
        EventInstance(e.task, e.label, e.eval_start, e.eval_end, e.context_speaker, dialog)
        for e in sh + sp + bp + sl
    ]
    return EventSet(insts, skips)
