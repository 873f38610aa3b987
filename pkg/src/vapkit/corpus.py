"""Dialog corpora: JSON-lines I/O and a seeded synthetic two-party generator."""
from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigurationError, IngestionError
from .timeline import FrameRate, Speaker, VaSegment, VaTimeline, rasterize

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Dialog:
    id: str
    duration_s: float
    segments: tuple[VaSegment, ...]

    def timeline(self, rate: FrameRate | None = None) -> VaTimeline:
        return rasterize(self.segments, rate or FrameRate(), self.duration_s)

    def to_json(self) -> dict:
        segs = sorted(self.segments, key=lambda s: (s.start_s, s.speaker.value, s.end_s))
        return {
            "id": self.id,
            "duration_s": self.duration_s,
            "segments": [{"speaker": s.speaker.value, "start": s.start_s, "end": s.end_s} for s in segs],
        }


def _parse_dialog(obj, where: str) -> Dialog:
    if not isinstance(obj, dict):
        raise IngestionError(f"{where}: expected a JSON object")
    missing = [k for k in ("id", "duration_s", "segments") if k not in obj]
    if missing:
        raise IngestionError(f"{where}: missing fields {missing}")
    did = obj["id"]
    if not isinstance(did, str) or not did:
        raise IngestionError(f"{where}: id must be a non-empty string")
    dur = obj["duration_s"]
    if isinstance(dur, bool) or not isinstance(dur, (int, float)) or not dur > 0:
        raise IngestionError(f"{where} (dialog {did}): duration_s must be a positive number")
    if not isinstance(obj["segments"], list):
        raise IngestionError(f"{where} (dialog {did}): segments must be a list")
    segs = []
    for i, s in enumerate(obj["segments"]):
        loc = f"{where} (dialog {did}, segment {i})"
        if not isinstance(s, dict) or {"speaker", "start", "end"} - s.keys():
            raise IngestionError(f"{loc}: expected speaker/start/end")
        if s["speaker"] not in ("A", "B"):
            raise IngestionError(f"{loc}: speaker must be 'A' or 'B', got {s['speaker']!r}")
        start, end = s["start"], s["end"]
        if not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in (start, end)):
            raise IngestionError(f"{loc}: start/end must be numbers")
        if not end > start:
            raise IngestionError(f"{loc}: end ({end}) must be greater than start ({start})")
        if start < 0 or end > dur + 1e-9:
            raise IngestionError(f"{loc}: segment [{start}, {end}) outside [0, {dur}]")
        segs.append(VaSegment(Speaker(s["speaker"]), float(start), float(end)))
    segs.sort(key=lambda s: (s.start_s, s.speaker.value, s.end_s))
    return Dialog(did, float(dur), tuple(segs))


def load_corpus(path: str | Path) -> list[Dialog]:
    path = Path(path)
    out: list[Dialog] = []
    seen = set()
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            where = f"{path}:{lineno}"
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise IngestionError(f"{where}: invalid JSON: {exc.msg}") from exc
            d = _parse_dialog(obj, where)
            if d.id in seen:
                raise IngestionError(f"{where}: duplicate dialog id {d.id!r}")
            seen.add(d.id)
            out.append(d)
    if not out:
        log.warning("%s: corpus is empty", path)
    return out


def dump_corpus(dialogs: Iterable[Dialog]) -> str:
    return "".join(json.dumps(d.to_json(), separators=(",", ":")) + "\n" for d in dialogs)


def write_corpus(dialogs: Iterable[Dialog], path: str | Path) -> None:
    Path(path).write_text(dump_corpus(dialogs), encoding="utf-8")


# ----------------------------------------------------------------------------
# synthetic generator


@dataclass(frozen=True)
class SynthParams:
    """Generator settings. Durations are in seconds; ``*_mu``/``*_sigma`` are
    log-space lognormal parameters, clipped to ``[*_min_s, *_max_s]``."""

    seed: int = 0
    n_dialogs: int = 20
    dialog_duration_s: float = 60.0
    turn_mu: float = 1.1
    turn_sigma: float = 0.5
    turn_min_s: float = 1.0
    turn_max_s: float = 12.0
    gap_mu: float = -1.05
    gap_sigma: float = 0.35
    gap_min_s: float = 0.2
    gap_max_s: float = 1.2
    pause_mu: float = -1.0
    pause_sigma: float = 0.35
    pause_min_s: float = 0.2
    pause_max_s: float = 1.0
    p_pause_within_turn: float = 0.3
    p_shift_after_silence: float = 0.5
    p_backchannel_per_turn: float = 0.3
    bc_min_s: float = 0.1
    bc_max_s: float = 0.8
    min_chunk_s: float = 1.0
    bc_lead_s: float = 1.0
    bc_tail_s: float = 2.0
    p_yield_cue: float = 0.7
    cue_min_s: float = 0.3
    cue_max_s: float = 0.7
    resolution_s: float = 0.01

    def __post_init__(self) -> None:
        for name in ("p_pause_within_turn", "p_shift_after_silence", "p_backchannel_per_turn", "p_yield_cue"):
            v = getattr(self, name)
            if not 0 <= v <= 1:
                raise ConfigurationError(f"synth.{name} must be in [0, 1], got {v}")
        for f in fields(self):
            if f.name.endswith("_s") and not getattr(self, f.name) > 0:
                raise ConfigurationError(f"synth.{f.name} must be positive")
        if self.n_dialogs < 0:
            raise ConfigurationError("synth.n_dialogs must be non-negative")
        for lo, hi in (("turn_min_s", "turn_max_s"), ("gap_min_s", "gap_max_s"), ("pause_min_s", "pause_max_s"),
                       ("bc_min_s", "bc_max_s"), ("cue_min_s", "cue_max_s")):
            if getattr(self, lo) > getattr(self, hi):
                raise ConfigurationError(f"synth.{lo} exceeds synth.{hi}")
        if self.bc_lead_s < 1.0 or self.bc_tail_s < 2.0:
            log.warning("bc_lead_s < 1s or bc_tail_s < 2s: generated backchannels may not be isolated")


class _Gen:
    def __init__(self, p: SynthParams, index: int):
        self.p = p
        self.rng = np.random.default_rng([p.seed, index])
        self.res = p.resolution_s

    def ticks(self, seconds: float) -> int:
        return int(round(seconds / self.res))

    def lognormal(self, prefix: str) -> int:
        p = self.p
        x = self.rng.lognormal(getattr(p, f"{prefix}_mu"), getattr(p, f"{prefix}_sigma"))
        x = min(max(x, getattr(p, f"{prefix}_min_s")), getattr(p, f"{prefix}_max_s"))
        return max(1, self.ticks(x))

    def uniform(self, lo_s: float, hi_s: float) -> int:
        return max(1, self.ticks(self.rng.uniform(lo_s, hi_s)))

    def turn_chunks(self, start: int) -> list[list[int]]:
        """Speech chunks of one turn as ``[start, end)`` tick pairs."""
        p = self.p
        remaining = self.lognormal("turn")
        min_chunk = self.ticks(p.min_chunk_s)
        chunks, pos = [], start
        while remaining >= 2 * min_chunk and self.rng.random() < p.p_pause_within_turn:
            size = int(self.rng.integers(min_chunk, remaining - min_chunk + 1))
            chunks.append([pos, pos + size])
            pos += size + self.lognormal("pause")
            remaining -= size
        chunks.append([pos, pos + remaining])
        return chunks

    def place_bc(self, chunks, listener_free_from: int, total: int) -> list[int] | None:
        p = self.p
        dur = self.uniform(p.bc_min_s, p.bc_max_s)
        lead, tail = self.ticks(p.bc_lead_s), self.ticks(p.bc_tail_s)
        pre, post = self.ticks(1.0), self.ticks(2.0)
        options = []
        for cs, ce in chunks:
            lo = max(cs + lead, listener_free_from + pre, pre)
            hi = min(ce - tail - dur, total - post - dur)
            if hi >= lo:
                options.append((lo, hi))
        if not options:
            return None
        lo, hi = options[int(self.rng.integers(len(options)))]
        start = int(self.rng.integers(lo, hi + 1))
        return [start, start + dur]


def synth_dialog(p: SynthParams, index: int) -> Dialog:
    g = _Gen(p, index)
    total = g.ticks(p.dialog_duration_s)
    segs: list[tuple[Speaker, int, int]] = []
    last_end = {Speaker.A: -(10**9), Speaker.B: -(10**9)}
    speaker = Speaker.A if g.rng.random() < 0.5 else Speaker.B
    t = g.lognormal("gap")
    while t < total:
        chunks = g.turn_chunks(t)
        shift = g.rng.random() < p.p_shift_after_silence
        # the cue is a within-turn pause plus a short tag, so it follows the pause switch
        if shift and p.p_pause_within_turn > 0 and g.rng.random() < p.p_yield_cue:
            cue_start = chunks[-1][1] + g.lognormal("pause")
            chunks.append([cue_start, cue_start + g.uniform(p.cue_min_s, p.cue_max_s)])
        chunks = [[s, min(e, total)] for s, e in chunks if s < total]
        bc_draw = g.rng.random() < p.p_backchannel_per_turn
        if bc_draw:
            bc = g.place_bc(chunks, last_end[speaker.other], total)
            if bc is None:
                log.debug("dialog %d: no feasible backchannel placement at t=%d", index, t)
            else:
                segs.append((speaker.other, *bc))
                last_end[speaker.other] = bc[1]
        for s, e in chunks:
            segs.append((speaker, s, e))
        last_end[speaker] = chunks[-1][1]
        t = chunks[-1][1] + g.lognormal("gap")
        if shift:
            speaker = speaker.other
    segs.sort(key=lambda s: (s[1], s[0].value))
    res = p.resolution_s
    digits = max(0, -int(math.floor(math.log10(res))) + 1)
    return Dialog(
        f"synth-{p.seed}-{index:05d}",
        round(total * res, digits),
        tuple(VaSegment(spk, round(s * res, digits), round(e * res, digits)) for spk, s, e in segs),
    )


def synth_corpus(p: SynthParams) -> list[Dialog]:
    return [synth_dialog(p, i) for i in range(p.n_dialogs)]


def clean_params(**overrides) -> SynthParams:
    """Settings whose events are unambiguous for a ground-truth oracle.

    Short gaps and pauses, long chunks, backchannels far from turn edges and
    no yield cue: every S/H, S-pred, BC-pred and S/L eval frame has a true
    projection state inside exactly one of the relevant templates. Silences
    are capped at 300ms so a 600ms third bin is never less than half active.
    """
    base = dict(
        turn_mu=math.log(7.0), turn_sigma=0.3, turn_min_s=5.0, turn_max_s=12.0,
        gap_mu=math.log(0.25), gap_sigma=0.2, gap_min_s=0.2, gap_max_s=0.3,
        pause_mu=math.log(0.25), pause_sigma=0.2, pause_min_s=0.2, pause_max_s=0.3,
        min_chunk_s=2.5, bc_lead_s=2.5, bc_tail_s=2.0, p_yield_cue=0.0,
    )
    base.update(overrides)
    return SynthParams(**base)
