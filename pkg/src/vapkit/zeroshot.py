"""Zero-shot mapping from head outputs to turn-taking task scores.

Discrete heads are scored through state subsets (templates) over the 256
projection states; independent heads through bin-mass rules; comparative
heads through the scalar A-share directly. All scorers take a single row or
a batch of rows and return a float or an array of floats in ``[0, 1]``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .codec import N_BINS, N_STATES, STATE_BITS, HeadKind, HeadOutput
from .errors import HeadFormatError, InvariantError, UnsupportedTaskError
from .timeline import Speaker


class Role(str, enum.Enum):
    NEXT_SPEAKER = "next_speaker"
    NEXT_SPEAKER_PRED = "next_speaker_pred"
    BACKCHANNEL = "backchannel"


def _nibbles(state: int, speaker: Speaker) -> tuple[tuple[int, ...], tuple[int, ...]]:
    bits = tuple(int(b) for b in STATE_BITS[state])
    a, b = bits[:4], bits[4:]
    return (a, b) if speaker is Speaker.A else (b, a)


@dataclass(frozen=True)
class BcTemplate:
    """Bin pattern of a projected backchannel.

    Bins are 0-based. The backchanneler must be active in at least one of
    ``onset_bins`` and silent in all of ``quiet_bins``; the other speaker must
    be active in every ``holder_bins`` bin.
    """

    onset_bins: tuple[int, ...] = (0, 1)
    quiet_bins: tuple[int, ...] = (2, 3)
    holder_bins: tuple[int, ...] = (3,)

    def matches(self, own: tuple[int, ...], other: tuple[int, ...]) -> bool:
        return (
            any(own[i] for i in self.onset_bins)
            and not any(own[i] for i in self.quiet_bins)
            and all(other[i] for i in self.holder_bins)
        )


DEFAULT_BC_TEMPLATE = BcTemplate()


def _predicate(role: Role, template: BcTemplate) -> Callable[[tuple, tuple], bool]:
    if role is Role.NEXT_SPEAKER:
        return lambda own, other: own[2] == own[3] == 1 and not any(other)
    if role is Role.NEXT_SPEAKER_PRED:
        return lambda own, other: own[2] == own[3] == 1 and other[2] == other[3] == 0
    return template.matches


@dataclass(frozen=True)
class StateSubset:
    role: Role
    speaker: Speaker
    states: frozenset[int]

    @property
    def mask(self) -> np.ndarray:
        m = np.zeros(N_STATES, dtype=bool)
        m[list(self.states)] = True
        return m

    def to_json(self) -> dict:
        return {"task": self.role.value, "speaker": self.speaker.value, "states": sorted(self.states)}


def _build_subset(role: Role, speaker: Speaker, template: BcTemplate) -> StateSubset:
    pred = _predicate(role, template)
    states = frozenset(s for s in range(N_STATES) if pred(*_nibbles(s, speaker)))
    return StateSubset(role, speaker, states)


def _enumerated(role: Role, speaker: Speaker, template: BcTemplate) -> frozenset[int]:
    # independent route: walk all 8-bit tuples and pack by hand
    import itertools

    pred = _predicate(role, template)
    found = set()
    for bits in itertools.product((0, 1), repeat=8):
        a, b = bits[:4], bits[4:]
        own, other = (a, b) if speaker is Speaker.A else (b, a)
        if pred(own, other):
            found.add(int("".join(map(str, bits)), 2))
    return frozenset(found)


_CACHE: dict[tuple, StateSubset] = {}


def get_subset(role: Role, speaker: Speaker, template: BcTemplate = DEFAULT_BC_TEMPLATE) -> StateSubset:
    key = (Role(role), Speaker(speaker), template)
    if key not in _CACHE:
        sub = _build_subset(*key)
        if sub.states != _enumerated(*key):
            raise InvariantError(f"template {key} disagrees with exhaustive enumeration")
        _CACHE[key] = sub
    return _CACHE[key]


def subset_next_speaker(s: Speaker) -> StateSubset:
    return get_subset(Role.NEXT_SPEAKER, s)


def subset_next_speaker_pred(s: Speaker) -> StateSubset:
    return get_subset(Role.NEXT_SPEAKER_PRED, s)


def subset_backchannel(backchanneler: Speaker, template: BcTemplate = DEFAULT_BC_TEMPLATE) -> StateSubset:
    return get_subset(Role.BACKCHANNEL, backchanneler, template)


def subset_tables(template: BcTemplate = DEFAULT_BC_TEMPLATE) -> list[dict]:
    return [get_subset(r, s, template).to_json() for r in Role for s in Speaker]


# ----------------------------------------------------------------------------
# scoring


@dataclass(frozen=True)
class ScoringConfig:
    bc_rule: str = "literal"  # "literal" | "graded"
    bc_sharpness: float = 10.0
    duration_weighted: bool = False
    bin_durations_ms: tuple[int, ...] = (200, 400, 600, 800)
    spred_omit_ms: int = 600
    bc_template: BcTemplate = DEFAULT_BC_TEMPLATE


DEFAULT_SCORING = ScoringConfig()

_SPK = {Speaker.A: 0, Speaker.B: 1}


def _as_batch(values, kind: HeadKind) -> tuple[np.ndarray, bool]:
    v = np.asarray(values, dtype=np.float64)
    shape = {
        HeadKind.DISCRETE: (N_STATES,),
        HeadKind.INDEPENDENT4: (2, N_BINS),
        HeadKind.INDEPENDENT40: (2, 40),
        HeadKind.COMPARATIVE: (),
    }[kind]
    if v.shape == shape:
        return v[None, ...], True
    if v.shape[1:] == shape:
        return v, False
    raise HeadFormatError(f"{kind.value} rows must have shape {shape}, got {v.shape}")


def _unpack(out, kind):
    if isinstance(out, HeadOutput):
        return out.values, out.kind
    if kind is None:
        raise HeadFormatError("head kind is required for raw arrays")
    return out, HeadKind(kind)


def _ret(x: np.ndarray, single: bool):
    return float(x[0]) if single else x


def _pair_ratio(num: np.ndarray, den_other: np.ndarray) -> np.ndarray:
    tot = num + den_other
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(tot > 0, num / np.where(tot > 0, tot, 1), 0.5)


def _bin_weights(kind: HeadKind, cfg: ScoringConfig) -> np.ndarray:
    if kind is HeadKind.INDEPENDENT40 or not cfg.duration_weighted:
        return np.ones(N_BINS if kind is HeadKind.INDEPENDENT4 else 40)
    return np.asarray(cfg.bin_durations_ms, dtype=np.float64)


def _omitted_bins(kind: HeadKind, cfg: ScoringConfig) -> int:
    if kind is HeadKind.INDEPENDENT40:
        return cfg.spred_omit_ms // 50
    edges = np.cumsum(cfg.bin_durations_ms)
    return int(np.searchsorted(edges, cfg.spred_omit_ms, side="right"))


def _subset_mass(d: np.ndarray, sub: StateSubset) -> np.ndarray:
    return d[:, sub.mask].sum(axis=1)


def score_sh(out, hypothesis: Speaker, kind: HeadKind | None = None, cfg: ScoringConfig = DEFAULT_SCORING):
    """Probability-like score that ``hypothesis`` is the next speaker."""
    values, kind = _unpack(out, kind)
    v, single = _as_batch(values, kind)
    h = Speaker(hypothesis)
    if kind is HeadKind.DISCRETE:
        mine = _subset_mass(v, subset_next_speaker(h))
        theirs = _subset_mass(v, subset_next_speaker(h.other))
        return _ret(_pair_ratio(mine, theirs), single)
    if kind is HeadKind.COMPARATIVE:
        return _ret(v if h is Speaker.A else 1.0 - v, single)
    w = _bin_weights(kind, cfg)
    mass = (v * w).sum(axis=2)
    return _ret(_pair_ratio(mass[:, _SPK[h]], mass[:, _SPK[h.other]]), single)


def score_spred(out, hypothesis: Speaker, kind: HeadKind | None = None, cfg: ScoringConfig = DEFAULT_SCORING):
    """Score for an upcoming shift to ``hypothesis`` (the currently silent speaker)."""
    values, kind = _unpack(out, kind)
    v, single = _as_batch(values, kind)
    h = Speaker(hypothesis)
    if kind is HeadKind.DISCRETE:
        mine = _subset_mass(v, subset_next_speaker_pred(h))
        theirs = _subset_mass(v, subset_next_speaker_pred(h.other))
        return _ret(_pair_ratio(mine, theirs), single)
    if kind is HeadKind.COMPARATIVE:
        return _ret(v if h is Speaker.A else 1.0 - v, single)
    skip = _omitted_bins(kind, cfg)
    w = _bin_weights(kind, cfg)
    mass = (v[:, :, skip:] * w[skip:]).sum(axis=2)
    return _ret(_pair_ratio(mass[:, _SPK[h]], mass[:, _SPK[h.other]]), single)


def _sigmoid(x: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-x))


def score_bc(out, backchanneler: Speaker, kind: HeadKind | None = None, cfg: ScoringConfig = DEFAULT_SCORING):
    """Score for ``backchanneler`` producing a backchannel in the near future."""
    values, kind = _unpack(out, kind)
    if kind is HeadKind.COMPARATIVE:
        raise UnsupportedTaskError("the comparative head cannot separate backchannels from shifts")
    v, single = _as_batch(values, kind)
    l = Speaker(backchanneler)
    if kind is HeadKind.DISCRETE:
        return _ret(np.clip(_subset_mass(v, subset_backchannel(l, cfg.bc_template)), 0.0, 1.0), single)
    listener = v[:, _SPK[l]]
    holder = v[:, _SPK[l.other]]
    last_margin = holder[:, -1] - listener[:, -1]
    early_margin = listener[:, :-1].max(axis=1) - listener[:, -1]
    if cfg.bc_rule == "graded":
        k = cfg.bc_sharpness
        value = _sigmoid(k * last_margin) * _sigmoid(k * early_margin)
    elif cfg.bc_rule == "literal":
        value = ((last_margin > 0) & (early_margin > 0)).astype(np.float64)
    else:
        raise HeadFormatError(f"unknown bc_rule {cfg.bc_rule!r}")
    return _ret(value, single)


def score_sl(out, onset_speaker: Speaker, kind: HeadKind | None = None, cfg: ScoringConfig = DEFAULT_SCORING):
    """SHORT score for a just-started segment of ``onset_speaker``."""
    return score_bc(out, onset_speaker, kind, cfg)
