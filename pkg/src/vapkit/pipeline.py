"""Glue between corpus, labels, events, predictors and evaluation."""
from __future__ import annotations

import zlib
from typing import Sequence

from .codec import HeadKind, HeadOutput, VapLabels, make_labels
from .config import RunConfig
from .corpus import Dialog
from .events import EventInstance, EventSet, extract_all
from .predictors import MarkovModel, OracleConfig, derive_heads, markov_predict, oracle_predict, train_markov
from .timeline import VaTimeline


def dialog_seed(seed: int, dialog_id: str) -> list[int]:
    return [int(seed), zlib.crc32(dialog_id.encode("utf-8"))]


class Prepared:
    """Timelines and labels for a set of dialogs, computed once."""

    def __init__(self, dialogs: Sequence[Dialog], cfg: RunConfig):
        self.cfg = cfg
        self.dialogs = {d.id: d for d in dialogs}
        self.timelines: dict[str, VaTimeline] = {d.id: d.timeline(cfg.rate) for d in dialogs}
        self.labels: dict[str, VapLabels] = {k: make_labels(tl, cfg.bins) for k, tl in self.timelines.items()}

    def events(self, ids: Sequence[str]) -> EventSet:
        out = EventSet()
        for did in ids:
            out.extend(
                extract_all(
                    self.timelines[did],
                    self.cfg.events,
                    bins=self.cfg.bins,
                    seed=dialog_seed(self.cfg.eval.event_seed, did),
                    dialog=did,
                )
            )
        return out

    def train(self, ids: Sequence[str]) -> MarkovModel:
        return train_markov(((self.timelines[i], self.labels[i]) for i in ids), self.cfg.predictor.alpha, self.cfg.bins)

    def heads(self, ids: Sequence[str], model: MarkovModel | None = None, oracle: OracleConfig | None = None):
        """``{head kind: {dialog id: HeadOutput}}`` for every derived head."""
        out: dict[HeadKind, dict[str, HeadOutput]] = {k: {} for k in HeadKind}
        for did in ids:
            tl = self.timelines[did]
            if model is not None:
                d = markov_predict(model, tl)
            else:
                d = oracle_predict(tl, self.labels[did], oracle or OracleConfig())
            for kind, head in derive_heads(d, self.cfg.bins).items():
                out[kind][did] = head
        return out

