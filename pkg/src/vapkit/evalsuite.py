"""Threshold calibration and weighted-F1 evaluation of zero-shot task scores."""
from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .codec import HeadKind, HeadOutput
from .errors import CalibrationError, ConfigurationError, EvaluationError, UnsupportedTaskError
from .events import NEGATIVE_LABEL, POSITIVE_LABEL, EventInstance, Task
from .zeroshot import DEFAULT_SCORING, ScoringConfig, score_bc, score_sh, score_sl, score_spred

TASK_ORDER = (Task.SH, Task.SL, Task.SPRED, Task.BCPRED)
TABLE_COLUMNS = {Task.SH: "S/H (S)", Task.SL: "S/L", Task.SPRED: "S-pred", Task.BCPRED: "BC-pred"}
THRESHOLD_GRID = np.round(np.linspace(0.0, 1.0, 101), 2)


@dataclass
class SplitSpec:
    train_ids: list[str]
    val_ids: list[str]
    test_ids: list[str]
    seed: int = 0

    def __post_init__(self) -> None:
        sets = [set(self.train_ids), set(self.val_ids), set(self.test_ids)]
        if sum(len(s) for s in sets) != len(set().union(*sets)):
            raise ConfigurationError("train/val/test splits must be disjoint")

    def check_covers(self, ids: Sequence[str]) -> None:
        if set(ids) != set(self.train_ids) | set(self.val_ids) | set(self.test_ids):
            raise ConfigurationError("split does not cover exactly the corpus dialog ids")

    def to_json(self) -> dict:
        return {"seed": self.seed, "train": self.train_ids, "val": self.val_ids, "test": self.test_ids}

    @classmethod
    def from_json(cls, obj: dict) -> "SplitSpec":
        return cls(list(obj["train"]), list(obj["val"]), list(obj["test"]), int(obj.get("seed", 0)))


def make_split(ids: Sequence[str], fractions=(0.6, 0.2, 0.2), seed: int = 0) -> SplitSpec:
    if len(fractions) != 3 or any(f < 0 for f in fractions) or abs(sum(fractions) - 1) > 1e-9:
        raise ConfigurationError(f"split fractions must be three non-negative values summing to 1: {fractions}")
    ordered = sorted(ids)
    perm = np.random.default_rng(seed).permutation(len(ordered))
    shuffled = [ordered[i] for i in perm]
    n_train = int(round(fractions[0] * len(ids)))
    n_val = int(round(fractions[1] * len(ids)))
    return SplitSpec(
        sorted(shuffled[:n_train]),
        sorted(shuffled[n_train : n_train + n_val]),
        sorted(shuffled[n_train + n_val :]),
        seed,
    )


@dataclass
class TaskThresholds:
    s_pred: float = 0.5
    bc_pred: float = 0.5
    s_l: float = 0.5

    def __post_init__(self) -> None:
        for name in ("s_pred", "bc_pred", "s_l"):
            if not 0 <= getattr(self, name) <= 1:
                raise ConfigurationError(f"threshold {name} must be in [0, 1]")

    def for_task(self, task: Task) -> float:
        if task is Task.SH:
            return 0.5
        return {Task.SPRED: self.s_pred, Task.BCPRED: self.bc_pred, Task.SL: self.s_l}[task]

    def to_json(self) -> dict:
        return {"s_pred": self.s_pred, "bc_pred": self.bc_pred, "s_l": self.s_l}


def weighted_f1(truth: Sequence, pred: Sequence, labels: Sequence | None = None) -> tuple[float, dict]:
    """Support-weighted F1 and per-class F1.

    ``labels`` adds classes to the per-class report even if absent from both
    inputs (their F1 is 0 and their weight is 0).
    """
    truth = list(truth)
    pred = list(pred)
    if len(truth) != len(pred):
        raise EvaluationError(f"truth and prediction lengths differ: {len(truth)} vs {len(pred)}")
    if not truth:
        raise EvaluationError("cannot compute F1 on an empty set")
    classes = sorted(set(truth) | set(pred) | set(labels or ()), key=str)
    support = Counter(truth)
    predicted = Counter(pred)
    tp = Counter(t for t, p in zip(truth, pred) if t == p)
    per_class = {}
    for c in classes:
        prec = tp[c] / predicted[c] if predicted[c] else 0.0
        rec = tp[c] / support[c] if support[c] else 0.0
        per_class[c] = 2 * prec * rec / (prec + rec) if prec + rec else 0.0
    n = len(truth)
    return sum(support[c] / n * per_class[c] for c in classes), per_class


_SCORERS = {Task.SH: score_sh, Task.SPRED: score_spred, Task.BCPRED: score_bc, Task.SL: score_sl}


def frame_scores(task: Task, head: HeadOutput, target, start: int, end: int, cfg: ScoringConfig = DEFAULT_SCORING):
    if start < 0 or end > len(head) or end <= start:
        raise EvaluationError(f"span [{start}, {end}) outside head output of length {len(head)}")
    return _SCORERS[Task(task)](head.values[start:end], target, head.kind, cfg)


def score_instance(
    inst: EventInstance, head: HeadOutput, cfg: ScoringConfig = DEFAULT_SCORING, aggregate: str = "mean"
) -> float:
    """Reduce per-frame task scores over the instance's eval span to one value.

    The score is oriented toward the positive class: P(SHIFT) for S/H, P(SHORT)
    for S/L and the positive-event probability for the prediction tasks.
    """
    s = frame_scores(inst.task, head, inst.target_speaker, inst.eval_start, inst.eval_end, cfg)
    if aggregate == "mean":
        return float(np.mean(s))
    if aggregate == "vote":
        return float(np.mean(s > 0.5))
    raise ConfigurationError(f"unknown aggregate {aggregate!r}")


def instance_scores(
    instances: Sequence[EventInstance],
    heads: Mapping[str, HeadOutput],
    cfg: ScoringConfig = DEFAULT_SCORING,
    aggregate: str = "mean",
) -> np.ndarray:
    out = np.empty(len(instances))
    for i, inst in enumerate(instances):
        head = heads.get(inst.dialog)
        if head is None:
            raise EvaluationError(f"no head output for dialog {inst.dialog!r}")
        out[i] = score_instance(inst, head, cfg, aggregate)
    return out


def _decide(task: Task, scores: np.ndarray, threshold: float) -> list[str]:
    return [POSITIVE_LABEL[task] if s > threshold else NEGATIVE_LABEL[task] for s in scores]


def calibrate_scores(task: Task, scores: np.ndarray, truth: Sequence[str]) -> float:
    """Grid threshold maximising weighted F1; ties go to the lowest threshold."""
    task = Task(task)
    if len(set(truth)) < 2:
        raise CalibrationError(f"{task.value}: validation set needs both classes, got {sorted(set(truth))}")
    best_t, best_f = None, -1.0
    for t in THRESHOLD_GRID:
        f, _ = weighted_f1(truth, _decide(task, scores, t))
        if f > best_f:
            best_t, best_f = float(t), f
    return best_t


def calibrate(
    val_events: Sequence[EventInstance],
    val_heads: Mapping[str, HeadOutput],
    task: Task,
    cfg: ScoringConfig = DEFAULT_SCORING,
    aggregate: str = "mean",
) -> float:
    task = Task(task)
    insts = [e for e in val_events if e.task is task]
    scores = instance_scores(insts, val_heads, cfg, aggregate)
    return calibrate_scores(task, scores, [e.label for e in insts])


def calibrate_all(
    val_events: Sequence[EventInstance],
    val_heads: Mapping[str, HeadOutput],
    cfg: ScoringConfig = DEFAULT_SCORING,
    aggregate: str = "mean",
) -> tuple[TaskThresholds, dict]:
    """Thresholds for every thresholded task; unsupported or one-class tasks keep 0.5."""
    found, notes = {}, {}
    for task, name in ((Task.SPRED, "s_pred"), (Task.BCPRED, "bc_pred"), (Task.SL, "s_l")):
        try:
            found[name] = calibrate(val_events, val_heads, task, cfg, aggregate)
        except (CalibrationError, UnsupportedTaskError) as exc:
            notes[name] = str(exc)
    return TaskThresholds(**found), notes


@dataclass
class TaskMetric:
    task: Task
    weighted_f1: float | None = None
    per_class_f1: dict = field(default_factory=dict)
    counts: dict = field(default_factory=dict)
    threshold: float | None = None
    skipped: str | None = None

    @property
    def shift_f1(self) -> float | None:
        return self.per_class_f1.get("SHIFT") if self.task is Task.SH else None

    def to_json(self) -> dict:
        d = {
            "weighted_f1": self.weighted_f1,
            "per_class_f1": self.per_class_f1,
            "counts": self.counts,
            "threshold": self.threshold,
            "skipped": self.skipped,
        }
        if self.task is Task.SH:
            d["shift_f1"] = self.shift_f1
        return d


@dataclass
class MetricReport:
    model: str
    tasks: dict[Task, TaskMetric]

    def to_json(self) -> dict:
        return {"model": self.model, "tasks": {t.value: self.tasks[t].to_json() for t in TASK_ORDER if t in self.tasks}}


def evaluate(
    test_events: Sequence[EventInstance],
    test_heads: Mapping[str, HeadOutput],
    thresholds: TaskThresholds | None = None,
    cfg: ScoringConfig = DEFAULT_SCORING,
    aggregate: str = "mean",
    model: str = "",
) -> MetricReport:
    thresholds = thresholds or TaskThresholds()
    kind = next(iter(test_heads.values())).kind.value if test_heads else ""
    out = {}
    for task in TASK_ORDER:
        insts = [e for e in test_events if e.task is task]
        counts = dict(sorted(Counter(e.label for e in insts).items()))
        thr = thresholds.for_task(task)
        if not insts:
            out[task] = TaskMetric(task, counts={}, skipped="no instances")
            continue
        try:
            scores = instance_scores(insts, test_heads, cfg, aggregate)
        except UnsupportedTaskError:
            out[task] = TaskMetric(task, counts=counts, skipped="unsupported by head")
            continue
        truth = [e.label for e in insts]
        wf1, per = weighted_f1(truth, _decide(task, scores, thr), [POSITIVE_LABEL[task], NEGATIVE_LABEL[task]])
        out[task] = TaskMetric(task, wf1, per, counts, None if task is Task.SH else thr)
    return MetricReport(model or kind, out)


def constant_baseline(instances: Sequence[EventInstance], task: Task, label: str | None = None) -> TaskMetric:
    """Score an always-one-class predictor (the majority class unless ``label`` is given)."""
    task = Task(task)
    truth = [e.label for e in instances if e.task is task]
    if not truth:
        return TaskMetric(task, skipped="no instances")
    if label is None:
        # ties resolve to the negative class
        cnt = Counter(truth)
        label = max((NEGATIVE_LABEL[task], POSITIVE_LABEL[task]), key=lambda c: cnt[c])
    wf1, per = weighted_f1(truth, [label] * len(truth), [POSITIVE_LABEL[task], NEGATIVE_LABEL[task]])
    return TaskMetric(task, wf1, per, dict(sorted(Counter(truth).items())))


def _cell(m: TaskMetric | None) -> str:
    if m is None or m.weighted_f1 is None:
        return "N/A"
    if m.task is Task.SH:
        return f"{m.weighted_f1:.3f} ({m.shift_f1:.3f})"
    return f"{m.weighted_f1:.3f}"


def format_table(reports: Sequence[MetricReport]) -> str:
    header = ["Model"] + [TABLE_COLUMNS[t] for t in TASK_ORDER]
    rows = [[r.model] + [_cell(r.tasks.get(t)) for t in TASK_ORDER] for r in reports]
    widths = [max(len(row[i]) for row in [header] + rows) for i in range(len(header))]
    lines = ["  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip() for row in [header] + rows]
    return "\n".join(lines) + "\n"


def reports_to_json(reports: Sequence[MetricReport]) -> str:
    return json.dumps([r.to_json() for r in reports], indent=2, sort_keys=True) + "\n"
