"""Acceptance gate: one test per criterion, each recording a PASS/FAIL line.

The lines are printed in the terminal summary of any pytest run that
includes this module.
"""
import itertools
import json
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from helpers import random_timeline
from reference_events import production_as_reference, reference_events
from vapkit.cli import main as cli_main
from vapkit.codec import HeadKind, HeadOutput, decode_state, encode_state, marginal_bins
from vapkit.config import RunConfig
from vapkit.corpus import SynthParams, clean_params, synth_corpus
from vapkit.evalsuite import TASK_ORDER, calibrate_all, constant_baseline, evaluate, instance_scores, make_split, weighted_f1
from vapkit.events import Task, extract_all
from vapkit.pipeline import Prepared
from vapkit.timeline import Speaker
from vapkit.zeroshot import (
    DEFAULT_BC_TEMPLATE,
    Role,
    _enumerated,
    score_sh,
    subset_backchannel,
    subset_next_speaker,
    subset_next_speaker_pred,
)


def record(n, title, ok, detail, started):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {n}: {title} ({detail}; {time.perf_counter() - started:.2f}s)"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def test_criterion_1_codec_bijection():
    t0 = time.perf_counter()
    tuples = list(itertools.product((0, 1), repeat=8))
    encoded = [encode_state(b) for b in tuples]
    ok = sorted(encoded) == list(range(256)) and all(decode_state(e) == b for e, b in zip(encoded, tuples))
    ok = ok and all(encode_state(decode_state(i)) == i for i in range(256))
    elapsed = time.perf_counter() - t0
    record(1, "codec bijection", ok and elapsed < 1.0, "256/256 round trips", t0)


def test_criterion_2_template_enumeration():
    t0 = time.perf_counter()
    sizes, ok = {}, True
    for spk in Speaker:
        for role, f, want in ((Role.NEXT_SPEAKER, subset_next_speaker, 4), (Role.NEXT_SPEAKER_PRED, subset_next_speaker_pred, 16),
                              (Role.BACKCHANNEL, subset_backchannel, 24)):
            sub = f(spk)
            ok &= sub.states == _enumerated(role, spk, DEFAULT_BC_TEMPLATE) and len(sub.states) == want
            sizes[(role.value, spk.value)] = len(sub.states)
    ok &= not subset_next_speaker(Speaker.A).states & subset_next_speaker(Speaker.B).states
    ok &= not subset_next_speaker_pred(Speaker.A).states & subset_next_speaker_pred(Speaker.B).states
    ok &= not subset_backchannel(Speaker.A).states & subset_backchannel(Speaker.B).states
    elapsed = time.perf_counter() - t0
    record(2, "template enumeration", ok and elapsed < 1.0, f"sizes {sorted(set(sizes.values()))}", t0)


def test_criterion_3_event_reference_equivalence():
    t0 = time.perf_counter()
    mismatches, counts = 0, {t.value: 0 for t in Task}
    for seed in range(1000):
        tl = random_timeline(np.random.default_rng([3, seed]), max_s=60.0)
        got = production_as_reference(extract_all(tl, seed=seed))
        want = reference_events(tl, seed=seed)
        mismatches += sum(got[k] != want[k] for k in want)
        for k in want:
            counts[k] += len(want[k])
    elapsed = time.perf_counter() - t0
    record(3, "event extractor vs reference", mismatches == 0 and elapsed < 60,
           f"{mismatches} mismatches over 1000 timelines, instances {counts}", t0)


def test_criterion_4_oracle_end_to_end():
    t0 = time.perf_counter()
    cfg = RunConfig()
    dialogs = synth_corpus(clean_params(seed=21, n_dialogs=50))
    split = make_split([d.id for d in dialogs], seed=0)
    prep = Prepared(dialogs, cfg)
    heads = prep.heads(split.val_ids + split.test_ids)[HeadKind.DISCRETE]
    val = prep.events(split.val_ids).instances
    test = prep.events(split.test_ids).instances
    thr, _ = calibrate_all(val, heads)
    rep = evaluate(test, heads, thr)
    f1 = {t.value: rep.tasks[t].weighted_f1 for t in TASK_ORDER}
    n = {t.value: sum(rep.tasks[t].counts.values()) for t in TASK_ORDER}
    ok = f1["SH"] == 1.0 and all(f1[k] is not None and f1[k] >= 0.99 for k in ("SL", "SPred", "BCPred"))
    ok &= all(v > 0 for v in n.values())
    elapsed = time.perf_counter() - t0
    record(4, "oracle end-to-end", ok and elapsed < 120, f"F1 {f1}, instances {n}", t0)


def test_criterion_5_majority_constants():
    t0 = time.perf_counter()
    cfg = RunConfig()
    dialogs = synth_corpus(SynthParams(seed=5, n_dialogs=50))
    split = make_split([d.id for d in dialogs], seed=0)
    test = Prepared(dialogs, cfg).events(split.test_ids).instances
    res = {}
    for task in (Task.SPRED, Task.BCPRED):
        insts = [e for e in test if e.task is task]
        pos = sum(e.positive for e in insts)
        assert pos == len(insts) - pos, f"{task.value} test set is not balanced"
        res[task.value] = constant_baseline(insts, task).weighted_f1
    sh = constant_baseline(test, Task.SH)
    ok = all(abs(v - 0.333) <= 0.005 for v in res.values()) and sh.shift_f1 == 0.0
    record(5, "majority-class constants", ok,
           f"S-pred {res['SPred']:.4f}, BC-pred {res['BCPred']:.4f}, S/H majority SHIFT F1 {sh.shift_f1}", t0)


def test_criterion_6_markov_learner():
    t0 = time.perf_counter()
    cfg = RunConfig()
    params = SynthParams(seed=6, n_dialogs=260, p_shift_after_silence=0.3)
    dialogs = synth_corpus(params)
    train, test = dialogs[:200], dialogs[200:]
    prep = Prepared(dialogs, cfg)
    model = prep.train([d.id for d in train])
    test_ids = [d.id for d in test]
    heads = prep.heads(test_ids, model=model)[HeadKind.DISCRETE]
    events = prep.events(test_ids).instances
    sh = [e for e in events if e.task is Task.SH]
    rep = evaluate(sh, heads)
    base = constant_baseline(sh, Task.SH)
    scores = instance_scores(sh, heads)
    truth = np.array([e.positive for e in sh], dtype=float)
    r = float(np.corrcoef(scores, truth)[0, 1])
    gain = rep.tasks[Task.SH].weighted_f1 - base.weighted_f1
    elapsed = time.perf_counter() - t0
    record(6, "Markov learner sanity", gain >= 0.05 and r > 0.2 and elapsed < 300,
           f"S/H F1 {rep.tasks[Task.SH].weighted_f1:.3f} vs majority {base.weighted_f1:.3f} (gain {gain:+.3f}), "
           f"point-biserial {r:.3f}, {len(sh)} instances", t0)


def test_criterion_7_head_consistency():
    t0 = time.perf_counter()
    rng = np.random.default_rng(7)
    p = rng.dirichlet(np.full(256, 0.3), size=10_000)
    q = rng.dirichlet(np.full(256, 0.3), size=10_000)
    w = rng.random((10_000, 1))
    lin = np.abs(marginal_bins(w * p + (1 - w) * q) - (w[:, :, None] * marginal_bins(p) + (1 - w[:, :, None]) * marginal_bins(q)))
    # per-state sum oracle for the same rows
    bits = np.array([decode_state(s) for s in range(256)], dtype=float)
    direct = np.abs(marginal_bins(p) - np.einsum("ns,sb->nb", p, bits).reshape(-1, 2, 4))
    err = float(max(lin.max(), direct.max()))
    disagree = 0
    for spk in Speaker:
        for s in subset_next_speaker(spk).states:
            d = np.zeros(256)
            d[s] = 1
            dec_d = score_sh(d, spk, HeadKind.DISCRETE) > 0.5
            dec_i = score_sh(marginal_bins(d), spk, HeadKind.INDEPENDENT4) > 0.5
            disagree += dec_d != dec_i or not dec_d
    record(7, "head consistency", err <= 1e-9 and disagree == 0, f"max linearity error {err:.2e}, {disagree} disagreements", t0)


def test_criterion_8_cli_determinism(tmp_path):
    t0 = time.perf_counter()
    ini = "[synth]\nseed = 8\nn_dialogs = 15\n\n[split]\nseed = 2\n"
    digests = []
    for run in ("one", "two"):
        d = tmp_path / run
        d.mkdir()
        (d / "run.ini").write_text(ini)
        c = ["--config", str(d / "run.ini")]
        steps = [
            ["synth", *c, "--out", d / "corpus.jsonl"],
            ["encode", *c, "--corpus", d / "corpus.jsonl", "--out", d / "labels.jsonl"],
            ["split", *c, "--corpus", d / "corpus.jsonl", "--out", d / "split.json"],
            ["events", *c, "--corpus", d / "corpus.jsonl", "--split", d / "split.json", "--out", d / "events.jsonl"],
            ["train", *c, "--corpus", d / "corpus.jsonl", "--split", d / "split.json", "--model", d / "model.json"],
            ["calibrate", *c, "--model", d / "model.json", "--corpus", d / "corpus.jsonl", "--split", d / "split.json",
             "--out", d / "thresholds.json"],
            ["evaluate", *c, "--model", d / "model.json", "--corpus", d / "corpus.jsonl", "--split", d / "split.json",
             "--thresholds", d / "thresholds.json", "--report", "json", "--out", d / "report.json"],
        ]
        for argv in steps:
            assert cli_main([str(a) for a in argv]) == 0, argv
        digests.append({p.name: p.read_bytes() for p in sorted(d.iterdir()) if p.name != "run.ini"})
    same = digests[0] == digests[1]
    record(8, "CLI determinism", same and len(digests[0]) == 7, f"{len(digests[0])} artifacts byte-identical: {same}", t0)


def confusion_matrix_wf1(truth, pred):
    labels = sorted(set(truth) | set(pred))
    idx = {c: i for i, c in enumerate(labels)}
    m = np.zeros((len(labels), len(labels)), dtype=np.int64)
    for t, p in zip(truth, pred):
        m[idx[t], idx[p]] += 1
    tp = np.diag(m).astype(float)
    fp = m.sum(axis=0) - tp
    fn = m.sum(axis=1) - tp
    denom = 2 * tp + fp + fn
    f1 = np.divide(2 * tp, denom, out=np.zeros_like(tp), where=denom > 0)
    return float((m.sum(axis=1) / m.sum() * f1).sum())


def test_criterion_9_weighted_f1_oracle():
    t0 = time.perf_counter()
    rng = np.random.default_rng(9)
    worst = 0.0
    for _ in range(1000):
        n = int(rng.integers(1, 200))
        k = int(rng.integers(2, 5))
        truth = rng.integers(0, k, n).tolist()
        pred = rng.integers(0, k, n).tolist()
        worst = max(worst, abs(weighted_f1(truth, pred)[0] - confusion_matrix_wf1(truth, pred)))
    record(9, "weighted-F1 oracle", worst <= 1e-12, f"max abs difference {worst:.1e} over 1000 vectors", t0)
