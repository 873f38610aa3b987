"""Command-line interface.

Exit codes: 0 success, 1 usage or configuration error, 2 data or validation
error, 3 internal invariant violation. Log verbosity comes from the
``VAPKIT_LOG_LEVEL`` environment variable (default WARNING).
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys
from pathlib import Path

from .codec import HeadKind, make_labels
from .config import RunConfig, load_config
from .corpus import load_corpus, synth_corpus, write_corpus
from .errors import ConfigurationError, InvariantError, VapError
from .evalsuite import (
    SplitSpec,
    TaskThresholds,
    calibrate_all,
    evaluate,
    format_table,
    make_split,
    reports_to_json,
)
from .pipeline import Prepared
from .predictors import MarkovModel, OracleConfig
from .zeroshot import subset_tables

log = logging.getLogger("vapkit")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _write(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _need_file(path: str, what: str) -> Path:
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"{what} not found: {path}")
    return p


def _scoring(cfg: RunConfig):
    return dataclasses.replace(cfg.scoring, bin_durations_ms=cfg.bins.bin_durations_ms)


def _load_split(path: str, ids) -> SplitSpec:
    split = SplitSpec.from_json(json.loads(_need_file(path, "split file").read_text()))
    split.check_covers(ids)
    return split


def _heads_for(args, cfg: RunConfig, prep: Prepared, ids):
    if args.oracle or (not args.model and cfg.predictor.kind == "oracle"):
        eps = cfg.predictor.epsilon if args.eps is None else args.eps
        return prep.heads(ids, oracle=OracleConfig(eps, cfg.predictor.seed)), f"oracle(eps={eps:g})"
    if not args.model:
        raise UsageError("one of --model or --oracle is required (or [predictor] kind = oracle)")
    model = MarkovModel.load(_need_file(args.model, "model file"))
    return prep.heads(ids, model=model), "markov"


def _selected_heads(args, cfg: RunConfig) -> list[HeadKind]:
    names = args.heads.split(",") if args.heads else list(cfg.eval.heads)
    try:
        return [HeadKind(n.strip()) for n in names]
    except ValueError as exc:
        raise UsageError(f"unknown head in {names}: {exc}") from None


def cmd_synth(args, cfg: RunConfig) -> int:
    params = cfg.synth
    if args.n_dialogs is not None:
        params = dataclasses.replace(params, n_dialogs=args.n_dialogs)
    if args.seed is not None:
        params = dataclasses.replace(params, seed=args.seed)
    dialogs = synth_corpus(params)
    write_corpus(dialogs, args.out)
    print(f"wrote {len(dialogs)} dialogs to {args.out}")
    return 0


def cmd_encode(args, cfg: RunConfig) -> int:
    dialogs = load_corpus(_need_file(args.corpus, "corpus"))
    lines = []
    for d in dialogs:
        tl = d.timeline(cfg.rate)
        lab = make_labels(tl, cfg.bins)
        if not lab.valid_mask.any():
            log.warning("dialog %s is shorter than the %dms horizon; every frame is masked", d.id, cfg.bins.horizon_ms)
        rec = {
            "id": d.id,
            "discrete": lab.discrete.tolist(),
            "comparative": [round(float(x), 6) for x in lab.comparative],
            "valid_mask": lab.valid_mask.tolist(),
        }
        if args.independent:
            rec["independent4"] = lab.independent4.tolist()
            rec["independent40"] = lab.independent40.tolist()
        lines.append(json.dumps(rec, separators=(",", ":")) + "\n")
    _write(args.out, "".join(lines))
    return 0


def cmd_events(args, cfg: RunConfig) -> int:
    dialogs = load_corpus(_need_file(args.corpus, "corpus"))
    prep = Prepared(dialogs, cfg)
    ids = [d.id for d in dialogs]
    if args.split:
        split = _load_split(args.split, ids)
        ids = {"train": split.train_ids, "val": split.val_ids, "test": split.test_ids}[args.subset]
    es = prep.events(ids)
    _write(args.out, "".join(json.dumps(e.to_json(), sort_keys=True) + "\n" for e in es.instances))
    summary = {"instances": len(es), "skips": dict(sorted(es.skips.items()))}
    print(json.dumps(summary, indent=2, sort_keys=True), file=sys.stderr if args.out in (None, "-") else sys.stdout)
    return 0


def cmd_split(args, cfg: RunConfig) -> int:
    dialogs = load_corpus(_need_file(args.corpus, "corpus"))
    fr = tuple(args.fractions) if args.fractions else cfg.split.fractions
    seed = cfg.split.seed if args.seed is None else args.seed
    split = make_split([d.id for d in dialogs], fr, seed)
    _write(args.out, json.dumps(split.to_json(), indent=2, sort_keys=True) + "\n")
    return 0


def cmd_train(args, cfg: RunConfig) -> int:
    dialogs = load_corpus(_need_file(args.corpus, "corpus"))
    split = _load_split(args.split, [d.id for d in dialogs])
    if not split.train_ids:
        raise ConfigurationError("split has no training dialogs")
    prep = Prepared([d for d in dialogs if d.id in set(split.train_ids)], cfg)
    model = prep.train(split.train_ids)
    model.save(args.model)
    print(f"trained on {len(split.train_ids)} dialogs; {len(model.counts)} context keys seen")
    return 0


def cmd_calibrate(args, cfg: RunConfig) -> int:
    dialogs = load_corpus(_need_file(args.corpus, "corpus"))
    split = _load_split(args.split, [d.id for d in dialogs])
    prep = Prepared([d for d in dialogs if d.id in set(split.val_ids)], cfg)
    heads, _ = _heads_for(args, cfg, prep, split.val_ids)
    events = prep.events(split.val_ids).instances
    out = {}
    for kind in _selected_heads(args, cfg):
        thr, notes = calibrate_all(events, heads[kind], _scoring(cfg), cfg.eval.aggregate)
        out[kind.value] = thr.to_json()
        for name, note in notes.items():
            log.warning("%s/%s: kept default threshold (%s)", kind.value, name, note)
    _write(args.out, json.dumps(out, indent=2, sort_keys=True) + "\n")
    return 0


def cmd_evaluate(args, cfg: RunConfig) -> int:
    dialogs = load_corpus(_need_file(args.corpus, "corpus"))
    split = _load_split(args.split, [d.id for d in dialogs])
    wanted = set(split.test_ids) | (set(split.val_ids) if not args.thresholds else set())
    prep = Prepared([d for d in dialogs if d.id in wanted], cfg)
    heads, name = _heads_for(args, cfg, prep, sorted(wanted))
    test_events = prep.events(split.test_ids).instances
    if args.thresholds:
        raw = json.loads(_need_file(args.thresholds, "thresholds file").read_text())
    else:
        val_events = prep.events(split.val_ids).instances
        raw = {}
        for kind in _selected_heads(args, cfg):
            thr, _ = calibrate_all(val_events, {i: heads[kind][i] for i in split.val_ids}, _scoring(cfg), cfg.eval.aggregate)
            raw[kind.value] = thr.to_json()
    reports = []
    for kind in _selected_heads(args, cfg):
        thr = TaskThresholds(**raw[kind.value]) if kind.value in raw else TaskThresholds()
        test_heads = {i: heads[kind][i] for i in split.test_ids}
        reports.append(evaluate(test_events, test_heads, thr, _scoring(cfg), cfg.eval.aggregate, f"{name}/{kind.value}"))
    text = reports_to_json(reports) if args.report == "json" else format_table(reports)
    _write(args.out, text)
    return 0


def cmd_templates(args, cfg: RunConfig) -> int:
    _write(args.out, json.dumps(subset_tables(cfg.scoring.bc_template), indent=2) + "\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="INI run configuration")

    p = _Parser(prog="vapkit", description="Voice activity projection toolkit")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("synth", parents=[common], help="write a synthetic corpus")
    s.add_argument("--out", required=True)
    s.add_argument("--n-dialogs", type=int)
    s.add_argument("--seed", type=int)
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("encode", parents=[common], help="emit per-frame projection labels")
    s.add_argument("--corpus", required=True)
    s.add_argument("--out")
    s.add_argument("--independent", action="store_true", help="include independent4/independent40 bits")
    s.set_defaults(func=cmd_encode)

    s = sub.add_parser("events", parents=[common], help="extract evaluation events")
    s.add_argument("--corpus", required=True)
    s.add_argument("--out")
    s.add_argument("--split")
    s.add_argument("--subset", choices=("train", "val", "test"), default="test")
    s.set_defaults(func=cmd_events)

    s = sub.add_parser("split", parents=[common], help="write a train/val/test split")
    s.add_argument("--corpus", required=True)
    s.add_argument("--out")
    s.add_argument("--fractions", type=float, nargs=3)
    s.add_argument("--seed", type=int)
    s.set_defaults(func=cmd_split)

    s = sub.add_parser("train", parents=[common], help="train the Markov predictor")
    s.add_argument("--corpus", required=True)
    s.add_argument("--split", required=True)
    s.add_argument("--model", required=True)
    s.set_defaults(func=cmd_train)

    for name, func, help_ in (("calibrate", cmd_calibrate, "fit task thresholds on the validation split"),
                              ("evaluate", cmd_evaluate, "report weighted F1 on the test split")):
        s = sub.add_parser(name, parents=[common], help=help_)
        src = s.add_mutually_exclusive_group()
        src.add_argument("--model")
        src.add_argument("--oracle", action="store_true")
        s.add_argument("--eps", type=float)
        s.add_argument("--corpus", required=True)
        s.add_argument("--split", required=True)
        s.add_argument("--heads", help="comma-separated head kinds")
        if name == "calibrate":
            s.add_argument("--out", required=True)
        else:
            s.add_argument("--thresholds")
            s.add_argument("--report", choices=("json", "table"), default="table")
            s.add_argument("--out")
        s.set_defaults(func=func)

    s = sub.add_parser("templates", parents=[common], help="export zero-shot state subsets")
    s.add_argument("--out")
    s.set_defaults(func=cmd_templates)
    return p


def main(argv=None) -> int:
    level = os.environ.get("VAPKIT_LOG_LEVEL", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        return args.func(args, cfg)
    except (UsageError, ConfigurationError) as exc:
        print(f"vapkit: error: {exc}", file=sys.stderr)
        return 1
    except InvariantError as exc:
        print(f"vapkit: internal error: {exc}", file=sys.stderr)
        return 3
    except (VapError, json.JSONDecodeError, KeyError) as exc:
        print(f"vapkit: data error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
