"""Command-line driver: ``generate``, ``fit``, ``predict`` and ``cv``.

Exit codes: 0 success, 1 usage error, 2 data or model error. Every flag may
also be given in a JSON file passed with ``--config`` (keys are the flag names
with dashes turned into underscores); flags on the command line win. Set
``RSFOREST_LOG`` to a logging level name for progress messages.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from dataclasses import asdict
from pathlib import Path

from .data import DatasetError, load_manifest, write_manifest
from .evaluation import render_report, repeated_cv
from .forest import Hyperparams, ModelFormatError, fit, load_model, predict_proba, save_model
from .synth import MODES, SynthConfig, bag_of_items, generate, item_names
from .tree import StoppingRule

DEFAULT_SEED = 0

log = logging.getLogger("rsforest")

# flag -> default used when neither the command line nor the config sets it
_DEFAULTS = {
    "seed": DEFAULT_SEED,
    "workers": 1,
    "max_trees": 100,
    "max_features": 0.5,
    "max_pairs": 1,
    "max_depth": None,
    "min_samples_split": 2,
    "min_samples_leaf": 1,
    "reps": 10,
    "folds": 2,
    "n_examples": 400,
    "vocab_size": 50,
    "mean_length": 20,
    "mean_set_size": 20,
    "bag_of_items": False,
}
_REQUIRED = {
    "generate": ("mode", "out"),
    "fit": ("data", "out"),
    "predict": ("model", "data", "out"),
    "cv": ("data",),
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _max_features(text: str):
    value = float(text)
    return int(value) if value >= 1 and "." not in text else value


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="rsforest", description="Random Similarity Forests")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    def common(p):
        p.add_argument("--config", help="JSON file with default flag values")
        p.add_argument("--seed", type=int)

    def hyper(p):
        p.add_argument("--max-trees", type=int)
        p.add_argument("--max-features", type=_max_features, help="fraction of p (float) or count (int)")
        p.add_argument("--max-pairs", type=int)
        p.add_argument("--max-depth", type=int)
        p.add_argument("--min-samples-split", type=int)
        p.add_argument("--min-samples-leaf", type=int)
        p.add_argument("--workers", type=int)

    g = sub.add_parser("generate", help="write a synthetic sequences-of-sets dataset")
    common(g)
    g.add_argument("--mode", choices=MODES)
    g.add_argument("--out", help="output directory")
    g.add_argument("--n-examples", type=int)
    g.add_argument("--vocab-size", type=int)
    g.add_argument("--mean-length", type=int)
    g.add_argument("--mean-set-size", type=int)
    g.add_argument("--bag-of-items", action="store_true", default=None, help="write item counts instead")

    f = sub.add_parser("fit", help="train a forest")
    common(f)
    hyper(f)
    f.add_argument("--data", help="dataset manifest")
    f.add_argument("--out", help="model file")

    p = sub.add_parser("predict", help="score a dataset with a trained forest")
    common(p)
    p.add_argument("--model")
    p.add_argument("--data")
    p.add_argument("--out", help="prediction CSV")

    c = sub.add_parser("cv", help="repeated stratified cross-validation")
    common(c)
    hyper(c)
    c.add_argument("--data")
    c.add_argument("--reps", type=int)
    c.add_argument("--folds", type=int)
    c.add_argument("--out", help="report JSON")
    return parser


def _resolve(args) -> dict:
    config = {}
    if args.config:
        try:
            config = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(config, dict):
            raise UsageError("config file must hold a JSON object")
    opts = {}
    for key, value in vars(args).items():
        if key in ("config", "command"):
            continue
        opts[key] = value if value is not None else config.get(key, _DEFAULTS.get(key))
    missing = [k for k in _REQUIRED[args.command] if opts.get(k) is None]
    if missing:
        raise UsageError(f"{args.command}: missing --{', --'.join(m.replace('_', '-') for m in missing)}")
    return opts


def _hyperparams(o) -> Hyperparams:
    try:
        stopping = StoppingRule(o["max_depth"], o["min_samples_split"], o["min_samples_leaf"])
        return Hyperparams(o["max_trees"], o["max_features"], o["max_pairs"], stopping, o["seed"])
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from None


def _cmd_generate(o):
    try:
        cfg = SynthConfig(
            mode=o["mode"], n_examples=o["n_examples"], vocab_size=o["vocab_size"],
            mean_length=o["mean_length"], mean_set_size=o["mean_set_size"], seed=o["seed"],
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    ds = generate(cfg)
    if o["bag_of_items"]:
        ds = bag_of_items(ds, vocabulary=item_names(cfg.vocab_size))
    meta = {"generator": asdict(cfg), "bag_of_items": bool(o["bag_of_items"])}
    path = write_manifest(ds, o["out"], metadata=meta)
    log.info("wrote %s (%d examples)", path, ds.n)


def _cmd_fit(o):
    hp = _hyperparams(o)
    ds = load_manifest(o["data"])
    model = fit(ds, hp, workers=o["workers"])
    save_model(model, o["out"])
    log.info("trained %d trees on %s", hp.max_trees, o["data"])


def _cmd_predict(o):
    model = load_model(o["model"])
    ds = load_manifest(o["data"])
    try:
        proba = predict_proba(model, ds)
    except ValueError as exc:
        raise DatasetError(str(exc)) from None
    with open(o["out"], "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["example_index", "p_negative", "p_positive", "predicted"])
        for i, (p0, p1) in enumerate(proba):
            w.writerow([i, repr(float(p0)), repr(float(p1)), model.classes[1] if p1 > p0 else model.classes[0]])


def _cmd_cv(o):
    hp = _hyperparams(o)
    ds = load_manifest(o["data"])
    try:
        report = repeated_cv(ds, hp, o["reps"], o["folds"], o["seed"], workers=o["workers"])
    except ValueError as exc:
        raise DatasetError(str(exc)) from None
    if o.get("out"):
        Path(o["out"]).write_text(report.to_json() + "\n")
    sys.stdout.write(render_report(report))


_COMMANDS = {"generate": _cmd_generate, "fit": _cmd_fit, "predict": _cmd_predict, "cv": _cmd_cv}


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("RSFOREST_LOG", "WARNING").upper(), format="%(name)s: %(message)s")
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("a command is required: generate, fit, predict or cv")
        opts = _resolve(args)
        _COMMANDS[args.command](opts)
    except UsageError as exc:
        print(f"rsforest: usage error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return 1
    except (DatasetError, ModelFormatError, OSError) as exc:
        print(f"rsforest: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
