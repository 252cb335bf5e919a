"""Command-line front end: ``agsoa {prepare,train,attack,bench}``.

Progress goes to stderr, results to files.  Failures exit nonzero and print
``error[<category>]: <message>`` on stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import gcn, harness
from .attack import ATTACK_KINDS, run_attack
from .graph import (GraphFormatError, degree_info, find_raw_files, load_cora_content, load_graph,
                    save_canonical, stratified_split)

EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_TARGET = 4
EXIT_RUNTIME = 5


class CliError(Exception):
    def __init__(self, category: str, message: str, code: int):
        super().__init__(message)
        self.category = category
        self.code = code


def _stats(g) -> str:
    return f"{g.n} {g.m} {g.d} {g.c}"


def cmd_prepare(args) -> int:
    if args.content:
        content, cites = args.content, args.cites
        if not cites:
            raise CliError("usage", "--content requires --cites", EXIT_USAGE)
    else:
        content, cites = find_raw_files(args.raw)
    g, report = load_cora_content(content, cites, with_report=True)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_canonical(g, out)
    print(f"{report.n_cites_rows} citation rows, {report.n_dropped} dropped", file=sys.stderr)
    print(_stats(g))
    return 0


def _with_split(g, seed: int):
    return g if g.has_split else stratified_split(g, seed)


def cmd_train(args) -> int:
    g = _with_split(load_graph(args.data), args.split_seed)
    cfg = gcn.TrainConfig(learning_rate=args.lr, epochs=args.epochs, seed=args.seed,
                          weight_decay=args.weight_decay)
    model = gcn.fit(g, kind=args.kind, hidden=args.hidden, cfg=cfg)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    gcn.save_checkpoint(model, out)
    m = model.metrics
    print(f"kind={model.kind} train_acc={m['train_acc']:.4f} val_acc={m['val_acc']:.4f} "
          f"test_acc={m['test_acc']:.4f}")
    return 0


def cmd_attack(args) -> int:
    g = _with_split(load_graph(args.data), args.split_seed)
    model = gcn.load_checkpoint(args.checkpoint)
    if not 0 <= args.target < g.n:
        raise CliError("target", f"unknown target id {args.target} (graph has {g.n} nodes)", EXIT_TARGET)
    if g.has_split and not g.test_mask[args.target]:
        print(f"warning: node {args.target} is not in the test split", file=sys.stderr)
    params = {}
    if args.attack == "agsoa":
        params = dict(mu=args.mu, k=args.k, T=args.T)
    elif args.attack == "random":
        params = dict(p=args.p)
    elif args.attack == "momentum":
        params = dict(beta=args.beta)
    res = run_attack(args.attack, model, g, args.target, alpha=args.alpha, budget=args.budget,
                     seed=args.seed, **params)
    label = int(g.labels[args.target])
    report = {
        "attack": args.attack,
        "target": args.target,
        "label": label,
        "delta": res.budget.delta,
        "alpha": args.alpha,
        "edits": [e.to_dict() for e in res.edits],
        "clean_pred": int(gcn.predict_labels(model, g)[args.target]),
        "post_pred": int(gcn.predict_labels(model, res.graph)[args.target]),
        "degree_change": degree_info(res.graph).total - degree_info(g).total,
        "params": params,
    }
    report["success"] = report["post_pred"] != label
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / f"attack_{args.attack}_{args.target}.json").write_text(
        json.dumps(report, sort_keys=True, indent=1) + "\n")
    print(f"target {args.target}: {len(res.edits)} edits, success={report['success']}", file=sys.stderr)
    return 0


def cmd_bench(args) -> int:
    flat = harness.read_config(args.config)
    for item in args.set or []:
        if "=" not in item:
            raise CliError("usage", f"--set expects key=value, got {item!r}", EXIT_USAGE)
        key, val = item.split("=", 1)
        flat[key.strip().lower()] = val.strip()
    if args.workers is not None:
        flat["experiment.workers"] = str(args.workers)
    try:
        specs = harness.specs_from_config(flat)
    except ValueError as exc:
        raise CliError("config", str(exc), EXIT_USAGE) from None
    reports = []
    for spec in specs:
        for seed in spec.seeds:
            print(f"running {spec.dataset_name} {spec.mode} {spec.attack} seed={seed}", file=sys.stderr)
            fn = harness.run_targeted if spec.mode == harness.TARGETED else harness.run_untargeted
            reports.append(fn(spec, seed))
    harness.write_report(reports, Path(args.out) / "bench")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="agsoa", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("prepare", help="convert a raw .content/.cites dataset to the canonical format")
    p.add_argument("raw", nargs="?", help="directory holding one .content and one .cites file")
    p.add_argument("--content")
    p.add_argument("--cites")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_prepare)

    p = sub.add_parser("train", help="train a GCN or SGC and save a checkpoint")
    p.add_argument("data", help="canonical dataset file or raw dataset directory")
    p.add_argument("--out", required=True)
    p.add_argument("--kind", choices=gcn.MODEL_KINDS, default=gcn.GCN)
    p.add_argument("--hidden", type=int, default=64)
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--lr", type=float, default=0.001)
    p.add_argument("--weight-decay", type=float, default=5e-4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--split-seed", type=int, default=0, help="used when the dataset has no split")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("attack", help="attack one target node")
    p.add_argument("data")
    p.add_argument("checkpoint")
    p.add_argument("--target", type=int, required=True)
    p.add_argument("--attack", choices=ATTACK_KINDS, default="agsoa")
    p.add_argument("--alpha", type=float, default=0.2)
    p.add_argument("--budget", type=int, help="override ceil(alpha * degree)")
    p.add_argument("--mu", type=float, default=0.6)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--T", type=int)
    p.add_argument("--p", type=float, default=1.0)
    p.add_argument("--beta", type=float, default=0.9)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--split-seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_attack)

    p = sub.add_parser("bench", help="run an experiment sweep from a config file")
    p.add_argument("config")
    p.add_argument("--out", required=True)
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config entry")
    p.add_argument("--workers", type=int)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    if args.command == "prepare" and not (args.raw or args.content):
        parser.error("prepare needs a raw directory or --content/--cites")
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error[{exc.category}]: {exc}", file=sys.stderr)
        return exc.code
    except (GraphFormatError, FileNotFoundError) as exc:
        print(f"error[data]: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (ValueError, IndexError) as exc:
        print(f"error[invalid]: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:
        print(f"error[runtime]: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
