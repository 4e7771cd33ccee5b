"""Command line entry point: ``fae train | predict | evaluate | experiment``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 degenerate metric.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from fae import baselines, pipeline
from fae.dataset import encode_frame, load_table, read_frame, resolve_schema, standardize
from fae.errors import DataError, UndefinedMetricError
from fae.harness import METHODS, ExperimentConfig, run_experiment
from fae.metrics import balanced_accuracy, confusion, eqop

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_METRIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _common(p, model_required=False):
    p.add_argument("--dataset", nargs="+", metavar="FILE", help="data file(s), concatenated in order")
    p.add_argument("--schema", help="schema file, or a built-in name (adult, bank)")
    p.add_argument("--model", required=model_required, help="model file (JSON)")
    p.add_argument("--out", help="output path")


def _training(p):
    p.add_argument("--method", choices=METHODS, default="fae")
    p.add_argument("--epsilon", type=float, default=0.0)
    p.add_argument("--rounds", type=int, default=25)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--include-sa", action=argparse.BooleanOptionalAction, default=True,
                   help="use the sensitive attribute as a feature (default: yes)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fae", description="Fairness-aware ensemble classification")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("train", help="train a model on a whole data file")
    _common(p)
    _training(p)

    p = sub.add_parser("predict", help="label rows with a saved model")
    _common(p, model_required=True)

    p = sub.add_parser("evaluate", help="balanced accuracy and EQOP of a saved model")
    _common(p, model_required=True)

    p = sub.add_parser("experiment", help="repeated random-split comparison of methods")
    _common(p)
    p.add_argument("--config", help="experiment config (YAML)")
    p.add_argument("--method", choices=METHODS, action="append", help="restrict to method(s); repeatable")
    p.add_argument("--epsilon", type=float)
    p.add_argument("--rounds", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--splits", type=int, help="number of random splits (indices 0..N-1)")
    p.add_argument("--jobs", type=int, help="worker processes for splits")
    p.add_argument("--include-sa", action=argparse.BooleanOptionalAction, default=None)
    return parser


def cmd_train(args) -> int:
    if not args.dataset or not args.schema:
        raise UsageError("train needs --dataset and --schema")
    out = args.model or args.out
    if not out:
        raise UsageError("train needs --model (or --out) for the model file")
    schema = resolve_schema(args.schema)
    ds = standardize(load_table(args.dataset, schema, include_sa=args.include_sa))
    cfg = pipeline.FaeConfig(epsilon=args.epsilon, rounds=args.rounds, seed=args.seed, include_sa=args.include_sa)
    m = args.method
    if m == "fae":
        model = pipeline.train(ds, cfg)
    elif m == "ob":
        model = baselines.ob(ds, cfg)
    elif m == "adaboost":
        model = baselines.plain_adaboost(ds, args.rounds)
    elif m == "smt":
        model = baselines.smt(ds, args.rounds, args.epsilon)
    elif m == "sdb":
        model = baselines.sdb(ds, args.rounds, args.epsilon)
    else:
        model = baselines.easy_ensemble(ds, rounds=args.rounds, seed=args.seed)
    model.schema = schema
    model.save(out)
    print(f"{model.method}: {len(model.models)} AdaBoost models, u={model.u}, thresholds={model.pair.to_dict()}")
    print(f"model written to {out}")
    return EXIT_OK


def _load_rows(args, require_label):
    model = pipeline.EnsembleModel.load(args.model)
    schema = resolve_schema(args.schema) if args.schema else model.schema
    if schema is None or model.encoder is None:
        raise UsageError("model has no embedded schema/encoder; pass --schema")
    if not args.dataset:
        raise UsageError("--dataset is required")
    df = read_frame(args.dataset, schema, require_label=require_label)
    X, protected, y = encode_frame(df, schema, model.encoder)
    return model, schema, X, protected, y


def cmd_predict(args) -> int:
    model, schema, X, protected, _ = _load_rows(args, require_label=False)
    pred = model.predict(X, protected)
    scores = model.scores(X)
    neg = next((v for v in (schema.column(schema.label).values or ()) if schema.label_map.get(v, v) != schema.positive_label), "negative")
    lines = ["prediction,score"] + [
        f"{schema.positive_label if p == 1 else neg},{s!r}" for p, s in zip(pred, scores)
    ]
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text)
        print(f"{len(pred)} predictions written to {args.out}")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_evaluate(args) -> int:
    model, _, X, protected, y = _load_rows(args, require_label=True)
    c = confusion(y, model.predict(X, protected), protected)
    result = {"b_acc": balanced_accuracy(c), "eqop": eqop(c), "confusion": c.as_dict()}
    print(f"B.ACC {100 * result['b_acc']:.2f}%  EQOP {100 * result['eqop']:+.2f} pp")
    if args.out:
        Path(args.out).write_text(json.dumps(result, indent=1) + "\n")
    return EXIT_OK


def cmd_experiment(args) -> int:
    if args.config:
        cfg = ExperimentConfig.from_file(args.config)
    elif args.dataset and args.schema:
        name = Path(args.schema).stem
        cfg = ExperimentConfig(datasets={name: {"files": list(args.dataset), "schema": args.schema}})
    else:
        raise UsageError("experiment needs --config, or --dataset with --schema")
    overrides = {
        "methods": tuple(args.method) if args.method else None,
        "epsilon": args.epsilon,
        "rounds": args.rounds,
        "seed": args.seed,
        "splits": tuple(range(args.splits)) if args.splits is not None else None,
        "jobs": args.jobs,
        "include_sa": args.include_sa,
    }
    for key, val in overrides.items():
        if val is not None:
            setattr(cfg, key, val)
    report = run_experiment(cfg)
    sys.stdout.write(report.to_text())
    if args.out:
        for p in report.write(args.out):
            print(f"wrote {p}")
    if any("undefined" in r["error"] for r in report.rows):
        return EXIT_METRIC
    return EXIT_OK


COMMANDS = {"train": cmd_train, "predict": cmd_predict, "evaluate": cmd_evaluate, "experiment": cmd_experiment}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"fae: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except UndefinedMetricError as exc:
        print(f"fae: degenerate metric: {exc}", file=sys.stderr)
        return EXIT_METRIC
    except DataError as exc:
        print(f"fae: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"fae: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
