"""Operator entry points: synth, train, evaluate, predict, serve.

Every subcommand runs fully offline with the bundled stub backends; all
randomness flows from the --seed flags.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .domain import DEFAULT_K, DEFAULT_SCHEMA
from .evaluation import DEFAULT_MASK_RATE, run_ablation
from .gbdt import TrainParams, save_model, train
from .ingest import load_corpus, model_path, save_corpus
from .synth import SYNTH_DEFAULT_SIZE, synth_corpus


def _cmd_synth(args) -> int:
    datasets = synth_corpus(args.seed, args.size, args.spatial_correlation)
    save_corpus(datasets, args.out)
    for ptype in sorted(datasets, key=lambda t: t.value):
        print(f"{ptype.value}: {len(datasets[ptype])} records "
              f"-> {Path(args.out) / 'datasets'}")
    return 0


def _train_params(args) -> TrainParams:
    return TrainParams(num_trees=args.num_trees, max_leaves=args.max_leaves,
                       min_samples_leaf=args.min_samples_leaf,
                       learning_rate=args.learning_rate,
                       feature_histogram_bins=args.bins, seed=args.seed,
                       target_transform=args.target_transform)


def _cmd_train(args) -> int:
    datasets = load_corpus(args.data, DEFAULT_SCHEMA)
    if not datasets:
        print(f"error: no datasets under {args.data}", file=sys.stderr)
        return 1
    params = _train_params(args)
    for ptype in sorted(datasets, key=lambda t: t.value):
        model = train(datasets[ptype], params)
        path = model_path(args.data, ptype)
        save_model(model, path)
        final = model.train_loss[-1] if model.train_loss else 0.0
        print(f"{ptype.value}: {len(model.trees)} trees, "
              f"final train loss {final:.6f} -> {path}")
    return 0


def _cmd_evaluate(args) -> int:
    datasets = load_corpus(args.data, DEFAULT_SCHEMA)
    if not datasets:
        print(f"error: no datasets under {args.data}", file=sys.stderr)
        return 1
    seeds = [int(s) for s in args.seeds.split(",") if s != ""]
    result = run_ablation(datasets, _train_params(args), k=args.k,
                          mask_rate=args.mask_rate, seeds=seeds)
    print(result.to_table())
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(result.to_csv())
        print(f"report written to {args.out}")
    return 0


def _cmd_predict(args) -> int:
    from .service import (ServiceConfig, handle_valuation, load_snapshot,
                          parse_valuation_request)

    snapshot = load_snapshot(args.data, default_k=args.k)
    payload = json.loads(Path(args.property).read_text())
    if "features" not in payload:
        print("error: property file needs a 'features' object", file=sys.stderr)
        return 1
    request_payload = {
        "property_type": payload["property_type"],
        "address": payload.get("address", ""),
        "features": payload["features"],
        "configuration": payload.get("configuration"),
        "want_explanation": True,
        "want_llm": False,
    }
    if args.config:
        request_payload["configuration"] = json.loads(Path(args.config).read_text())
    request = parse_valuation_request(snapshot.schema, request_payload, args.k)
    geocoder = ServiceConfig().build_geocoder()
    report = handle_valuation(snapshot, request, geocoder)
    json.dump(report.to_json(), sys.stdout, indent=2)
    print()
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import ServiceConfig, create_app

    config = ServiceConfig.from_file(args.config) if args.config else ServiceConfig()
    if args.data:
        config.data_dir = Path(args.data)
    if args.host:
        config.host = args.host
    if args.port:
        config.port = args.port
    app = create_app(config)
    uvicorn.run(app, host=config.host, port=config.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="propval",
        description="Explainable property valuation with neighbor-based imputation")
    sub = parser.add_subparsers(dest="command", metavar="command")

    p = sub.add_parser("synth", help="generate a synthetic corpus")
    p.add_argument("--out", default="data", help="data directory (default: data)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--size", type=int, default=SYNTH_DEFAULT_SIZE,
                   help="records per property type")
    p.add_argument("--spatial-correlation", type=float, default=0.8)
    p.set_defaults(func=_cmd_synth)

    def add_train_flags(p):
        p.add_argument("--num-trees", type=int, default=200)
        p.add_argument("--max-leaves", type=int, default=31)
        p.add_argument("--min-samples-leaf", type=int, default=20)
        p.add_argument("--learning-rate", type=float, default=0.05)
        p.add_argument("--bins", type=int, default=64)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--target-transform", choices=("log", "identity"), default="log")

    p = sub.add_parser("train", help="train one model per property type")
    p.add_argument("--data", default="data")
    add_train_flags(p)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("evaluate", help="run the imputation ablation")
    p.add_argument("--data", default="data")
    p.add_argument("--out", default=None, help="write the CSV report here")
    p.add_argument("--mask-rate", type=float, default=DEFAULT_MASK_RATE)
    p.add_argument("--k", type=int, default=DEFAULT_K)
    p.add_argument("--seeds", default="0,1,2,3,4", help="comma-separated seed list")
    add_train_flags(p)
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("predict", help="value a single property JSON file")
    p.add_argument("--data", default="data")
    p.add_argument("--property", required=True, help="property JSON file")
    p.add_argument("--config", default=None, help="configuration JSON file")
    p.add_argument("--k", type=int, default=DEFAULT_K)
    p.set_defaults(func=_cmd_predict)

    p = sub.add_parser("serve", help="start the HTTP service")
    p.add_argument("--data", default=None)
    p.add_argument("--config", default=None, help="service config JSON file")
    p.add_argument("--host", default=None)
    p.add_argument("--port", type=int, default=None)
    p.set_defaults(func=_cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    if not getattr(args, "func", None):
        parser.print_usage()
        return 2
    try:
        return args.func(args)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
