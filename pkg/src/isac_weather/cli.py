"""``isac-weather`` command line.

    isac-weather [--config C] [--seed S] [--out DIR] simulate
    isac-weather ... preprocess --data DIR [--weather CSV]
    isac-weather ... train --features DIR [--task classification|regression] [--epochs E]
    isac-weather ... eval --checkpoint DIR --features DIR
    isac-weather ... report --data DIR --sample-id ID [--features DIR]

Errors exit non-zero after printing one line to stderr::

    error code=<ExceptionType> message=<json string>
"""

import argparse
import json
import logging
import sys

from . import pipeline
from ._accel import backend
from .config import load_config


def _global_flags(parser, suppress):
    d = argparse.SUPPRESS if suppress else None
    parser.add_argument("--config", default=d if suppress else None, help="JSON config file")
    parser.add_argument("--seed", type=int, default=d if suppress else 0, help="global seed (u64)")
    parser.add_argument("--out", default=d if suppress else None, help="output directory")
    parser.add_argument("-v", "--verbose", action="store_true", default=d if suppress else False)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="isac-weather", description=__doc__.split("\n")[0])
    _global_flags(p, suppress=False)
    sub = p.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    _global_flags(common, suppress=True)

    s = sub.add_parser("simulate", parents=[common], help="simulate a labelled campaign")
    s.add_argument("--per-stratum", type=int, help="samples per rain stratum (default preset)")
    s.add_argument("--scale", type=float, help="use the large 9786/9780 campaign times SCALE")

    s = sub.add_parser("preprocess", parents=[common], help="frames -> feature tensors")
    s.add_argument("--data", required=True)
    s.add_argument("--weather", help="weather-station CSV (default: <data>/weather.csv if present)")

    s = sub.add_parser("train", parents=[common], help="train the CNN")
    s.add_argument("--features", required=True)
    s.add_argument("--task", choices=("classification", "regression"), default="classification")
    s.add_argument("--epochs", type=int)
    s.add_argument("--lr", type=float)

    s = sub.add_parser("eval", parents=[common], help="evaluate a checkpoint on its test split")
    s.add_argument("--checkpoint", required=True)
    s.add_argument("--features", required=True)

    s = sub.add_parser("report", parents=[common], help="periodogram heatmap of one sample")
    s.add_argument("--data", required=True)
    s.add_argument("--sample-id", type=int, required=True)
    s.add_argument("--features", help="preprocess output; enables clutter removal and its crop")
    return p


def _need_out(args):
    if not args.out:
        raise ValueError("--out is required for this command")
    return args.out


def run(args) -> dict:
    overrides = {}
    if args.command == "simulate":
        if args.scale is not None:
            overrides["campaign"] = {"preset": "large", "scale": args.scale}
        elif args.per_stratum is not None:
            overrides["campaign"] = {"preset": "default", "per_stratum": args.per_stratum}
    if args.command == "train" and args.lr is not None:
        overrides["train"] = {"lr": args.lr}
    cfg = load_config(args.config, overrides)
    out = _need_out(args)

    if args.command == "simulate":
        m = pipeline.cmd_simulate(cfg, out, args.seed)
        return {"samples": len(m), "out": out}
    if args.command == "preprocess":
        prov = pipeline.cmd_preprocess(cfg, args.data, out, args.weather)
        return {"features": prov["n_features"], "excluded": len(prov["excluded"]), "out": out}
    if args.command == "train":

        def progress(ep, n, loss):
            logging.info("epoch %d/%d loss %.4f", ep, n, loss)

        ck = pipeline.cmd_train(cfg, args.features, out, args.task, args.seed, args.epochs, progress)
        return {"task": ck.task, "epochs": ck.extra["epochs"], "out": out, "backend": backend()}
    if args.command == "eval":
        rep = pipeline.cmd_eval(args.checkpoint, args.features, out)
        return rep.summary()
    if args.command == "report":
        return pipeline.cmd_report_periodogram(cfg, args.data, args.sample_id, out, args.features)
    raise ValueError(f"unknown command {args.command}")  # pragma: no cover


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        result = run(args)
    except Exception as exc:  # noqa: BLE001 - every failure becomes one parsable line
        print(f"error code={type(exc).__name__} message={json.dumps(str(exc))}", file=sys.stderr)
        return 1
    print(json.dumps(result, sort_keys=True))
    return 0


if __name__ == "__main__":
    sys.exit(main())
