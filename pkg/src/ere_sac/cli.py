"""Command line entry point: ``train``, ``sweep``, ``report`` and ``analyze``."""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import fields
from pathlib import Path

from .ere import EreConfig
from .harness import TrainConfig, analyze, format_report, report, sweep, train, write_report_csv


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key=value file; explicit flags override it")
    for f in fields(TrainConfig):
        flag = "--" + f.name.replace("_", "-")
        if isinstance(f.default, bool):
            p.add_argument(flag, dest=f.name, default=None, type=str, metavar="{true,false}")
        else:
            p.add_argument(flag, dest=f.name, default=None, type=str)


def _config_from_args(args) -> TrainConfig:
    overrides = {f.name: getattr(args, f.name) for f in fields(TrainConfig)}
    overrides = {k: v for k, v in overrides.items() if v is not None}
    text = Path(args.config).read_text() if args.config else ""
    return TrainConfig.from_text(text, **overrides)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ere-sac")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="run one training job")
    _add_config_flags(p)

    p = sub.add_parser("sweep", help="run one job per seed")
    _add_config_flags(p)
    p.add_argument("--seeds", required=True, help="comma-separated seeds")
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("report", help="aggregate run directories")
    p.add_argument("runs", nargs="+")
    p.add_argument("--target", type=float)
    p.add_argument("--max-timestep", type=int)
    p.add_argument("--csv", help="also write the table as CSV here")

    p = sub.add_parser("analyze", help="sampling-range schedule and expected counts")
    p.add_argument("--capacity", type=int, default=1_000_000)
    p.add_argument("--fill", type=int, help="defaults to capacity")
    p.add_argument("--eta", type=float, nargs="+", default=[0.996])
    p.add_argument("--c-min", type=int, nargs="+", default=[5000])
    p.add_argument("--exponent-scale", type=int, default=1000)
    p.add_argument("--updates", type=int, default=1000, help="mini-batches per phase (K)")
    p.add_argument("--batch", type=int, default=256)
    p.add_argument("--uniform-first-update", action="store_true")
    p.add_argument("--out", default="analysis")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "train":
            print(train(_config_from_args(args)))
        elif args.command == "sweep":
            seeds = [int(s) for s in args.seeds.split(",") if s.strip()]
            results = sweep(_config_from_args(args), seeds, workers=args.workers)
            failed = 0
            for seed, res in results.items():
                if isinstance(res, Exception):
                    failed += 1
                    print(f"seed={seed} status=failed error={type(res).__name__}: {res}")
                else:
                    print(f"seed={seed} status=ok dir={res}")
            if failed:
                raise RuntimeError(f"{failed} of {len(seeds)} seeds failed")
        elif args.command == "report":
            rows = report(args.runs, target=args.target, max_timestep=args.max_timestep)
            if args.csv:
                write_report_csv(rows, args.csv)
            sys.stdout.write(format_report(rows))
        elif args.command == "analyze":
            fill = args.fill or args.capacity
            grid = [(e, c) for e in args.eta for c in args.c_min]
            for eta, c_min in grid:
                cfg = EreConfig(args.capacity, eta, 1.0, c_min, args.exponent_scale, args.uniform_first_update)
                out = Path(args.out)
                if len(grid) > 1:
                    out = out / f"eta={eta}_cmin={c_min}"
                for path in analyze(cfg, eta, args.updates, args.batch, fill, out):
                    print(path)
    except Exception as exc:  # one parsable line, nonzero exit
        msg = str(exc).replace("\n", " ")
        print(f"error: {type(exc).__name__}: {msg}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
