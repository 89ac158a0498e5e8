"""Command-line entry point: ``otlab <experiment> --config <path>``.

Exit codes: 0 on success, 2 on configuration errors, 3 when a solver
diverges in a non-sweep run (sweep cells record divergence per-cell and the
run continues).
"""

from __future__ import annotations

import argparse
import sys

from .config import EXPERIMENTS, load_config
from .exceptions import ConfigError, DivergenceError
from .experiments import run_experiment


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="otlab",
        description="Reproducible optimal-transport map experiments with exact oracles.",
    )
    sub = parser.add_subparsers(dest="experiment", required=True, metavar="experiment")
    for name in EXPERIMENTS:
        p = sub.add_parser(name, help=f"run the {name} experiment")
        p.add_argument("--config", required=True, help="TOML config file")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--out", default=None, help="override the output directory")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, experiment=args.experiment, seed=args.seed, out_dir=args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        report = run_experiment(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except DivergenceError as exc:
        print(f"solver diverged: {exc}", file=sys.stderr)
        return 3
    print(f"{cfg.experiment}: wrote report.json and {len(report.tables)} table(s) to {cfg.out_dir}")
    for m in report.metrics:
        print(f"  {m.name} = {m.value:.6g}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
