"""``flo-mitigate <scatter|vqe|heatmap|flo-check> --config PATH``."""

from __future__ import annotations

import argparse
import json
import sys

from .config import EXPERIMENTS, ExperimentConfig, default_config
from .experiments import run_experiment


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="flo-mitigate", description=__doc__)
    parser.add_argument("experiment", choices=EXPERIMENTS)
    parser.add_argument("--config", help="YAML file; per-experiment defaults when omitted")
    parser.add_argument("--seed", type=int, help="override the master seed")
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--paper-scale", action="store_true",
                        help="use the point, iteration and repeat counts of the published runs")
    parser.add_argument("--no-plots", action="store_true")
    return parser


def resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    if args.config:
        cfg = ExperimentConfig.load(args.config, args.experiment)
    else:
        cfg = default_config(args.experiment)
    if args.paper_scale:
        cfg = cfg.paper_scale()
    return cfg.with_overrides(seed=args.seed, out=args.out, plots=False if args.no_plots else None)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
    except (OSError, ValueError) as exc:
        print(f"flo-mitigate: {exc}", file=sys.stderr)
        return 2
    result = run_experiment(cfg)
    for path in result.files:
        print(f"wrote {path}")
    print(json.dumps(result.summary, indent=2, sort_keys=True, default=float))
    return 0 if result.ok else 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
