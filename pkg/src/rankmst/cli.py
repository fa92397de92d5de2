"""Command-line interface.

``rankmst run`` executes the whole pipeline; the per-stage subcommands
(clean, correlate, mst, stability, centrality, gaussianity, portfolio,
bootstrap, report) re-run one stage against the artifacts already in the
output directory.  Options come from a JSON config file plus flag overrides;
flags win.
"""

from __future__ import annotations

import argparse
import logging
import sys
from typing import Sequence

from . import pipeline
from .config import RunConfig, build_config, load_config, validate
from .errors import ConfigError, CsvFormatError, DataError, RankMstError

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_INPUT = 2

STAGE_NAMES = [name for name, _ in pipeline.STAGES]


def _add_common_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON config file")
    parser.add_argument("--prices", help="price CSV (date,<ticker>,...)")
    parser.add_argument("--sectors", help="sector CSV (ticker,sector)")
    parser.add_argument("--out", help="output directory")
    parser.add_argument(
        "--methods",
        help="comma-separated coefficients: pearson,spearman,kendall",
    )
    parser.add_argument("--window", type=int, help="window length in days (default 504)")
    parser.add_argument("--step", type=int, help="window step in days (default 30)")
    parser.add_argument(
        "--max-missing-frac",
        dest="max_missing_frac",
        type=float,
        help="drop assets missing more than this fraction (default 0.10)",
    )
    parser.add_argument("--alpha", type=float, help="shrinkage intensity (default 0.9)")
    parser.add_argument(
        "--shrink-target",
        dest="shrink_target",
        choices=["scaled_identity", "trace_identity"],
        help="identity target scaling for shrinkage",
    )
    parser.add_argument("--seed", type=int, help="master seed (default 0)")
    parser.add_argument(
        "--threads", type=int, help="worker threads; 0 means all cores (default)"
    )
    parser.add_argument(
        "--quantile-normalize",
        dest="quantile_normalize",
        action="store_const",
        const=True,
        default=None,
        help="also re-run the MST comparison on quantile-normalized returns",
    )
    parser.add_argument(
        "--quantiles", type=int, help="quantile grid size for normalization (default 200)"
    )
    parser.add_argument(
        "--bootstrap",
        action="store_const",
        const=True,
        default=None,
        help="enable the bootstrap stage during 'run'",
    )
    parser.add_argument(
        "--bootstrap-replicates",
        dest="bootstrap_replicates",
        type=int,
        help="number of bootstrap replicates (default 1000)",
    )
    parser.add_argument(
        "--block-length",
        dest="block_length",
        type=int,
        help="bootstrap block length in days (default 20)",
    )
    parser.add_argument(
        "--bootstrap-source-length",
        dest="bootstrap_source_length",
        type=int,
        help="days of data fed to the bootstrap (default 1008)",
    )
    parser.add_argument(
        "--bootstrap-output-length",
        dest="bootstrap_output_length",
        type=int,
        help="length of each bootstrap replicate (default 504)",
    )
    parser.add_argument(
        "--pair-budget",
        dest="pair_budget",
        type=int,
        help="max replicate pairs compared (default 50000)",
    )
    parser.add_argument("--label", help="dataset label used in report rows")


_OVERRIDE_KEYS = (
    "prices",
    "sectors",
    "out",
    "methods",
    "window",
    "step",
    "max_missing_frac",
    "alpha",
    "shrink_target",
    "seed",
    "threads",
    "quantile_normalize",
    "quantiles",
    "bootstrap",
    "bootstrap_replicates",
    "block_length",
    "bootstrap_source_length",
    "bootstrap_output_length",
    "pair_budget",
    "label",
)


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    overrides = {k: getattr(args, k) for k in _OVERRIDE_KEYS if getattr(args, k, None) is not None}
    if args.config:
        return load_config(args.config, overrides)
    return build_config({}, overrides)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rankmst",
        description="Correlation-network MST analysis of financial returns",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ["run", "validate", *STAGE_NAMES]:
        stage_parser = sub.add_parser(name, help=f"{name} stage" if name in STAGE_NAMES else name)
        _add_common_options(stage_parser)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        config = _config_from_args(args)
    except (ConfigError, FileNotFoundError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT

    if args.command == "validate":
        problems = validate(config)
        for problem in problems:
            print(problem)
        return EXIT_OK if not problems else EXIT_INPUT

    try:
        if args.command == "run":
            ws = pipeline.run(config)
        else:
            ws = pipeline.run_stage(config, args.command)
    except ConfigError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (CsvFormatError, FileNotFoundError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (DataError, RankMstError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    print(f"wrote {len(ws.files)} files to {ws.root}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
