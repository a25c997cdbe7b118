"""Command line entry point.

Subcommands: run, compare, meta, estimate; each takes a YAML config plus
optional --seed/--out/--stride overrides.  The log level comes from the
MARLP_LOG_LEVEL environment variable (default INFO; --quiet drops to
ERROR).
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

from .config import load_config
from .errors import (ConfigError, DegenerateStateError, NonUnichainError,
                     NumericalError, ParameterError, SolverError)
from .harness import compare_mode, estimate_mode, meta_mode, run_mode

_MODES = {
    "run": run_mode,
    "compare": compare_mode,
    "meta": meta_mode,
    "estimate": estimate_mode,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="marlp",
        description="Average-reward multi-agent primal-dual simulator")
    sub = parser.add_subparsers(dest="mode", required=True)
    for mode, help_text in (
            ("run", "execute the configured algorithm"),
            ("compare", "run the decentralized/centralized/independent trio plus the LP"),
            ("meta", "best-of-K trial selection"),
            ("estimate", "report mixing-time and stationarity constants")):
        p = sub.add_parser(mode, help=help_text)
        p.add_argument("config", help="YAML config file")
        p.add_argument("--seed", type=int, default=None, help="override config seed")
        p.add_argument("--out", default=None, help="override output directory")
        p.add_argument("--stride", type=int, default=None,
                       help="override diagnostics stride")
        p.add_argument("--quiet", action="store_true", help="errors only")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level_name = os.environ.get("MARLP_LOG_LEVEL", "INFO").upper()
    level = getattr(logging, level_name, logging.INFO)
    if args.quiet:
        level = logging.ERROR
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")

    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError("--seed: must be >= 0")
            cfg.seed = args.seed
        if args.out is not None:
            cfg.output.directory = args.out
        if args.stride is not None:
            if args.stride < 1:
                raise ConfigError("--stride: must be >= 1")
            cfg.output.stride = args.stride
        _MODES[args.mode](cfg)
    except (ConfigError, ParameterError, SolverError, NumericalError,
            NonUnichainError, DegenerateStateError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
