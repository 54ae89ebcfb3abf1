"""Command-line entry point.

    geomphase list
    geomphase run <experiment> --config FILE [--out DIR] [--set key=value ...] [--jobs N] [--png]
    geomphase oracle-check --config FILE [--out DIR] [--set key=value ...]

Exit status: 0 success, 1 configuration/validation error, 2 numeric or
oracle failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .config import format_config, parse_entry, read_config
from .core import GeomPhaseError, NumericError
from .experiments import EXPERIMENTS, ExperimentSpec, default_out_dir, describe, run_experiment
from .oracle import OracleError

log = logging.getLogger("geomphase")

EXIT_OK, EXIT_INVALID, EXIT_NUMERIC = 0, 1, 2


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="geomphase", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("list", help="print experiments and their default grids")

    def common(p):
        p.add_argument("--config", required=True, type=Path, help="key = value configuration file")
        p.add_argument("--out", type=Path, default=None, help="output directory (default $GEOMPHASE_OUT or ./out)")
        p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE")
        p.add_argument("--jobs", type=int, default=1, help="worker processes for sweep points")
        p.add_argument("--png", action="store_true", help="also render a PNG with matplotlib")

    run = sub.add_parser("run", help="run one experiment")
    run.add_argument("experiment")
    common(run)
    common(sub.add_parser("oracle-check", help="compare the Fock oracle with the coherent solver"))
    return parser


def _list() -> int:
    for name, description, config in describe():
        print(f"{name:13s} {description}")
        for line in format_config(config).splitlines():
            print(f"    {line}")
    return EXIT_OK


def _run(name: str, args) -> int:
    config = read_config(args.config)
    for entry in args.overrides:
        key, value = parse_entry(entry)
        config[key] = value
    if args.jobs < 1:
        raise GeomPhaseError("--jobs must be >= 1")
    spec = ExperimentSpec(name, config, args.out or default_out_dir(), args.jobs, args.png)
    output = run_experiment(spec)
    for kind, path in output.files.items():
        print(f"{kind}: {path}")
    if name == "oracle-check":
        results = output.table.metadata["results"]
        print(json.dumps(results["reports"], indent=2, sort_keys=True))
        if not results["passed"]:
            print("oracle-check: residuals exceed tolerances", file=sys.stderr)
            return EXIT_NUMERIC
    return EXIT_OK


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        if args.command == "list":
            return _list()
        name = args.experiment if args.command == "run" else "oracle-check"
        return _run(name, args)
    except (NumericError, OracleError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except GeomPhaseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
