"""Command Line Interface for the sine-Gordon lab.

Usage:
    sine-gordon-lab run --config exp.json [options] [--set OVERRIDES...]
    sine-gordon-lab inspect dump.sgsq [--csv out.csv]

Options for ``run``:
    --config        Path to the JSON experiment configuration
    --subcommand    Experiment to run (overrides the config's ``subcommand``)
    --seed          Master seed, an unsigned 64-bit integer
    --out           Root output directory
    --threads       Worker threads for ensemble chunks
    --set           Flat key overrides, e.g. --set --grid.n_side=64 --beta2 3.14

Exit codes:
    0 success, 2 configuration error, 3 numerical or regime error,
    4 statistical check failed.

Examples:
    # Renormalisation table from a config file
    sine-gordon-lab run --config renorm.json

    # Same experiment with another seed and grid
    sine-gordon-lab run --config renorm.json --seed 7 --set --grid.n_side=256

    # Dump coefficients of a checkpoint as CSV
    sine-gordon-lab inspect runs/run-parabolic/run-0001/checkpoints/member-0000.sgsq
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional

from sine_gordon_lab.config import SUBCOMMANDS, load_config, parse_overrides
from sine_gordon_lab.errors import SineGordonLabError
from sine_gordon_lab.experiments import run_experiment
from sine_gordon_lab.io import export_coefficient_csv, read_field_dump

logger = logging.getLogger("sine_gordon_lab")


def run_command(args: argparse.Namespace) -> None:
    """Handle the 'run' subcommand: merge flags into the config and run it.

    Explicit flags win over ``--set`` overrides, which win over the file.
    """
    overrides = parse_overrides(args.set)
    for key in ("subcommand", "seed", "out", "threads"):
        value = getattr(args, key)
        if value is not None:
            overrides[key] = json.dumps(value)
    config = load_config(args.config, overrides)
    directory = run_experiment(config)
    print(directory)


def inspect_command(args: argparse.Namespace) -> None:
    """Handle the 'inspect' subcommand: export every record of a dump as CSV."""
    fields = read_field_dump(args.dump)
    base = Path(args.csv) if args.csv else Path(args.dump).with_suffix(".csv")
    for index, field in enumerate(fields):
        path = base if len(fields) == 1 else base.with_name(f"{base.stem}-{index}{base.suffix}")
        export_coefficient_csv(field, path)
        print(path)


def add_run_parser(subparsers: argparse._SubParsersAction):
    run_parser = subparsers.add_parser("run", help="Run one experiment and write its artifacts.")
    run_parser.add_argument("--config", help="Path to the JSON experiment configuration.")
    run_parser.add_argument("--subcommand", choices=SUBCOMMANDS, help="Experiment to run.")
    run_parser.add_argument("--seed", type=int, help="Master seed (unsigned 64-bit).")
    run_parser.add_argument("--out", help="Root output directory.")
    run_parser.add_argument("--threads", type=int, help="Worker threads for ensemble chunks.")
    run_parser.add_argument(
        "--set",
        nargs=argparse.REMAINDER,
        help="Flat config overrides: --key=value, --key value or a bare --flag.",
    )
    run_parser.set_defaults(func=run_command)


def add_inspect_parser(subparsers: argparse._SubParsersAction):
    inspect_parser = subparsers.add_parser("inspect", help="Export a binary field dump as CSV.")
    inspect_parser.add_argument("dump", help="Path to a .sgsq field dump.")
    inspect_parser.add_argument("--csv", help="Output CSV path (defaults next to the dump).")
    inspect_parser.set_defaults(func=inspect_command)


def main(argv: Optional[List[str]] = None):
    """Main entry point for the sine-Gordon lab CLI."""
    parser = argparse.ArgumentParser(description="Sine-Gordon stochastic quantization lab")
    parser.add_argument("-v", "--verbose", action="store_true", help="Log debug detail.")
    parser.add_argument("-q", "--quiet", action="store_true", help="Log warnings and errors only.")
    subparsers = parser.add_subparsers(dest="command", required=True)

    add_run_parser(subparsers)
    add_inspect_parser(subparsers)

    args = parser.parse_args(argv)
    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except SineGordonLabError as error:
        logger.error(f"{type(error).__name__}: {error}")
        sys.exit(error.exit_code)


if __name__ == "__main__":
    main()
