"""Command line interface ``pffc``."""

from __future__ import annotations

import argparse
import logging
import sys

from .config import ConfigError, load_config
from .experiments import run_experiment, run_gradcheck, run_verification
from .model import ParameterError


def _snapshots(text: str):
    try:
        return tuple(int(t) for t in text.split(",") if t.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated integers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pffc", description="Phase-field fracture optimal control.")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="more logging (repeatable)")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="optimize a preset or configured experiment")
    run.add_argument("--preset", default="example1", help="example1 or example2 (default: example1)")
    run.add_argument("--config", help="key = value file overriding the preset")
    run.add_argument("--out", help="output directory (default: $PFFC_OUT/<name> or runs/<name>)")
    run.add_argument("--mesh", type=int, help="cells per side n")
    run.add_argument("--timesteps", type=int, help="number of time steps M")
    run.add_argument("--snapshots", type=_snapshots, help="time indices for VTK snapshots, e.g. 20,30,40")

    for name, text in (("verify", "run all self-checks on a small configuration"),
                       ("gradcheck", "finite-difference tables of gradient and Hessian")):
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", help="key = value file overriding the small default configuration")
        p.add_argument("--out", help="output directory")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "run":
            cfg = load_config(args.config, base=args.preset, out=args.out, n=args.mesh, M=args.timesteps,
                              snapshots=args.snapshots)
            res = run_experiment(cfg)
            print(f"{res.message}; results in {res.out}")
            for rec in res.records:
                print(rec.csv_row())
            return res.status
        cfg = load_config(args.config, base="desk", out=args.out)
        if args.command == "verify":
            status, checks = run_verification(cfg)
            for c in checks:
                print(c.line())
            return status
        status, text = run_gradcheck(cfg)
        print(text, end="")
        return status
    except (ConfigError, ParameterError) as err:
        print(f"pffc: error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
