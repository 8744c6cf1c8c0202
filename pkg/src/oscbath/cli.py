"""Command-line entry point: ``oscbath run|sweep|scenario``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import yaml

from .harness import (ConfigError, HarnessError, builtin_path, builtin_scenarios, run_scenario,
                      sweep)


def _common(p):
    p.add_argument("--seed", type=int, help="master seed (unsigned 64-bit), overrides the config")
    p.add_argument("--out", type=Path, help="output directory")
    p.add_argument("--threads", type=int, default=1, help="worker threads for ensembles")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="oscbath",
                                     description="Oscillator-bath experiment runner.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a scenario config")
    p.add_argument("config", type=Path)
    _common(p)

    p = sub.add_parser("sweep", help="run a scenario over values of one field")
    p.add_argument("config", type=Path)
    p.add_argument("--param", required=True, help="dotted field path, e.g. init.x0")
    p.add_argument("--values", required=True, help="comma-separated values")
    _common(p)

    p = sub.add_parser("scenario", help="run a built-in scenario")
    p.add_argument("name", nargs="?", help="built-in scenario name")
    p.add_argument("--list", action="store_true", help="list built-in scenarios")
    _common(p)
    return parser


def _values(text):
    return [yaml.safe_load(tok) for tok in text.split(",") if tok.strip()]


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "scenario":
            if args.list or not args.name:
                print("\n".join(builtin_scenarios()))
                return 0
            reports = [run_scenario(builtin_path(args.name), args.out, args.seed, args.threads)]
        elif args.command == "run":
            reports = [run_scenario(args.config, args.out, args.seed, args.threads)]
        else:
            reports = sweep(args.config, args.param, _values(args.values), args.out, args.seed,
                            args.threads)
    except (ConfigError, HarnessError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    ok = True
    for rep in reports:
        print(f"report: {rep.path}")
        for c in rep.checks:
            print(c.line())
        ok = ok and rep.passed
    extra = reports[0].sweep_checks if reports else []
    for c in extra:
        print(c.line())
        ok = ok and c.passed
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
