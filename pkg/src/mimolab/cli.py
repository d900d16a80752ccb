"""Command-line front end.

Subcommands: ``rate-vs-n``, ``dof-contour``, ``validate``. Exit codes:
0 success, 1 validation failure, 2 configuration error.
"""

import argparse
import sys

from .model import ConfigurationError
from .experiments import load_config, run_rate_vs_n, run_dof_contour, run_validation_suite

EXIT_OK = 0
EXIT_VALIDATION_FAILURE = 1
EXIT_CONFIG_ERROR = 2


def build_parser():
    parser = argparse.ArgumentParser(
        prog="mimolab",
        description="Multicell MIMO uplink experiments: Monte Carlo rates, "
                    "deterministic approximations, and DoF planning sweeps.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
            ("rate-vs-n", "ergodic rate versus antenna count (Monte Carlo + approximations)"),
            ("dof-contour", "required DoF per user to reach a fraction of the limit rate"),
            ("validate", "run the numerical self-check suite")):
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("--config", help="flat TOML config file")
        cmd.add_argument("--out", help="output path (CSV, or JSON for validate)")
        cmd.add_argument("--seed", type=int, help="master RNG seed")
        cmd.add_argument("--trials", type=int, help="Monte Carlo trials per point")
        cmd.add_argument("--threads", type=int, help="worker processes for sweep points")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    overrides = {"out": args.out, "seed": args.seed, "trials": args.trials,
                 "threads": args.threads}
    try:
        cfg = load_config(args.config, experiment=args.command, overrides=overrides)
        if args.command == "rate-vs-n":
            rows = run_rate_vs_n(cfg)
            bad = [r for r in rows
                   if isinstance(r, dict) and r.get("status") != "ok"]
            if bad:
                print(f"{len(bad)} sweep points failed", file=sys.stderr)
                return EXIT_VALIDATION_FAILURE
            return EXIT_OK
        if args.command == "dof-contour":
            run_dof_contour(cfg)
            return EXIT_OK
        report = run_validation_suite(cfg)
        return EXIT_OK if report["passed"] else EXIT_VALIDATION_FAILURE
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR


if __name__ == "__main__":
    sys.exit(main())
