#!/usr/bin/env python3
"""Regenerate the default experiment CSVs in data/.

Runs the three standard configs; pass --trials to shrink the Monte Carlo
sweep for a quick smoke run (the CSVs are then not the canonical ones).
Already-computed rows in the output files are reused, so an interrupted
run continues where it stopped.
"""

import argparse
import pathlib
import sys
import time

ROOT = pathlib.Path(__file__).resolve().parent.parent

from mimolab.experiments import load_config, run_rate_vs_n, run_dof_contour


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--trials", type=int, default=None,
                        help="override Monte Carlo trials (default: config value)")
    parser.add_argument("--threads", type=int, default=None)
    args = parser.parse_args()
    overrides = {"trials": args.trials, "threads": args.threads}

    jobs = [
        ("configs/fig1_rate_vs_n.toml", "rate-vs-n", run_rate_vs_n),
        ("configs/fig2_dof_contour_alpha03.toml", "dof-contour", run_dof_contour),
        ("configs/fig3_dof_contour_alpha01.toml", "dof-contour", run_dof_contour),
    ]
    for config_path, experiment, runner in jobs:
        cfg = load_config(ROOT / config_path, experiment=experiment,
                          overrides=overrides)
        cfg.out = str(ROOT / cfg.out)
        t0 = time.time()
        rows = runner(cfg)
        print(f"{config_path}: {len(rows)} rows -> {cfg.out} "
              f"({time.time() - t0:.1f}s)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
