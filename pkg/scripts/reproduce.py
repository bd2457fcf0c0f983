#!/usr/bin/env python3
"""Run every bundled experiment config and write CSV and JSON results.

    python scripts/reproduce.py --out results/

Exits non-zero if any experiment check fails.
"""

import argparse
import json
import sys
from pathlib import Path

from isolip.cli import dumps, rows_to_csv
from isolip.experiments import (
    ExperimentConfig,
    run_cube_stability,
    run_normal_law,
    run_obsdiam_chain,
    run_torus,
)

CONFIGS = Path(__file__).resolve().parent / "configs"
RUNS = ["normal_law", "cube_stability", "torus", "obsdiam_k2n3", "obsdiam_k3n2"]


def run(cfg: ExperimentConfig):
    if cfg.name == "normal-law":
        return run_normal_law(cfg.k, cfg.n_list, cfg.grid, cfg.kappa)
    if cfg.name == "cube-stability":
        return run_cube_stability(cfg.k_list, cfg.n, cfg.family, cfg.budget)
    if cfg.name == "torus":
        return run_torus(cfg.k, cfg.n, cfg.family, cfg.budget, cfg.subset_budget)
    return run_obsdiam_chain(cfg.k, cfg.n, cfg.factors, cfg.kappa_list, cfg.family, cfg.budget)


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", default="results")
    args = parser.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    failed = []
    for stem in RUNS:
        cfg = ExperimentConfig.from_dict(json.loads((CONFIGS / f"{stem}.json").read_text()))
        report = run(cfg)
        (out / f"{stem}.csv").write_text(rows_to_csv(cfg.name, report.rows))
        (out / f"{stem}.json").write_text(dumps(report.as_dict()))
        status = "ok" if report.passed else "FAILED"
        print(f"{stem:16s} {status}")
        for c in report.checks:
            if not c.passed:
                print(f"    {c.name}: {c.detail}")
                failed.append(stem)
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
