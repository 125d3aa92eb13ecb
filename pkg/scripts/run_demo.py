#!/usr/bin/env python3
"""End-to-end demo: synthesize a shop, recommend a promotion menu.

Runs the full candidate -> score -> filter -> optimize pipeline on a
small synthetic population and prints what each stage produced plus
the final ranked menus. Artifacts land in --out for inspection.

Usage:
    python3 scripts/run_demo.py
    python3 scripts/run_demo.py --seed 3 --workers 4 --out /tmp/demo
"""

import argparse

from promoplan.domain import money_str
from promoplan.pipeline import parse_config, run_pipeline


def demo_config(seed: int) -> dict:
    return {
        "rules": {
            "min_threshold_cents": 2000,
            "max_threshold_cents": 6000,
            "threshold_step_cents": 500,
            "discount_step_cents": 100,
        },
        "oracle": {"kind": "simulator", "noise_scale": 0.0},
        "population": {
            "kind": "synthetic",
            "count": 200,
            "seed": 42,
            "mean_spend_cents": 3000,
        },
        "search": {"seed": seed, "trials": 32, "k": 3},
    }


def main():
    parser = argparse.ArgumentParser(description="Run the recommendation pipeline demo")
    parser.add_argument("--out", default="out/demo", help="artifact directory")
    parser.add_argument("--seed", type=int, default=0, help="search seed")
    parser.add_argument("--workers", type=int, default=1, help="oracle worker threads")
    args = parser.parse_args()

    config = parse_config(demo_config(args.seed))
    outcome = run_pipeline(config, args.out, workers=args.workers)
    print(f"config hash : {outcome.config_hash}")
    print(f"population  : {outcome.population_size} consumers")
    print(f"candidates  : {outcome.generated} generated, {outcome.filtered} after rules")
    print()
    print("recommended menus:")
    for i, result in enumerate(outcome.results, start=1):
        print(f"  {i}. [{result.method}] {result.menu} "
              f"net revenue {money_str(result.revenue_cents)}")
    print()
    print(f"artifacts written to {outcome.out_dir}/")


if __name__ == "__main__":
    main()
