#!/usr/bin/env python3
"""Compare search methods across a fleet of synthetic shops.

For each shop this runs exhaustive, randomized, and greedy search on
the same filtered candidate list and reports aggregate net revenue,
how often the randomized search beats greedy, and wall time. Use it
to sanity-check the quality/speed tradeoff before changing defaults.

Usage:
    python3 scripts/run_benchmark_suite.py
    python3 scripts/run_benchmark_suite.py --shops 50 --usm-seeds 16 --workers 8
"""

import argparse
import json
from pathlib import Path

from promoplan.pipeline import benchmark_to_obj, parse_config, render_benchmark, run_benchmark
from promoplan.serial import dumps_canonical


def suite_config(args) -> dict:
    return {
        "rules": {
            "min_threshold_cents": 2000,
            "max_threshold_cents": 7000,
            "threshold_step_cents": 500,
            "discount_step_cents": 100,
        },
        "oracle": {"kind": "simulator", "noise_scale": 0.0},
        "population": {
            "kind": "synthetic",
            "count": args.consumers,
            "seed": args.seed,
            "mean_spend_cents": 3200,
        },
        "search": {
            "seed": args.seed,
            "trials": 8,
            "k": 1,
            "candidate_cap": 12,
            "benchmark_shops": args.shops,
            "benchmark_usm_seeds": args.usm_seeds,
        },
    }


def main():
    parser = argparse.ArgumentParser(description="Benchmark search methods on synthetic shops")
    parser.add_argument("--shops", type=int, default=20, help="number of synthetic shops")
    parser.add_argument("--usm-seeds", type=int, default=8,
                        help="randomized-search restarts per shop")
    parser.add_argument("--consumers", type=int, default=60, help="consumers per shop")
    parser.add_argument("--seed", type=int, default=0, help="base seed for the suite")
    parser.add_argument("--workers", type=int, default=1, help="oracle worker threads")
    parser.add_argument("--out", default=None,
                        help="optional path for a JSON report (e.g. out/benchmark.json)")
    args = parser.parse_args()

    config = parse_config(suite_config(args))
    report = run_benchmark(config, workers=args.workers)
    print(render_benchmark(report))

    if args.out:
        path = Path(args.out)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(dumps_canonical(benchmark_to_obj(report)) + "\n", encoding="utf-8")
        print(f"\nreport written to {path}")


if __name__ == "__main__":
    main()
