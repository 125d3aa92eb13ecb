"""Command line entry point.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 refusal
(a size or safety bound declined the requested computation).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .domain import money_str
from .errors import ConfigError, DataError, RefusalError
from .optimizer import (
    CandidatePool,
    check_submodularity,
    exhaustive_search,
    filter_by_rules,
    generate_candidates,
    greedy_search,
    randomized_usm,
    score_candidates,
)
from .pipeline import (
    ExperimentConfig,
    benchmark_to_obj,
    build_oracle,
    build_population,
    load_config,
    pool_from_artifact,
    render_benchmark,
    result_to_obj,
    run_benchmark,
    run_pipeline,
)
from .population import synthesize_population
from .serial import consumer_to_obj, dumps_canonical

_ORACLE_FLAG_MAP = {"sim": "simulator", "neural": "neural", "tabular": "tabular"}


def _common_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", required=True, help="experiment config JSON")
    p.add_argument("--seed", type=int, default=None, help="override the search seed")
    p.add_argument("--out", default="out", help="artifact directory (default: ./out)")
    p.add_argument(
        "--oracle",
        choices=sorted(_ORACLE_FLAG_MAP),
        default=None,
        help="override the oracle kind from the config",
    )
    p.add_argument("--workers", type=int, default=1, help="oracle worker count")


def _load(args) -> ExperimentConfig:
    oracle = _ORACLE_FLAG_MAP[args.oracle] if args.oracle else None
    return load_config(args.config, seed_override=args.seed, oracle_override=oracle)


def _capped_filtered(config: ExperimentConfig, population, oracle) -> CandidatePool:
    pool = generate_candidates(config.rules)
    scored = score_candidates(pool, population, oracle)
    filtered = filter_by_rules(scored, config.rules)
    cap = config.search.candidate_cap
    if cap is not None:
        filtered = CandidatePool(
            filtered.entries[:cap],
            sorted_by_revenue=True,
            zero_discount_skipped=filtered.zero_discount_skipped,
        )
    return filtered


def _write_artifact(path: Path, kind, config_hash, meta, rows):
    from .pipeline import _write_artifact_jsonl

    path.parent.mkdir(parents=True, exist_ok=True)
    _write_artifact_jsonl(path, kind, config_hash, meta, rows)
    print(f"wrote {path}")


def cmd_synth_pop(args) -> int:
    config = _load(args)
    if config.population_kind != "synthetic":
        raise ConfigError("synth-pop needs a synthetic population section")
    population = build_population(config)
    _write_artifact(
        Path(args.out) / "population.jsonl", "population", config.config_hash,
        {"count": len(population)}, (consumer_to_obj(c) for c in population),
    )
    return 0


def cmd_candidates(args) -> int:
    config = _load(args)
    pool = generate_candidates(config.rules)
    from .pipeline import _pool_rows

    _write_artifact(
        Path(args.out) / "candidates.jsonl", "candidates", config.config_hash,
        {"zero_discount_skipped": pool.zero_discount_skipped}, _pool_rows(pool),
    )
    print(f"{len(pool)} candidates ({pool.zero_discount_skipped} zero-discount pairs skipped)")
    return 0


def cmd_score(args) -> int:
    config = _load(args)
    from .pipeline import _pool_rows

    pool = pool_from_artifact(
        Path(args.out) / "candidates.jsonl", "candidates", config.config_hash
    )
    oracle = build_oracle(config, workers=args.workers)
    population = build_population(config)
    scored = score_candidates(pool, population, oracle)
    _write_artifact(
        Path(args.out) / "scored.jsonl", "scored", config.config_hash,
        {"zero_discount_skipped": scored.zero_discount_skipped}, _pool_rows(scored),
    )
    return 0


def cmd_filter(args) -> int:
    config = _load(args)
    from .pipeline import _pool_rows

    scored = pool_from_artifact(
        Path(args.out) / "scored.jsonl", "scored", config.config_hash
    )
    filtered = filter_by_rules(scored, config.rules)
    _write_artifact(
        Path(args.out) / "filtered.jsonl", "filtered", config.config_hash,
        {
            "sorted_by_revenue": True,
            "zero_discount_skipped": filtered.zero_discount_skipped,
        },
        _pool_rows(filtered),
    )
    print(f"kept {len(filtered)} candidates")
    return 0


def cmd_optimize(args) -> int:
    config = _load(args)
    oracle = build_oracle(config, workers=args.workers)
    population = build_population(config)
    filtered = _capped_filtered(config, population, oracle)
    if args.method == "greedy":
        result = greedy_search(filtered, population, oracle, k=config.search.greedy_k)
    elif args.method == "usm":
        result, _ = randomized_usm(filtered, population, oracle, seed=config.search.seed)
    else:
        result = exhaustive_search(
            filtered, population, oracle, max_size=config.search.max_exhaustive_size
        )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    doc = result_to_obj(result)
    doc["artifact"] = "optimization"
    doc["config_hash"] = config.config_hash
    with open(out / f"optimize_{args.method}.json", "w", encoding="utf-8") as fh:
        fh.write(dumps_canonical(doc) + "\n")
    print(f"{result.method}: {money_str(result.revenue_cents)}  menu {result.menu}")
    return 0


def cmd_recommend(args) -> int:
    config = _load(args)
    outcome = run_pipeline(config, args.out, workers=args.workers)
    print(f"population: {outcome.population_size} consumers")
    print(f"candidates: {outcome.generated} generated, {outcome.filtered} after rules")
    width = max((len(money_str(r.revenue_cents)) for r in outcome.results), default=7)
    for rank, r in enumerate(outcome.results, start=1):
        print(f"{rank}.  {money_str(r.revenue_cents).rjust(width)}  {r.menu}")
    print(f"artifacts in {outcome.out_dir} (config {outcome.config_hash})")
    return 0


def cmd_benchmark(args) -> int:
    config = _load(args)
    report = run_benchmark(config, workers=args.workers)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "benchmark.json", "w", encoding="utf-8") as fh:
        fh.write(dumps_canonical(benchmark_to_obj(report)) + "\n")
    print(render_benchmark(report))
    return 0


def cmd_check_submodularity(args) -> int:
    config = _load(args)
    oracle = build_oracle(config, workers=args.workers)
    population = build_population(config)
    filtered = _capped_filtered(config, population, oracle)
    report = check_submodularity(filtered, population, oracle)
    print(f"candidates:       {report.candidate_count}")
    print(f"triples checked:  {report.total_triples}")
    print(f"violations:       {report.violations}")
    print(f"worst violation:  {money_str(report.worst_violation_cents)}")
    print(f"min subset value: {money_str(report.min_value_cents)}")
    print("submodular" if report.is_submodular else "NOT submodular on this instance")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="promoplan",
        description="Recommend revenue-maximizing threshold-discount promotion menus.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    commands = {
        "synth-pop": (cmd_synth_pop, "write a synthetic population artifact"),
        "candidates": (cmd_candidates, "enumerate the candidate pair grid"),
        "score": (cmd_score, "score candidates against the oracle"),
        "filter": (cmd_filter, "apply business rules to scored candidates"),
        "optimize": (cmd_optimize, "run one search method end to end"),
        "recommend": (cmd_recommend, "full pipeline: top-k menu recommendations"),
        "benchmark": (cmd_benchmark, "compare search methods on one config"),
        "check-submodularity": (cmd_check_submodularity, "audit the revenue function"),
    }
    for name, (fn, help_text) in commands.items():
        p = sub.add_parser(name, help=help_text)
        _common_flags(p)
        if name == "optimize":
            p.add_argument(
                "--method", choices=["greedy", "usm", "exhaustive"], default="usm"
            )
        p.set_defaults(fn=fn)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except DataError as e:
        print(f"data error: {e}", file=sys.stderr)
        return 3
    except RefusalError as e:
        print(f"refused: {e}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
