"""End-to-end runs: config parsing, artifact persistence, benchmarks.

A pipeline run is a pure function of (config, seed): identical inputs
produce byte-identical artifacts. Every artifact embeds the config
hash; loaders refuse to mix artifacts from different configurations.
Wall-clock timings are real measurements and therefore live in a
separate sidecar file that carries no determinism promise.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass, replace
from datetime import date
from pathlib import Path
from typing import Optional, Sequence

from .domain import CampaignSet, ConsumerProfile, Money, RuleSet
from .encoding import ShopContext
from .errors import ConfigError, DataError
from .oracle import ChoiceModelParams, RevenueOracle, SimulatorOracle, TabularOracle, table_key
from .optimizer import (
    CandidatePool,
    OptimizationResult,
    PoolEntry,
    exhaustive_search,
    filter_by_rules,
    generate_candidates,
    greedy_search,
    randomized_usm,
    recommend_top_k,
    score_candidates,
)
from .population import DEFAULT_GEO_RADIUS_M, SynthesisSpec, ingest_population, synthesize_population
from .rng import mix64
from .scorer import NeuralOracle, load_weights
from .serial import (
    campaign_set_from_obj,
    campaign_set_to_obj,
    consumer_to_obj,
    dumps_canonical,
    pair_from_obj,
    pair_to_obj,
    rules_from_obj,
    rules_to_obj,
)

_SHOP_STREAM = 0x73686F70  # "shop"
_ORACLE_KINDS = ("simulator", "neural", "tabular")


@dataclass(frozen=True)
class SearchSettings:
    seed: int = 0
    trials: int = 16
    k: int = 3
    candidate_cap: Optional[int] = None
    max_exhaustive_size: Optional[int] = None
    greedy_k: Optional[int] = None
    benchmark_shops: int = 1
    benchmark_usm_seeds: int = 8

    def __post_init__(self):
        if self.trials < self.k:
            raise ConfigError("search.trials must be at least search.k")
        if self.k <= 0 or self.benchmark_shops <= 0 or self.benchmark_usm_seeds <= 0:
            raise ConfigError("search counts must be positive")
        if self.candidate_cap is not None and self.candidate_cap <= 0:
            raise ConfigError("candidate_cap must be positive when set")


@dataclass(frozen=True)
class ExperimentConfig:
    """Parsed experiment description; `normalized` feeds the hash."""

    rules: RuleSet
    oracle_kind: str
    sim_params: Optional[ChoiceModelParams]
    weights_path: Optional[str]
    shop: Optional[ShopContext]
    as_of: Optional[date]
    table_path: Optional[str]
    population_kind: str
    population_path: Optional[str]
    geo_radius_m: Optional[float]
    synthesis: Optional[SynthesisSpec]
    synthesis_seed: int
    search: SearchSettings
    normalized: dict

    @property
    def config_hash(self) -> str:
        return hashlib.sha256(dumps_canonical(self.normalized).encode()).hexdigest()[:16]


def _parse_oracle(obj: dict, kind_override: Optional[str]) -> dict:
    if not isinstance(obj, dict):
        raise ConfigError("config.oracle must be an object")
    nested = {k: v for k, v in obj.items() if k in _ORACLE_KINDS}
    kind = kind_override or obj.get("kind")
    if nested:
        if kind is None and len(nested) == 1:
            kind = next(iter(nested))
        if kind not in nested:
            raise ConfigError(
                f"oracle kind {kind!r} has no matching section; "
                f"config offers {sorted(nested)}"
            )
        spec = nested[kind]
    else:
        if kind is None:
            raise ConfigError("config.oracle needs a 'kind' field")
        spec = {k: v for k, v in obj.items() if k != "kind"}
    if kind not in _ORACLE_KINDS:
        raise ConfigError(f"unknown oracle kind {kind!r}; expected one of {_ORACLE_KINDS}")
    return {"kind": kind, "spec": spec}


def parse_config(
    doc: dict,
    seed_override: Optional[int] = None,
    oracle_override: Optional[str] = None,
) -> ExperimentConfig:
    """Validate a raw config document into an ExperimentConfig.

    Exactly one oracle spec and exactly one population source must be
    in effect after CLI overrides are applied.
    """
    if not isinstance(doc, dict):
        raise ConfigError("config root must be a JSON object")
    unknown = set(doc) - {"rules", "oracle", "population", "search"}
    if unknown:
        raise ConfigError(f"unknown config sections: {sorted(unknown)}")
    try:
        rules = rules_from_obj(doc["rules"])
    except KeyError:
        raise ConfigError("config.rules is required") from None
    except DataError as e:
        raise ConfigError(str(e)) from e

    oracle = _parse_oracle(doc.get("oracle", {}), oracle_override)
    kind, spec = oracle["kind"], oracle["spec"]
    sim_params = weights_path = shop = as_of = table_path = None
    if kind == "simulator":
        try:
            sim_params = ChoiceModelParams(
                stretch_utility_rate=float(spec.get("stretch_utility_rate", 1.0)),
                effort_cost_rate=float(spec.get("effort_cost_rate", 0.25)),
                noise_scale=float(spec.get("noise_scale", 0.0)),
                seed=int(spec.get("seed", 0)),
            )
        except (TypeError, ValueError) as e:
            raise ConfigError(f"bad simulator parameters: {e}") from e
    elif kind == "neural":
        if "weights_path" not in spec:
            raise ConfigError("neural oracle needs weights_path")
        weights_path = str(spec["weights_path"])
        shop = ShopContext(str(spec.get("shop_id", "shop")), str(spec.get("city_id", "city")))
        try:
            as_of = date.fromisoformat(spec.get("as_of", "2024-01-01"))
        except ValueError as e:
            raise ConfigError(f"bad as_of date: {e}") from e
    else:
        if "table_path" not in spec:
            raise ConfigError("tabular oracle needs table_path")
        table_path = str(spec["table_path"])

    pop = doc.get("population")
    if not isinstance(pop, dict) or "kind" not in pop:
        raise ConfigError("config.population needs a 'kind' field")
    pop_kind = pop["kind"]
    population_path = None
    geo_radius: Optional[float] = DEFAULT_GEO_RADIUS_M
    synthesis = None
    synthesis_seed = 0
    if pop_kind == "file":
        if "path" not in pop:
            raise ConfigError("file population needs a path")
        if "count" in pop:
            raise ConfigError("population source is ambiguous: file with synthesis fields")
        population_path = str(pop["path"])
        raw_radius = pop.get("geo_radius_m", DEFAULT_GEO_RADIUS_M)
        geo_radius = None if raw_radius is None else float(raw_radius)
    elif pop_kind == "synthetic":
        if "path" in pop:
            raise ConfigError("population source is ambiguous: synthetic with a file path")
        fields = {k: v for k, v in pop.items() if k not in ("kind", "seed")}
        try:
            synthesis = SynthesisSpec(**fields)
        except TypeError as e:
            raise ConfigError(f"bad synthesis spec: {e}") from e
        synthesis_seed = int(pop.get("seed", 0))
    else:
        raise ConfigError(f"unknown population kind {pop_kind!r}")

    search_obj = doc.get("search", {})
    if not isinstance(search_obj, dict):
        raise ConfigError("config.search must be an object")
    try:
        search = SearchSettings(**search_obj)
    except TypeError as e:
        raise ConfigError(f"bad search settings: {e}") from e
    if seed_override is not None:
        search = replace(search, seed=seed_override)

    normalized = {
        "rules": rules_to_obj(rules),
        "oracle": {"kind": kind, "spec": spec},
        "population": dict(pop),
        "search": {
            "seed": search.seed,
            "trials": search.trials,
            "k": search.k,
            "candidate_cap": search.candidate_cap,
            "max_exhaustive_size": search.max_exhaustive_size,
            "greedy_k": search.greedy_k,
            "benchmark_shops": search.benchmark_shops,
            "benchmark_usm_seeds": search.benchmark_usm_seeds,
        },
    }
    return ExperimentConfig(
        rules=rules,
        oracle_kind=kind,
        sim_params=sim_params,
        weights_path=weights_path,
        shop=shop,
        as_of=as_of,
        table_path=table_path,
        population_kind=pop_kind,
        population_path=population_path,
        geo_radius_m=geo_radius,
        synthesis=synthesis,
        synthesis_seed=synthesis_seed,
        search=search,
        normalized=normalized,
    )


def load_config(
    path,
    seed_override: Optional[int] = None,
    oracle_override: Optional[str] = None,
) -> ExperimentConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    except ValueError as e:
        raise ConfigError(f"config {path} is not valid JSON: {e}") from e
    return parse_config(doc, seed_override, oracle_override)


def load_revenue_table(path) -> TabularOracle:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
        table = {}
        for entry in doc["entries"]:
            menu = campaign_set_from_obj(entry)
            table[table_key(menu)] = int(entry["revenue_cents"])
    except OSError as e:
        raise DataError(f"cannot read revenue table {path}: {e}") from e
    except (KeyError, TypeError, ValueError) as e:
        raise DataError(f"malformed revenue table {path}: {e}") from e
    return TabularOracle(table)


def build_oracle(config: ExperimentConfig, workers: int = 1) -> RevenueOracle:
    if config.oracle_kind == "simulator":
        return SimulatorOracle(config.sim_params, workers=workers)
    if config.oracle_kind == "neural":
        weights = load_weights(config.weights_path)
        return NeuralOracle(weights=weights, shop=config.shop, as_of=config.as_of)
    return load_revenue_table(config.table_path)


def build_population(
    config: ExperimentConfig, shop_index: int = 0
) -> list[ConsumerProfile]:
    if config.population_kind == "file":
        return ingest_population(config.population_path, config.geo_radius_m)
    seed = config.synthesis_seed
    if shop_index:
        seed = mix64(seed, _SHOP_STREAM, shop_index)
    return synthesize_population(config.synthesis, seed)


# --- artifact persistence ----------------------------------------------


def _write_artifact_jsonl(path: Path, kind: str, config_hash: str, meta: dict, rows) -> None:
    header = {"artifact": kind, "config_hash": config_hash}
    header.update(meta)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_canonical(header) + "\n")
        for row in rows:
            fh.write(dumps_canonical(row) + "\n")


def read_artifact_jsonl(path, kind: str, expect_hash: Optional[str] = None):
    """Read one artifact, enforcing kind and config-hash agreement."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = [json.loads(line) for line in fh if line.strip()]
    except OSError as e:
        raise DataError(f"cannot read {kind} artifact {path}: {e}") from e
    except ValueError as e:
        raise DataError(f"{path} is not valid JSONL: {e}") from e
    if not lines or lines[0].get("artifact") != kind:
        raise DataError(f"{path} is not a {kind!r} artifact")
    header = lines[0]
    if expect_hash is not None and header.get("config_hash") != expect_hash:
        raise DataError(
            f"{path} belongs to config {header.get('config_hash')}, "
            f"expected {expect_hash}; refusing to mix runs"
        )
    return header, lines[1:]


def _pool_rows(pool: CandidatePool):
    for e in pool.entries:
        row = pair_to_obj(e.pair)
        row["revenue_cents"] = e.revenue_cents
        yield row


def pool_from_artifact(path, kind: str, expect_hash: Optional[str] = None) -> CandidatePool:
    header, rows = read_artifact_jsonl(path, kind, expect_hash)
    entries = tuple(
        PoolEntry(pair_from_obj(r), int(r.get("revenue_cents", 0))) for r in rows
    )
    return CandidatePool(
        entries,
        sorted_by_revenue=bool(header.get("sorted_by_revenue", False)),
        zero_discount_skipped=int(header.get("zero_discount_skipped", 0)),
    )


def result_to_obj(r: OptimizationResult) -> dict:
    obj = {
        "method": r.method,
        "menu": campaign_set_to_obj(r.menu),
        "revenue_cents": r.revenue_cents,
        "oracle": r.oracle_name,
    }
    if r.seed is not None:
        obj["seed"] = r.seed
    return obj


@dataclass
class PipelineOutcome:
    config_hash: str
    population_size: int
    generated: int
    filtered: int
    results: list[OptimizationResult]
    out_dir: Path


def run_pipeline(config: ExperimentConfig, out_dir, workers: int = 1) -> PipelineOutcome:
    """Generate, score, filter, and recommend; persist every stage.

    Deterministic artifacts: population.jsonl, candidates.jsonl,
    scored.jsonl, filtered.jsonl, recommendations.json. Wall-clock
    numbers go to timings.json only.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    chash = config.config_hash
    timings: dict[str, float] = {}

    t0 = time.perf_counter()
    population = build_population(config)
    oracle = build_oracle(config, workers=workers)
    timings["setup_s"] = time.perf_counter() - t0

    _write_artifact_jsonl(
        out / "population.jsonl", "population", chash,
        {"count": len(population)}, (consumer_to_obj(c) for c in population),
    )

    t0 = time.perf_counter()
    pool = generate_candidates(config.rules)
    timings["generate_s"] = time.perf_counter() - t0
    _write_artifact_jsonl(
        out / "candidates.jsonl", "candidates", chash,
        {"zero_discount_skipped": pool.zero_discount_skipped}, _pool_rows(pool),
    )

    t0 = time.perf_counter()
    scored = score_candidates(pool, population, oracle)
    timings["score_s"] = time.perf_counter() - t0
    _write_artifact_jsonl(
        out / "scored.jsonl", "scored", chash,
        {"zero_discount_skipped": scored.zero_discount_skipped}, _pool_rows(scored),
    )

    t0 = time.perf_counter()
    filtered = filter_by_rules(scored, config.rules)
    if config.search.candidate_cap is not None:
        filtered = CandidatePool(
            filtered.entries[: config.search.candidate_cap],
            sorted_by_revenue=True,
            zero_discount_skipped=filtered.zero_discount_skipped,
        )
    timings["filter_s"] = time.perf_counter() - t0
    _write_artifact_jsonl(
        out / "filtered.jsonl", "filtered", chash,
        {
            "sorted_by_revenue": True,
            "zero_discount_skipped": filtered.zero_discount_skipped,
        },
        _pool_rows(filtered),
    )

    t0 = time.perf_counter()
    results = recommend_top_k(
        filtered, population, oracle,
        k=config.search.k, trials=config.search.trials, seed=config.search.seed,
    )
    results = [replace(r, config_hash=chash) for r in results]
    timings["recommend_s"] = time.perf_counter() - t0

    doc = {
        "artifact": "recommendations",
        "config_hash": chash,
        "seed": config.search.seed,
        "oracle": getattr(oracle, "name", type(oracle).__name__),
        "results": [result_to_obj(r) for r in results],
    }
    with open(out / "recommendations.json", "w", encoding="utf-8") as fh:
        fh.write(dumps_canonical(doc) + "\n")
    with open(out / "timings.json", "w", encoding="utf-8") as fh:
        json.dump({"config_hash": chash, "timings_s": timings}, fh, indent=1, sort_keys=True)
        fh.write("\n")

    return PipelineOutcome(
        config_hash=chash,
        population_size=len(population),
        generated=len(pool),
        filtered=len(filtered),
        results=results,
        out_dir=out,
    )


# --- benchmark ----------------------------------------------------------


@dataclass(frozen=True)
class MethodStats:
    method: str
    revenue_cents: Money
    wall_time_s: float


@dataclass(frozen=True)
class BenchmarkReport:
    config_hash: str
    shops: int
    usm_seeds: int
    candidate_count: int
    methods: tuple[MethodStats, ...]
    usm_mean_beats_greedy_shops: int
    per_shop: tuple[dict, ...]


def run_benchmark(config: ExperimentConfig, workers: int = 1) -> BenchmarkReport:
    """Compare exhaustive, randomized, and greedy search head to head.

    Every method sees the same filtered candidates per shop and pays
    for its own oracle calls, so wall times are comparable. Randomized
    search reports both the mean and the best over its seeds.
    """
    oracle = build_oracle(config, workers=workers)
    shops = config.search.benchmark_shops
    if config.population_kind == "file" and shops > 1:
        raise ConfigError("multi-shop benchmarks need a synthetic population")

    totals = {"exhaustive": 0, "usm_mean": 0.0, "usm_best": 0, "greedy": 0}
    times = {"exhaustive": 0.0, "usm": 0.0, "greedy": 0.0}
    beats = 0
    per_shop = []
    n_candidates = 0
    for s in range(shops):
        population = build_population(config, shop_index=s)
        pool = generate_candidates(config.rules)
        scored = score_candidates(pool, population, oracle)
        filtered = filter_by_rules(scored, config.rules)
        if config.search.candidate_cap is not None:
            filtered = CandidatePool(
                filtered.entries[: config.search.candidate_cap],
                sorted_by_revenue=True,
                zero_discount_skipped=filtered.zero_discount_skipped,
            )
        n_candidates += len(filtered)

        exh = exhaustive_search(
            filtered, population, oracle, max_size=config.search.max_exhaustive_size
        )
        seeds = [mix64(config.search.seed, _SHOP_STREAM, s, i)
                 for i in range(config.search.benchmark_usm_seeds)]
        usm_results = [randomized_usm(filtered, population, oracle, seed=sd)[0]
                       for sd in seeds]
        gre = greedy_search(filtered, population, oracle, k=config.search.greedy_k)

        usm_revs = [r.revenue_cents for r in usm_results]
        usm_mean = sum(usm_revs) / len(usm_revs)
        totals["exhaustive"] += exh.revenue_cents
        totals["usm_mean"] += usm_mean
        totals["usm_best"] += max(usm_revs)
        totals["greedy"] += gre.revenue_cents
        times["exhaustive"] += exh.wall_time_s
        times["usm"] += sum(r.wall_time_s for r in usm_results)
        times["greedy"] += gre.wall_time_s
        if usm_mean > gre.revenue_cents:
            beats += 1
        per_shop.append(
            {
                "shop": s,
                "candidates": len(filtered),
                "exhaustive_cents": exh.revenue_cents,
                "usm_mean_cents": usm_mean,
                "usm_best_cents": max(usm_revs),
                "greedy_cents": gre.revenue_cents,
            }
        )

    methods = (
        MethodStats("exhaustive", totals["exhaustive"], times["exhaustive"]),
        MethodStats("usm (mean)", round(totals["usm_mean"]), times["usm"]),
        MethodStats("usm (best)", totals["usm_best"], times["usm"]),
        MethodStats("greedy", totals["greedy"], times["greedy"]),
    )
    return BenchmarkReport(
        config_hash=config.config_hash,
        shops=shops,
        usm_seeds=config.search.benchmark_usm_seeds,
        candidate_count=n_candidates,
        methods=methods,
        usm_mean_beats_greedy_shops=beats,
        per_shop=tuple(per_shop),
    )


def render_benchmark(report: BenchmarkReport) -> str:
    """Aligned plain-text table: method, revenue, wall time."""
    from .domain import money_str

    rows = [("search method", "revenue", "wall time")]
    for m in report.methods:
        rows.append((m.method, money_str(m.revenue_cents), f"{m.wall_time_s:.3f} s"))
    widths = [max(len(r[i]) for r in rows) for i in range(3)]
    lines = []
    header = "  ".join(c.ljust(w) for c, w in zip(rows[0], widths))
    lines.append(header)
    lines.append("  ".join("-" * w for w in widths))
    for r in rows[1:]:
        lines.append("  ".join(c.ljust(w) for c, w in zip(r, widths)))
    lines.append("")
    lines.append(
        f"shops: {report.shops}   usm seeds per shop: {report.usm_seeds}   "
        f"usm mean > greedy on {report.usm_mean_beats_greedy_shops}/{report.shops} shops"
    )
    lines.append(f"config: {report.config_hash}")
    return "\n".join(lines)


def benchmark_to_obj(report: BenchmarkReport) -> dict:
    return {
        "artifact": "benchmark",
        "config_hash": report.config_hash,
        "shops": report.shops,
        "usm_seeds": report.usm_seeds,
        "candidate_count": report.candidate_count,
        "methods": [
            {"method": m.method, "revenue_cents": m.revenue_cents, "wall_time_s": m.wall_time_s}
            for m in report.methods
        ],
        "usm_mean_beats_greedy_shops": report.usm_mean_beats_greedy_shops,
        "per_shop": list(report.per_shop),
    }
