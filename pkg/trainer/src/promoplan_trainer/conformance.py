"""Cross-implementation conformance artifacts.

Produces the triple the recommender's scorer is tested against: the
weight file, 100 fixture bundles covering empty through crowded menu
contexts, and this side's forward scores for them. Any arithmetic
drift between the two implementations shows up as a score mismatch.
"""

from __future__ import annotations

import shutil
from dataclasses import dataclass
from datetime import date
from pathlib import Path

import numpy as np

from .features import AssemblyParams, Bundle, assemble, bundle_to_obj
from .serial import dumps_canonical, write_jsonl
from .simulate import Pair, ShopperSpec, sample_shoppers, sorted_menu
from .weights import forward_score, load_weights_file

FIXTURE_SHOP = "shop-000"
FIXTURE_CITY = "city-00"
FIXTURE_AS_OF = date(2026, 6, 1)


def build_fixture_bundles(
    params: AssemblyParams, seed: int, count: int = 100
) -> list[Bundle]:
    """Deterministic bundles with 0..3 not-target pairs each."""
    rng = np.random.default_rng(seed)
    shoppers = sample_shoppers(
        ShopperSpec(
            count=count,
            shop_categories=params.shop_categories,
            age_buckets=params.age_buckets,
            genders=params.genders,
            id_prefix="fx",
        ),
        rng,
    )
    thresholds = np.arange(1000, 12001, 500, dtype=np.int64)
    bundles = []
    for i, shopper in enumerate(shoppers):
        size = 1 + i % 4  # cycle menu sizes so empty contexts always occur
        picks = rng.choice(len(thresholds), size=size, replace=False)
        pairs = []
        for j in picks:
            t = int(thresholds[j])
            d = max(100, int(rng.integers(1, max(2, t // 500))) * 100)
            pairs.append(Pair(t, min(d, t)))
        menu = sorted_menu(pairs)
        target = menu[int(rng.integers(0, len(menu)))]
        bundles.append(
            assemble(shopper, FIXTURE_SHOP, FIXTURE_CITY, target, menu, FIXTURE_AS_OF, params)
        )
    return bundles


@dataclass
class ConformanceReport:
    count: int
    score_min: float
    score_max: float
    score_mean: float


def run_conformance(weights_path, out_dir, seed: int = 0, count: int = 100) -> ConformanceReport:
    """Write weights.json, bundles.jsonl, scores.json under out_dir."""
    params, matrices = load_weights_file(weights_path)
    bundles = build_fixture_bundles(params, seed, count)
    scores = [forward_score(params, matrices, b) for b in bundles]

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    shutil.copyfile(weights_path, out / "weights.json")
    write_jsonl(out / "bundles.jsonl", (bundle_to_obj(b) for b in bundles))
    with open(out / "scores.json", "w", encoding="utf-8") as fh:
        fh.write(dumps_canonical(scores) + "\n")

    arr = np.asarray(scores)
    return ConformanceReport(
        count=len(scores),
        score_min=float(arr.min()),
        score_max=float(arr.max()),
        score_mean=float(arr.mean()),
    )
