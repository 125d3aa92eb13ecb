"""Ground-truth shopper behavior for label generation.

Re-implements the choice rule the recommender simulates, from the
written contract rather than from its code: a shopper either keeps the
base spend (earning whatever the highest threshold at or below it
pays) or stretches up to any threshold within reach, maximizing

    utility = su * discount_dollars - ec * stretch_dollars + noise

with Gumbel noise and ties broken toward the smaller spend. Labels for
training come from here, so this module is the oracle the models are
graded against.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import ConfigError, DataError


@dataclass(frozen=True, order=True)
class Pair:
    """One threshold-discount campaign, money in integer cents."""

    threshold_cents: int
    discount_cents: int

    def __post_init__(self):
        if self.threshold_cents <= 0:
            raise DataError("threshold must be positive")
        if not 0 <= self.discount_cents <= self.threshold_cents:
            raise DataError("discount must lie in [0, threshold]")


def pair_to_obj(p: Pair) -> dict:
    return {"threshold_cents": p.threshold_cents, "discount_cents": p.discount_cents}


def pair_from_obj(obj: dict) -> Pair:
    try:
        return Pair(int(obj["threshold_cents"]), int(obj["discount_cents"]))
    except (KeyError, TypeError, ValueError) as e:
        raise DataError(f"bad pair: {e}") from e


def sorted_menu(pairs: Sequence[Pair]) -> tuple[Pair, ...]:
    menu = tuple(sorted(pairs))
    if len({p.threshold_cents for p in menu}) != len(menu):
        raise DataError("menu thresholds must be distinct")
    return menu


@dataclass(frozen=True)
class Shopper:
    """Consumer profile, field-for-field the interchange schema."""

    consumer_id: str
    base_spend_cents: int
    stretch_cents: int
    age_bucket: int
    gender: int
    shop_category: int
    gmv_30d_cents: int
    gmv_60d_cents: int
    gmv_90d_cents: int
    distance_to_shop_m: float


def shopper_to_obj(s: Shopper) -> dict:
    return {
        "consumer_id": s.consumer_id,
        "base_spend_cents": s.base_spend_cents,
        "stretch_cents": s.stretch_cents,
        "age_bucket": s.age_bucket,
        "gender": s.gender,
        "shop_category": s.shop_category,
        "gmv_30d_cents": s.gmv_30d_cents,
        "gmv_60d_cents": s.gmv_60d_cents,
        "gmv_90d_cents": s.gmv_90d_cents,
        "distance_to_shop_m": s.distance_to_shop_m,
    }


def shopper_from_obj(obj: dict) -> Shopper:
    try:
        return Shopper(
            consumer_id=str(obj["consumer_id"]),
            base_spend_cents=int(obj["base_spend_cents"]),
            stretch_cents=int(obj["stretch_cents"]),
            age_bucket=int(obj["age_bucket"]),
            gender=int(obj["gender"]),
            shop_category=int(obj["shop_category"]),
            gmv_30d_cents=int(obj["gmv_30d_cents"]),
            gmv_60d_cents=int(obj["gmv_60d_cents"]),
            gmv_90d_cents=int(obj["gmv_90d_cents"]),
            distance_to_shop_m=float(obj["distance_to_shop_m"]),
        )
    except (KeyError, TypeError, ValueError) as e:
        raise DataError(f"bad shopper row: {e}") from e


@dataclass(frozen=True)
class ShopperSpec:
    """Sampling knobs for the synthetic shopper pool.

    Base spend is log-normal; the recency gmv totals are noisy
    multiples of base spend so the model can partially infer spending
    power from them but never read base or stretch directly (neither is
    a model feature, matching the scorer's input contract).
    """

    count: int
    mean_spend_cents: int = 3500
    spend_sigma: float = 0.5
    stretch_lo: float = 0.2
    stretch_hi: float = 0.9
    shop_categories: int = 8
    age_buckets: int = 8
    genders: int = 4
    id_prefix: str = "t"

    def __post_init__(self):
        if self.count <= 0 or self.mean_spend_cents <= 0:
            raise ConfigError("shopper count and mean spend must be positive")
        if not 0 <= self.stretch_lo <= self.stretch_hi:
            raise ConfigError("stretch bounds must satisfy 0 <= lo <= hi")
        if min(self.shop_categories, self.age_buckets, self.genders) <= 0:
            raise ConfigError("category sizes must be positive")


def sample_shoppers(spec: ShopperSpec, rng: np.random.Generator) -> list[Shopper]:
    n = spec.count
    mu = np.log(spec.mean_spend_cents) - spec.spend_sigma**2 / 2.0
    base = np.maximum(np.rint(rng.lognormal(mu, spec.spend_sigma, n)).astype(np.int64), 100)
    stretch = np.rint(base * rng.uniform(spec.stretch_lo, spec.stretch_hi, n)).astype(np.int64)

    gmv30 = np.rint(base * rng.uniform(2.0, 6.0, n)).astype(np.int64)
    gmv60 = np.rint(gmv30 * rng.uniform(1.6, 2.4, n)).astype(np.int64)
    gmv90 = np.rint(gmv60 * rng.uniform(1.3, 1.8, n)).astype(np.int64)

    ages = rng.integers(0, spec.age_buckets, n)
    genders = rng.integers(0, spec.genders, n)
    cats = rng.integers(0, spec.shop_categories, n)
    dist = rng.uniform(0.0, 4000.0, n)

    return [
        Shopper(
            consumer_id=f"{spec.id_prefix}{i:06d}",
            base_spend_cents=int(base[i]),
            stretch_cents=int(stretch[i]),
            age_bucket=int(ages[i]),
            gender=int(genders[i]),
            shop_category=int(cats[i]),
            gmv_30d_cents=int(gmv30[i]),
            gmv_60d_cents=int(gmv60[i]),
            gmv_90d_cents=int(gmv90[i]),
            distance_to_shop_m=float(dist[i]),
        )
        for i in range(n)
    ]


def choose(
    menu: Sequence[Pair],
    shopper: Shopper,
    noise_scale: float,
    rng: np.random.Generator,
    stretch_utility_rate: float = 1.0,
    effort_cost_rate: float = 0.25,
) -> Optional[Pair]:
    """The pair this shopper triggers under the menu, or None.

    Draws one Gumbel noise term per option when noise_scale > 0; the
    stay option participates too, so a reachable discount is not a
    guaranteed trigger.
    """
    base = shopper.base_spend_cents
    reach = base + shopper.stretch_cents

    def noise() -> float:
        return float(rng.gumbel(0.0, noise_scale)) if noise_scale > 0 else 0.0

    stay_pair = None
    for p in menu:  # ascending thresholds: last one at or below base wins
        if p.threshold_cents <= base:
            stay_pair = p
    best_u = stretch_utility_rate * (stay_pair.discount_cents / 100.0 if stay_pair else 0.0)
    best_u += noise()
    best_spend, best_pair = base, stay_pair

    for p in menu:
        t = p.threshold_cents
        if not base < t <= reach:
            continue
        u = (
            stretch_utility_rate * (p.discount_cents / 100.0)
            - effort_cost_rate * ((t - base) / 100.0)
            + noise()
        )
        if u > best_u or (u == best_u and t < best_spend):
            best_u, best_spend, best_pair = u, t, p
    return best_pair
