"""Consumer populations: synthetic generation and file ingestion."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .domain import ConsumerProfile
from .errors import ConfigError, DataError
from .serial import consumer_from_obj, read_jsonl

log = logging.getLogger(__name__)

DEFAULT_GEO_RADIUS_M = 3000.0


@dataclass(frozen=True)
class SynthesisSpec:
    """Knobs for the synthetic shopper generator.

    Base spend is log-normal around mean_spend; stretch is a noisy
    proportion of base spend. The defaults keep instances interesting:
    roughly a quarter of shoppers can reach a typical promotion
    threshold by stretching, the rest either trigger it outright or
    cannot be moved.
    """

    count: int
    mean_spend_cents: int = 4000
    spend_sigma: float = 0.35
    stretch_ratio: float = 0.4
    stretch_sigma: float = 0.5
    shop_categories: int = 4
    age_buckets: int = 6
    genders: int = 3
    max_distance_m: float = 5000.0
    id_prefix: str = "c"

    def __post_init__(self):
        if self.count <= 0:
            raise ConfigError("population count must be positive")
        if self.mean_spend_cents <= 0:
            raise ConfigError("mean spend must be positive")
        if self.spend_sigma < 0 or self.stretch_sigma < 0 or self.stretch_ratio < 0:
            raise ConfigError("spread parameters must be non-negative")
        if min(self.shop_categories, self.age_buckets, self.genders) <= 0:
            raise ConfigError("category sizes must be positive")


def synthesize_population(spec: SynthesisSpec, seed: int) -> list[ConsumerProfile]:
    """Deterministic synthetic population for a (spec, seed) pair.

    Log-normal base spend calibrated so the sample mean converges on
    spec.mean_spend_cents; gmv totals grow with the trailing window so
    the 30/60/90 ordering always holds.
    """
    rng = np.random.default_rng(seed)
    n = spec.count
    mu = np.log(spec.mean_spend_cents) - spec.spend_sigma**2 / 2.0
    base = rng.lognormal(mean=mu, sigma=spec.spend_sigma, size=n)
    base_cents = np.maximum(np.rint(base).astype(np.int64), 100)

    stretch_noise = rng.lognormal(mean=-spec.stretch_sigma**2 / 2.0,
                                  sigma=spec.stretch_sigma, size=n)
    stretch_cents = np.rint(base_cents * spec.stretch_ratio * stretch_noise).astype(np.int64)
    stretch_cents = np.maximum(stretch_cents, 0)

    ages = rng.integers(0, spec.age_buckets, size=n)
    genders = rng.integers(0, spec.genders, size=n)
    categories = rng.integers(0, spec.shop_categories, size=n)
    distance = rng.uniform(0.0, spec.max_distance_m, size=n)

    # trailing gross merchandise value: each wider window adds more
    visits = rng.poisson(lam=3.0, size=n) + 1
    gmv30 = np.rint(base_cents * visits * rng.uniform(0.5, 1.5, size=n)).astype(np.int64)
    gmv60 = gmv30 + np.rint(gmv30 * rng.uniform(0.6, 1.4, size=n)).astype(np.int64)
    gmv90 = gmv60 + np.rint(gmv30 * rng.uniform(0.6, 1.4, size=n)).astype(np.int64)

    out = []
    for i in range(n):
        out.append(
            ConsumerProfile(
                consumer_id=f"{spec.id_prefix}{i:06d}",
                base_spend_cents=int(base_cents[i]),
                stretch_cents=int(stretch_cents[i]),
                age_bucket=int(ages[i]),
                gender=int(genders[i]),
                shop_category=int(categories[i]),
                gmv_30d_cents=int(gmv30[i]),
                gmv_60d_cents=int(gmv60[i]),
                gmv_90d_cents=int(gmv90[i]),
                distance_to_shop_m=float(distance[i]),
            )
        )
    return out


def ingest_population(
    path, geo_radius_m: Optional[float] = DEFAULT_GEO_RADIUS_M
) -> list[ConsumerProfile]:
    """Load consumers from a JSONL file, keeping nearby shoppers only.

    Every malformed or invalid row is collected and reported with its
    line number in one error. Row order is preserved. An empty file is
    legal but logged loudly since it usually means a broken upstream
    export.
    """
    rows = read_jsonl(path)
    consumers = []
    bad: list[str] = []
    for lineno, obj in rows:
        try:
            consumers.append((lineno, consumer_from_obj(obj)))
        except DataError as e:
            bad.append(f"line {lineno}: {e}")
    if bad:
        raise DataError("invalid consumer rows: " + "; ".join(bad))
    if not consumers:
        log.warning("population file %s contained no consumers", path)
        return []
    if geo_radius_m is None:
        return [c for _, c in consumers]
    kept = [c for _, c in consumers if c.distance_to_shop_m <= geo_radius_m]
    dropped = len(consumers) - len(kept)
    if dropped:
        log.info("geo filter dropped %d of %d consumers (radius %.0f m)",
                 dropped, len(consumers), geo_radius_m)
    return kept
