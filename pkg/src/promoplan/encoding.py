"""Feature encoding for the learned revenue scorer.

Monetary inputs become isotonic bit vectors: value v over unit u fills
the first floor(v/u) slots with ones. The representation preserves
order (larger amounts have strictly more ones until the clamp) and
lets the scorer gate activations by "how much money" elementwise.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import date

import numpy as np

from .domain import CampaignSet, ConsumerProfile, Money, ThresholdDiscountPair
from .errors import DataError
from .rng import fnv1a64

DENSE_SIZE = 9  # day-of-year, 3 id buckets, 3 gmv totals, target threshold+discount


class ClampCounter:
    """Counts silent saturations in isotonic_encode, for diagnostics."""

    def __init__(self):
        self.count = 0

    def reset(self):
        self.count = 0


clamp_counter = ClampCounter()


@dataclass(frozen=True)
class IsotonicVector:
    """Monotone non-increasing 0/1 vector; ones first, then zeros."""

    bits: np.ndarray  # uint8, immutable by convention

    def __post_init__(self):
        object.__setattr__(self, "bits", np.asarray(self.bits, dtype=np.uint8))
        self.bits.setflags(write=False)
        d = np.diff(self.bits.astype(np.int8))
        if d.size and d.max() > 0:
            raise ValueError("bits must be non-increasing")

    @property
    def popcount(self) -> int:
        return int(self.bits.sum())

    def as_floats(self) -> np.ndarray:
        return self.bits.astype(np.float64)

    def __len__(self):
        return len(self.bits)


def isotonic_encode(value_cents: Money, unit_cents: Money = 100, length: int = 500) -> IsotonicVector:
    """Encode a money amount as leading ones over a fixed-length vector.

    Values past length*unit saturate to all ones; saturation is legal
    but tallied on the module clamp counter so callers can notice a
    badly sized encoding.
    """
    if value_cents < 0:
        raise ValueError("cannot encode negative money")
    if unit_cents <= 0 or length <= 0:
        raise ValueError("unit and length must be positive")
    ones = value_cents // unit_cents
    if ones > length:
        clamp_counter.count += 1
        ones = length
    bits = np.zeros(length, dtype=np.uint8)
    bits[:ones] = 1
    return IsotonicVector(bits)


def hash_bucket(identifier: str, buckets: int) -> int:
    """Stable id -> small int, fnv-1a over utf-8 mod bucket count."""
    if buckets <= 0:
        raise ValueError("bucket count must be positive")
    return fnv1a64(identifier.encode("utf-8")) % buckets


@dataclass(frozen=True)
class ShopContext:
    """Where and when a recommendation is being made."""

    shop_id: str
    city_id: str


@dataclass(frozen=True)
class AssemblyConfig:
    """Everything needed to turn raw entities into model inputs.

    Shipped inside the scorer weight file so the trainer and this
    package assemble features identically. dense_mean/dense_scale are
    the per-feature affine standardization parameters.
    """

    hash_buckets: int
    shop_categories: int
    age_buckets: int
    genders: int
    encoding_unit_cents: Money
    encoding_length: int
    dense_mean: tuple[float, ...]
    dense_scale: tuple[float, ...]

    def __post_init__(self):
        if len(self.dense_mean) != DENSE_SIZE or len(self.dense_scale) != DENSE_SIZE:
            raise ValueError(f"standardization must cover {DENSE_SIZE} dense features")
        if any(s <= 0 for s in self.dense_scale):
            raise ValueError("standardization scales must be positive")
        if min(self.hash_buckets, self.shop_categories, self.age_buckets, self.genders) <= 0:
            raise ValueError("category sizes must be positive")

    @property
    def sparse_size(self) -> int:
        return self.shop_categories + self.age_buckets + self.genders


@dataclass(frozen=True)
class FeatureBundle:
    """Model input for one (consumer, target pair, menu) query.

    dense is already standardized; sparse_onehot is the concatenated
    shop-category / age / gender indicator block; not_target holds the
    rest of the menu in ascending threshold order.
    """

    dense: tuple[float, ...]
    sparse_onehot: tuple[int, ...]
    target: ThresholdDiscountPair
    not_target: tuple[ThresholdDiscountPair, ...]


def _one_hot(index: int, size: int, what: str) -> list[int]:
    if not 0 <= index < size:
        raise DataError(f"{what} code {index} outside [0, {size})")
    block = [0] * size
    block[index] = 1
    return block


def assemble_features(
    consumer: ConsumerProfile,
    shop: ShopContext,
    target: ThresholdDiscountPair,
    menu: CampaignSet,
    as_of: date,
    cfg: AssemblyConfig,
) -> FeatureBundle:
    """Build the scorer input for one target pair within its menu.

    The target must belong to the menu; everything else in the menu
    becomes the not-target context. Pure: identical arguments yield an
    identical bundle.
    """
    if target not in menu:
        raise DataError(f"target {target} not in menu {menu}")

    raw = np.array(
        [
            float(as_of.timetuple().tm_yday),
            float(hash_bucket(shop.shop_id, cfg.hash_buckets)),
            float(hash_bucket(shop.city_id, cfg.hash_buckets)),
            float(hash_bucket(consumer.consumer_id, cfg.hash_buckets)),
            consumer.gmv_30d_cents / 100.0,
            consumer.gmv_60d_cents / 100.0,
            consumer.gmv_90d_cents / 100.0,
            target.threshold_cents / 100.0,
            target.discount_cents / 100.0,
        ],
        dtype=np.float64,
    )
    dense = (raw - np.array(cfg.dense_mean)) / np.array(cfg.dense_scale)

    sparse = (
        _one_hot(consumer.shop_category, cfg.shop_categories, "shop category")
        + _one_hot(consumer.age_bucket, cfg.age_buckets, "age bucket")
        + _one_hot(consumer.gender, cfg.genders, "gender")
    )

    rest = tuple(p for p in menu.pairs if p != target)
    return FeatureBundle(
        dense=tuple(float(x) for x in dense),
        sparse_onehot=tuple(sparse),
        target=target,
        not_target=rest,
    )


# --- bundle serialization (interchange with the trainer) ---------------


def bundle_to_obj(b: FeatureBundle) -> dict:
    from .serial import pair_to_obj

    return {
        "dense": list(b.dense),
        "sparse_onehot": list(b.sparse_onehot),
        "target": pair_to_obj(b.target),
        "not_target": [pair_to_obj(p) for p in b.not_target],
    }


def bundle_from_obj(obj: dict) -> FeatureBundle:
    from .serial import pair_from_obj

    try:
        return FeatureBundle(
            dense=tuple(float(x) for x in obj["dense"]),
            sparse_onehot=tuple(int(x) for x in obj["sparse_onehot"]),
            target=pair_from_obj(obj["target"]),
            not_target=tuple(pair_from_obj(o) for o in obj["not_target"]),
        )
    except (KeyError, TypeError, ValueError) as e:
        raise DataError(f"bad feature bundle: {e}") from e
