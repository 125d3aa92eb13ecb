"""Feature assembly, written independently against the interchange contract.

The scorer's weight file fixes how features are built: nine dense
values standardized by stored mean/scale, three one-hot blocks, and
unary money encodings that gate the network elementwise. This module
re-derives all of it from the documented layout so a disagreement with
the recommender's assembler shows up as a conformance failure instead
of a silently shared bug.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import date
from typing import Sequence

import numpy as np

from .errors import DataError
from .simulate import Pair, Shopper, pair_from_obj, pair_to_obj

DENSE_SIZE = 9

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK = (1 << 64) - 1


def fnv1a64(data: bytes) -> int:
    h = _FNV_OFFSET
    for b in data:
        h = ((h ^ b) * _FNV_PRIME) & _MASK
    return h


def hash_bucket(identifier: str, buckets: int) -> int:
    if buckets <= 0:
        raise ValueError("bucket count must be positive")
    return fnv1a64(identifier.encode("utf-8")) % buckets


def unary_bits(value_cents: int, unit_cents: int, length: int) -> np.ndarray:
    """floor(value/unit) leading ones in a float64 vector of `length`."""
    if value_cents < 0:
        raise ValueError("cannot encode negative money")
    ones = min(value_cents // unit_cents, length)
    bits = np.zeros(length, dtype=np.float64)
    bits[:ones] = 1.0
    return bits


@dataclass(frozen=True)
class AssemblyParams:
    """The feature-assembly block of a scorer weight file."""

    hash_buckets: int
    shop_categories: int
    age_buckets: int
    genders: int
    encoding_unit_cents: int
    encoding_length: int
    dense_mean: tuple[float, ...]
    dense_scale: tuple[float, ...]

    def __post_init__(self):
        if len(self.dense_mean) != DENSE_SIZE or len(self.dense_scale) != DENSE_SIZE:
            raise DataError(f"standardization must cover {DENSE_SIZE} dense features")
        if any(s <= 0 for s in self.dense_scale):
            raise DataError("standardization scales must be positive")

    @property
    def sparse_size(self) -> int:
        return self.shop_categories + self.age_buckets + self.genders


def assembly_to_obj(a: AssemblyParams) -> dict:
    return {
        "hash_buckets": a.hash_buckets,
        "shop_categories": a.shop_categories,
        "age_buckets": a.age_buckets,
        "genders": a.genders,
        "encoding_unit_cents": a.encoding_unit_cents,
        "encoding_length": a.encoding_length,
        "dense_mean": list(a.dense_mean),
        "dense_scale": list(a.dense_scale),
    }


def assembly_from_obj(obj: dict) -> AssemblyParams:
    try:
        return AssemblyParams(
            hash_buckets=int(obj["hash_buckets"]),
            shop_categories=int(obj["shop_categories"]),
            age_buckets=int(obj["age_buckets"]),
            genders=int(obj["genders"]),
            encoding_unit_cents=int(obj["encoding_unit_cents"]),
            encoding_length=int(obj["encoding_length"]),
            dense_mean=tuple(float(x) for x in obj["dense_mean"]),
            dense_scale=tuple(float(x) for x in obj["dense_scale"]),
        )
    except (KeyError, TypeError, ValueError) as e:
        raise DataError(f"bad assembly block: {e}") from e


@dataclass(frozen=True)
class Bundle:
    """One scorer input: standardized dense, one-hots, target, context."""

    dense: tuple[float, ...]
    sparse_onehot: tuple[int, ...]
    target: Pair
    not_target: tuple[Pair, ...]


def raw_dense(
    shopper: Shopper, shop_id: str, city_id: str, target: Pair, as_of: date, params: AssemblyParams
) -> np.ndarray:
    return np.array(
        [
            float(as_of.timetuple().tm_yday),
            float(hash_bucket(shop_id, params.hash_buckets)),
            float(hash_bucket(city_id, params.hash_buckets)),
            float(hash_bucket(shopper.consumer_id, params.hash_buckets)),
            shopper.gmv_30d_cents / 100.0,
            shopper.gmv_60d_cents / 100.0,
            shopper.gmv_90d_cents / 100.0,
            target.threshold_cents / 100.0,
            target.discount_cents / 100.0,
        ],
        dtype=np.float64,
    )


def _one_hot(index: int, size: int, what: str) -> list[int]:
    if not 0 <= index < size:
        raise DataError(f"{what} code {index} outside [0, {size})")
    block = [0] * size
    block[index] = 1
    return block


def assemble(
    shopper: Shopper,
    shop_id: str,
    city_id: str,
    target: Pair,
    menu: Sequence[Pair],
    as_of: date,
    params: AssemblyParams,
) -> Bundle:
    if target not in menu:
        raise DataError("target pair must belong to the menu")
    raw = raw_dense(shopper, shop_id, city_id, target, as_of, params)
    dense = (raw - np.asarray(params.dense_mean)) / np.asarray(params.dense_scale)
    sparse = (
        _one_hot(shopper.shop_category, params.shop_categories, "shop category")
        + _one_hot(shopper.age_bucket, params.age_buckets, "age bucket")
        + _one_hot(shopper.gender, params.genders, "gender")
    )
    return Bundle(
        dense=tuple(float(x) for x in dense),
        sparse_onehot=tuple(sparse),
        target=target,
        not_target=tuple(p for p in menu if p != target),
    )


def bundle_to_obj(b: Bundle) -> dict:
    return {
        "dense": list(b.dense),
        "sparse_onehot": list(b.sparse_onehot),
        "target": pair_to_obj(b.target),
        "not_target": [pair_to_obj(p) for p in b.not_target],
    }


def bundle_from_obj(obj: dict) -> Bundle:
    try:
        return Bundle(
            dense=tuple(float(x) for x in obj["dense"]),
            sparse_onehot=tuple(int(x) for x in obj["sparse_onehot"]),
            target=pair_from_obj(obj["target"]),
            not_target=tuple(pair_from_obj(o) for o in obj["not_target"]),
        )
    except (KeyError, TypeError, ValueError) as e:
        raise DataError(f"bad feature bundle: {e}") from e
