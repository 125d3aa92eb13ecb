"""Canonical serialization for every interchange type.

One JSON object per line for collections, compact separators, sorted
keys. Identical values always produce identical bytes, which is what
lets the pipeline promise byte-identical artifacts for identical
(config, seed) inputs. Money fields carry a `_cents` suffix and are
plain integers.
"""

from __future__ import annotations

import json
from typing import Any, Iterable

from .domain import CampaignSet, ConsumerProfile, RuleSet, ThresholdDiscountPair
from .errors import DataError


def dumps_canonical(obj: Any) -> str:
    """Deterministic single-line JSON encoding."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


def pair_to_obj(p: ThresholdDiscountPair) -> dict:
    return {"threshold_cents": p.threshold_cents, "discount_cents": p.discount_cents}


def pair_from_obj(obj: dict) -> ThresholdDiscountPair:
    try:
        return ThresholdDiscountPair(
            threshold_cents=int(obj["threshold_cents"]),
            discount_cents=int(obj["discount_cents"]),
        )
    except (KeyError, TypeError, ValueError) as e:
        raise DataError(f"bad threshold-discount pair: {e}") from e


def campaign_set_to_obj(cs: CampaignSet) -> dict:
    return {"pairs": [pair_to_obj(p) for p in cs.pairs]}


def campaign_set_from_obj(obj: dict) -> CampaignSet:
    try:
        return CampaignSet.of(pair_from_obj(o) for o in obj["pairs"])
    except (KeyError, TypeError, ValueError) as e:
        raise DataError(f"bad campaign set: {e}") from e


def rules_to_obj(r: RuleSet) -> dict:
    return {
        "min_threshold_cents": r.min_threshold_cents,
        "max_threshold_cents": r.max_threshold_cents,
        "threshold_step_cents": r.threshold_step_cents,
        "discount_step_cents": r.discount_step_cents,
        "min_threshold_gap_cents": r.min_threshold_gap_cents,
        "require_monotone_discounts": r.require_monotone_discounts,
    }


def rules_from_obj(obj: dict) -> RuleSet:
    try:
        return RuleSet(
            min_threshold_cents=int(obj["min_threshold_cents"]),
            max_threshold_cents=int(obj["max_threshold_cents"]),
            threshold_step_cents=int(obj["threshold_step_cents"]),
            discount_step_cents=int(obj["discount_step_cents"]),
            min_threshold_gap_cents=int(obj.get("min_threshold_gap_cents", 500)),
            require_monotone_discounts=bool(obj.get("require_monotone_discounts", True)),
        )
    except (KeyError, TypeError, ValueError) as e:
        raise DataError(f"bad rule set: {e}") from e


def consumer_to_obj(c: ConsumerProfile) -> dict:
    return {
        "consumer_id": c.consumer_id,
        "base_spend_cents": c.base_spend_cents,
        "stretch_cents": c.stretch_cents,
        "age_bucket": c.age_bucket,
        "gender": c.gender,
        "shop_category": c.shop_category,
        "gmv_30d_cents": c.gmv_30d_cents,
        "gmv_60d_cents": c.gmv_60d_cents,
        "gmv_90d_cents": c.gmv_90d_cents,
        "distance_to_shop_m": c.distance_to_shop_m,
    }


def consumer_from_obj(obj: dict) -> ConsumerProfile:
    try:
        return ConsumerProfile(
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
        raise DataError(f"bad consumer profile: {e}") from e


def write_jsonl(path, objs: Iterable[dict]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for obj in objs:
            fh.write(dumps_canonical(obj))
            fh.write("\n")


def read_jsonl(path) -> list[dict]:
    """Parse a JSONL file; collects every malformed line before failing."""
    out = []
    bad: list[int] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                if not isinstance(obj, dict):
                    raise ValueError("not an object")
                out.append((lineno, obj))
            except ValueError:
                bad.append(lineno)
    if bad:
        raise DataError(f"malformed JSON on line(s) {', '.join(map(str, bad))}")
    return out
