"""Core value types for threshold-discount promotions.

Money is integer cents everywhere. Floats never touch revenue math;
they are confined to utilities and model scores. All value types here
are frozen: code downstream shares them freely without copying.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass
from typing import Iterable, Optional

Money = int  # integer cents, non-negative unless stated otherwise


def dollars(amount: float) -> Money:
    """Convenience constructor: dollars(29.5) -> 2950 cents."""
    return round(amount * 100)


def money_str(cents: Money) -> str:
    sign = "-" if cents < 0 else ""
    cents = abs(cents)
    return f"{sign}${cents // 100}.{cents % 100:02d}"


@dataclass(frozen=True, order=True)
class ThresholdDiscountPair:
    """Spend at least `threshold`, get `discount` off the bill.

    Requires 0 <= discount <= threshold and threshold > 0.
    """

    threshold_cents: Money
    discount_cents: Money

    def __post_init__(self):
        if self.threshold_cents <= 0:
            raise ValueError(f"threshold must be positive, got {self.threshold_cents}")
        if not 0 <= self.discount_cents <= self.threshold_cents:
            raise ValueError(
                f"discount {self.discount_cents} outside [0, {self.threshold_cents}]"
            )

    def __str__(self):
        return f"<{money_str(self.threshold_cents)},{money_str(self.discount_cents)}>"


@dataclass(frozen=True)
class CampaignSet:
    """A menu of pairs, sorted ascending by threshold, thresholds distinct.

    Only the highest threshold not exceeding the gross basket triggers,
    so two pairs on the same threshold would be ambiguous and are
    rejected outright.
    """

    pairs: tuple[ThresholdDiscountPair, ...]

    def __post_init__(self):
        thresholds = [p.threshold_cents for p in self.pairs]
        if sorted(thresholds) != thresholds:
            raise ValueError("pairs must be sorted ascending by threshold")
        if len(set(thresholds)) != len(thresholds):
            raise ValueError("pairs must have distinct thresholds")

    @staticmethod
    def of(pairs: Iterable[ThresholdDiscountPair]) -> "CampaignSet":
        """Build from any iterable; sorts by threshold first."""
        return CampaignSet(tuple(sorted(pairs, key=lambda p: p.threshold_cents)))

    @staticmethod
    def empty() -> "CampaignSet":
        return _EMPTY_SET

    def __len__(self):
        return len(self.pairs)

    def __iter__(self):
        return iter(self.pairs)

    def __contains__(self, pair):
        return pair in self.pairs

    def thresholds(self) -> tuple[Money, ...]:
        return tuple(p.threshold_cents for p in self.pairs)

    def with_pair(self, pair: ThresholdDiscountPair) -> "CampaignSet":
        return CampaignSet.of(self.pairs + (pair,))

    def without_pair(self, pair: ThresholdDiscountPair) -> "CampaignSet":
        return CampaignSet(tuple(p for p in self.pairs if p != pair))

    def __str__(self):
        return "{" + ", ".join(str(p) for p in self.pairs) + "}"


_EMPTY_SET = CampaignSet(())


def triggered_pair(
    campaigns: CampaignSet, basket_cents: Money
) -> Optional[ThresholdDiscountPair]:
    """The pair a gross basket actually earns, or None.

    The highest threshold not exceeding the basket wins; the consumer
    never stacks discounts. Monotone in the basket: spending more never
    moves the trigger to a lower threshold.
    """
    ts = [p.threshold_cents for p in campaigns.pairs]
    i = bisect.bisect_right(ts, basket_cents)
    if i == 0:
        return None
    return campaigns.pairs[i - 1]


def payable_amount(campaigns: CampaignSet, basket_cents: Money) -> Money:
    """Gross basket minus whatever discount the basket triggered."""
    hit = triggered_pair(campaigns, basket_cents)
    return basket_cents - (hit.discount_cents if hit else 0)


@dataclass(frozen=True)
class RuleSet:
    """Business constraints a recommended menu must satisfy.

    threshold_step / discount_step define the candidate grid; the gap
    and monotonicity rules apply to whole menus.
    """

    min_threshold_cents: Money
    max_threshold_cents: Money
    threshold_step_cents: Money
    discount_step_cents: Money
    min_threshold_gap_cents: Money = 500
    require_monotone_discounts: bool = True

    def __post_init__(self):
        if self.min_threshold_cents <= 0:
            raise ValueError("min_threshold must be positive")
        if self.max_threshold_cents < self.min_threshold_cents:
            raise ValueError("max_threshold below min_threshold")
        if self.threshold_step_cents <= 0 or self.discount_step_cents <= 0:
            raise ValueError("grid steps must be positive")
        if self.min_threshold_gap_cents < 0:
            raise ValueError("threshold gap must be non-negative")


def _sorted_pairs_ok(pairs: list[ThresholdDiscountPair], rules: RuleSet) -> bool:
    # pairs sorted ascending by threshold, thresholds assumed distinct
    for prev, cur in zip(pairs, pairs[1:]):
        if cur.threshold_cents - prev.threshold_cents < rules.min_threshold_gap_cents:
            return False
        if rules.require_monotone_discounts and cur.discount_cents <= prev.discount_cents:
            return False
    return True


def satisfies_rules(campaigns: CampaignSet, rules: RuleSet) -> bool:
    """Whole-menu feasibility: threshold gaps and discount monotonicity.

    Vacuously true for the empty menu and for singletons. Distinctness
    of thresholds is already enforced by CampaignSet itself.
    """
    return _sorted_pairs_ok(list(campaigns.pairs), rules)


@dataclass(frozen=True)
class ConsumerProfile:
    """One shopper as the optimizer sees them.

    base_spend is what they would spend with no promotion; stretch is
    how much extra they could be talked into. Demographics are small
    category codes; gmv fields are trailing spend totals.
    """

    consumer_id: str
    base_spend_cents: Money
    stretch_cents: Money
    age_bucket: int
    gender: int
    shop_category: int
    gmv_30d_cents: Money
    gmv_60d_cents: Money
    gmv_90d_cents: Money
    distance_to_shop_m: float

    def __post_init__(self):
        if self.base_spend_cents < 0 or self.stretch_cents < 0:
            raise ValueError("spend amounts must be non-negative")
        if min(self.age_bucket, self.gender, self.shop_category) < 0:
            raise ValueError("category codes must be non-negative")
        if min(self.gmv_30d_cents, self.gmv_60d_cents, self.gmv_90d_cents) < 0:
            raise ValueError("gmv totals must be non-negative")
        if self.distance_to_shop_m < 0:
            raise ValueError("distance must be non-negative")
