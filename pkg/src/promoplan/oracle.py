"""Revenue oracles: how much a menu of promotions actually earns.

The simulator is the ground truth used in tests and benchmarks. Each
consumer picks, from a small option set, the spend that maximizes a
linear utility of discount gained versus stretch effort, with optional
Gumbel noise. Noise is keyed on (seed, consumer, menu, option), never
drawn from shared state, so results are independent of evaluation
order and worker count.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Protocol, Sequence, runtime_checkable

import numpy as np

from .domain import CampaignSet, ConsumerProfile, Money, ThresholdDiscountPair, triggered_pair
from .errors import DataError
from .rng import gumbel, gumbel_vec, mix64, mix64_vec, string_key

_STAY_TAG = 0  # option tag for "spend the base amount"; thresholds are > 0


@dataclass(frozen=True)
class ChoiceModelParams:
    """Utility weights for the simulated consumer.

    utility = stretch_utility_rate * discount
            - effort_cost_rate * (spend - base_spend)
            + Gumbel(noise_scale)
    with money expressed in whole currency units.
    """

    stretch_utility_rate: float = 1.0
    effort_cost_rate: float = 0.25
    noise_scale: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.stretch_utility_rate < 0 or self.effort_cost_rate < 0:
            raise ValueError("utility rates must be non-negative")
        if self.noise_scale < 0:
            raise ValueError("noise scale must be non-negative")


@dataclass(frozen=True)
class ChoiceOutcome:
    """What one consumer decided to do under a menu."""

    spend_cents: Money
    pair: Optional[ThresholdDiscountPair]

    @property
    def discount_cents(self) -> Money:
        return self.pair.discount_cents if self.pair else 0

    @property
    def net_revenue_cents(self) -> Money:
        return self.spend_cents - self.discount_cents


def menu_key(menu: CampaignSet) -> int:
    """Stable 64-bit key of a menu, for noise derivation."""
    parts = [len(menu)]
    for p in menu.pairs:
        parts.append(p.threshold_cents)
        parts.append(p.discount_cents)
    return mix64(*parts)


def choice_simulate(
    menu: CampaignSet, consumer: ConsumerProfile, params: ChoiceModelParams
) -> ChoiceOutcome:
    """Pick the consumer's spend under a menu.

    Options are: keep the base spend, or stretch up to any threshold
    within reach (base < t <= base + stretch). Spending between
    thresholds is never better than the nearest option below, so the
    option set is exhaustive. Ties go to the smaller spend.
    """
    base = consumer.base_spend_cents
    reach = base + consumer.stretch_cents
    su = params.stretch_utility_rate
    ec = params.effort_cost_rate
    mkey = menu_key(menu)
    ckey = string_key(consumer.consumer_id)

    def noise(tag: int) -> float:
        return gumbel(mix64(params.seed, ckey, mkey, tag), params.noise_scale)

    stay_hit = triggered_pair(menu, base)
    stay_disc = stay_hit.discount_cents if stay_hit else 0
    best_u = su * (stay_disc / 100.0) + noise(_STAY_TAG)
    best = ChoiceOutcome(base, stay_hit)

    for p in menu.pairs:
        t = p.threshold_cents
        if not (base < t <= reach):
            continue
        u = su * (p.discount_cents / 100.0) - ec * ((t - base) / 100.0) + noise(t)
        if u > best_u or (u == best_u and t < best.spend_cents):
            best_u = u
            best = ChoiceOutcome(t, p)
    return best


def _evaluate_chunk(
    menu: CampaignSet, chunk: Sequence[ConsumerProfile], params: ChoiceModelParams
) -> int:
    """Vectorized net revenue over one population chunk.

    Mirrors choice_simulate exactly: identical utility arithmetic and
    identical keyed noise, just batched across consumers.
    """
    if not chunk:
        return 0
    bases = np.array([c.base_spend_cents for c in chunk], dtype=np.int64)
    if not menu.pairs:
        return int(bases.sum())
    reaches = bases + np.array([c.stretch_cents for c in chunk], dtype=np.int64)
    ts = np.array([p.threshold_cents for p in menu.pairs], dtype=np.int64)
    ds = np.array([p.discount_cents for p in menu.pairs], dtype=np.int64)
    su = params.stretch_utility_rate
    ec = params.effort_cost_rate

    n = len(chunk)
    m = len(ts)

    if params.noise_scale == 0.0:
        # keyed Gumbel noise is exactly zero at scale 0; skip deriving it
        def noise(tag: int) -> float:
            return 0.0
    else:
        ckeys = np.array([string_key(c.consumer_id) for c in chunk], dtype=np.uint64)
        mkey = menu_key(menu)

        def noise(tag: int) -> np.ndarray:
            return gumbel_vec(mix64_vec(params.seed, ckeys, mkey, tag), params.noise_scale)

    # row 0 is the stay option, rows 1..m are stretch-to-threshold options
    stay_idx = np.searchsorted(ts, bases, side="right") - 1
    stay_disc = np.where(stay_idx >= 0, ds[np.clip(stay_idx, 0, m - 1)], 0)

    utils = np.empty((m + 1, n), dtype=np.float64)
    spends = np.empty((m + 1, n), dtype=np.int64)
    discs = np.empty((m + 1, n), dtype=np.int64)
    utils[0] = su * (stay_disc / 100.0) + noise(_STAY_TAG)
    spends[0] = bases
    discs[0] = stay_disc
    for j in range(m):
        t = int(ts[j])
        reachable = (bases < t) & (t <= reaches)
        u = su * (int(ds[j]) / 100.0) - ec * ((t - bases) / 100.0) + noise(t)
        utils[j + 1] = np.where(reachable, u, -np.inf)
        spends[j + 1] = t
        discs[j + 1] = ds[j]

    best_u = utils.max(axis=0)
    tied = utils == best_u
    # among utility ties prefer the smaller spend; spends are distinct
    # across options for one consumer so the choice is unambiguous
    spend_masked = np.where(tied, spends, np.iinfo(np.int64).max)
    row = spend_masked.argmin(axis=0)
    cols = np.arange(n)
    net = spends[row, cols] - discs[row, cols]
    return int(net.sum())


def simulator_evaluate(
    menu: CampaignSet,
    population: Sequence[ConsumerProfile],
    params: ChoiceModelParams,
    workers: int = 1,
) -> Money:
    """Total net revenue of a menu over a population, in cents.

    Per-consumer contributions are exact integers, so the reduction is
    order-free and the result is identical for any worker count.
    """
    if workers <= 1 or len(population) < 2 * workers:
        return _evaluate_chunk(menu, population, params)
    chunks = [list(population[i::workers]) for i in range(workers)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(lambda ch: _evaluate_chunk(menu, ch, params), chunks))
    return sum(parts)


@runtime_checkable
class RevenueOracle(Protocol):
    """Anything the optimizer can ask for menu revenue."""

    def evaluate(self, menu: CampaignSet, population: Sequence[ConsumerProfile]) -> Money:
        ...

    def evaluate_single(
        self,
        target: ThresholdDiscountPair,
        consumer: ConsumerProfile,
        menu_context: CampaignSet,
    ) -> float:
        ...


@dataclass
class SimulatorOracle:
    """Choice-model ground truth behind the RevenueOracle interface."""

    params: ChoiceModelParams
    workers: int = 1

    name = "simulator"

    def evaluate(self, menu, population) -> Money:
        return simulator_evaluate(menu, population, self.params, self.workers)

    def evaluate_single(self, target, consumer, menu_context) -> float:
        context = (
            menu_context.without_pair(target) if target in menu_context else menu_context
        )
        with_target = context.with_pair(target)
        got = choice_simulate(with_target, consumer, self.params).net_revenue_cents
        without = choice_simulate(context, consumer, self.params).net_revenue_cents
        return float(got - without)


def table_key(menu: CampaignSet) -> str:
    return ";".join(f"{p.threshold_cents},{p.discount_cents}" for p in menu.pairs)


@dataclass
class TabularOracle:
    """Plain lookup table from menu to revenue, for tiny ground sets.

    Used when every subset of interest has been evaluated up front;
    search algorithms then run at dictionary speed.
    """

    table: dict[str, Money]

    name = "tabular"

    def evaluate(self, menu, population=()) -> Money:
        key = table_key(menu)
        if key not in self.table:
            raise DataError(f"menu {menu} missing from revenue table")
        return self.table[key]

    def evaluate_single(self, target, consumer, menu_context) -> float:
        raise NotImplementedError("tabular oracle has no per-consumer scores")

    @staticmethod
    def build(
        menus: Sequence[CampaignSet],
        oracle: "RevenueOracle",
        population: Sequence[ConsumerProfile],
    ) -> "TabularOracle":
        return TabularOracle({table_key(m): oracle.evaluate(m, population) for m in menus})
