"""Candidate generation, rule filtering, and menu search.

Three search strategies over the same rule-filtered candidate
sequence: exhaustive enumeration (small instances only), marginal
greedy, and the randomized double-greedy pass that carries a
half-of-optimum guarantee in expectation for non-negative submodular
revenue functions even when revenue is non-monotone.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass, replace
from typing import Optional, Sequence

from .domain import CampaignSet, Money, RuleSet, ThresholdDiscountPair, _sorted_pairs_ok
from .errors import DataError, RefusalError
from .oracle import RevenueOracle
from .rng import mix64, unit_float

POOL_CAP_DEFAULT = 50_000
EXHAUSTIVE_CANDIDATE_LIMIT = 24
SUBMODULARITY_CANDIDATE_LIMIT = 12

_USM_STREAM = 0x75736D  # "usm"
_TRIAL_STREAM = 0x747269  # "tri"


@dataclass(frozen=True)
class PoolEntry:
    pair: ThresholdDiscountPair
    revenue_cents: Money


@dataclass(frozen=True)
class CandidatePool:
    """Candidate pairs, optionally carrying marginal revenue scores."""

    entries: tuple[PoolEntry, ...]
    sorted_by_revenue: bool = False
    zero_discount_skipped: int = 0

    def __post_init__(self):
        pairs = [e.pair for e in self.entries]
        if len(set(pairs)) != len(pairs):
            raise ValueError("pool entries must be distinct pairs")
        if self.sorted_by_revenue:
            revs = [e.revenue_cents for e in self.entries]
            if any(a < b for a, b in zip(revs, revs[1:])):
                raise ValueError("sorted pool must have non-increasing revenue")

    def pairs(self) -> tuple[ThresholdDiscountPair, ...]:
        return tuple(e.pair for e in self.entries)

    def __len__(self):
        return len(self.entries)


@dataclass(frozen=True)
class UsmStep:
    pair: ThresholdDiscountPair
    marginal_add_cents: Money  # a_i, signed
    marginal_drop_cents: Money  # b_i, signed
    probability: float
    added: bool
    x_size: int
    y_size: int


@dataclass(frozen=True)
class UsmTrace:
    steps: tuple[UsmStep, ...]
    final_set: CampaignSet
    seed: int


@dataclass(frozen=True)
class OptimizationResult:
    """Outcome of one search run, ready for persistence."""

    method: str
    menu: CampaignSet
    revenue_cents: Money
    oracle_name: str = ""
    seed: Optional[int] = None
    config_hash: str = ""
    wall_time_s: float = 0.0


@dataclass(frozen=True)
class SubmodularityReport:
    candidate_count: int
    total_triples: int
    violations: int
    worst_violation_cents: Money
    min_value_cents: Money

    @property
    def is_submodular(self) -> bool:
        return self.violations == 0

    @property
    def is_nonnegative(self) -> bool:
        return self.min_value_cents >= 0


def generate_candidates(rules: RuleSet, cap: int = POOL_CAP_DEFAULT) -> CandidatePool:
    """Grid of every threshold/discount combination the rules allow.

    Zero-discount pairs would be no-ops, so they are skipped but
    tallied. The pool size is checked arithmetically before any
    enumeration so an absurd grid fails fast.
    """
    thresholds = range(
        rules.min_threshold_cents,
        rules.max_threshold_cents + 1,
        rules.threshold_step_cents,
    )
    total = sum(t // rules.discount_step_cents for t in thresholds)
    if total > cap:
        raise RefusalError(f"candidate pool would hold {total} pairs, cap is {cap}")
    entries = []
    skipped = 0
    for t in thresholds:
        skipped += 1  # the discount-0 grid point
        for d in range(rules.discount_step_cents, t + 1, rules.discount_step_cents):
            entries.append(PoolEntry(ThresholdDiscountPair(t, d), 0))
    return CandidatePool(tuple(entries), sorted_by_revenue=False, zero_discount_skipped=skipped)


def score_candidates(
    pool: CandidatePool, population, oracle: RevenueOracle
) -> CandidatePool:
    """Attach each pair's marginal revenue: f({pair}) − f(∅).

    The baseline subtraction matters for oracles whose empty-menu value
    is the organic spend rather than zero; scores then measure what the
    campaign itself adds.
    """
    if not pool.entries:
        raise DataError("cannot score an empty candidate pool")
    baseline = oracle.evaluate(CampaignSet.empty(), population)
    entries = tuple(
        PoolEntry(e.pair, oracle.evaluate(CampaignSet.of([e.pair]), population) - baseline)
        for e in pool.entries
    )
    return replace(pool, entries=entries, sorted_by_revenue=False)


def filter_by_rules(pool: CandidatePool, rules: RuleSet) -> CandidatePool:
    """One descending-revenue scan keeping entries that fit the rules.

    An entry is accepted iff the already-accepted set plus the entry
    still satisfies every rule, so the output as a whole is feasible
    and, because dropping pairs never breaks gap or monotonicity rules,
    so is each of its subsets. Output keeps acceptance order.
    """
    ranked = sorted(
        pool.entries,
        key=lambda e: (-e.revenue_cents, e.pair.threshold_cents, e.pair.discount_cents),
    )
    accepted: list[PoolEntry] = []
    accepted_sorted: list[ThresholdDiscountPair] = []
    for entry in ranked:
        tentative = sorted(
            accepted_sorted + [entry.pair], key=lambda p: p.threshold_cents
        )
        thresholds = [p.threshold_cents for p in tentative]
        if len(set(thresholds)) != len(thresholds):
            continue
        if not _sorted_pairs_ok(tentative, rules):
            continue
        accepted.append(entry)
        accepted_sorted = tentative
    return CandidatePool(tuple(accepted), sorted_by_revenue=True,
                         zero_discount_skipped=pool.zero_discount_skipped)


class _RevenueCache:
    """Memoizes oracle evaluations per search run, keyed by menu."""

    def __init__(self, oracle: RevenueOracle, population):
        self.oracle = oracle
        self.population = population
        self._seen: dict[frozenset, Money] = {}

    def value(self, pairs: frozenset) -> Money:
        if pairs not in self._seen:
            menu = CampaignSet.of(pairs)
            self._seen[pairs] = self.oracle.evaluate(menu, self.population)
        return self._seen[pairs]


def _candidate_pairs(candidates) -> tuple[ThresholdDiscountPair, ...]:
    if isinstance(candidates, CandidatePool):
        return candidates.pairs()
    return tuple(candidates)


def _oracle_name(oracle) -> str:
    return getattr(oracle, "name", type(oracle).__name__)


def greedy_search(
    candidates,
    population,
    oracle: RevenueOracle,
    k: Optional[int] = None,
    rules: Optional[RuleSet] = None,
) -> OptimizationResult:
    """Add the best positive-marginal candidate until nothing helps.

    Re-evaluates the oracle against the tentative set at every round,
    so cannibalization between pairs is respected: a pair whose
    presence lowers total revenue is never added. Deterministic; ties
    on marginal go to the earlier candidate in sequence order.
    """
    pairs = _candidate_pairs(candidates)
    cache = _RevenueCache(oracle, population)
    t0 = time.perf_counter()
    chosen: frozenset = frozenset()
    current = cache.value(chosen)
    remaining = list(pairs)
    while remaining and (k is None or len(chosen) < k):
        best_pair = None
        best_value = current
        for p in remaining:
            tentative = chosen | {p}
            menu_pairs = sorted(tentative, key=lambda q: q.threshold_cents)
            ts = [q.threshold_cents for q in menu_pairs]
            if len(set(ts)) != len(ts):
                continue
            if rules is not None and not _sorted_pairs_ok(menu_pairs, rules):
                continue
            value = cache.value(frozenset(tentative))
            if value > best_value:
                best_value = value
                best_pair = p
        if best_pair is None:
            break
        chosen = chosen | {best_pair}
        current = best_value
        remaining.remove(best_pair)
    return OptimizationResult(
        method="greedy",
        menu=CampaignSet.of(chosen),
        revenue_cents=current,
        oracle_name=_oracle_name(oracle),
        wall_time_s=time.perf_counter() - t0,
    )


def randomized_usm(
    candidates, population, oracle: RevenueOracle, seed: int
) -> tuple[OptimizationResult, UsmTrace]:
    """One randomized double-greedy pass over the candidate sequence.

    X starts empty and only grows; Y starts as the whole sequence and
    only shrinks. For each candidate the add/drop marginals a_i, b_i
    are clipped at zero and the candidate is added with probability
    a'/(a'+b'), dropped otherwise; the degenerate a'=b'=0 case adds.
    For non-negative submodular revenue the expected result is at
    least half the optimum.
    """
    pairs = _candidate_pairs(candidates)
    cache = _RevenueCache(oracle, population)
    t0 = time.perf_counter()
    x: frozenset = frozenset()
    y: frozenset = frozenset(pairs)
    steps = []
    for i, c in enumerate(pairs):
        a = cache.value(x | {c}) - cache.value(x)
        b = cache.value(y - {c}) - cache.value(y)
        a_pos = max(a, 0)
        b_pos = max(b, 0)
        if a_pos + b_pos == 0:
            prob = 1.0
        else:
            prob = a_pos / (a_pos + b_pos)
        draw = unit_float(
            mix64(seed, _USM_STREAM, i, c.threshold_cents, c.discount_cents)
        )
        added = draw < prob
        if added:
            x = x | {c}
        else:
            y = y - {c}
        if not x <= y:
            raise AssertionError("double greedy invariant broken: X not within Y")
        steps.append(
            UsmStep(
                pair=c,
                marginal_add_cents=a,
                marginal_drop_cents=b,
                probability=prob,
                added=added,
                x_size=len(x),
                y_size=len(y),
            )
        )
    if x != y:
        raise AssertionError("double greedy must end with X == Y")
    final = CampaignSet.of(x)
    result = OptimizationResult(
        method="usm",
        menu=final,
        revenue_cents=cache.value(x),
        oracle_name=_oracle_name(oracle),
        seed=seed,
        wall_time_s=time.perf_counter() - t0,
    )
    return result, UsmTrace(steps=tuple(steps), final_set=final, seed=seed)


def usm_lemma_violations(trace: UsmTrace) -> list[UsmStep]:
    """Steps where a_i + b_i < 0.

    Under a submodular revenue function that sum is provably
    non-negative, so any entry here certifies non-submodularity of the
    instance (useful when diagnosing weak USM results).
    """
    return [s for s in trace.steps if s.marginal_add_cents + s.marginal_drop_cents < 0]


def exhaustive_search(
    candidates,
    population,
    oracle: RevenueOracle,
    max_size: Optional[int] = None,
    rules: Optional[RuleSet] = None,
) -> OptimizationResult:
    """Try every feasible subset, including the empty menu.

    Refuses outright when the enumeration would be too large rather
    than running for hours; 24 candidates unbounded is the hard limit.
    """
    pairs = _candidate_pairs(candidates)
    n = len(pairs)
    if max_size is None and n > EXHAUSTIVE_CANDIDATE_LIMIT:
        raise RefusalError(
            f"{n} candidates is past the exhaustive limit of "
            f"{EXHAUSTIVE_CANDIDATE_LIMIT}; pass max_size to bound the search"
        )
    sizes = range(0, (n if max_size is None else min(max_size, n)) + 1)
    total = sum(_comb(n, s) for s in sizes)
    if total > 2**EXHAUSTIVE_CANDIDATE_LIMIT:
        raise RefusalError(f"enumeration of {total} subsets exceeds the safety bound")

    cache = _RevenueCache(oracle, population)
    t0 = time.perf_counter()
    best_key = None
    best: Optional[tuple[frozenset, Money]] = None
    for size in sizes:
        for combo in itertools.combinations(pairs, size):
            menu_pairs = sorted(combo, key=lambda p: p.threshold_cents)
            ts = [p.threshold_cents for p in menu_pairs]
            if len(set(ts)) != len(ts):
                continue
            if rules is not None and not _sorted_pairs_ok(menu_pairs, rules):
                continue
            value = cache.value(frozenset(combo))
            key = (
                -value,
                len(combo),
                tuple((p.threshold_cents, p.discount_cents) for p in menu_pairs),
            )
            if best_key is None or key < best_key:
                best_key = key
                best = (frozenset(combo), value)
    assert best is not None  # size 0 always evaluated
    return OptimizationResult(
        method="exhaustive",
        menu=CampaignSet.of(best[0]),
        revenue_cents=best[1],
        oracle_name=_oracle_name(oracle),
        wall_time_s=time.perf_counter() - t0,
    )


def _comb(n: int, k: int) -> int:
    return math.comb(n, k)


def subset_value_table(
    pairs: Sequence[ThresholdDiscountPair], population, oracle: RevenueOracle
) -> list[Money]:
    """f over every subset of `pairs`, indexed by bitmask."""
    ts = [p.threshold_cents for p in pairs]
    if len(set(ts)) != len(ts):
        raise DataError("subset evaluation needs pairwise distinct thresholds")
    n = len(pairs)
    values = []
    for mask in range(1 << n):
        menu = CampaignSet.of(p for i, p in enumerate(pairs) if mask >> i & 1)
        values.append(oracle.evaluate(menu, population))
    return values


def check_submodularity(
    candidates, population, oracle: RevenueOracle
) -> SubmodularityReport:
    """Brute-force diminishing-returns audit of the revenue function.

    For every nested pair A ⊆ B and every u outside B, checks
    f(A∪{u}) − f(A) ≥ f(B∪{u}) − f(B). Exact integer comparisons, no
    tolerance. Reports rather than asserts: the simulator is not
    guaranteed submodular on every instance.
    """
    pairs = _candidate_pairs(candidates)
    n = len(pairs)
    if n > SUBMODULARITY_CANDIDATE_LIMIT:
        raise RefusalError(
            f"{n} candidates is past the submodularity-check limit of "
            f"{SUBMODULARITY_CANDIDATE_LIMIT}"
        )
    values = subset_value_table(pairs, population, oracle)
    full = (1 << n) - 1
    triples = 0
    violations = 0
    worst = 0
    for u in range(n):
        ubit = 1 << u
        others = full & ~ubit
        # enumerate B over subsets of others, A over submasks of B
        b = others
        while True:
            marg_b = values[b | ubit] - values[b]
            a = b
            while True:
                triples += 1
                marg_a = values[a | ubit] - values[a]
                if marg_a < marg_b:
                    violations += 1
                    worst = max(worst, marg_b - marg_a)
                if a == 0:
                    break
                a = (a - 1) & b
            if b == 0:
                break
            b = (b - 1) & others
    return SubmodularityReport(
        candidate_count=n,
        total_triples=triples,
        violations=violations,
        worst_violation_cents=worst,
        min_value_cents=min(values),
    )


def recommend_top_k(
    candidates,
    population,
    oracle: RevenueOracle,
    k: int = 3,
    trials: int = 16,
    seed: int = 0,
) -> list[OptimizationResult]:
    """Best distinct menus from repeated randomized search.

    Runs the randomized pass under `trials` derived seeds, dedupes the
    resulting menus, ranks by revenue (ties: smaller menu, then
    lexicographic pairs) and returns up to k. If randomness collapsed
    to fewer distinct menus than k, the greedy result fills one slot.
    """
    if trials < k:
        raise DataError(f"trials ({trials}) must be at least k ({k})")
    pairs = _candidate_pairs(candidates)
    cache = _RevenueCache(oracle, population)
    found: dict[frozenset, OptimizationResult] = {}
    for i in range(trials):
        child = mix64(seed, _TRIAL_STREAM, i)
        result, _ = randomized_usm(pairs, population, oracle, seed=child)
        key = frozenset(result.menu.pairs)
        if key not in found:
            found[key] = result
    if len(found) < k:
        g = greedy_search(pairs, population, oracle)
        key = frozenset(g.menu.pairs)
        if key not in found:
            found[key] = g

    def rank(r: OptimizationResult):
        return (
            -r.revenue_cents,
            len(r.menu),
            tuple((p.threshold_cents, p.discount_cents) for p in r.menu.pairs),
        )

    ranked = sorted(found.values(), key=rank)
    return ranked[:k]
