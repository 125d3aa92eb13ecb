import numpy as np
import pytest

from promoplan.domain import CampaignSet, ConsumerProfile, RuleSet, ThresholdDiscountPair, dollars
from promoplan.encoding import AssemblyConfig
from promoplan.oracle import ChoiceModelParams
from promoplan.scorer import GATE_SIZE, ScorerWeights


def pair(threshold_dollars, discount_dollars) -> ThresholdDiscountPair:
    return ThresholdDiscountPair(dollars(threshold_dollars), dollars(discount_dollars))


def menu(*pairs) -> CampaignSet:
    return CampaignSet.of(pair(t, d) for t, d in pairs)


def consumer(cid="u1", base=30, stretch=10, **kw) -> ConsumerProfile:
    fields = dict(
        consumer_id=cid,
        base_spend_cents=dollars(base),
        stretch_cents=dollars(stretch),
        age_bucket=1,
        gender=0,
        shop_category=2,
        gmv_30d_cents=dollars(120),
        gmv_60d_cents=dollars(260),
        gmv_90d_cents=dollars(400),
        distance_to_shop_m=750.0,
    )
    fields.update(kw)
    return ConsumerProfile(**fields)


@pytest.fixture
def default_params() -> ChoiceModelParams:
    return ChoiceModelParams(stretch_utility_rate=1.0, effort_cost_rate=0.25)


@pytest.fixture
def default_rules() -> RuleSet:
    return RuleSet(
        min_threshold_cents=dollars(20),
        max_threshold_cents=dollars(70),
        threshold_step_cents=dollars(10),
        discount_step_cents=dollars(2),
    )


def make_assembly(mean=0.0, scale=1.0) -> AssemblyConfig:
    return AssemblyConfig(
        hash_buckets=64,
        shop_categories=4,
        age_buckets=6,
        genders=3,
        encoding_unit_cents=100,
        encoding_length=GATE_SIZE,
        dense_mean=tuple([mean] * 9),
        dense_scale=tuple([scale] * 9),
    )


def make_weights(
    rng: np.random.Generator,
    hidden=(12, 10, 8),
    nt_hidden=(12, 10, 8),
    head_hidden=(12, 10, 8),
    assembly: AssemblyConfig | None = None,
    scale=0.05,
) -> ScorerWeights:
    """Random but structurally valid scorer weights for tests."""
    cfg = assembly or make_assembly()
    L = cfg.encoding_length
    m = {}

    def lin(name, n_out, n_in):
        m[f"{name}.w"] = rng.normal(0.0, scale, size=(n_out, n_in))
        m[f"{name}.b"] = rng.normal(0.0, scale, size=(n_out,))

    widths = [9, *hidden]
    for k in range(3):
        lin(f"dense.{k}", widths[k + 1], widths[k])
    lin("dense.out", L, widths[-1])
    lin("fuse", L, L + cfg.sparse_size)
    lin("nt_enc", L, 2 * L)
    m["attn.query"] = rng.normal(0.0, scale, size=(L,))
    m["nt.empty_context"] = rng.normal(0.0, scale, size=(L,))
    widths = [L, *nt_hidden]
    for k in range(3):
        lin(f"nt.{k}", widths[k + 1], widths[k])
    widths = [L + nt_hidden[-1], *head_hidden]
    for k in range(3):
        lin(f"head.{k}", widths[k + 1], widths[k])
    lin("head.out", 1, widths[-1])
    return ScorerWeights(assembly=cfg, matrices=m)
