import json
from datetime import date

import numpy as np
import pytest

from promoplan.domain import CampaignSet, dollars
from promoplan.encoding import ShopContext, assemble_features
from promoplan.errors import DataError, DimensionMismatchError, NonFiniteError
from promoplan.scorer import (
    FORMAT_VERSION,
    GATE_SIZE,
    NeuralOracle,
    ScorerWeights,
    load_weights,
    neural_evaluate,
    neural_score,
    save_weights,
    trigger_weights,
)

from .conftest import consumer, make_assembly, make_weights, menu, pair

AS_OF = date(2024, 3, 15)
SHOP = ShopContext("shop-1", "city-9")


def bundle_for(target, m, cons=None, cfg=None):
    cfg = cfg or make_assembly()
    return assemble_features(cons or consumer(), SHOP, target, m, AS_OF, cfg)


@pytest.fixture(scope="module")
def weights():
    return make_weights(np.random.default_rng(42))


def zero_weights():
    w = make_weights(np.random.default_rng(0))
    zeroed = {name: np.zeros_like(mat) for name, mat in w.matrices.items()}
    return ScorerWeights(assembly=w.assembly, matrices=zeroed)


def test_all_zero_weights_score_half():
    b = bundle_for(pair(50, 4), menu((40, 3), (50, 4)))
    assert neural_score(b, zero_weights()) == 0.5


def test_score_in_unit_interval(weights):
    m = menu((40, 3), (50, 4), (60, 8))
    for target in m.pairs:
        s = neural_score(bundle_for(target, m), weights)
        assert 0.0 < s < 1.0


def test_score_is_deterministic(weights):
    b = bundle_for(pair(50, 4), menu((50, 4), (60, 8)))
    assert neural_score(b, weights) == neural_score(b, weights)


def test_gating_zeroes_activations_past_the_amount(weights):
    target = pair(7, 3)  # gates: 7 ones then zeros, 3 ones then zeros
    b = bundle_for(target, menu((7, 3)))
    _, inter = neural_score(b, weights, return_intermediates=True)
    gated = inter["gated"]
    assert gated.shape == (GATE_SIZE,)
    # discount gate is the tighter one: everything past 3 units is dead
    assert np.all(gated[3:] == 0.0)
    assert np.any(gated[:3] != 0.0)
    # threshold gate alone kills activations past 7 units
    after_threshold_gate = inter["fused"] * inter["gate_threshold"]
    assert np.all(after_threshold_gate[7:] == 0.0)


def test_empty_context_uses_stored_vector(weights):
    b = bundle_for(pair(50, 4), menu((50, 4)))
    _, inter = neural_score(b, weights, return_intermediates=True)
    assert inter["attention"].size == 0
    assert np.array_equal(inter["pooled"], weights.matrices["nt.empty_context"])


def test_attention_pools_not_targets(weights):
    m = menu((40, 3), (50, 4), (60, 8))
    _, inter = neural_score(bundle_for(pair(50, 4), m), weights, return_intermediates=True)
    assert inter["attention"].shape == (2,)
    assert inter["attention"].sum() == pytest.approx(1.0)
    assert np.all(inter["attention"] > 0)


def test_dimension_mismatch_names_layer(weights):
    broken = dict(weights.matrices)
    broken["nt.1.w"] = np.zeros((10, 99))
    with pytest.raises(DimensionMismatchError) as err:
        ScorerWeights(assembly=weights.assembly, matrices=broken)
    assert "nt.1.w" in str(err.value)


def test_missing_matrix_rejected(weights):
    broken = dict(weights.matrices)
    del broken["attn.query"]
    with pytest.raises(DataError) as err:
        ScorerWeights(assembly=weights.assembly, matrices=broken)
    assert "attn.query" in str(err.value)


def test_non_finite_weights_rejected(weights):
    broken = {k: v.copy() for k, v in weights.matrices.items()}
    broken["fuse.b"][3] = np.nan
    with pytest.raises(NonFiniteError):
        ScorerWeights(assembly=weights.assembly, matrices=broken)


def test_gate_size_is_pinned(weights):
    cfg = make_assembly()
    small = type(cfg)(
        hash_buckets=cfg.hash_buckets,
        shop_categories=cfg.shop_categories,
        age_buckets=cfg.age_buckets,
        genders=cfg.genders,
        encoding_unit_cents=cfg.encoding_unit_cents,
        encoding_length=400,
        dense_mean=cfg.dense_mean,
        dense_scale=cfg.dense_scale,
    )
    with pytest.raises(DataError):
        ScorerWeights(assembly=small, matrices=dict(weights.matrices))


def test_weight_file_round_trip(tmp_path, weights):
    path = tmp_path / "w.json"
    save_weights(weights, path)
    again = load_weights(path)
    assert again.assembly == weights.assembly
    for name, mat in weights.matrices.items():
        assert np.array_equal(again.matrices[name], mat)
    b = bundle_for(pair(50, 4), menu((40, 3), (50, 4)))
    assert neural_score(b, again) == neural_score(b, weights)


def test_weight_file_version_refused(tmp_path, weights):
    path = tmp_path / "w.json"
    save_weights(weights, path)
    doc = json.loads(path.read_text())
    doc["format_version"] = FORMAT_VERSION + 1
    path.write_text(json.dumps(doc))
    with pytest.raises(DataError) as err:
        load_weights(path)
    assert "format_version" in str(err.value)


def test_trigger_weights_sum_to_one():
    w = trigger_weights([0.2, 0.9, 0.4])
    assert w.shape == (4,)
    assert w.sum() == pytest.approx(1.0)
    assert np.all(w > 0)


def test_trigger_weights_singleton_formula():
    s = 0.7
    w = trigger_weights([s])
    expect = np.exp(s) / (np.exp(s) + 1.0)
    assert w[0] == pytest.approx(expect, abs=1e-12)
    assert w[1] == pytest.approx(1.0 - expect, abs=1e-12)


def test_neural_evaluate_empty_menu_is_zero(weights):
    pop = [consumer(cid=f"u{i}") for i in range(3)]
    assert neural_evaluate(CampaignSet.empty(), pop, weights, SHOP, AS_OF) == 0


def test_neural_evaluate_sums_expected_margins(weights):
    pop = [consumer(cid=f"u{i}") for i in range(2)]
    m = menu((40, 3), (50, 4))
    total = 0.0
    for c in pop:
        scores = [
            neural_score(bundle_for(t, m, cons=c), weights) for t in m.pairs
        ]
        probs = trigger_weights(scores)
        total += probs[0] * (dollars(40) - dollars(3)) + probs[1] * (dollars(50) - dollars(4))
    got = neural_evaluate(m, pop, weights, SHOP, AS_OF)
    assert got == int(np.floor(total + 0.5))


def test_neural_oracle_interface(weights):
    oracle = NeuralOracle(weights=weights, shop=SHOP, as_of=AS_OF)
    pop = [consumer()]
    m = menu((40, 3), (50, 4))
    assert oracle.evaluate(m, pop) == neural_evaluate(m, pop, weights, SHOP, AS_OF)
    s = oracle.evaluate_single(pair(40, 3), pop[0], m)
    assert 0.0 < s < 1.0
