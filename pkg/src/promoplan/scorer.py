"""Learned trigger scorer and its weight-file format.

The scorer estimates, for one consumer and one target pair inside a
menu, the probability that the consumer triggers that pair. The
architecture is a fixed contract shared with the training component:

  1. dense tower: standardized 9-vector through three hidden ReLU
     layers, then a ReLU projection to the gate width L
  2. fuse: concat(dense output, sparse one-hots) -> ReLU linear to L
  3. two sequential elementwise gates: multiply by the isotonic
     encodings of the target threshold, then of the target discount
  4. each not-target pair: concat of its threshold and discount
     encodings (2L) -> ReLU linear to L
  5. pooling: scaled dot-product attention with a learned query over
     the not-target vectors (softmax(q . e_j / sqrt(L)) weights); an
     empty context uses a stored default vector instead
  6. pooled vector through its own three ReLU layers
  7. head: concat(gated vector, pooled tower output) through three
     ReLU layers, a scalar linear layer, and a sigmoid

Weight files are JSON: explicit shapes plus one little-endian float64
base64 blob per matrix. Loading refuses wrong versions, inconsistent
shapes, or non-finite values.
"""

from __future__ import annotations

import base64
import json
import math
from dataclasses import dataclass
from datetime import date
from typing import Sequence

import numpy as np

from .domain import CampaignSet, ConsumerProfile, Money
from .encoding import AssemblyConfig, FeatureBundle, ShopContext, assemble_features, isotonic_encode
from .errors import DataError, DimensionMismatchError, NonFiniteError

FORMAT_VERSION = 1
GATE_SIZE = 500  # width of the gated layer; equals the encoding length

_TOWER_LAYERS = ("0", "1", "2")


def _matrix_names() -> list[str]:
    names = []
    for k in _TOWER_LAYERS:
        names += [f"dense.{k}.w", f"dense.{k}.b"]
    names += ["dense.out.w", "dense.out.b", "fuse.w", "fuse.b"]
    names += ["nt_enc.w", "nt_enc.b", "attn.query", "nt.empty_context"]
    for k in _TOWER_LAYERS:
        names += [f"nt.{k}.w", f"nt.{k}.b"]
    for k in _TOWER_LAYERS:
        names += [f"head.{k}.w", f"head.{k}.b"]
    names += ["head.out.w", "head.out.b"]
    return names


@dataclass
class ScorerWeights:
    """All scorer parameters plus the feature-assembly contract."""

    assembly: AssemblyConfig
    matrices: dict[str, np.ndarray]

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        expected = _matrix_names()
        missing = [n for n in expected if n not in self.matrices]
        extra = [n for n in self.matrices if n not in expected]
        if missing or extra:
            raise DataError(f"weight matrices missing={missing} unexpected={extra}")
        if self.assembly.encoding_length != GATE_SIZE:
            raise DataError(
                f"encoding length must be exactly {GATE_SIZE}, "
                f"got {self.assembly.encoding_length}"
            )
        for name, m in self.matrices.items():
            arr = np.asarray(m, dtype=np.float64)
            if not np.isfinite(arr).all():
                raise NonFiniteError(f"weight matrix {name!r}")
            self.matrices[name] = arr

        L = GATE_SIZE

        def check(name, shape):
            got = self.matrices[name].shape
            if got != shape:
                raise DimensionMismatchError(name, shape, got)

        # dense tower: 9 -> h1 -> h2 -> h3 -> L
        width = 9
        for k in _TOWER_LAYERS:
            w = self.matrices[f"dense.{k}.w"]
            if w.ndim != 2 or w.shape[1] != width:
                raise DimensionMismatchError(f"dense.{k}.w", (None, width), w.shape)
            width = w.shape[0]
            check(f"dense.{k}.b", (width,))
        check("dense.out.w", (L, width))
        check("dense.out.b", (L,))

        check("fuse.w", (L, L + self.assembly.sparse_size))
        check("fuse.b", (L,))
        check("nt_enc.w", (L, 2 * L))
        check("nt_enc.b", (L,))
        check("attn.query", (L,))
        check("nt.empty_context", (L,))

        width = L
        for k in _TOWER_LAYERS:
            w = self.matrices[f"nt.{k}.w"]
            if w.ndim != 2 or w.shape[1] != width:
                raise DimensionMismatchError(f"nt.{k}.w", (None, width), w.shape)
            width = w.shape[0]
            check(f"nt.{k}.b", (width,))
        pooled_out = width

        width = L + pooled_out
        for k in _TOWER_LAYERS:
            w = self.matrices[f"head.{k}.w"]
            if w.ndim != 2 or w.shape[1] != width:
                raise DimensionMismatchError(f"head.{k}.w", (None, width), w.shape)
            width = w.shape[0]
            check(f"head.{k}.b", (width,))
        check("head.out.w", (1, width))
        check("head.out.b", (1,))


def save_weights(weights: ScorerWeights, path) -> None:
    a = weights.assembly
    doc = {
        "format_version": FORMAT_VERSION,
        "assembly": {
            "hash_buckets": a.hash_buckets,
            "shop_categories": a.shop_categories,
            "age_buckets": a.age_buckets,
            "genders": a.genders,
            "encoding_unit_cents": a.encoding_unit_cents,
            "encoding_length": a.encoding_length,
            "dense_mean": list(a.dense_mean),
            "dense_scale": list(a.dense_scale),
        },
        "matrices": {
            name: {
                "shape": list(m.shape),
                "dtype": "<f8",
                "data_b64": base64.b64encode(
                    np.ascontiguousarray(m, dtype="<f8").tobytes()
                ).decode("ascii"),
            }
            for name, m in sorted(weights.matrices.items())
        },
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")


def load_weights(path) -> ScorerWeights:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except ValueError as e:
        raise DataError(f"weight file is not valid JSON: {e}") from e
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise DataError(
            f"weight file format_version {version!r} unsupported "
            f"(this build reads version {FORMAT_VERSION})"
        )
    try:
        a = doc["assembly"]
        assembly = AssemblyConfig(
            hash_buckets=int(a["hash_buckets"]),
            shop_categories=int(a["shop_categories"]),
            age_buckets=int(a["age_buckets"]),
            genders=int(a["genders"]),
            encoding_unit_cents=int(a["encoding_unit_cents"]),
            encoding_length=int(a["encoding_length"]),
            dense_mean=tuple(float(x) for x in a["dense_mean"]),
            dense_scale=tuple(float(x) for x in a["dense_scale"]),
        )
        matrices = {}
        for name, spec in doc["matrices"].items():
            if spec.get("dtype") != "<f8":
                raise DataError(f"matrix {name!r}: only little-endian float64 supported")
            raw = base64.b64decode(spec["data_b64"])
            arr = np.frombuffer(raw, dtype="<f8").reshape(spec["shape"]).copy()
            matrices[name] = arr
    except (KeyError, TypeError, ValueError) as e:
        raise DataError(f"malformed weight file: {e}") from e
    return ScorerWeights(assembly=assembly, matrices=matrices)


def _relu_layer(w: np.ndarray, b: np.ndarray, x: np.ndarray, name: str) -> np.ndarray:
    if w.shape[1] != x.shape[0]:
        raise DimensionMismatchError(name, (w.shape[0], x.shape[0]), w.shape)
    return np.maximum(w @ x + b, 0.0)


def _require_finite(x: np.ndarray, where: str) -> None:
    if not np.isfinite(x).all():
        raise NonFiniteError(where)


def _sigmoid(z: float) -> float:
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-z))
    e = math.exp(z)
    return e / (1.0 + e)


def neural_score(
    bundle: FeatureBundle, weights: ScorerWeights, return_intermediates: bool = False
):
    """Trigger probability in (0, 1) for one feature bundle.

    With return_intermediates=True also returns a dict of named
    internal activations; tests use it to check the gating structure.
    """
    m = weights.matrices
    cfg = weights.assembly
    L = cfg.encoding_length

    dense = np.asarray(bundle.dense, dtype=np.float64)
    if dense.shape != (9,):
        raise DimensionMismatchError("input.dense", (9,), dense.shape)
    sparse = np.asarray(bundle.sparse_onehot, dtype=np.float64)
    if sparse.shape != (cfg.sparse_size,):
        raise DimensionMismatchError("input.sparse", (cfg.sparse_size,), sparse.shape)
    _require_finite(dense, "input.dense")

    h = dense
    for k in _TOWER_LAYERS:
        h = _relu_layer(m[f"dense.{k}.w"], m[f"dense.{k}.b"], h, f"dense.{k}.w")
    h = _relu_layer(m["dense.out.w"], m["dense.out.b"], h, "dense.out.w")
    _require_finite(h, "dense tower output")

    fused = _relu_layer(m["fuse.w"], m["fuse.b"], np.concatenate([h, sparse]), "fuse.w")

    unit = cfg.encoding_unit_cents
    gate_t = isotonic_encode(bundle.target.threshold_cents, unit, L).as_floats()
    gate_d = isotonic_encode(bundle.target.discount_cents, unit, L).as_floats()
    gated = fused * gate_t
    gated = gated * gate_d
    _require_finite(gated, "gated fuse output")

    if bundle.not_target:
        encoded = []
        for p in bundle.not_target:
            enc = np.concatenate(
                [
                    isotonic_encode(p.threshold_cents, unit, L).as_floats(),
                    isotonic_encode(p.discount_cents, unit, L).as_floats(),
                ]
            )
            encoded.append(_relu_layer(m["nt_enc.w"], m["nt_enc.b"], enc, "nt_enc.w"))
        stack = np.stack(encoded)  # (j, L)
        scores = stack @ m["attn.query"] / math.sqrt(L)
        scores = scores - scores.max()  # stable softmax, part of the contract
        alphas = np.exp(scores)
        alphas = alphas / alphas.sum()
        pooled = alphas @ stack
    else:
        alphas = np.zeros(0)
        pooled = m["nt.empty_context"]
    _require_finite(pooled, "pooled not-target context")

    p = pooled
    for k in _TOWER_LAYERS:
        p = _relu_layer(m[f"nt.{k}.w"], m[f"nt.{k}.b"], p, f"nt.{k}.w")

    z = np.concatenate([gated, p])
    for k in _TOWER_LAYERS:
        z = _relu_layer(m[f"head.{k}.w"], m[f"head.{k}.b"], z, f"head.{k}.w")
    logit = float((m["head.out.w"] @ z + m["head.out.b"])[0])
    if not math.isfinite(logit):
        raise NonFiniteError("head logit")
    score = _sigmoid(logit)

    if return_intermediates:
        return score, {
            "dense_out": h,
            "fused": fused,
            "gate_threshold": gate_t,
            "gate_discount": gate_d,
            "gated": gated,
            "attention": alphas,
            "pooled": pooled,
            "logit": logit,
        }
    return score


def trigger_weights(scores: Sequence[float]) -> np.ndarray:
    """Exclusive trigger probabilities for a menu's pair scores.

    Softmax over the scores plus a fixed no-trigger logit of 0; the
    returned vector has one entry per pair followed by the no-trigger
    mass, summing to 1.
    """
    logits = np.append(np.asarray(scores, dtype=np.float64), 0.0)
    z = np.exp(logits - logits.max())
    return z / z.sum()


def neural_evaluate(
    menu: CampaignSet,
    population: Sequence[ConsumerProfile],
    weights: ScorerWeights,
    shop: ShopContext,
    as_of: date,
) -> Money:
    """Expected net revenue of a menu under the learned scorer.

    Per consumer, each pair contributes (threshold - discount) weighted
    by its exclusive trigger probability. The empty menu is worth 0 by
    definition: the scorer models incremental campaign revenue only.
    """
    if not menu.pairs:
        return 0
    margins = np.array(
        [p.threshold_cents - p.discount_cents for p in menu.pairs], dtype=np.float64
    )
    total = 0.0
    for consumer in population:
        scores = [
            neural_score(
                assemble_features(consumer, shop, target, menu, as_of, weights.assembly),
                weights,
            )
            for target in menu.pairs
        ]
        probs = trigger_weights(scores)
        total += float(probs[:-1] @ margins)
    return int(math.floor(total + 0.5))


@dataclass
class NeuralOracle:
    """RevenueOracle backed by the learned scorer."""

    weights: ScorerWeights
    shop: ShopContext
    as_of: date

    name = "neural"

    def evaluate(self, menu, population) -> Money:
        return neural_evaluate(menu, population, self.weights, self.shop, self.as_of)

    def evaluate_single(self, target, consumer, menu_context) -> float:
        menu = menu_context if target in menu_context else menu_context.with_pair(target)
        bundle = assemble_features(
            consumer, self.shop, target, menu, self.as_of, self.weights.assembly
        )
        return neural_score(bundle, self.weights)
