"""The scorer model family, in the exact shape the weight file fixes.

Four variants share one skeleton:

  gbdt          gradient-boosted trees on flat features (baseline)
  no_pooling    the net with the menu-context branch blinded: the
                pooled vector is always the learned empty-context
  mean_pooling  not-target vectors averaged
  attention     scaled dot-product attention with a learned query

Everything runs in float64 so the exported matrices reproduce the
torch forward pass bit-for-bit apart from reduction order.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np
import torch
from torch import nn

from .dataset import Example
from .features import AssemblyParams, Bundle

GATE_LENGTH = 500
NET_VARIANTS = ("no_pooling", "mean_pooling", "attention")
ALL_VARIANTS = ("gbdt",) + NET_VARIANTS

_TOWER = ("0", "1", "2")


class TriggerNet(nn.Module):
    """Dense tower -> fuse -> money gates -> pooled context -> head."""

    def __init__(self, sparse_size: int, pooling: str, hidden: int = 32):
        super().__init__()
        if pooling not in NET_VARIANTS:
            raise ValueError(f"unknown pooling variant {pooling!r}")
        self.pooling = pooling
        L = GATE_LENGTH

        self.dense_tower = nn.ModuleList(
            [nn.Linear(9, hidden), nn.Linear(hidden, hidden), nn.Linear(hidden, hidden)]
        )
        self.dense_out = nn.Linear(hidden, L)
        self.fuse = nn.Linear(L + sparse_size, L)
        self.nt_enc = nn.Linear(2 * L, L)
        self.attn_query = nn.Parameter(torch.randn(L) * 0.02)
        self.empty_context = nn.Parameter(torch.zeros(L))
        self.nt_tower = nn.ModuleList(
            [nn.Linear(L, hidden), nn.Linear(hidden, hidden), nn.Linear(hidden, hidden)]
        )
        self.head_tower = nn.ModuleList(
            [nn.Linear(L + hidden, 64), nn.Linear(64, 32), nn.Linear(32, 16)]
        )
        self.head_out = nn.Linear(16, 1)
        self.double()

    def forward(self, batch: dict[str, torch.Tensor]) -> torch.Tensor:
        h = batch["dense"]
        for layer in self.dense_tower:
            h = torch.relu(layer(h))
        h = torch.relu(self.dense_out(h))
        fused = torch.relu(self.fuse(torch.cat([h, batch["sparse"]], dim=1)))
        gated = fused * batch["gate_t"] * batch["gate_d"]

        pooled = self._pool(batch, gated.shape[0])
        p = pooled
        for layer in self.nt_tower:
            p = torch.relu(layer(p))

        z = torch.cat([gated, p], dim=1)
        for layer in self.head_tower:
            z = torch.relu(layer(z))
        return self.head_out(z).squeeze(1)

    def _pool(self, batch: dict[str, torch.Tensor], n: int) -> torch.Tensor:
        empty = self.empty_context.unsqueeze(0).expand(n, -1)
        if self.pooling == "no_pooling":
            return empty
        mask = batch["nt_mask"]  # (n, j), 1.0 where a real pair sits
        counts = mask.sum(dim=1)
        if batch["nt_enc_in"].shape[1] == 0:
            return empty
        enc = torch.relu(self.nt_enc(batch["nt_enc_in"]))  # (n, j, L)
        if self.pooling == "mean_pooling":
            summed = (enc * mask.unsqueeze(2)).sum(dim=1)
            pooled = summed / counts.clamp(min=1.0).unsqueeze(1)
        else:
            scores = enc @ self.attn_query / np.sqrt(GATE_LENGTH)
            scores = scores.masked_fill(mask == 0, -torch.inf)
            alphas = torch.softmax(scores, dim=1)
            alphas = torch.nan_to_num(alphas, nan=0.0)  # rows with no pairs
            pooled = (alphas.unsqueeze(2) * enc).sum(dim=1)
        return torch.where(counts.unsqueeze(1) > 0, pooled, empty)


def _unary_rows(values: torch.Tensor, unit: int, length: int) -> torch.Tensor:
    """Leading-ones encodings for a tensor of money values, any shape."""
    ones = torch.div(values, unit, rounding_mode="floor").clamp(max=length)
    slots = torch.arange(length, dtype=torch.int64)
    return (slots < ones.unsqueeze(-1)).double()


class BundleTensors:
    """Collated model inputs for a fixed list of bundles."""

    def __init__(self, bundles: Sequence[Bundle], labels: Sequence[int], params: AssemblyParams):
        n = len(bundles)
        max_nt = max((len(b.not_target) for b in bundles), default=0)
        self.dense = torch.tensor([b.dense for b in bundles], dtype=torch.float64)
        self.sparse = torch.tensor(
            [b.sparse_onehot for b in bundles], dtype=torch.float64
        )
        self.tgt_t = torch.tensor(
            [b.target.threshold_cents for b in bundles], dtype=torch.int64
        )
        self.tgt_d = torch.tensor(
            [b.target.discount_cents for b in bundles], dtype=torch.int64
        )
        nt_t = torch.zeros((n, max_nt), dtype=torch.int64)
        nt_d = torch.zeros((n, max_nt), dtype=torch.int64)
        mask = torch.zeros((n, max_nt), dtype=torch.float64)
        for i, b in enumerate(bundles):
            for j, p in enumerate(b.not_target):
                nt_t[i, j] = p.threshold_cents
                nt_d[i, j] = p.discount_cents
                mask[i, j] = 1.0
        self.nt_t, self.nt_d, self.nt_mask = nt_t, nt_d, mask
        self.labels = torch.tensor(list(labels), dtype=torch.float64)
        self.unit = params.encoding_unit_cents
        self.length = params.encoding_length

    def __len__(self):
        return self.dense.shape[0]

    def batch(self, idx: torch.Tensor) -> dict[str, torch.Tensor]:
        nt_t, nt_d = self.nt_t[idx], self.nt_d[idx]
        nt_enc_in = torch.cat(
            [
                _unary_rows(nt_t, self.unit, self.length),
                _unary_rows(nt_d, self.unit, self.length),
            ],
            dim=-1,
        )
        return {
            "dense": self.dense[idx],
            "sparse": self.sparse[idx],
            "gate_t": _unary_rows(self.tgt_t[idx], self.unit, self.length),
            "gate_d": _unary_rows(self.tgt_d[idx], self.unit, self.length),
            "nt_enc_in": nt_enc_in,
            "nt_mask": self.nt_mask[idx],
            "labels": self.labels[idx],
        }


def export_matrices(net: TriggerNet) -> dict[str, np.ndarray]:
    """State dict -> the weight-file matrix names, as float64 arrays."""

    def grab(t: torch.Tensor) -> np.ndarray:
        return t.detach().cpu().numpy().astype(np.float64)

    out: dict[str, np.ndarray] = {}
    for k, layer in zip(_TOWER, net.dense_tower):
        out[f"dense.{k}.w"], out[f"dense.{k}.b"] = grab(layer.weight), grab(layer.bias)
    out["dense.out.w"], out["dense.out.b"] = grab(net.dense_out.weight), grab(net.dense_out.bias)
    out["fuse.w"], out["fuse.b"] = grab(net.fuse.weight), grab(net.fuse.bias)
    out["nt_enc.w"], out["nt_enc.b"] = grab(net.nt_enc.weight), grab(net.nt_enc.bias)
    out["attn.query"] = grab(net.attn_query)
    out["nt.empty_context"] = grab(net.empty_context)
    for k, layer in zip(_TOWER, net.nt_tower):
        out[f"nt.{k}.w"], out[f"nt.{k}.b"] = grab(layer.weight), grab(layer.bias)
    for k, layer in zip(_TOWER, net.head_tower):
        out[f"head.{k}.w"], out[f"head.{k}.b"] = grab(layer.weight), grab(layer.bias)
    out["head.out.w"], out["head.out.b"] = grab(net.head_out.weight), grab(net.head_out.bias)
    return out


def gbdt_features(examples: Sequence[Example], bundles: Sequence[Bundle]) -> np.ndarray:
    """Flat feature rows for the tree baseline.

    Standardized dense block plus raw category codes plus a fixed-size
    summary of the competing pairs (trees cannot consume a set).
    """
    rows = []
    for e, b in zip(examples, bundles):
        t = e.target.threshold_cents
        below = [p.threshold_cents for p in b.not_target if p.threshold_cents < t]
        above = [p.threshold_cents for p in b.not_target if p.threshold_cents > t]
        rows.append(
            list(b.dense)
            + [e.shopper.shop_category, e.shopper.age_bucket, e.shopper.gender]
            + [
                len(b.not_target),
                max((p.discount_cents for p in b.not_target), default=0) / 100.0,
                (t - max(below)) / 100.0 if below else 0.0,
                (min(above) - t) / 100.0 if above else 0.0,
            ]
        )
    return np.asarray(rows, dtype=np.float64)
