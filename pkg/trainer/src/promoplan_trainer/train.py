"""Training, evaluation, and the variant comparison.

Standardization statistics come from the train split only and travel
inside the exported weight file, so scoring-time assembly is pinned to
what the model saw. Training aborts on the first non-finite loss and
refuses datasets whose labels are all identical, since AUC is
undefined there and every downstream comparison would be noise.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import date
from typing import Optional, Sequence

import numpy as np
import torch
from sklearn.ensemble import HistGradientBoostingClassifier
from sklearn.metrics import roc_auc_score

from .dataset import Dataset, Example, check_disjoint_split
from .errors import DataError, TrainingDivergedError
from .features import AssemblyParams, Bundle, assemble, raw_dense
from .models import (
    ALL_VARIANTS,
    NET_VARIANTS,
    BundleTensors,
    TriggerNet,
    export_matrices,
    gbdt_features,
)

# the dense block is per-example; shop/city/date only pin the three
# context features, which standardize to constants within one dataset
SHOP_ID = "shop-000"
CITY_ID = "city-00"
AS_OF = date(2026, 6, 1)

HASH_BUCKETS = 1024
ENCODING_UNIT_CENTS = 100
ENCODING_LENGTH = 500


@dataclass(frozen=True)
class TrainSettings:
    epochs: int = 14
    batch_size: int = 256
    lr: float = 1e-3
    hidden: int = 32
    seed: int = 0


@dataclass
class VariantResult:
    variant: str
    train_auc: float
    test_auc: float
    assembly: AssemblyParams
    matrices: Optional[dict[str, np.ndarray]]  # None for the tree baseline


def fit_assembly(train_rows: Sequence[Example], spec) -> AssemblyParams:
    """Standardization from the train split; constant features get scale 1."""
    probe = AssemblyParams(
        hash_buckets=HASH_BUCKETS,
        shop_categories=spec.shop_categories,
        age_buckets=spec.age_buckets,
        genders=spec.genders,
        encoding_unit_cents=ENCODING_UNIT_CENTS,
        encoding_length=ENCODING_LENGTH,
        dense_mean=(0.0,) * 9,
        dense_scale=(1.0,) * 9,
    )
    raw = np.stack(
        [raw_dense(e.shopper, SHOP_ID, CITY_ID, e.target, AS_OF, probe) for e in train_rows]
    )
    mean = raw.mean(axis=0)
    std = raw.std(axis=0)
    scale = np.where(std < 1e-9, 1.0, std)
    return AssemblyParams(
        hash_buckets=HASH_BUCKETS,
        shop_categories=spec.shop_categories,
        age_buckets=spec.age_buckets,
        genders=spec.genders,
        encoding_unit_cents=ENCODING_UNIT_CENTS,
        encoding_length=ENCODING_LENGTH,
        dense_mean=tuple(float(x) for x in mean),
        dense_scale=tuple(float(x) for x in scale),
    )


def assemble_rows(rows: Sequence[Example], params: AssemblyParams) -> list[Bundle]:
    return [
        assemble(e.shopper, SHOP_ID, CITY_ID, e.target, e.menu, AS_OF, params) for e in rows
    ]


def _require_both_classes(labels: Sequence[int], what: str) -> None:
    if len(set(labels)) < 2:
        raise DataError(f"{what} labels are all identical; AUC is undefined")


def _train_net(
    variant: str,
    train: BundleTensors,
    test: BundleTensors,
    settings: TrainSettings,
) -> tuple[TriggerNet, float, float]:
    torch.manual_seed(settings.seed * 1000003 + NET_VARIANTS.index(variant))
    net = TriggerNet(train.sparse.shape[1], pooling=variant, hidden=settings.hidden)
    opt = torch.optim.Adam(net.parameters(), lr=settings.lr)
    loss_fn = torch.nn.BCEWithLogitsLoss()
    gen = torch.Generator().manual_seed(settings.seed)

    last_loss = float("nan")
    for epoch in range(settings.epochs):
        order = torch.randperm(len(train), generator=gen)
        for step, start in enumerate(range(0, len(train), settings.batch_size)):
            idx = order[start : start + settings.batch_size]
            batch = train.batch(idx)
            opt.zero_grad()
            loss = loss_fn(net(batch), batch["labels"])
            if not torch.isfinite(loss):
                raise TrainingDivergedError(variant, epoch, step, settings.lr, last_loss)
            loss.backward()
            opt.step()
            last_loss = float(loss.detach())

    return net, _net_auc(net, train, settings), _net_auc(net, test, settings)


def _net_auc(net: TriggerNet, data: BundleTensors, settings: TrainSettings) -> float:
    scores = []
    with torch.no_grad():
        for start in range(0, len(data), settings.batch_size):
            idx = torch.arange(start, min(start + settings.batch_size, len(data)))
            scores.append(torch.sigmoid(net(data.batch(idx))))
    return float(roc_auc_score(data.labels.numpy(), torch.cat(scores).numpy()))


def _train_gbdt(
    train_rows, test_rows, train_bundles, test_bundles, labels_train, labels_test, seed
) -> tuple[float, float]:
    x_train = gbdt_features(train_rows, train_bundles)
    x_test = gbdt_features(test_rows, test_bundles)
    clf = HistGradientBoostingClassifier(max_iter=150, random_state=seed)
    clf.fit(x_train, labels_train)
    return (
        float(roc_auc_score(labels_train, clf.predict_proba(x_train)[:, 1])),
        float(roc_auc_score(labels_test, clf.predict_proba(x_test)[:, 1])),
    )


def train_variants(
    dataset: Dataset,
    settings: TrainSettings = TrainSettings(),
    variants: Sequence[str] = ALL_VARIANTS,
) -> dict[str, VariantResult]:
    unknown = sorted(set(variants) - set(ALL_VARIANTS))
    if unknown:
        raise DataError(f"unknown variants {unknown}; choose from {list(ALL_VARIANTS)}")
    check_disjoint_split(dataset.examples)

    train_rows = dataset.split_rows("train")
    test_rows = dataset.split_rows("test")
    labels_train = [e.label for e in train_rows]
    labels_test = [e.label for e in test_rows]
    _require_both_classes(labels_train, "train split")
    _require_both_classes(labels_test, "test split")

    params = fit_assembly(train_rows, dataset.spec)
    train_bundles = assemble_rows(train_rows, params)
    test_bundles = assemble_rows(test_rows, params)

    results: dict[str, VariantResult] = {}
    net_train = net_test = None
    for variant in variants:
        if variant == "gbdt":
            auc_tr, auc_te = _train_gbdt(
                train_rows, test_rows, train_bundles, test_bundles,
                labels_train, labels_test, settings.seed,
            )
            results[variant] = VariantResult(variant, auc_tr, auc_te, params, None)
            continue
        if net_train is None:
            net_train = BundleTensors(train_bundles, labels_train, params)
            net_test = BundleTensors(test_bundles, labels_test, params)
        net, auc_tr, auc_te = _train_net(variant, net_train, net_test, settings)
        results[variant] = VariantResult(variant, auc_tr, auc_te, params, export_matrices(net))
    return results
