"""Simulator-labeled trigger datasets.

One example per (shopper, target pair, menu): did this shopper's
simulated choice land on exactly that pair. A menu with k pairs yields
k examples of which at most one is positive, so the class balance is
governed by menu sizes and how reachable the thresholds are; the spec
carries an acceptable positive-rate band and generation refuses to
emit a dataset outside it rather than let a silently degenerate class
mix poison downstream AUC comparisons.

The split is by shopper: all of a shopper's examples land on one side,
so the held-out score measures generalization to new people, not new
menus for memorized people.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from .errors import ConfigError, DataError
from .serial import dumps_canonical, read_jsonl
from .simulate import (
    Pair,
    Shopper,
    ShopperSpec,
    choose,
    pair_from_obj,
    pair_to_obj,
    sample_shoppers,
    shopper_from_obj,
    shopper_to_obj,
    sorted_menu,
)

FORMAT_VERSION = 1


@dataclass(frozen=True)
class DatasetSpec:
    """Everything the generator needs; serialized into the header."""

    shopper_count: int = 1000
    menus_per_shopper: int = 4
    menu_size_max: int = 5
    pool_threshold_lo_cents: int = 1000
    pool_threshold_hi_cents: int = 12000
    pool_threshold_step_cents: int = 500
    discount_frac_lo: float = 0.08
    discount_frac_hi: float = 0.30
    mean_spend_cents: int = 6000
    spend_sigma: float = 0.5
    stretch_lo: float = 0.2
    stretch_hi: float = 0.9
    choice_noise_scale: float = 0.25
    train_fraction: float = 0.8
    positive_rate_lo: float = 0.05
    positive_rate_hi: float = 0.50
    shop_categories: int = 8
    age_buckets: int = 8
    genders: int = 4

    def __post_init__(self):
        if self.shopper_count <= 1 or self.menus_per_shopper <= 0:
            raise ConfigError("need at least two shoppers and one menu each")
        if self.menu_size_max <= 0:
            raise ConfigError("menu sizes must be positive")
        if self.pool_threshold_lo_cents <= 0 or self.pool_threshold_step_cents <= 0:
            raise ConfigError("threshold grid must be positive")
        if self.pool_threshold_hi_cents < self.pool_threshold_lo_cents:
            raise ConfigError("threshold grid is empty")
        if not 0 <= self.discount_frac_lo <= self.discount_frac_hi <= 1:
            raise ConfigError("discount fractions must satisfy 0 <= lo <= hi <= 1")
        if not 0 < self.train_fraction < 1:
            raise ConfigError("train fraction must be in (0, 1)")
        if not 0 <= self.positive_rate_lo <= self.positive_rate_hi <= 1:
            raise ConfigError("positive-rate band is malformed")
        if self.choice_noise_scale < 0:
            raise ConfigError("noise scale must be non-negative")


@dataclass(frozen=True)
class Example:
    shopper: Shopper
    menu: tuple[Pair, ...]
    target: Pair
    label: int
    split: str

    def __post_init__(self):
        if self.label not in (0, 1):
            raise DataError("label must be 0 or 1")
        if self.split not in ("train", "test"):
            raise DataError("split must be train or test")


@dataclass(frozen=True)
class Dataset:
    spec: DatasetSpec
    seed: int
    examples: tuple[Example, ...]

    @property
    def positive_rate(self) -> float:
        return sum(e.label for e in self.examples) / len(self.examples)

    def split_rows(self, split: str) -> list[Example]:
        return [e for e in self.examples if e.split == split]


def _pair_pool(spec: DatasetSpec, rng: np.random.Generator) -> list[Pair]:
    thresholds = np.arange(
        spec.pool_threshold_lo_cents,
        spec.pool_threshold_hi_cents + 1,
        spec.pool_threshold_step_cents,
        dtype=np.int64,
    )
    fracs = rng.uniform(spec.discount_frac_lo, spec.discount_frac_hi, len(thresholds))
    pool = []
    for t, f in zip(thresholds, fracs):
        # whole-dollar discounts keep the gate encodings non-trivial
        d = max(100, int(round(t * f / 100.0)) * 100)
        pool.append(Pair(int(t), min(d, int(t))))
    return pool


def generate_dataset(spec: DatasetSpec, seed: int) -> Dataset:
    """Sample shoppers and menus, label targets by the simulated choice."""
    rng = np.random.default_rng(seed)
    shoppers = sample_shoppers(
        ShopperSpec(
            count=spec.shopper_count,
            mean_spend_cents=spec.mean_spend_cents,
            spend_sigma=spec.spend_sigma,
            stretch_lo=spec.stretch_lo,
            stretch_hi=spec.stretch_hi,
            shop_categories=spec.shop_categories,
            age_buckets=spec.age_buckets,
            genders=spec.genders,
        ),
        rng,
    )
    pool = _pair_pool(spec, rng)
    train_cutoff = math.ceil(spec.train_fraction * len(shoppers))

    examples: list[Example] = []
    for i, shopper in enumerate(shoppers):
        split = "train" if i < train_cutoff else "test"
        for _ in range(spec.menus_per_shopper):
            size = int(rng.integers(1, spec.menu_size_max + 1))
            picks = rng.choice(len(pool), size=size, replace=False)
            menu = sorted_menu([pool[j] for j in picks])
            chosen = choose(menu, shopper, spec.choice_noise_scale, rng)
            for target in menu:
                examples.append(
                    Example(shopper, menu, target, int(target == chosen), split)
                )

    ds = Dataset(spec=spec, seed=seed, examples=tuple(examples))
    rate = ds.positive_rate
    if not spec.positive_rate_lo <= rate <= spec.positive_rate_hi:
        raise DataError(
            f"positive rate {rate:.4f} outside "
            f"[{spec.positive_rate_lo}, {spec.positive_rate_hi}]; adjust the spec"
        )
    return ds


def write_dataset(ds: Dataset, path) -> None:
    header = {
        "artifact": "trigger-dataset",
        "format_version": FORMAT_VERSION,
        "seed": ds.seed,
        "spec": asdict(ds.spec),
        "examples": len(ds.examples),
        "positive_rate": ds.positive_rate,
    }
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_canonical(header) + "\n")
        for e in ds.examples:
            fh.write(
                dumps_canonical(
                    {
                        "split": e.split,
                        "label": e.label,
                        "shopper": shopper_to_obj(e.shopper),
                        "menu": {"pairs": [pair_to_obj(p) for p in e.menu]},
                        "target": pair_to_obj(e.target),
                    }
                )
                + "\n"
            )


def read_dataset(path) -> Dataset:
    rows = read_jsonl(path)
    if not rows:
        raise DataError(f"{path}: empty dataset file")
    header, body = rows[0], rows[1:]
    if header.get("artifact") != "trigger-dataset":
        raise DataError(f"{path}: not a trigger dataset")
    if header.get("format_version") != FORMAT_VERSION:
        raise DataError(f"{path}: unsupported format_version {header.get('format_version')!r}")
    try:
        spec = DatasetSpec(**header["spec"])
        seed = int(header["seed"])
    except (KeyError, TypeError) as e:
        raise DataError(f"{path}: bad header: {e}") from e

    examples = []
    for obj in body:
        try:
            menu = sorted_menu([pair_from_obj(o) for o in obj["menu"]["pairs"]])
            examples.append(
                Example(
                    shopper=shopper_from_obj(obj["shopper"]),
                    menu=menu,
                    target=pair_from_obj(obj["target"]),
                    label=int(obj["label"]),
                    split=str(obj["split"]),
                )
            )
        except (KeyError, TypeError, ValueError) as e:
            raise DataError(f"{path}: bad example row: {e}") from e
    if len(examples) != int(header.get("examples", len(examples))):
        raise DataError(f"{path}: header count disagrees with body")
    return Dataset(spec=spec, seed=seed, examples=tuple(examples))


def check_disjoint_split(examples: Sequence[Example]) -> None:
    train_ids = {e.shopper.consumer_id for e in examples if e.split == "train"}
    test_ids = {e.shopper.consumer_id for e in examples if e.split == "test"}
    overlap = train_ids & test_ids
    if overlap:
        raise DataError(f"shoppers appear in both splits: {sorted(overlap)[:5]}")
    if not train_ids or not test_ids:
        raise DataError("both splits must be non-empty")
