"""Command line entry point.

Exit codes: 0 success, 2 configuration error, 3 data error,
4 training divergence.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict
from pathlib import Path

from .conformance import run_conformance
from .dataset import DatasetSpec, generate_dataset, read_dataset, write_dataset
from .errors import ConfigError, DataError, TrainingDivergedError
from .models import ALL_VARIANTS
from .serial import dumps_canonical
from .train import TrainSettings, train_variants
from .weights import load_weights_file, save_weights_file

EXPORT_VARIANT = "attention"


def _load_spec(path) -> DatasetSpec:
    if path is None:
        return DatasetSpec()
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, ValueError) as e:
        raise ConfigError(f"cannot read spec {path}: {e}") from e
    try:
        return DatasetSpec(**doc)
    except TypeError as e:
        raise ConfigError(f"bad spec fields: {e}") from e


def cmd_gen_data(args) -> int:
    spec = _load_spec(args.spec)
    ds = generate_dataset(spec, args.seed)
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    write_dataset(ds, args.out)
    train = len(ds.split_rows("train"))
    test = len(ds.examples) - train
    print(f"wrote {args.out}: {len(ds.examples)} examples "
          f"({train} train / {test} test), positive rate {ds.positive_rate:.3f}")
    return 0


def cmd_train(args) -> int:
    ds = read_dataset(args.data)
    variants = tuple(args.variants.split(",")) if args.variants else ALL_VARIANTS
    settings = TrainSettings(epochs=args.epochs, lr=args.lr, seed=args.seed)
    results = train_variants(ds, settings, variants)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    metrics = {"artifact": "training-report", "data": str(args.data), "seed": args.seed,
               "settings": asdict(settings), "variants": {}}
    print(f"{'variant':<14}{'train AUC':>10}{'test AUC':>10}")
    for name, r in results.items():
        entry = {"train_auc": r.train_auc, "test_auc": r.test_auc}
        if r.matrices is not None:
            weights_path = out / f"{name}.weights.json"
            save_weights_file(r.assembly, r.matrices, weights_path)
            entry["weights"] = weights_path.name
        metrics["variants"][name] = entry
        print(f"{name:<14}{r.train_auc:>10.4f}{r.test_auc:>10.4f}")
    with open(out / "metrics.json", "w", encoding="utf-8") as fh:
        fh.write(dumps_canonical(metrics) + "\n")
    print(f"artifacts in {out}/")
    return 0


def cmd_export(args) -> int:
    run = Path(args.run)
    try:
        with open(run / "metrics.json", "r", encoding="utf-8") as fh:
            metrics = json.load(fh)
    except (OSError, ValueError) as e:
        raise DataError(f"cannot read training report in {run}: {e}") from e
    entry = metrics.get("variants", {}).get(EXPORT_VARIANT)
    if not entry or "weights" not in entry:
        raise DataError(f"no trained {EXPORT_VARIANT!r} variant in {run}")
    assembly, matrices = load_weights_file(run / entry["weights"])
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    save_weights_file(assembly, matrices, args.out)
    print(f"exported {EXPORT_VARIANT} scorer "
          f"(test AUC {entry['test_auc']:.4f}) to {args.out}")
    return 0


def cmd_conformance(args) -> int:
    report = run_conformance(args.weights, args.out, seed=args.seed, count=args.count)
    print(f"wrote {report.count} fixture bundles and scores to {args.out}/ "
          f"(scores {report.score_min:.4f}..{report.score_max:.4f}, "
          f"mean {report.score_mean:.4f})")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="promoplan-trainer",
        description="Train trigger scorers on simulated shoppers and export weight files.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="generate a simulator-labeled dataset")
    p.add_argument("--out", required=True, help="dataset JSONL path")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--spec", default=None, help="JSON file overriding the dataset spec")
    p.set_defaults(fn=cmd_gen_data)

    p = sub.add_parser("train", help="train model variants and report AUCs")
    p.add_argument("--data", required=True, help="dataset from gen-data")
    p.add_argument("--out", required=True, help="run directory for weights and metrics")
    p.add_argument("--variants", default=None,
                   help=f"comma list from {','.join(ALL_VARIANTS)} (default: all)")
    p.add_argument("--epochs", type=int, default=14)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("export", help="export the attention variant as a scorer weight file")
    p.add_argument("--run", required=True, help="run directory from train")
    p.add_argument("--out", required=True, help="weight file path")
    p.set_defaults(fn=cmd_export)

    p = sub.add_parser("conformance", help="write fixture bundles and reference scores")
    p.add_argument("--weights", required=True, help="exported weight file")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=cmd_conformance)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except DataError as e:
        print(f"data error: {e}", file=sys.stderr)
        return 3
    except TrainingDivergedError as e:
        print(f"aborted: {e}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
