"""
Reproduce the routing ablation trends on the synthetic occlusion corpus.

Generates the train/val corpora, runs the expert-count, balance-weight and
top-k sweeps over several seeds, and checks each trend. Exits 1 if any
trend fails. At the default scale this takes tens of minutes on a CPU.

Usage:
    python scripts/reproduce_trends.py --out runs/trends [--train-count 4000] [--val-count 1000]
"""

import argparse
import sys
from pathlib import Path

from shapemoe.core.logging import configure_logging
from shapemoe.data import GenConfig, generate_corpus, write_dataset
from shapemoe.experiments import reproduce_trends
from shapemoe.training import TrainConfig


def main() -> int:
    parser = argparse.ArgumentParser(description="Run the ablation sweeps and check their trends.")
    parser.add_argument("--out", type=Path, required=True, help="Output directory for corpora and sweeps")
    parser.add_argument("--train-count", type=int, default=4000, help="Training scenes")
    parser.add_argument("--val-count", type=int, default=1000, help="Validation scenes")
    parser.add_argument("--size", type=int, default=64, help="Canvas side in pixels")
    parser.add_argument("--epochs", type=int, default=20, help="Epochs per run")
    parser.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2], help="Run seeds")
    parser.add_argument("--workers", type=int, default=1, help="Parallel sweep workers")
    args = parser.parse_args()

    configure_logging()
    args.out.mkdir(parents=True, exist_ok=True)
    train_path, val_path = args.out / "train.smds", args.out / "val.smds"
    write_dataset(generate_corpus(GenConfig(seed=100, count=args.train_count, side=args.size)), train_path)
    write_dataset(generate_corpus(GenConfig(seed=200, count=args.val_count, side=args.size)), val_path)

    base = TrainConfig.model_validate({"epochs": args.epochs, "architecture": {"image_size": args.size}})
    checks = reproduce_trends(train_path, val_path, args.out, base, seeds=args.seeds, workers=args.workers)

    for check in checks:
        print(f"{'PASS' if check.passed else 'FAIL'}  {check.name:<13} {check.detail}")
    return 0 if all(check.passed for check in checks) else 1


if __name__ == "__main__":
    sys.exit(main())
