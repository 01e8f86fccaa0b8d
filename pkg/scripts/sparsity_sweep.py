#!/usr/bin/env python3
"""
Sparsity sweep - spike-and-slab against Gaussian prior at a strong MMD weight

Trains the sparsity recipe with γ = 0.8 and with γ = 0 (a standard Gaussian)
for each seed and compares the final sparsity scores. Uses Fashion-MNIST IDX
files when given, the synthetic factor images otherwise.

Usage:
    python scripts/sparsity_sweep.py
    python scripts/sparsity_sweep.py --idx data/train-images-idx3-ubyte --alpha 1000 --seeds 4
"""
import argparse
import logging
import os
import sys

import numpy as np

# Add parent directory to path for imports
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from config import LOG_FORMAT, LOG_LEVEL
from data.constants import FASHION_TARGET_SIZE
from models import ExperimentConfig, apply_overrides, validate_config
from repositories.config_repository import ConfigRepository
from services.training_service import TrainingService


def main():
    parser = argparse.ArgumentParser(description="Sparsity score: spike-and-slab vs Gaussian prior")
    parser.add_argument("--config", default="configs/sparsity.json")
    parser.add_argument("--idx", help="Fashion-MNIST image file (IDX u8); default: synthetic factor images")
    parser.add_argument("--subset", type=int, default=4096)
    parser.add_argument("--alpha", type=float, default=1000.0)
    parser.add_argument("--gamma", type=float, default=0.8)
    parser.add_argument("--seeds", type=int, default=4)
    parser.add_argument("--epochs", type=int, help="override the recipe's epoch count")
    parser.add_argument("--out", default="runs/sparsity-sweep")
    args = parser.parse_args()
    logging.basicConfig(level=LOG_LEVEL, format=LOG_FORMAT)

    base = ConfigRepository().load(args.config)
    if args.idx:
        base["dataset"] = {"source": "idx", "path": args.idx, "subset": args.subset,
                           "resize": FASHION_TARGET_SIZE}
    service = TrainingService()
    scores = {}
    for gamma in (args.gamma, 0.0):
        scores[gamma] = []
        for seed in range(args.seeds):
            overrides = [f"prior.gamma={gamma}", f"objective.alpha={args.alpha}", f"seed={seed}",
                         f"out={os.path.join(args.out, f'gamma{gamma:g}', f'seed{seed}')}", 'metrics=["sparsity"]']
            if args.epochs:
                overrides.append(f"epochs={args.epochs}")
            config = validate_config(ExperimentConfig, apply_overrides(base, overrides), args.config)
            result = service.train(config)
            final = {row["metric"]: row["value"] for row in result.metrics if row["epoch"] == config.epochs}
            scores[gamma].append(final["sparsity_score"])

    sparse = float(np.mean(scores[args.gamma]))
    gaussian = float(np.mean(scores[0.0]))
    print(f"alpha={args.alpha:g}, {args.seeds} seeds")
    print(f"  gamma={args.gamma:g}  sparsity {sparse:.4f}  {np.round(scores[args.gamma], 4).tolist()}")
    print(f"  gamma=0    sparsity {gaussian:.4f}  {np.round(scores[0.0], 4).tolist()}")
    print(f"difference {sparse - gaussian:+.4f} (want >= 0.10)")
    sys.exit(0 if sparse - gaussian >= 0.10 else 1)


if __name__ == "__main__":
    main()
