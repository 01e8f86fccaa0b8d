#!/usr/bin/env python3
"""
Pinwheel α/β grid - inclusive KL and encoder entropy across seeds

Trains the pinwheel recipe at (β=0, α=1), (β=0, α=8), (α=0, β=0.01) and
(α=0, β=1.2) for each seed, then prints the averaged final metrics and the
two orderings the grid is meant to show.

Usage:
    python scripts/pinwheel_sweep.py
    python scripts/pinwheel_sweep.py --seeds 5 --epochs 200 --out runs/pinwheel-sweep
"""
import argparse
import logging
import os
import sys

import numpy as np

# Add parent directory to path for imports
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from config import LOG_FORMAT, LOG_LEVEL
from models import ExperimentConfig, apply_overrides, validate_config
from repositories.config_repository import ConfigRepository
from services.training_service import TrainingService

CELLS = [
    ("beta0_alpha1", {"objective.beta": 0.0, "objective.alpha": 1.0}),
    ("beta0_alpha8", {"objective.beta": 0.0, "objective.alpha": 8.0}),
    ("alpha0_beta0.01", {"objective.beta": 0.01, "objective.alpha": 0.0}),
    ("alpha0_beta1.2", {"objective.beta": 1.2, "objective.alpha": 0.0}),
]


def main():
    parser = argparse.ArgumentParser(description="Pinwheel decomposition grid")
    parser.add_argument("--config", default="configs/pinwheel.json")
    parser.add_argument("--seeds", type=int, default=5)
    parser.add_argument("--epochs", type=int, help="override the recipe's epoch count")
    parser.add_argument("--out", default="runs/pinwheel-sweep")
    args = parser.parse_args()
    logging.basicConfig(level=LOG_LEVEL, format=LOG_FORMAT)

    base = ConfigRepository().load(args.config)
    service = TrainingService()
    results = {name: {"inclusive_kl": [], "encoder_entropy": []} for name, _ in CELLS}

    for name, edits in CELLS:
        for seed in range(args.seeds):
            overrides = [f"{k}={v}" for k, v in edits.items()]
            overrides += [f"seed={seed}", f"out={os.path.join(args.out, name, f'seed{seed}')}",
                          'metrics=["inclusive_kl", "encoder_entropy"]']
            if args.epochs:
                overrides.append(f"epochs={args.epochs}")
            config = validate_config(ExperimentConfig, apply_overrides(base, overrides), args.config)
            result = service.train(config)
            final = {row["metric"]: row["value"] for row in result.metrics if row["epoch"] == config.epochs}
            for metric in results[name]:
                results[name][metric].append(final[metric])

    print(f"{'cell':<18s} {'inclusive_kl':>14s} {'encoder_entropy':>16s}")
    means = {}
    for name, _ in CELLS:
        kl = float(np.mean(results[name]["inclusive_kl"]))
        entropy = float(np.mean(results[name]["encoder_entropy"]))
        means[name] = (kl, entropy)
        print(f"{name:<18s} {kl:>14.4f} {entropy:>16.4f}")

    kl_drop = 1.0 - means["beta0_alpha8"][0] / means["beta0_alpha1"][0]
    entropy_up = means["alpha0_beta1.2"][1] > means["alpha0_beta0.01"][1]
    print(f"inclusive KL at alpha=8 vs alpha=1: {100.0 * kl_drop:.1f}% lower (want >= 20%)")
    print(f"encoder entropy at beta=1.2 exceeds beta=0.01: {entropy_up}")
    sys.exit(0 if kl_drop >= 0.2 and entropy_up else 1)


if __name__ == "__main__":
    main()
