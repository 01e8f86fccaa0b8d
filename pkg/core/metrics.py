#!/usr/bin/env python3
"""
Decomposition metrics

- hoyer / sparsity_score: Hoyer sparsity of encodings normalised by the
  aggregate per-dimension standard deviation
- disentanglement_score: majority-vote axis-alignment score over
  fixed-factor batches
- mutual_information: I(x; z) = H[q(z)] - E_x H[q(z|x)]
- class_magnitudes: mean |z_d| per label
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np

from core.divergences import DivergenceEstimate, oracle_entropy_from_arrays
from core.errors import ConfigError, NumericError, ShapeError
from data.constants import COLLAPSED_STD

logger = logging.getLogger(__name__)

SPARSITY_MIN_STD = 1e-8


def hoyer(y) -> float:
    """(√d - ‖y‖₁/‖y‖₂) / (√d - 1): 0 for a dense vector, 1 for a one-hot one"""
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    d = y.size
    if d < 2:
        raise ConfigError(f"Hoyer sparsity needs d >= 2, got {d}")
    l2 = float(np.linalg.norm(y))
    if l2 == 0.0:
        raise NumericError("Hoyer sparsity of a zero vector is undefined")
    root = math.sqrt(d)
    return (root - float(np.sum(np.abs(y))) / l2) / (root - 1.0)


@dataclass
class SparsityResult:
    score: float
    excluded_dims: List[int] = field(default_factory=list)


def sparsity_score(encodings: np.ndarray) -> SparsityResult:
    """Mean Hoyer over rows after scaling each dimension to unit aggregate std"""
    e = np.asarray(encodings, dtype=np.float64)
    if e.ndim != 2 or e.shape[0] < 1:
        raise ShapeError("sparsity_score", [e.shape], "expected a non-empty (n, D) encoding matrix")
    std = e.std(axis=0)
    keep = std >= SPARSITY_MIN_STD
    excluded = [int(i) for i in np.flatnonzero(~keep)]
    if keep.sum() < 2:
        raise NumericError(f"sparsity needs >= 2 non-constant dimensions, {int(keep.sum())} remain")
    if excluded:
        logger.info(f"[Metrics] sparsity excludes constant dimensions {excluded}")
    normalised = e[:, keep] / std[keep]
    return SparsityResult(float(np.mean([hoyer(row) for row in normalised])), excluded)


@dataclass
class DisentanglementResult:
    score: float
    collapsed_dims: List[int]
    votes: np.ndarray                  # (K, D) counts of (factor, argmin dimension)
    num_votes: int


def disentanglement_score(encode_fn: Callable[[np.ndarray], np.ndarray], dataset, batch_size: int,
                          num_votes: int, rng: np.random.Generator,
                          collapsed_std: float = COLLAPSED_STD) -> DisentanglementResult:
    """
    Axis-alignment score of a representation against known generative factors

    encode_fn maps observations (L, P) to posterior means (L, D); dataset
    exposes observations, num_factors and sample_fixed_factor(k, L, rng).
    """
    k_factors = dataset.num_factors
    if k_factors < 2:
        raise ConfigError(f"disentanglement needs >= 2 generative factors, got {k_factors}")
    if batch_size < 2 or num_votes < k_factors:
        raise ConfigError(f"disentanglement needs L >= 2 and M >= K, got L={batch_size}, M={num_votes}")

    global_std = np.asarray(encode_fn(dataset.observations), dtype=np.float64).std(axis=0)
    active = np.flatnonzero(global_std >= collapsed_std)
    collapsed = [int(i) for i in np.flatnonzero(global_std < collapsed_std)]
    if active.size == 0:
        raise NumericError("every latent dimension is collapsed")

    votes = np.zeros((k_factors, global_std.size), dtype=np.int64)
    for _ in range(num_votes):
        k = int(rng.integers(k_factors))
        idx = dataset.sample_fixed_factor(k, batch_size, rng)
        z = np.asarray(encode_fn(dataset.observations[idx]), dtype=np.float64)
        local_var = (z[:, active] / global_std[active]).var(axis=0)
        votes[k, active[int(np.argmin(local_var))]] += 1

    correct = int(votes.max(axis=0).sum())
    return DisentanglementResult(correct / num_votes, collapsed, votes, num_votes)


def mutual_information(mean: np.ndarray, log_var: np.ndarray, num_samples: int, rng: np.random.Generator,
                       mixing: Optional[np.ndarray] = None) -> DivergenceEstimate:
    """Overlap measure H[q(z)] - mean_i H[q(z|x_i)]"""
    aggregate = oracle_entropy_from_arrays(mean, log_var, num_samples, rng, mixing)
    d = mean.shape[1]
    logdet = log_var.sum(axis=1)
    if mixing is not None:
        logdet = logdet + 2.0 * np.linalg.slogdet(mixing)[1]
    conditional = float(np.mean(0.5 * d * (1.0 + math.log(2.0 * math.pi)) + 0.5 * logdet))
    return DivergenceEstimate(aggregate.value - conditional, aggregate.std_error,
                              aggregate.num_samples, aggregate.num_components)


def class_magnitudes(encodings: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """(C, D) mean absolute encoding per class label 0..C-1"""
    e = np.asarray(encodings, dtype=np.float64)
    labels = np.asarray(labels).astype(np.int64).reshape(-1)
    if labels.shape[0] != e.shape[0]:
        raise ShapeError("class_magnitudes", [e.shape, labels.shape], "one label per row")
    num_classes = int(labels.max()) + 1
    out = np.zeros((num_classes, e.shape[1]))
    for c in range(num_classes):
        rows = e[labels == c]
        if len(rows):
            out[c] = np.abs(rows).mean(axis=0)
    return out
