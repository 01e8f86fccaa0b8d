#!/usr/bin/env python3
"""
Dataset container - observations plus optional generative factors
"""
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from core.errors import ConfigError, ShapeError


@dataclass
class Dataset:
    """
    observations: (n, P) float64
    factors: (n, K) integer factor indices, each below its cardinality
    """
    observations: np.ndarray
    factors: Optional[np.ndarray] = None
    cardinalities: Optional[List[int]] = None
    factor_names: List[str] = field(default_factory=list)
    provenance: str = ""

    def __post_init__(self):
        self.observations = np.asarray(self.observations, dtype=np.float64)
        if self.observations.ndim != 2:
            raise ShapeError("dataset", [self.observations.shape], "observations must be (n, P)")
        if self.factors is None:
            return
        self.factors = np.asarray(self.factors, dtype=np.int64)
        if self.factors.ndim == 1:
            self.factors = self.factors[:, None]
        if self.factors.shape[0] != self.observations.shape[0]:
            raise ShapeError("dataset", [self.observations.shape, self.factors.shape], "one factor row per observation")
        if self.cardinalities is None:
            self.cardinalities = [int(c) for c in self.factors.max(axis=0) + 1]
        if len(self.cardinalities) != self.factors.shape[1]:
            raise ConfigError("one cardinality per factor column is required")
        if np.any(self.factors < 0) or np.any(self.factors >= np.asarray(self.cardinalities)):
            raise ConfigError("factor indices must lie in [0, cardinality)")
        if not self.factor_names:
            self.factor_names = [f"factor_{k}" for k in range(self.factors.shape[1])]

    @property
    def num_rows(self) -> int:
        return self.observations.shape[0]

    @property
    def dim(self) -> int:
        return self.observations.shape[1]

    @property
    def num_factors(self) -> int:
        return 0 if self.factors is None else self.factors.shape[1]

    @property
    def labels(self) -> Optional[np.ndarray]:
        """The single factor column, when there is exactly one"""
        if self.num_factors != 1:
            return None
        return self.factors[:, 0]

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx)
        return Dataset(
            self.observations[idx],
            None if self.factors is None else self.factors[idx],
            None if self.cardinalities is None else list(self.cardinalities),
            list(self.factor_names),
            self.provenance,
        )

    def sample_fixed_factor(self, k: int, size: int, rng: np.random.Generator) -> np.ndarray:
        """Row indices sharing one randomly drawn value of factor k, others free"""
        if self.factors is None or not 0 <= k < self.num_factors:
            raise ConfigError(f"dataset has no factor {k}")
        value = self.factors[rng.integers(self.num_rows), k]
        candidates = np.flatnonzero(self.factors[:, k] == value)
        return rng.choice(candidates, size=size, replace=True)
