#!/usr/bin/env python3
"""
Dataset Service - loads or generates the dataset an experiment names
"""
import logging
import math
from pathlib import Path
from typing import Optional

import numpy as np

from core.errors import ConfigError, ShapeError
from data.dataset import Dataset
from data.generators import gen_factor_images, gen_pinwheel
from models import DatasetConfig
from repositories.base import PathLike
from repositories.dataset_repository import DatasetRepository, resize_nearest

logger = logging.getLogger(__name__)


class DatasetService:
    """Service for dataset operations"""

    def __init__(self, repo: Optional[DatasetRepository] = None):
        self.repo = repo or DatasetRepository()

    def load(self, cfg: DatasetConfig, rng: np.random.Generator) -> Dataset:
        """
        Materialise the configured dataset

        Args:
            cfg: Dataset section of an experiment config
            rng: Generator for pinwheel noise and subset selection

        Returns:
            Dataset, subset and resized as configured
        """
        if cfg.source == "pinwheel":
            dataset = gen_pinwheel(rng, cfg.num_classes, cfg.per_class, cfg.radial_std,
                                   cfg.tangential_std, cfg.rate)
        elif cfg.source == "factor_images":
            dataset = gen_factor_images(cfg.cardinalities, cfg.image_size)
        else:
            dataset = self._read_file(cfg)

        if cfg.resize is not None:
            dataset = self._resize(dataset, cfg.resize)
        if cfg.subset is not None and cfg.subset < dataset.num_rows:
            idx = np.sort(rng.choice(dataset.num_rows, size=cfg.subset, replace=False))
            dataset = dataset.subset(idx)
        logger.info(f"[Dataset] {dataset.provenance}: n={dataset.num_rows} P={dataset.dim} "
                    f"factors={dataset.factor_names}")
        return dataset

    def _read_file(self, cfg: DatasetConfig) -> Dataset:
        if cfg.source == "npy":
            observations = self.repo.read_npy(cfg.path, flatten=True)
            if observations.ndim == 1:
                observations = observations[:, None]
        else:
            observations = self.repo.read_idx(cfg.path)
        factors, names = None, []
        if cfg.labels_path is not None:
            factors = self._read_labels(cfg.labels_path)
            names = ["label"] if factors.ndim == 1 else [f"factor_{k}" for k in range(factors.shape[1])]
            if len(factors) != len(observations):
                raise ShapeError("dataset", [observations.shape, factors.shape], "one label row per observation")
        return Dataset(observations, factors, None, names, f"{cfg.source}:{Path(cfg.path).name}")

    def _read_labels(self, path: PathLike) -> np.ndarray:
        if str(path).endswith(".npy"):
            labels = self.repo.read_npy(path)
            if not np.all(labels == np.round(labels)):
                raise ConfigError(f"{path}: labels must be integers")
            return labels.astype(np.int64)
        return self.repo.read_idx_labels(path)

    @staticmethod
    def _resize(dataset: Dataset, target: int) -> Dataset:
        source = int(round(math.sqrt(dataset.dim)))
        if source * source != dataset.dim:
            raise ConfigError(f"resize needs square images, P={dataset.dim} is not a square")
        observations = resize_nearest(dataset.observations, source, target)
        return Dataset(observations, dataset.factors, dataset.cardinalities, dataset.factor_names,
                       f"{dataset.provenance}@{target}x{target}")

    def write(self, dataset: Dataset, out_dir: PathLike, binary: bool = False) -> dict:
        """
        gen-data output: observations.npy (+ factors.npy)

        Returns:
            Dict of written file name -> description
        """
        out = Path(out_dir)
        files = {}
        descr = "|u1" if binary else "<f8"
        self.repo.write_npy(out / "observations.npy", dataset.observations, descr)
        files["observations.npy"] = {"description": f"{dataset.provenance} observations, shape (n, P), {descr}"}
        if dataset.factors is not None:
            self.repo.write_npy(out / "factors.npy", dataset.factors.astype(np.uint8)
                                if max(dataset.cardinalities) <= 255 else dataset.factors.astype(np.float64))
            files["factors.npy"] = {
                "description": "integer generative factors, shape (n, K)",
                "columns": {name: f"index in [0, {c})" for name, c in zip(dataset.factor_names, dataset.cardinalities)},
            }
        return files
