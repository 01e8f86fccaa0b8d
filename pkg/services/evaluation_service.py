#!/usr/bin/env python3
"""
Evaluation Service - decomposition metrics for a trained model

Metric rows have the shape {epoch, metric, value, std_error}; std_error is 0
for deterministic metrics.
"""
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from core.divergences import inclusive_kl_estimate, mmd_dimwise_cauchy, sample_aggregate
from core.errors import ConfigError
from core.metrics import class_magnitudes, disentanglement_score, mutual_information, sparsity_score
from core.networks import VaeModel, encode_arrays
from core.random_streams import DATA, METRIC, RandomStreams
from data.dataset import Dataset
from models import EvaluationConfig, ExperimentConfig, validate_config
from repositories.checkpoint_repository import CheckpointRepository
from repositories.run_repository import CHECKPOINT_FILE, CONFIG_FILE, MANIFEST_FILE, RunRepository
from services.dataset_service import DatasetService
from services.model_builder import model_from_checkpoint

logger = logging.getLogger(__name__)

METRIC_COLUMNS = ["epoch", "metric", "value", "std_error"]
METRIC_COLUMN_DOCS = {
    "epoch": "training epoch the metric was computed after",
    "metric": "metric name",
    "value": "metric value",
    "std_error": "Monte-Carlo standard error, 0 for deterministic metrics",
}
CLASS_MAGNITUDES_FILE = "class_magnitudes.csv"
EVAL_METRICS_FILE = "eval_metrics.csv"


@dataclass
class EvaluationResult:
    rows: List[Dict] = field(default_factory=list)
    class_table: Optional[np.ndarray] = None

    def values(self) -> Dict[str, float]:
        return {row["metric"]: row["value"] for row in self.rows}


def _encoder_entropy(log_var: np.ndarray, mixing: Optional[np.ndarray]) -> float:
    d = log_var.shape[1]
    logdet = log_var.sum(axis=1)
    if mixing is not None:
        logdet = logdet + 2.0 * np.linalg.slogdet(mixing)[1]
    return float(np.mean(0.5 * d * (1.0 + math.log(2.0 * math.pi)) + 0.5 * logdet))


class EvaluationService:
    """Service for metric computation"""

    def compute(self, model: VaeModel, dataset: Dataset, metrics: Sequence[str], cfg: EvaluationConfig,
                rng: np.random.Generator, epoch: int = 0) -> EvaluationResult:
        """
        Evaluate the requested metrics

        Args:
            model: Trained model
            dataset: Data the metrics are measured on
            metrics: Metric names (see models.MetricName)
            cfg: Estimator sizes
            rng: Metric stream
            epoch: Recorded in every row

        Returns:
            EvaluationResult with one row per scalar metric
        """
        result = EvaluationResult()
        if not metrics:
            return result
        x = dataset.observations
        if dataset.num_rows > cfg.max_rows:
            x = x[np.sort(rng.choice(dataset.num_rows, size=cfg.max_rows, replace=False))]
        mean, log_var, mixing = encode_arrays(model, x)

        def add(name: str, value: float, std_error: float = 0.0):
            result.rows.append({"epoch": epoch, "metric": name, "value": float(value), "std_error": float(std_error)})

        for name in metrics:
            if name == "sparsity":
                sparsity = sparsity_score(mean)
                add("sparsity_score", sparsity.score)
            elif name == "disentanglement":
                if dataset.num_factors < 2:
                    logger.warning(f"[Eval] disentanglement skipped: dataset has {dataset.num_factors} factor(s)")
                    continue
                score = disentanglement_score(lambda obs: encode_arrays(model, obs)[0], dataset,
                                              cfg.disentanglement_batch, cfg.disentanglement_votes, rng,
                                              cfg.collapsed_std)
                add("disentanglement_score", score.score,
                    math.sqrt(score.score * (1.0 - score.score) / score.num_votes))
            elif name == "inclusive_kl":
                estimate = inclusive_kl_estimate(model, x, cfg.divergence_samples, rng)
                add("inclusive_kl", estimate.value, estimate.std_error)
            elif name == "mmd":
                m = cfg.mmd_samples
                z = sample_aggregate(mean, log_var, m, rng, mixing)
                add("mmd", mmd_dimwise_cauchy(z, model.prior.sample(rng, m)))
            elif name == "mutual_information":
                estimate = mutual_information(mean, log_var, cfg.oracle_samples, rng, mixing)
                add("mutual_information", estimate.value, estimate.std_error)
            elif name == "encoder_entropy":
                add("encoder_entropy", _encoder_entropy(log_var, mixing))
            elif name == "class_magnitudes":
                if dataset.labels is None:
                    logger.warning("[Eval] class_magnitudes skipped: dataset has no single label factor")
                    continue
                result.class_table = class_magnitudes(encode_arrays(model, dataset.observations)[0],
                                                      dataset.labels)
            else:
                raise ConfigError(f"unknown metric '{name}'")
        for row in result.rows:
            logger.info(f"[Eval] epoch {epoch} {row['metric']}={row['value']:.6g} (se {row['std_error']:.2g})")
        return result

    # ---------- run directories ----------

    def evaluate_run(self, run_dir, metrics: Optional[Sequence[str]] = None, seed: Optional[int] = None,
                     run_repo: Optional[RunRepository] = None,
                     checkpoint_repo: Optional[CheckpointRepository] = None,
                     dataset_service: Optional[DatasetService] = None) -> EvaluationResult:
        """
        Recompute metrics from a run's checkpoint and config

        Writes eval_metrics.csv (and class_magnitudes.csv when requested) into the run.
        """
        run_repo = run_repo or RunRepository()
        checkpoint_repo = checkpoint_repo or CheckpointRepository()
        dataset_service = dataset_service or DatasetService()
        run_dir = Path(run_dir)

        config = validate_config(ExperimentConfig, run_repo.read_json(run_dir / CONFIG_FILE),
                                 str(run_dir / CONFIG_FILE))
        metadata, params = checkpoint_repo.load(run_dir / CHECKPOINT_FILE)
        model, stored_seed = model_from_checkpoint(metadata, params)
        streams = RandomStreams(stored_seed if seed is None else seed)
        dataset = dataset_service.load(config.dataset, RandomStreams(stored_seed).get(DATA))
        if dataset.dim != model.input_dim:
            raise ConfigError(f"dataset width {dataset.dim} does not match checkpoint input_dim {model.input_dim}")

        names = list(metrics) if metrics else list(config.metrics)
        result = self.compute(model, dataset, names, config.evaluation, streams.get(METRIC), epoch=config.epochs)
        run_repo.write_csv(run_dir / EVAL_METRICS_FILE, METRIC_COLUMNS,
                           [[row[c] for c in METRIC_COLUMNS] for row in result.rows])
        manifest_path = run_dir / MANIFEST_FILE
        manifest = run_repo.read_json(manifest_path) if manifest_path.is_file() else {"files": {}}
        files = manifest.setdefault("files", {})
        files[EVAL_METRICS_FILE] = {"description": f"metrics {names} recomputed from the checkpoint",
                                    "columns": METRIC_COLUMN_DOCS}
        if result.class_table is not None:
            write_class_table(run_repo, run_dir, result.class_table)
            files[CLASS_MAGNITUDES_FILE] = class_table_doc(result.class_table.shape[1])
        run_repo.write_json(manifest_path, manifest)
        return result


def class_table_doc(latent_dim: int) -> Dict:
    columns = {"class": "label value"}
    columns.update({f"z{d}": f"mean |z_{d}| over the class" for d in range(latent_dim)})
    return {"description": "per-class mean embedding magnitude", "columns": columns}


def write_class_table(run_repo: RunRepository, run_dir, table: np.ndarray):
    header = ["class"] + [f"z{d}" for d in range(table.shape[1])]
    rows = [[c] + list(table[c]) for c in range(table.shape[0])]
    run_repo.write_csv(Path(run_dir) / CLASS_MAGNITUDES_FILE, header, rows)
