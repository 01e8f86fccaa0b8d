#!/usr/bin/env python3
"""
Training Service - seeded epoch loop producing a run directory

Run directory contents:
    config.json       validated experiment config
    history.csv       one row per epoch
    metrics.csv       metric rows (cadence `evaluation.every`, always after the last epoch)
    class_magnitudes.csv  when requested and the data carries one label factor
    checkpoint.dvae   final parameters
    manifest.json     documents every file and column
"""
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np

from core.errors import ConfigError
from core.objectives import ObjectiveTerms, check_compatible, evaluate_objective
from core.optimizer import adam_step
from core.random_streams import DATA, INIT, METRIC, PRIOR_SAMPLES, REPARAM, SHUFFLE, RandomStreams
from core.tensor_ad import Tape
from models import ExperimentConfig
from repositories.checkpoint_repository import CheckpointRepository
from repositories.run_repository import (
    CHECKPOINT_FILE,
    CONFIG_FILE,
    HISTORY_FILE,
    METRICS_FILE,
    RunRepository,
)
from services.dataset_service import DatasetService
from services.evaluation_service import (
    CLASS_MAGNITUDES_FILE,
    METRIC_COLUMN_DOCS,
    METRIC_COLUMNS,
    EvaluationService,
    class_table_doc,
    write_class_table,
)
from services.model_builder import adam_state, build_model, log_prior_summary, model_metadata, objective_spec

logger = logging.getLogger(__name__)

HISTORY_COLUMNS = ["epoch", "objective", "reconstruction", "kl", "divergence", "entropy"]
HISTORY_COLUMN_DOCS = {
    "epoch": "1-based epoch index",
    "objective": "objective value averaged over the epoch's minibatches (weighted by batch size)",
    "reconstruction": "mean E_q[log p(x|z)] per datapoint",
    "kl": "mean KL(q(z|x) || p(z)) per datapoint (closed form or shared-sample Monte Carlo)",
    "divergence": "aggregate divergence D(q(z), p(z)) of the decomposition objective, 0 when alpha = 0",
    "entropy": "mean encoder entropy H[q(z|x)]",
}


@dataclass
class TrainResult:
    run_dir: Path
    history: List[Dict[str, float]] = field(default_factory=list)
    metrics: List[Dict[str, Any]] = field(default_factory=list)


class TrainingService:
    """Service for model training"""

    def __init__(self, run_repo: Optional[RunRepository] = None,
                 checkpoint_repo: Optional[CheckpointRepository] = None,
                 dataset_service: Optional[DatasetService] = None,
                 evaluation_service: Optional[EvaluationService] = None):
        self.run_repo = run_repo or RunRepository()
        self.checkpoint_repo = checkpoint_repo or CheckpointRepository()
        self.dataset_service = dataset_service or DatasetService()
        self.evaluation_service = evaluation_service or EvaluationService()

    def train(self, config: ExperimentConfig) -> TrainResult:
        """
        Run the configured experiment end to end

        Args:
            config: Validated experiment config

        Returns:
            TrainResult with the run directory and the rows written
        """
        streams = RandomStreams(config.seed)
        dataset = self.dataset_service.load(config.dataset, streams.get(DATA))
        x_all = dataset.observations
        n = dataset.num_rows
        batch = config.batch_size or n
        if batch > n:
            raise ConfigError(f"batch_size {batch} exceeds the dataset size n={n}")

        model = build_model(config, x_all, streams.get(INIT))
        spec = objective_spec(config.objective)
        check_compatible(spec, model)
        state = adam_state(config.optimizer)
        log_prior_summary(model)

        run_dir = self.run_repo.create_run(config.out)
        self.run_repo.write_json(run_dir / CONFIG_FILE, config.model_dump(mode="json"))

        shuffle = streams.get(SHUFFLE)
        reparam = streams.get(REPARAM)
        prior_rng = streams.get(PRIOR_SAMPLES)
        metric_rng = streams.get(METRIC)
        result = TrainResult(run_dir)
        class_table = None

        logger.info(f"[Trainer] {config.name}: {spec.variant} beta={spec.beta} alpha={spec.alpha} "
                    f"n={n} B={batch} epochs={config.epochs} seed={config.seed}")
        for epoch in range(1, config.epochs + 1):
            order = shuffle.permutation(n)
            sums = np.zeros(5)
            for start in range(0, n, batch):
                idx = order[start:start + batch]
                terms = self._step(model, state, spec, x_all[idx], reparam, prior_rng)
                values = terms.as_row()
                sums += len(idx) * np.array([values[c] for c in HISTORY_COLUMNS[1:]])
            row = dict(zip(HISTORY_COLUMNS, [epoch] + list(sums / n)))
            result.history.append(row)
            if epoch == 1 or epoch % config.log_every == 0 or epoch == config.epochs:
                logger.info(f"[Trainer] epoch {epoch}/{config.epochs} objective={row['objective']:.6f} "
                            f"recon={row['reconstruction']:.6f} kl={row['kl']:.6f} "
                            f"div={row['divergence']:.6g} entropy={row['entropy']:.4f}")

            every = config.evaluation.every
            if epoch == config.epochs or (every and epoch % every == 0):
                evaluation = self.evaluation_service.compute(model, dataset, config.metrics, config.evaluation,
                                                             metric_rng, epoch)
                result.metrics.extend(evaluation.rows)
                if evaluation.class_table is not None:
                    class_table = evaluation.class_table

        self._write_outputs(config, model, result, class_table, dataset.provenance)
        logger.info(f"[Trainer] finished -> {run_dir}")
        return result

    @staticmethod
    def _step(model, state, spec, x: np.ndarray, reparam: np.random.Generator,
              prior_rng: np.random.Generator) -> ObjectiveTerms:
        """One ascent step on the objective"""
        eps = reparam.standard_normal((spec.num_samples, x.shape[0], model.latent_dim))
        tape = Tape()
        terms = evaluate_objective(spec, model, x, eps, prior_rng, tape)
        grads = tape.param_grads(tape.backward(terms.value))
        params = adam_step(state, model.parameters(), {name: -g for name, g in grads.items()})
        model.assign(params)
        return terms

    def _write_outputs(self, config: ExperimentConfig, model, result: TrainResult,
                       class_table: Optional[np.ndarray], provenance: str = ""):
        run_dir = result.run_dir
        self.run_repo.write_csv(run_dir / HISTORY_FILE, HISTORY_COLUMNS,
                                [[row[c] for c in HISTORY_COLUMNS] for row in result.history])
        self.run_repo.write_csv(run_dir / METRICS_FILE, METRIC_COLUMNS,
                                [[row[c] for c in METRIC_COLUMNS] for row in result.metrics])
        self.checkpoint_repo.save(run_dir / CHECKPOINT_FILE,
                                  model_metadata(model, config.seed, {"name": config.name}),
                                  model.parameters())
        files = {
            CONFIG_FILE: {"description": "validated experiment config (schema_version 1)"},
            HISTORY_FILE: {"description": "per-epoch training log", "columns": HISTORY_COLUMN_DOCS},
            METRICS_FILE: {"description": f"metrics {list(config.metrics)}", "columns": METRIC_COLUMN_DOCS},
            CHECKPOINT_FILE: {"description": "DVAE checkpoint: metadata JSON then f64 parameter arrays"},
        }
        if class_table is not None:
            write_class_table(self.run_repo, run_dir, class_table)
            files[CLASS_MAGNITUDES_FILE] = class_table_doc(class_table.shape[1])
        self.run_repo.write_manifest(run_dir, files, {"name": config.name, "seed": config.seed, "dataset": provenance})
