"""
End-to-end training runs on tiny pinwheel experiments.
"""
import numpy as np
import pytest

from conftest import pinwheel_config
from core.errors import ConfigError
from models import ExperimentConfig, validate_config
from repositories import CheckpointRepository, RunRepository
from repositories.run_repository import CHECKPOINT_FILE, CONFIG_FILE, HISTORY_FILE, MANIFEST_FILE, METRICS_FILE
from services.evaluation_service import CLASS_MAGNITUDES_FILE, EVAL_METRICS_FILE, EvaluationService
from services.training_service import HISTORY_COLUMNS, TrainingService


def _train(out, **changes):
    config = validate_config(ExperimentConfig, pinwheel_config(str(out), **changes))
    return TrainingService().train(config)


class TestRunDirectory:
    """Files written by a training run"""

    def test_outputs_and_manifest(self, tmp_path):
        result = _train(tmp_path / "run")
        run_dir = result.run_dir
        for name in (CONFIG_FILE, HISTORY_FILE, METRICS_FILE, CHECKPOINT_FILE, MANIFEST_FILE):
            assert (run_dir / name).is_file(), name
        repo = RunRepository()
        manifest = repo.read_json(run_dir / MANIFEST_FILE)
        assert set(manifest["files"]) == {CONFIG_FILE, HISTORY_FILE, METRICS_FILE, CHECKPOINT_FILE}
        assert set(manifest["files"][HISTORY_FILE]["columns"]) == set(HISTORY_COLUMNS)
        assert manifest["seed"] == 1
        assert manifest["dataset"] == "pinwheel"
        history = repo.read_csv(run_dir / HISTORY_FILE)
        assert [row["epoch"] for row in history] == [1, 2, 3]

    def test_saved_config_revalidates(self, tmp_path):
        result = _train(tmp_path / "run")
        tree = RunRepository().read_json(result.run_dir / CONFIG_FILE)
        assert validate_config(ExperimentConfig, tree).name == "pinwheel-tiny"

    def test_checkpoint_matches_architecture(self, tmp_path):
        result = _train(tmp_path / "run")
        metadata, params = CheckpointRepository().load(result.run_dir / CHECKPOINT_FILE)
        assert metadata["seed"] == 1
        assert params["encoder.0.weight"].shape == (2, 8)


class TestDeterminism:
    """Same config and seed give byte-identical logs"""

    def test_history_bytes(self, tmp_path):
        a = _train(tmp_path / "a")
        b = _train(tmp_path / "b")
        assert (a.run_dir / HISTORY_FILE).read_bytes() == (b.run_dir / HISTORY_FILE).read_bytes()
        assert (a.run_dir / CHECKPOINT_FILE).read_bytes() == (b.run_dir / CHECKPOINT_FILE).read_bytes()

    def test_seed_changes_the_run(self, tmp_path):
        a = _train(tmp_path / "a")
        b = _train(tmp_path / "b", seed=2)
        assert (a.run_dir / HISTORY_FILE).read_bytes() != (b.run_dir / HISTORY_FILE).read_bytes()

    def test_decomposition_without_divergence_trains_like_elbo(self, tmp_path):
        a = _train(tmp_path / "a")
        b = _train(tmp_path / "b", objective={"variant": "decomp", "alpha": 0.0, "beta": 1.0})
        assert a.history == b.history


class TestTrainingBehaviour:
    """The loop actually optimises the objective"""

    def test_objective_improves(self, tmp_path):
        result = _train(tmp_path / "run", epochs=100, optimizer={"preset": "pinwheel", "lr": 0.01})
        assert result.history[-1]["objective"] > result.history[0]["objective"]

    def test_minibatches(self, tmp_path):
        result = _train(tmp_path / "run", batch_size=16, epochs=2)
        assert len(result.history) == 2

    def test_learnable_prior_moves(self, tmp_path):
        result = _train(tmp_path / "run", prior={"kind": "diag_gaussian", "learnable": True}, epochs=5)
        _, params = CheckpointRepository().load(result.run_dir / CHECKPOINT_FILE)
        assert np.any(params["prior.log_var"] != 0.0)

    def test_batch_larger_than_dataset(self, tmp_path):
        with pytest.raises(ConfigError):
            _train(tmp_path / "run", batch_size=41)

    def test_entropy_regulariser_needs_gaussian_prior(self, tmp_path):
        prior = {"kind": "gaussian_mixture", "weights": [0.5, 0.5], "means": [[0.0, 0.0], [1.0, 1.0]]}
        with pytest.raises(ConfigError):
            _train(tmp_path / "run", prior=prior, objective={"variant": "entropy_reg_elbo", "beta": 2.0})
        assert not (tmp_path / "run" / HISTORY_FILE).exists()


class TestMetrics:
    """Metric rows and per-class tables"""

    @pytest.fixture
    def run(self, tmp_path):
        return _train(tmp_path / "run", metrics=["encoder_entropy", "mutual_information", "class_magnitudes"],
                      evaluation={"oracle_samples": 200})

    def test_metric_rows(self, run):
        rows = RunRepository().read_csv(run.run_dir / METRICS_FILE)
        assert [row["metric"] for row in rows] == ["encoder_entropy", "mutual_information"]
        assert all(row["epoch"] == 3 for row in rows)
        assert rows[0]["std_error"] == 0

    def test_class_table(self, run):
        rows = RunRepository().read_csv(run.run_dir / CLASS_MAGNITUDES_FILE)
        assert [row["class"] for row in rows] == [0, 1, 2, 3]
        assert all(row["z0"] >= 0 and row["z1"] >= 0 for row in rows)
        manifest = RunRepository().read_json(run.run_dir / MANIFEST_FILE)
        assert CLASS_MAGNITUDES_FILE in manifest["files"]

    def test_evaluation_every_epoch(self, tmp_path):
        result = _train(tmp_path / "run", metrics=["encoder_entropy"], evaluation={"every": 1})
        assert [row["epoch"] for row in result.metrics] == [1, 2, 3]

    def test_eval_reproduces_deterministic_metric(self, run):
        trained = {row["metric"]: row["value"] for row in run.metrics}
        result = EvaluationService().evaluate_run(run.run_dir, ["encoder_entropy"])
        assert result.values()["encoder_entropy"] == pytest.approx(trained["encoder_entropy"], rel=1e-12)
        assert (run.run_dir / EVAL_METRICS_FILE).is_file()
        manifest = RunRepository().read_json(run.run_dir / MANIFEST_FILE)
        assert EVAL_METRICS_FILE in manifest["files"]
