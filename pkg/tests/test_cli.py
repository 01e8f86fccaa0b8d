"""
Command line entry point: subcommands and exit codes.
"""
import json

import numpy as np

from cli import EXIT_INVALID, EXIT_NUMERIC, EXIT_OK, main
from conftest import pinwheel_config
from core.errors import NonFiniteError
from models import VerificationReport
from repositories import DatasetRepository
from services.training_service import TrainingService
from services.verification_service import VerificationService

TINY_VERIFY = {
    "seed": 3,
    "theorem1": {"trials": 3, "student_t_trials": 1},
    "corollary": {"trials": 3},
    "rotation": {"trials": 3, "anisotropic_trials": 0},
}


class TestUsage:
    """Argument handling"""

    def test_missing_config_file(self, tmp_path, capsys):
        missing = tmp_path / "absent.json"
        assert main(["train", "--config", str(missing)]) == EXIT_INVALID
        assert str(missing) in capsys.readouterr().err

    def test_unknown_flag(self):
        assert main(["train", "--learning-rate", "3"]) == EXIT_INVALID

    def test_no_subcommand(self):
        assert main([]) == EXIT_INVALID

    def test_help(self):
        assert main(["--help"]) == EXIT_OK

    def test_invalid_config(self, tmp_path, write_config, capsys):
        path = write_config(pinwheel_config(tmp_path / "run", epochs=0))
        assert main(["train", "--config", str(path)]) == EXIT_INVALID
        assert "epochs" in capsys.readouterr().err

    def test_gen_data_needs_a_source(self, tmp_path):
        assert main(["gen-data", "--out", str(tmp_path / "data")]) == EXIT_INVALID


class TestTrainAndEval:
    """train then eval on the same run directory"""

    def test_train_with_overrides(self, tmp_path, write_config, capsys):
        path = write_config(pinwheel_config(tmp_path / "ignored"))
        out = tmp_path / "run"
        code = main(["train", "--config", str(path), "--out", str(out), "--seed", "4",
                     "--override", "epochs=2", "--override", "objective.variant=\"beta_vae\"",
                     "--override", "objective.beta=2.5"])
        assert code == EXIT_OK
        saved = json.loads((out / "config.json").read_text())
        assert saved["epochs"] == 2
        assert saved["seed"] == 4
        assert saved["objective"]["beta"] == 2.5
        assert f"run: {out}" in capsys.readouterr().out

    def test_eval(self, tmp_path, write_config):
        path = write_config(pinwheel_config(tmp_path / "run", metrics=["encoder_entropy"]))
        assert main(["train", "--config", str(path)]) == EXIT_OK
        assert main(["eval", "--run", str(tmp_path / "run"), "--metrics", "encoder_entropy"]) == EXIT_OK
        assert (tmp_path / "run" / "eval_metrics.csv").is_file()

    def test_eval_missing_run(self, tmp_path):
        assert main(["eval", "--run", str(tmp_path / "nothing")]) == EXIT_INVALID

    def test_numeric_failure_exit_code(self, tmp_path, write_config, monkeypatch, capsys):
        def explode(self, config):
            raise NonFiniteError("adam_step", [(2,)], "non-finite gradient for 'encoder.0.weight'")

        monkeypatch.setattr(TrainingService, "train", explode)
        path = write_config(pinwheel_config(tmp_path / "run"))
        assert main(["train", "--config", str(path)]) == EXIT_NUMERIC
        assert "non-finite" in capsys.readouterr().err


class TestGenData:
    """Generated datasets written as NPY"""

    def test_pinwheel(self, tmp_path):
        out = tmp_path / "data"
        assert main(["gen-data", "--generator", "pinwheel", "--out", str(out), "--seed", "2"]) == EXIT_OK
        observations = DatasetRepository().read_npy(out / "observations.npy")
        factors = DatasetRepository().read_npy(out / "factors.npy")
        assert observations.shape == (400, 2)
        np.testing.assert_array_equal(np.bincount(factors[:, 0].astype(int)), [100] * 4)
        assert (out / "manifest.json").is_file()

    def test_factor_images_from_config(self, tmp_path, write_config):
        tree = {"dataset": {"source": "factor_images",
                            "cardinalities": {"xpos": 2, "ypos": 2, "scale": 2, "shape": 2}, "image_size": 10}}
        out = tmp_path / "data"
        assert main(["gen-data", "--config", str(write_config(tree)), "--out", str(out)]) == EXIT_OK
        assert np.load(out / "observations.npy").dtype == np.uint8


class TestStudies:
    """verify and bias-study"""

    def test_verify_passes(self, tmp_path, write_config):
        path = write_config(dict(TINY_VERIFY, out=str(tmp_path / "verify")))
        assert main(["verify", "--config", str(path)]) == EXIT_OK
        report = json.loads((tmp_path / "verify" / "verify_report.json").read_text())
        assert report["passed"] is True
        assert [c["check"] for c in report["checks"]] == ["theorem1", "corollary", "rotation"]

    def test_verify_failure_exit_code(self, tmp_path, write_config, monkeypatch):
        monkeypatch.setattr(VerificationService, "run",
                            lambda self, cfg: (VerificationReport(seed=cfg.seed, passed=False), []))
        path = write_config(dict(TINY_VERIFY, out=str(tmp_path / "verify")))
        assert main(["verify", "--config", str(path)]) == EXIT_NUMERIC

    def test_bias_study(self, tmp_path, write_config, capsys):
        tree = {"n": 32, "batch_sizes": [8, 32], "separations": [0.0, 1.0], "trials": 5,
                "oracle_samples": 50, "out": str(tmp_path / "bias")}
        assert main(["bias-study", "--config", str(write_config(tree))]) == EXIT_OK
        lines = (tmp_path / "bias" / "bias_study.csv").read_text().strip().splitlines()
        assert len(lines) == 1 + 4
        assert "table:" in capsys.readouterr().out
