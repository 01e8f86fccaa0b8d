"""
Numerical checks of the β-VAE identities and the minibatch entropy bias study.
"""
import math

import numpy as np
import pytest

from conftest import make_model
from core.distributions import DiagGaussian, IsotropicGaussian, StudentTProduct
from core.errors import ConfigError
from core.networks import random_rotation
from core.verification import (
    bias_study,
    corollary_constant,
    lattice_means,
    verify_corollary_gauss,
    verify_rotation_invariance,
    verify_theorem1,
)


def _trial(rng, latent_dim, prior=None, k=2, b=8, input_dim=6):
    model = make_model(input_dim=input_dim, latent_dim=latent_dim, hidden=(8,), prior=prior,
                       seed=int(rng.integers(1 << 30)))
    x = rng.standard_normal((b, input_dim))
    eps = rng.standard_normal((k, b, latent_dim))
    return model, x, eps


class TestAnnealedPriorIdentity:
    """L_β = ELBO under the annealed prior + (β-1) H[q] + log F_β"""

    @pytest.mark.parametrize("latent_dim", [2, 8])
    def test_isotropic_sweep(self, rng, latent_dim):
        for beta in np.exp(rng.uniform(math.log(0.1), math.log(10.0), size=10)):
            model, x, eps = _trial(rng, latent_dim)
            report = verify_theorem1(model, x, float(beta), eps)
            assert report.passed, report.breakdown()

    def test_diagonal_prior(self, rng):
        prior = DiagGaussian(np.array([0.7, -0.2, 1.1]))
        for beta in (0.3, 2.5):
            model, x, eps = _trial(rng, 3, prior=prior)
            assert verify_theorem1(model, x, beta, eps).passed

    def test_student_t_prior(self, rng):
        for beta in (0.5, 1.7, 3.0):
            model, x, eps = _trial(rng, 2, prior=StudentTProduct(2, 5.0))
            report = verify_theorem1(model, x, beta, eps)
            assert report.passed, report.breakdown()
            assert "entropy_mc" in report.terms
            assert report.flags == ["log F_beta via quadrature"]

    def test_report_breakdown_lists_terms(self, rng):
        model, x, eps = _trial(rng, 2)
        report = verify_theorem1(model, x, 2.0, eps)
        text = report.breakdown()
        for name in ("reconstruction", "kl_annealed", "log_F_beta"):
            assert name in text
        assert report.to_dict()["check"] == "theorem1"

    def test_non_positive_beta(self, rng):
        model, x, eps = _trial(rng, 2)
        with pytest.raises(ConfigError):
            verify_theorem1(model, x, 0.0, eps)


class TestRescalingIdentity:
    """L_β(m) = L_{H,β}(g_β(m)) + c in value and gradient"""

    @pytest.mark.parametrize("latent_dim", [2, 8])
    def test_isotropic_sweep(self, rng, latent_dim):
        for beta in np.exp(rng.uniform(math.log(0.1), math.log(10.0), size=10)):
            model, x, eps = _trial(rng, latent_dim)
            report = verify_corollary_gauss(model, x, float(beta), eps)
            assert report.passed, report.breakdown()
            assert report.gradient_residual <= 1e-6

    def test_diagonal_prior(self, rng):
        model, x, eps = _trial(rng, 2, prior=DiagGaussian(np.array([0.4, -0.9])))
        assert verify_corollary_gauss(model, x, 4.0, eps).passed

    def test_constant_vanishes_at_beta_one(self):
        assert corollary_constant(make_model(), 1.0) == 0.0

    def test_non_gaussian_prior_rejected(self, rng):
        model, x, eps = _trial(rng, 2, prior=StudentTProduct(2, 4.0))
        with pytest.raises(ConfigError):
            verify_corollary_gauss(model, x, 2.0, eps)


class TestRotationInvariance:
    """L_β is unchanged by rotating an isotropic-prior model"""

    @pytest.mark.parametrize("latent_dim", [2, 8])
    def test_isotropic_sweep(self, rng, latent_dim):
        for _ in range(10):
            model, x, eps = _trial(rng, latent_dim)
            report = verify_rotation_invariance(model, x, 1.5, random_rotation(latent_dim, rng), eps)
            assert report.passed, report.breakdown()
            assert report.flags == []

    def test_anisotropic_prior_is_flagged(self, rng):
        c, s = math.cos(math.pi / 4), math.sin(math.pi / 4)
        rotation = np.array([[c, -s], [s, c]])
        model, x, eps = _trial(rng, 2, prior=DiagGaussian(np.log([2.0, 0.5])))
        report = verify_rotation_invariance(model, x, 1.0, rotation, eps)
        assert report.passed
        assert report.flags == ["expected to differ: prior is not isotropic"]
        assert report.terms["kl_residual"] > 1e-3

    def test_equal_diagonal_counts_as_isotropic(self, rng):
        model, x, eps = _trial(rng, 2, prior=DiagGaussian(np.log([3.0, 3.0])))
        report = verify_rotation_invariance(model, x, 1.0, random_rotation(2, rng), eps)
        assert report.flags == []
        assert report.passed


class TestBiasStudy:
    """Minibatch aggregate-entropy estimator on a lattice of unit-variance encodings"""

    def test_lattice(self):
        means = lattice_means(5, 2, 3.0)
        np.testing.assert_array_equal(means, [[0, 0], [0, 3], [0, 6], [3, 0], [3, 3]])

    @pytest.mark.slow
    def test_separated_lattice_matches_prediction(self):
        row = bias_study(1024, 64, 2, 100.0, 200, np.random.default_rng(0), oracle_samples=2000)
        assert abs(row.gap_predicted) <= 0.1
        assert row.predicted == pytest.approx(math.log(1024) + 1.0 + math.log(2.0 * math.pi))

    @pytest.mark.slow
    def test_separated_lattice_has_no_oracle_gap(self):
        """Without overlap the aggregate entropy is itself log n + H_enc, so the gap against it vanishes"""
        row = bias_study(1024, 64, 2, 100.0, 200, np.random.default_rng(4), oracle_samples=2000)
        assert row.oracle == pytest.approx(row.predicted, abs=4.0 * row.oracle_std_error + 1e-9)
        assert abs(row.gap_oracle) < 0.5 * math.log(1024 / 64)

    def test_full_batch_within_oracle_band(self):
        row = bias_study(256, 256, 2, 1.0, 50, np.random.default_rng(1), oracle_samples=4000)
        assert row.within_oracle_band

    def test_coincident_encodings_are_unbiased(self):
        row = bias_study(256, 16, 2, 0.0, 200, np.random.default_rng(2), oracle_samples=4000)
        assert row.within_oracle_band
        assert row.oracle == pytest.approx(1.0 + math.log(2.0 * math.pi), abs=0.1)

    @pytest.mark.slow
    def test_overlapping_minibatch_overestimates(self):
        row = bias_study(1024, 64, 2, 1.0, 100, np.random.default_rng(3), oracle_samples=2000)
        assert row.gap_oracle > 3.0 * math.hypot(row.std_error, row.oracle_std_error)

    def test_batch_larger_than_n(self):
        with pytest.raises(ConfigError):
            bias_study(8, 16, 2, 1.0, 5, np.random.default_rng(0))
