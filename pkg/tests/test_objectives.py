"""
Training objectives: shared evaluation path, gradients and configuration checks.
"""
import numpy as np
import pytest

from conftest import make_model
from core.distributions import DiagGaussian, GaussianFixedScale, GaussianMixture, StudentTProduct, gaussian_entropy
from core.errors import ConfigError, ShapeError
from core.objectives import (
    DECOMP,
    MMD_DIMWISE,
    ObjectiveSpec,
    beta_vae,
    check_compatible,
    decomp_objective,
    elbo,
    entropy_reg_elbo,
    evaluate_objective,
    importance_log_evidence,
)
from core.optimizer import AdamState, adam_step
from core.tensor_ad import Tape, finite_difference_gradient


@pytest.fixture
def batch(rng):
    x = rng.standard_normal((6, 4))
    eps = rng.standard_normal((2, 6, 2))
    return x, eps


class TestSharedPath:
    """elbo, beta_vae(1) and decomp(α=0, β=1) are one computation"""

    def test_bit_identical_values(self, small_model, batch):
        x, eps = batch
        a = elbo(small_model, x, eps).as_row()
        b = beta_vae(small_model, x, 1.0, eps).as_row()
        c = decomp_objective(small_model, x, 0.0, 1.0, "inclusive-kl", eps, None).as_row()
        assert a == b == c

    def test_bit_identical_gradients(self, small_model, batch):
        x, eps = batch
        grads = []
        for evaluate in (lambda t: elbo(small_model, x, eps, t),
                         lambda t: decomp_objective(small_model, x, 0.0, 1.0, "mmd-dimwise", eps, None, t)):
            tape = Tape()
            grads.append(tape.param_grads(tape.backward(evaluate(tape).value)))
        for name in grads[0]:
            np.testing.assert_array_equal(grads[0][name], grads[1][name])

    def test_entropy_reg_at_beta_one_is_elbo(self, small_model, batch):
        x, eps = batch
        assert entropy_reg_elbo(small_model, x, 1.0, eps).value.item() == elbo(small_model, x, eps).value.item()

    def test_beta_weights_the_kl(self, small_model, batch):
        x, eps = batch
        base = elbo(small_model, x, eps)
        weighted = beta_vae(small_model, x, 3.0, eps)
        expected = base.reconstruction.item() - 3.0 * base.kl.item()
        assert weighted.value.item() == pytest.approx(expected, rel=1e-12)

    def test_two_dimensional_noise_means_one_sample(self, small_model, batch):
        x, eps = batch
        assert elbo(small_model, x, eps[0]).value.item() == elbo(small_model, x, eps[:1]).value.item()

    def test_noise_shape_checked(self, small_model, batch):
        x, _ = batch
        with pytest.raises(ShapeError):
            elbo(small_model, x, np.zeros((1, 5, 2)))


class TestGradients:
    """Objective gradients against central differences on one weight matrix"""

    @pytest.mark.parametrize("variant,beta", [("elbo", 1.0), ("beta_vae", 4.0), ("entropy_reg_elbo", 0.5)])
    def test_encoder_weight_gradient(self, batch, variant, beta):
        x, eps = batch
        model = make_model()
        spec = ObjectiveSpec(variant=variant, beta=beta)
        name = "encoder.0.weight"
        w0 = model.parameters()[name].copy()

        def value(w):
            trial = model.copy()
            trial.assign({name: w})
            return evaluate_objective(spec, trial, x, eps).value.item()

        tape = Tape()
        analytic = tape.param_grads(tape.backward(evaluate_objective(spec, model, x, eps, tape=tape).value))[name]
        np.testing.assert_allclose(analytic, finite_difference_gradient(value, w0), rtol=1e-4, atol=1e-7)

    def test_mmd_divergence_gradient(self, batch):
        x, eps = batch
        model = make_model()
        name = "encoder.1.weight"
        spec = ObjectiveSpec(variant=DECOMP, alpha=5.0, beta=0.5, divergence=MMD_DIMWISE)

        def value(w):
            trial = model.copy()
            trial.assign({name: w})
            return evaluate_objective(spec, trial, x, eps, np.random.default_rng(7)).value.item()

        tape = Tape()
        terms = evaluate_objective(spec, model, x, eps, np.random.default_rng(7), tape)
        analytic = tape.param_grads(tape.backward(terms.value))[name]
        np.testing.assert_allclose(analytic, finite_difference_gradient(value, model.parameters()[name].copy()),
                                   rtol=1e-4, atol=1e-7)


class TestDecomposition:
    """recon - β KL - α D"""

    @pytest.mark.parametrize("divergence", ["inclusive-kl", "mmd-dimwise"])
    def test_terms_add_up(self, small_model, batch, divergence):
        x, eps = batch
        terms = decomp_objective(small_model, x, 2.0, 0.5, divergence, eps, np.random.default_rng(1),
                                 divergence_samples=50)
        row = terms.as_row()
        expected = row["reconstruction"] - 0.5 * row["kl"] - 2.0 * row["divergence"]
        assert row["objective"] == pytest.approx(expected, rel=1e-12, abs=1e-12)

    def test_same_rng_same_value(self, small_model, batch):
        x, eps = batch
        values = [decomp_objective(small_model, x, 1.0, 1.0, "inclusive-kl", eps, np.random.default_rng(3),
                                   divergence_samples=20).value.item() for _ in range(2)]
        assert values[0] == values[1]

    def test_divergence_needs_rng(self, small_model, batch):
        x, eps = batch
        with pytest.raises(ConfigError):
            decomp_objective(small_model, x, 1.0, 1.0, "inclusive-kl", eps, None)

    def test_unknown_divergence(self, small_model, batch):
        x, eps = batch
        with pytest.raises(ConfigError):
            decomp_objective(small_model, x, 1.0, 1.0, "wasserstein", eps, np.random.default_rng(0))

    def test_zero_alpha_reports_zero_divergence(self, small_model, batch):
        x, eps = batch
        assert decomp_objective(small_model, x, 0.0, 1.0, "inclusive-kl", eps, None).as_row()["divergence"] == 0.0

    def test_non_gaussian_prior_uses_sampled_kl(self, batch):
        x, eps = batch
        model = make_model(prior=GaussianMixture([0.5, 0.5], [[-1.0, 0.0], [1.0, 0.0]], 1.0))
        terms = decomp_objective(model, x, 1.0, 1.0, "inclusive-kl", eps, np.random.default_rng(0),
                                 divergence_samples=30)
        assert np.isfinite(terms.value.item())

    def test_learnable_prior_receives_gradient(self, batch):
        x, eps = batch
        model = make_model(prior=DiagGaussian(np.array([0.5, -0.5]), learnable=True))
        tape = Tape()
        grads = tape.param_grads(tape.backward(elbo(model, x, eps, tape).value))
        assert np.any(grads["prior.log_var"] != 0.0)


class TestCallerTape:
    """Evaluation records onto the tape it is handed, even an empty one"""

    @pytest.mark.parametrize("spec", [
        ObjectiveSpec(),
        ObjectiveSpec(variant="beta_vae", beta=2.0),
        ObjectiveSpec(variant="entropy_reg_elbo", beta=2.0),
        ObjectiveSpec(variant=DECOMP, alpha=1.0, beta=0.5, divergence_samples=20),
    ])
    def test_backward_on_fresh_tape(self, small_model, batch, spec):
        x, eps = batch
        tape = Tape()
        terms = evaluate_objective(spec, small_model, x, eps, np.random.default_rng(0), tape)
        assert terms.value.tape is tape
        assert len(tape) > 0
        grads = tape.param_grads(tape.backward(terms.value))
        assert set(small_model.network_parameter_names()) <= set(grads)
        assert any(np.any(g != 0.0) for g in grads.values())

    def test_encode_keeps_the_tape(self, small_model, batch):
        tape = Tape()
        assert small_model.encode(batch[0], tape).tape is tape


class TestBetaDependence:
    """How the objective and its optimum move with β"""

    @pytest.mark.parametrize("beta", [0.5, 2.0, 6.0])
    def test_beta_derivative_is_minus_kl(self, small_model, batch, beta):
        x, eps = batch
        h = 1e-3
        upper = beta_vae(small_model, x, beta + h, eps).value.item()
        lower = beta_vae(small_model, x, beta - h, eps).value.item()
        kl = beta_vae(small_model, x, beta, eps).kl.item()
        assert (upper - lower) / (2.0 * h) == pytest.approx(-kl, abs=1e-6)

    @pytest.mark.slow
    def test_posterior_entropy_grows_with_beta(self):
        """Mean encoder entropy after a fixed training budget, averaged over random models"""
        betas = [0.5, 1.0, 2.0, 4.0]
        num_models, steps = 32, 200
        entropy = np.zeros((num_models, len(betas)))
        for m in range(num_models):
            data_rng = np.random.default_rng(1000 + m)
            x = data_rng.standard_normal((32, 4)) @ data_rng.standard_normal((4, 4))
            noise = data_rng.standard_normal((steps, 1, 32, 2))
            for j, beta in enumerate(betas):
                model = make_model(likelihood=GaussianFixedScale(0.05), seed=m)
                state = AdamState(lr=0.01)
                for step in range(steps):
                    tape = Tape()
                    terms = beta_vae(model, x, beta, noise[step], tape)
                    grads = tape.param_grads(tape.backward(terms.value))
                    model.assign(adam_step(state, model.parameters(), {k: -g for k, g in grads.items()}))
                entropy[m, j] = gaussian_entropy(model.encode(x)).data.mean()
        means = entropy.mean(axis=0)
        assert np.all(np.diff(means) >= 0.0), means


class TestSpecChecks:
    """ObjectiveSpec validation and prior compatibility"""

    def test_unknown_variant(self):
        with pytest.raises(ConfigError):
            ObjectiveSpec(variant="iwae")

    def test_beta_vae_needs_positive_beta(self):
        with pytest.raises(ConfigError):
            ObjectiveSpec(variant="beta_vae", beta=0.0)

    def test_negative_alpha(self):
        with pytest.raises(ConfigError):
            ObjectiveSpec(variant=DECOMP, alpha=-1.0)

    def test_entropy_reg_needs_gaussian_prior(self, batch):
        x, eps = batch
        model = make_model(prior=StudentTProduct(2, 4.0))
        with pytest.raises(ConfigError):
            check_compatible(ObjectiveSpec(variant="entropy_reg_elbo", beta=2.0), model)
        with pytest.raises(ConfigError):
            entropy_reg_elbo(model, x, 2.0, eps)


class TestEvidence:
    """Importance-sampled log evidence"""

    def test_shape_and_bound(self, small_model, rng):
        x = rng.standard_normal((5, 4))
        log_px = importance_log_evidence(small_model, x, 2000, rng)
        assert log_px.shape == (5,)
        bound = elbo(small_model, x, rng.standard_normal((2000, 5, 2))).value.item()
        # the importance-weighted estimate tightens the ELBO on average
        assert float(np.mean(log_px)) >= bound - 0.05
