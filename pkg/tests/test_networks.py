"""
Encoder/decoder networks and the exact rescaling and rotation transforms.
"""
import math

import numpy as np
import pytest

from conftest import make_model
from core.distributions import DiagGaussian, IsotropicGaussian
from core.errors import ConfigError, ShapeError
from core.networks import Mlp, VaeModel, encode_arrays, random_rotation
from core.tensor_ad import Tape


class TestConstruction:
    """Initialisation and parameter bookkeeping"""

    def test_parameter_names_and_shapes(self):
        model = make_model(input_dim=4, latent_dim=2, hidden=(5,))
        params = model.parameters()
        assert params["encoder.0.weight"].shape == (4, 5)
        assert params["encoder.1.weight"].shape == (5, 4)
        assert params["decoder.0.weight"].shape == (2, 5)
        assert params["decoder.1.bias"].shape == (4,)
        assert model.network_parameter_names() == list(params)

    def test_learnable_prior_parameter_is_listed(self):
        model = make_model(prior=DiagGaussian(np.zeros(2), learnable=True))
        assert "prior.log_var" in model.parameters()
        assert "prior.log_var" not in model.network_parameter_names()

    def test_prior_dimension_must_match(self):
        with pytest.raises(ConfigError):
            make_model(latent_dim=2, prior=IsotropicGaussian(3))

    def test_unknown_activation(self, rng):
        with pytest.raises(ConfigError):
            Mlp.initialise([3, 4, 2], "swish", "identity", rng)

    def test_seeded_initialisation_is_reproducible(self):
        a, b = make_model(seed=3), make_model(seed=3)
        for name, value in a.parameters().items():
            np.testing.assert_array_equal(value, b.parameters()[name])

    def test_copy_is_independent(self):
        model = make_model()
        clone = model.copy()
        clone.assign({"encoder.0.bias": np.zeros(5)})
        assert not np.array_equal(model.parameters()["encoder.0.bias"], np.zeros(5))

    def test_assign_rejects_wrong_shape(self):
        model = make_model()
        with pytest.raises(ShapeError):
            model.assign({"encoder.0.bias": np.zeros(7)})

    def test_encode_shapes(self, rng):
        model = make_model()
        q = model.encode(rng.standard_normal((6, 4)))
        assert q.mean.shape == (6, 2)
        assert q.log_var.shape == (6, 2)
        assert q.is_diagonal

    def test_encode_arrays_matches_batched_encoding(self, rng):
        model = make_model()
        x = rng.standard_normal((9, 4))
        mean, log_var, mixing = encode_arrays(model, x, batch_size=4)
        q = model.encode(x)
        np.testing.assert_allclose(mean, q.mean.data, rtol=1e-12, atol=1e-14)
        np.testing.assert_allclose(log_var, q.log_var.data, rtol=1e-12, atol=1e-14)
        assert mixing is None

    def test_encode_rejects_wrong_width(self, rng):
        with pytest.raises(ShapeError):
            encode_arrays(make_model(), rng.standard_normal((3, 5)))


class TestRescale:
    """g_β scales posterior moments and compensates in the decoder"""

    @pytest.mark.parametrize("beta", [0.25, 2.0, 9.0])
    def test_posterior_moments(self, rng, beta):
        model = make_model()
        x = rng.standard_normal((5, 4))
        q = model.encode(x)
        scaled = model.rescale(beta).encode(x)
        np.testing.assert_allclose(scaled.mean.data, math.sqrt(beta) * q.mean.data, rtol=1e-12)
        np.testing.assert_allclose(scaled.log_var.data, q.log_var.data + math.log(beta), rtol=1e-12, atol=1e-12)

    def test_decoder_reads_rescaled_latents(self, rng):
        model = make_model()
        beta = 3.0
        z = rng.standard_normal((5, 2))
        tape = Tape()
        original = model.decode(tape.constant(z)).data
        rescaled = model.rescale(beta).decode(tape.constant(math.sqrt(beta) * z)).data
        np.testing.assert_allclose(rescaled, original, rtol=1e-12, atol=1e-12)

    def test_original_model_is_untouched(self):
        model = make_model()
        model.rescale(2.0)
        assert model.encoder_map is None and model.decoder_map is None

    def test_non_positive_beta(self):
        with pytest.raises(ConfigError):
            make_model().rescale(0.0)


class TestRotate:
    """Rotations move the mean and factor and undo themselves in the decoder"""

    def test_random_rotation_is_proper(self, rng):
        r = random_rotation(5, rng)
        np.testing.assert_allclose(r.T @ r, np.eye(5), atol=1e-12)
        assert np.linalg.det(r) == pytest.approx(1.0)

    def test_rotated_posterior(self, rng):
        model = make_model(latent_dim=3)
        r = random_rotation(3, rng)
        x = rng.standard_normal((4, 4))
        q = model.encode(x)
        rotated = model.rotate(r).encode(x)
        np.testing.assert_allclose(rotated.mean.data, q.mean.data @ r.T, rtol=1e-12, atol=1e-12)
        expected_cov = np.stack([r @ np.diag(np.exp(lv)) @ r.T for lv in q.log_var.data])
        np.testing.assert_allclose(rotated.covariance_array(), expected_cov, rtol=1e-10, atol=1e-12)

    def test_decoder_round_trip(self, rng):
        model = make_model(latent_dim=3)
        r = random_rotation(3, rng)
        z = rng.standard_normal((4, 3))
        tape = Tape()
        original = model.decode(tape.constant(z)).data
        rotated = model.rotate(r).decode(tape.constant(z @ r.T)).data
        np.testing.assert_allclose(rotated, original, rtol=1e-10, atol=1e-12)

    def test_reflection_rejected(self):
        with pytest.raises(ConfigError):
            make_model().rotate(np.diag([1.0, -1.0]))

    def test_non_orthogonal_rejected(self):
        with pytest.raises(ConfigError):
            make_model().rotate(np.array([[1.0, 0.1], [0.0, 1.0]]))

    def test_rescale_after_rotation_rejected(self, rng):
        rotated = make_model().rotate(random_rotation(2, rng))
        with pytest.raises(ConfigError):
            rotated.rescale(2.0)

    def test_bad_map_shape(self):
        model = make_model()
        with pytest.raises(ConfigError):
            VaeModel(model.encoder, model.decoder, model.likelihood, model.prior, 2, encoder_map=np.eye(3))
