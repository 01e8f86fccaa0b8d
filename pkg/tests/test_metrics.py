"""
Decomposition metrics: Hoyer sparsity, axis-alignment votes, mutual information, class magnitudes.
"""
import math

import numpy as np
import pytest

from core.errors import ConfigError, NumericError, ShapeError
from core.metrics import class_magnitudes, disentanglement_score, hoyer, mutual_information, sparsity_score
from data.dataset import Dataset


def _grid_dataset(cardinalities=(5, 5)) -> Dataset:
    """Observations are the factor values themselves"""
    factors = np.array(np.meshgrid(*[np.arange(c) for c in cardinalities], indexing="ij")).reshape(
        len(cardinalities), -1).T
    return Dataset(factors.astype(np.float64), factors, list(cardinalities))


class TestHoyer:
    """(√d - ‖y‖₁/‖y‖₂) / (√d - 1)"""

    def test_one_hot_is_one(self):
        assert hoyer([0.0, 0.0, 3.0, 0.0]) == pytest.approx(1.0)

    def test_constant_is_zero(self):
        assert hoyer(np.full(6, -2.0)) == pytest.approx(0.0, abs=1e-15)

    def test_intermediate(self):
        y = np.array([1.0, 1.0, 0.0, 0.0])
        expected = (2.0 - 2.0 / math.sqrt(2.0)) / (2.0 - 1.0)
        assert hoyer(y) == pytest.approx(expected)

    def test_needs_two_dimensions(self):
        with pytest.raises(ConfigError):
            hoyer([1.0])

    def test_zero_vector(self):
        with pytest.raises(NumericError):
            hoyer(np.zeros(3))


class TestSparsityScore:
    """Mean Hoyer after per-dimension standardisation"""

    def test_one_hot_rows(self):
        e = np.eye(4)[[0, 1, 2, 3, 0, 1]] * 5.0
        assert sparsity_score(e).score == pytest.approx(1.0)

    def test_constant_dimension_excluded(self, rng):
        e = np.column_stack([rng.standard_normal(20), np.full(20, 3.0), rng.standard_normal(20)])
        result = sparsity_score(e)
        assert result.excluded_dims == [1]
        assert 0.0 <= result.score <= 1.0

    def test_scale_invariant_per_dimension(self, rng):
        e = rng.standard_normal((30, 4))
        scaled = e * np.array([1.0, 10.0, 0.1, 3.0])
        assert sparsity_score(scaled).score == pytest.approx(sparsity_score(e).score, rel=1e-12)

    def test_too_few_active_dimensions(self, rng):
        e = np.column_stack([rng.standard_normal(10), np.ones(10)])
        with pytest.raises(NumericError):
            sparsity_score(e)


class TestDisentanglement:
    """Majority-vote classifier over fixed-factor batches"""

    def test_axis_aligned_code_scores_one(self, rng):
        result = disentanglement_score(lambda obs: obs, _grid_dataset(), 64, 200, rng)
        assert result.score == 1.0
        assert result.collapsed_dims == []
        assert result.votes.sum() == 200

    def test_random_code_near_chance(self):
        dataset = _grid_dataset()
        noise = np.random.default_rng(5)
        votes = 800
        result = disentanglement_score(lambda obs: noise.standard_normal((len(obs), 2)), dataset, 64, votes,
                                       np.random.default_rng(6))
        assert abs(result.score - 0.5) <= 0.1

    def test_random_code_within_binomial_band(self):
        """A one-dimensional code independent of the factors votes at chance"""
        dataset = _grid_dataset()
        votes = 800
        half_width = 2.576 * math.sqrt(0.25 / votes)
        inside = 0
        for seed in range(20):
            noise = np.random.default_rng(seed + 500)
            result = disentanglement_score(lambda obs: noise.standard_normal((len(obs), 1)), dataset, 64, votes,
                                           np.random.default_rng(seed))
            inside += abs(result.score - 0.5) <= half_width
        assert inside >= 18

    def test_latent_permutation_leaves_score_unchanged(self):
        dataset = _grid_dataset()
        perm = [2, 0, 1]

        def code(jitter):
            def encode(obs):
                extra = 0.5 * jitter.standard_normal(len(obs))
                return np.column_stack([obs[:, 0] + 0.3 * obs[:, 1], obs[:, 1], extra])
            return encode

        plain = code(np.random.default_rng(11))
        shuffled = code(np.random.default_rng(11))
        base = disentanglement_score(plain, dataset, 32, 300, np.random.default_rng(4))
        permuted = disentanglement_score(lambda obs: shuffled(obs)[:, perm], dataset, 32, 300,
                                         np.random.default_rng(4))
        assert permuted.score == base.score
        np.testing.assert_array_equal(permuted.votes, base.votes[:, perm])

    @pytest.mark.parametrize("seed", range(10))
    def test_rotated_code_scores_below_axis_aligned(self, seed):
        dataset = _grid_dataset()
        c, s = math.cos(math.pi / 4), math.sin(math.pi / 4)
        mix = np.array([[c, -s], [s, c]]) @ np.diag([1.0, 3.0])
        jitter = np.random.default_rng(seed + 100)

        def rotated_code(obs):
            # tiny noise breaks the exact ties a 45 degree mix produces
            return obs @ mix.T + 0.01 * jitter.standard_normal((len(obs), 2))

        rotated = disentanglement_score(rotated_code, dataset, 64, 200, np.random.default_rng(seed))
        aligned = disentanglement_score(lambda obs: obs, dataset, 64, 200, np.random.default_rng(seed))
        assert rotated.score < aligned.score

    def test_collapsed_dimension_reported(self, rng):
        dataset = _grid_dataset()
        result = disentanglement_score(lambda obs: np.column_stack([obs, np.zeros(len(obs))]), dataset, 64, 100,
                                       rng)
        assert result.collapsed_dims == [2]
        assert result.votes[:, 2].sum() == 0

    def test_needs_two_factors(self, rng):
        dataset = Dataset(np.zeros((4, 1)), np.arange(4)[:, None])
        with pytest.raises(ConfigError):
            disentanglement_score(lambda obs: obs, dataset, 4, 10, rng)

    def test_everything_collapsed(self, rng):
        with pytest.raises(NumericError):
            disentanglement_score(lambda obs: np.zeros((len(obs), 2)), _grid_dataset(), 8, 10, rng)


class TestMutualInformation:
    """H[q(z)] - mean H[q(z|x)]"""

    def test_identical_encodings_share_no_information(self, rng):
        estimate = mutual_information(np.zeros((5, 2)), np.zeros((5, 2)), 5000, rng)
        assert abs(estimate.value) <= 3.0 * estimate.std_error + 1e-12

    def test_separated_encodings_reach_log_n(self, rng):
        mean = np.arange(8.0)[:, None] * 100.0
        estimate = mutual_information(mean, np.zeros((8, 1)), 5000, rng)
        assert estimate.value == pytest.approx(math.log(8.0), abs=3.0 * estimate.std_error + 1e-9)


class TestClassMagnitudes:
    """Mean |z_d| per label"""

    def test_table(self):
        e = np.array([[1.0, -2.0], [-3.0, 0.0], [0.5, 0.5]])
        table = class_magnitudes(e, np.array([0, 0, 1]))
        np.testing.assert_allclose(table, [[2.0, 1.0], [0.5, 0.5]])

    def test_label_count_must_match(self):
        with pytest.raises(ShapeError):
            class_magnitudes(np.zeros((3, 2)), np.array([0, 1]))
