"""
Reverse-mode autodiff: gradients against central differences, op errors and tape rules.
"""
import numpy as np
import pytest

from core import tensor_ad as ad
from core.errors import (
    ConfigError,
    DivisionByZeroError,
    DomainError,
    NonFiniteError,
    ShapeError,
    TapeError,
)
from core.tensor_ad import Tape, finite_difference_gradient

SMOOTH_UNARY = [
    ad.tanh,
    ad.sigmoid,
    ad.softplus,
    lambda t: ad.exp(ad.tanh(t)),
    lambda t: ad.log(ad.softplus(t) + 0.1),
    lambda t: ad.sqrt(ad.square(t) + 1.0),
    ad.square,
]


def _random_graph(seed: int):
    """Composite scalar function of a (4, 3) weight matrix built from a seeded op sequence"""
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((5, 4))
    bias = rng.standard_normal(3)
    picks = rng.integers(0, len(SMOOTH_UNARY), size=3)
    reduce_axis = int(rng.integers(0, 2))

    def build(w: np.ndarray):
        tape = Tape()
        wt = tape.param("w", w)
        h = ad.broadcast_add_rowvec(tape.constant(x) @ wt, bias)
        h = SMOOTH_UNARY[picks[0]](h)
        h = h * SMOOTH_UNARY[picks[1]](h) + h
        h = SMOOTH_UNARY[picks[2]](h @ wt.T)
        value = ad.logsumexp(h, axis=reduce_axis).sum() + ad.reduce_mean(h.square())
        return tape, wt, value

    def fn(w: np.ndarray) -> float:
        return build(w)[2].item()

    return build, fn, rng.standard_normal((4, 3)) * 0.5


class TestGradients:
    """Backward pass against central finite differences"""

    def test_matmul_usage_example(self):
        """sum(x @ w) for x = [[1, 2], [3, 4]] has gradient [[4], [6]] in w"""
        tape = Tape()
        w = tape.param("w", np.ones((2, 1)))
        x = tape.constant([[1.0, 2.0], [3.0, 4.0]])
        grads = tape.backward((x @ w).sum())
        np.testing.assert_allclose(grads[w.node_id], [[4.0], [6.0]])

    @pytest.mark.parametrize("seed", range(50))
    def test_random_composite_graphs(self, seed):
        """Max relative error against central differences stays below 1e-4"""
        build, fn, w0 = _random_graph(seed)
        tape, wt, value = build(w0)
        analytic = tape.param_grads(tape.backward(value))["w"]
        numeric = finite_difference_gradient(fn, w0)
        np.testing.assert_allclose(analytic, numeric, rtol=1e-4, atol=1e-6)

    def test_shared_subexpression_accumulates(self):
        """x*x + x reuses x on two paths: gradient is 2x + 1"""
        tape = Tape()
        x = tape.param("x", np.array([0.5, -2.0, 3.0]))
        grads = tape.param_grads(tape.backward((x * x + x).sum()))
        np.testing.assert_allclose(grads["x"], [2.0, -3.0, 7.0])

    def test_unreached_parameter_gets_zeros(self):
        tape = Tape()
        a = tape.param("a", np.ones(3))
        tape.param("unused", np.ones((2, 2)))
        grads = tape.param_grads(tape.backward(a.sum()))
        np.testing.assert_array_equal(grads["unused"], np.zeros((2, 2)))

    def test_rowvec_broadcast_sums_over_rows(self):
        tape = Tape()
        m = tape.constant(np.arange(6.0).reshape(3, 2))
        r = tape.param("r", np.array([1.0, -1.0]))
        grads = tape.param_grads(tape.backward(ad.broadcast_add_rowvec(m, r).sum()))
        np.testing.assert_allclose(grads["r"], [3.0, 3.0])

    def test_scalar_operand_broadcasts(self):
        tape = Tape()
        s = tape.param("s", np.array(2.0))
        v = tape.constant([1.0, 2.0, 3.0])
        grads = tape.param_grads(tape.backward((v * s).sum()))
        assert grads["s"].shape == ()
        assert float(grads["s"]) == pytest.approx(6.0)

    def test_slice_concat_and_pairwise(self, rng):
        a0 = rng.standard_normal((3, 4))
        b = rng.standard_normal((2, 2))

        def build(a):
            tape = Tape()
            at = tape.param("a", a)
            left = ad.take_slice(at, 1, 0, 2)
            right = ad.take_slice(at, 1, 2, 4)
            joined = ad.concat([left * right, ad.tanh(left)], axis=0)
            diff = ad.pairwise_diff(joined, tape.constant(b))
            return tape, ad.reduce_sum(ad.square(diff)) + ad.reduce_sum(ad.transpose(joined) @ joined)

        tape, value = build(a0)
        analytic = tape.param_grads(tape.backward(value))["a"]
        numeric = finite_difference_gradient(lambda a: build(a)[1].item(), a0)
        np.testing.assert_allclose(analytic, numeric, rtol=1e-4, atol=1e-6)


class TestOpErrors:
    """Shape, domain and finiteness failures name the op"""

    def test_elementwise_shape_mismatch(self):
        tape = Tape()
        with pytest.raises(ShapeError, match="add"):
            tape.constant(np.ones((2, 3))) + tape.constant(np.ones((3, 2)))

    def test_matmul_needs_matrices(self):
        tape = Tape()
        with pytest.raises(ShapeError, match="matmul"):
            tape.constant(np.ones(3)) @ tape.constant(np.ones((3, 1)))

    def test_log_of_non_positive(self):
        tape = Tape()
        with pytest.raises(DomainError, match="log"):
            ad.log(tape.constant([1.0, 0.0]))

    def test_sqrt_of_negative(self):
        tape = Tape()
        with pytest.raises(DomainError, match="sqrt"):
            ad.sqrt(tape.constant([-1.0]))

    def test_division_by_zero(self):
        tape = Tape()
        with pytest.raises(DivisionByZeroError):
            tape.constant([1.0, 2.0]) / tape.constant([1.0, 0.0])

    def test_overflow_is_non_finite(self):
        tape = Tape()
        with pytest.raises(NonFiniteError, match="exp"):
            ad.exp(tape.constant([1000.0]))

    def test_non_finite_leaf_rejected(self):
        with pytest.raises(NonFiniteError):
            Tape().leaf([np.nan])

    def test_unknown_op_kind(self):
        tape = Tape()
        with pytest.raises(ConfigError):
            ad.forward_op("erf", tape.constant(1.0))

    def test_bad_reduction_axis(self):
        tape = Tape()
        with pytest.raises(ShapeError):
            tape.constant(np.ones((2, 2))).sum(axis=2)


class TestTapeRules:
    """Tapes are single-use and reject foreign or non-scalar roots"""

    def test_non_scalar_root(self):
        tape = Tape()
        x = tape.param("x", np.ones(3))
        with pytest.raises(TapeError):
            tape.backward(x * 2.0)

    def test_second_backward(self):
        tape = Tape()
        x = tape.param("x", np.ones(3))
        root = x.sum()
        tape.backward(root)
        with pytest.raises(TapeError):
            tape.backward(root)

    def test_no_ops_after_backward(self):
        tape = Tape()
        x = tape.param("x", np.ones(3))
        tape.backward(x.sum())
        with pytest.raises(TapeError):
            x.sum()

    def test_foreign_root(self):
        first, second = Tape(), Tape()
        root = second.constant(np.ones(2)).sum()
        with pytest.raises(TapeError):
            first.backward(root)

    def test_mixing_tapes(self):
        a = Tape().constant([1.0])
        b = Tape().constant([2.0])
        with pytest.raises(TapeError):
            a + b

    def test_param_is_bound_once_per_name(self):
        tape = Tape()
        first = tape.param("w", np.ones(2))
        second = tape.param("w", np.zeros(2))
        assert first.node_id == second.node_id
        assert len(tape) == 1

    def test_empty_tape_is_truthy(self):
        tape = Tape()
        assert len(tape) == 0
        assert tape


class TestBackwardAlgebra:
    """Linearity of the reverse sweep and run-to-run determinism"""

    @staticmethod
    def _pair(tape: Tape, w0: np.ndarray, x: np.ndarray):
        w = tape.param("w", w0)
        f = ad.tanh(tape.constant(x) @ w).sum()
        g = ad.reduce_mean(ad.softplus(w).square()) + ad.logsumexp(w, axis=None)
        return f, g

    def test_gradient_of_weighted_sum(self, rng):
        w0 = rng.standard_normal((4, 3))
        x = rng.standard_normal((5, 4))
        a, b = 1.7, -0.35

        def grad_of(pick):
            tape = Tape()
            f, g = self._pair(tape, w0, x)
            return tape.param_grads(tape.backward(pick(f, g)))["w"]

        combined = grad_of(lambda f, g: a * f + b * g)
        separate = a * grad_of(lambda f, g: f) + b * grad_of(lambda f, g: g)
        np.testing.assert_allclose(combined, separate, rtol=1e-12, atol=1e-12)

    @pytest.mark.parametrize("seed", range(5))
    def test_repeat_is_bit_identical(self, seed):
        runs = []
        for _ in range(2):
            build, _, w0 = _random_graph(seed)
            tape, _, value = build(w0)
            runs.append((value.item(), tape.param_grads(tape.backward(value))["w"]))
        assert runs[0][0] == runs[1][0]
        np.testing.assert_array_equal(runs[0][1], runs[1][1])
