#!/usr/bin/env python3
"""
Tensor AD - dense float64 tensors with reverse-mode automatic differentiation

A Tape records every forward op as a TapeNode in creation order, which is a
topological order of the expression DAG. backward() visits each node once in
reverse creation order and returns the gradient of a scalar root with respect
to every node that influences it. Tapes are single-use: build, backward, drop.

Broadcasting is explicit: elementwise binary ops take equal shapes or a 0-d
operand; row vectors broadcast over matrices only through the
broadcast_*_rowvec kinds.

Usage:
    tape = Tape()
    w = tape.param("w", np.ones((2, 1)))
    x = tape.constant([[1.0, 2.0], [3.0, 4.0]])
    loss = (x @ w).sum()
    grads = tape.backward(loss)
    grads[w.node_id]        # -> [[4.], [6.]]
"""
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.special import expit
from scipy.special import logsumexp as _logsumexp

from core.errors import (
    ConfigError,
    DivisionByZeroError,
    DomainError,
    NonFiniteError,
    ShapeError,
    TapeError,
)

LEAKY_RELU_SLOPE = 0.2

ArrayLike = Union[np.ndarray, float, int, Sequence]
Vjp = Callable[[np.ndarray], Tuple[Optional[np.ndarray], ...]]


@dataclass
class TapeNode:
    node_id: int
    kind: str
    inputs: Tuple[int, ...]
    value: np.ndarray
    vjp: Optional[Vjp] = None
    name: Optional[str] = None


class Tensor:
    """Handle to a node on a Tape"""

    __slots__ = ("tape", "node_id")
    # make ndarray <op> Tensor dispatch to the reflected Tensor operators
    __array_ufunc__ = None

    def __init__(self, tape: "Tape", node_id: int):
        self.tape = tape
        self.node_id = node_id

    @property
    def data(self) -> np.ndarray:
        return self.tape.nodes[self.node_id].value

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def T(self) -> "Tensor":
        return transpose(self)

    def item(self) -> float:
        return float(self.data)

    def __repr__(self) -> str:
        node = self.tape.nodes[self.node_id]
        return f"Tensor(id={self.node_id}, kind={node.kind}, shape={self.shape})"

    def __add__(self, other): return add(self, other)
    def __radd__(self, other): return add(other, self)
    def __sub__(self, other): return sub(self, other)
    def __rsub__(self, other): return sub(other, self)
    def __mul__(self, other): return mul(self, other)
    def __rmul__(self, other): return mul(other, self)
    def __truediv__(self, other): return div(self, other)
    def __rtruediv__(self, other): return div(other, self)
    def __matmul__(self, other): return matmul(self, other)
    def __rmatmul__(self, other): return matmul(other, self)
    def __neg__(self): return negate(self)

    def sum(self, axis: Optional[int] = None) -> "Tensor":
        return reduce_sum(self, axis)

    def mean(self, axis: Optional[int] = None) -> "Tensor":
        return reduce_mean(self, axis)

    def exp(self) -> "Tensor": return exp(self)
    def log(self) -> "Tensor": return log(self)
    def square(self) -> "Tensor": return square(self)
    def sqrt(self) -> "Tensor": return sqrt(self)

    def reshape(self, *shape) -> "Tensor":
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)


class Tape:
    """Per-evaluation record of forward ops"""

    def __init__(self):
        self.nodes: List[TapeNode] = []
        self.consumed = False
        self._params: Dict[str, Tensor] = {}

    def __len__(self) -> int:
        return len(self.nodes)

    def __bool__(self) -> bool:
        # an empty tape is still a tape
        return True

    def _append(self, kind: str, inputs: Tuple[int, ...], value: np.ndarray,
                vjp: Optional[Vjp] = None, name: Optional[str] = None) -> Tensor:
        if self.consumed:
            raise TapeError("tape already consumed by a backward pass")
        node = TapeNode(len(self.nodes), kind, inputs, value, vjp, name)
        self.nodes.append(node)
        return Tensor(self, node.node_id)

    def leaf(self, value: ArrayLike, name: Optional[str] = None) -> Tensor:
        array = np.array(value, dtype=np.float64)
        if not np.all(np.isfinite(array)):
            raise NonFiniteError("leaf", [array.shape], "leaf value is not finite")
        return self._append("leaf", (), array, None, name)

    def constant(self, value: ArrayLike) -> Tensor:
        array = np.array(value, dtype=np.float64)
        if not np.all(np.isfinite(array)):
            raise NonFiniteError("const", [array.shape], "constant value is not finite")
        return self._append("const", (), array)

    def param(self, name: str, value: np.ndarray) -> Tensor:
        """Leaf bound to a named parameter; one leaf per name per tape"""
        existing = self._params.get(name)
        if existing is not None:
            return existing
        tensor = self.leaf(value, name=name)
        self._params[name] = tensor
        return tensor

    @property
    def params(self) -> Dict[str, Tensor]:
        return dict(self._params)

    def coerce(self, value) -> Tensor:
        if isinstance(value, Tensor):
            if value.tape is not self:
                raise TapeError("operands belong to different tapes")
            return value
        return self.constant(value)

    def backward(self, root: Tensor) -> Dict[int, np.ndarray]:
        """Gradient of a scalar root with respect to every contributing node"""
        if self.consumed:
            raise TapeError("tape already consumed by a previous backward pass")
        if root.tape is not self:
            raise TapeError("root does not belong to this tape")
        if root.data.shape != ():
            raise TapeError(f"backward root must be a scalar, got shape {root.data.shape}")
        self.consumed = True

        grads: Dict[int, np.ndarray] = {root.node_id: np.array(1.0)}
        for node in reversed(self.nodes[: root.node_id + 1]):
            upstream = grads.get(node.node_id)
            if upstream is None or node.vjp is None:
                continue
            for input_id, contribution in zip(node.inputs, node.vjp(upstream)):
                if contribution is None:
                    continue
                if input_id in grads:
                    grads[input_id] = grads[input_id] + contribution
                else:
                    grads[input_id] = contribution
        return grads

    def param_grads(self, grads: Dict[int, np.ndarray]) -> Dict[str, np.ndarray]:
        """Map a gradient dict back onto parameter names (zeros when unreached)"""
        out = {}
        for name, tensor in self._params.items():
            g = grads.get(tensor.node_id)
            out[name] = np.zeros_like(tensor.data) if g is None else np.asarray(g, dtype=np.float64)
        return out


# ============== OP RULES ==============
# Each rule maps operand arrays (+ attrs) to (value, vjp).

def _unbroadcast(g: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    if shape == () and g.shape != ():
        return np.array(np.sum(g))
    return g


def _check_elementwise(kind: str, a: np.ndarray, b: np.ndarray):
    if a.shape != b.shape and a.ndim != 0 and b.ndim != 0:
        raise ShapeError(kind, [a.shape, b.shape], "elementwise ops need equal shapes or a 0-d operand")


def _rule_add(values):
    a, b = values
    _check_elementwise("add", a, b)
    return a + b, lambda g: (_unbroadcast(g, a.shape), _unbroadcast(g, b.shape))


def _rule_sub(values):
    a, b = values
    _check_elementwise("sub", a, b)
    return a - b, lambda g: (_unbroadcast(g, a.shape), _unbroadcast(-g, b.shape))


def _rule_mul(values):
    a, b = values
    _check_elementwise("mul", a, b)
    return a * b, lambda g: (_unbroadcast(g * b, a.shape), _unbroadcast(g * a, b.shape))


def _rule_div(values):
    a, b = values
    _check_elementwise("div", a, b)
    if np.any(b == 0.0):
        raise DivisionByZeroError("div", [a.shape, b.shape])
    return a / b, lambda g: (_unbroadcast(g / b, a.shape), _unbroadcast(-g * a / (b * b), b.shape))


def _rule_matmul(values):
    a, b = values
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError("matmul", [a.shape, b.shape], "expected (m, k) @ (k, n)")
    return a @ b, lambda g: (g @ b.T, a.T @ g)


def _check_axis(kind: str, a: np.ndarray, axis: Optional[int]):
    if axis is not None and not -a.ndim <= axis < a.ndim:
        raise ShapeError(kind, [a.shape], f"axis {axis} out of range")


def _rule_sum(values, axis=None):
    (a,) = values
    _check_axis("sum", a, axis)
    value = np.sum(a, axis=axis)

    def vjp(g):
        if axis is None:
            return (np.full(a.shape, float(g)),)
        return (np.array(np.broadcast_to(np.expand_dims(g, axis), a.shape)),)
    return value, vjp


def _rule_mean(values, axis=None):
    (a,) = values
    _check_axis("mean", a, axis)
    count = a.size if axis is None else a.shape[axis]
    if count == 0:
        raise ShapeError("mean", [a.shape], "mean over an empty extent")
    value = np.mean(a, axis=axis)

    def vjp(g):
        if axis is None:
            return (np.full(a.shape, float(g) / count),)
        return (np.array(np.broadcast_to(np.expand_dims(g, axis), a.shape)) / count,)
    return value, vjp


def _rule_exp(values):
    (a,) = values
    value = np.exp(a)
    return value, lambda g: (g * value,)


def _rule_log(values):
    (a,) = values
    if np.any(a <= 0.0):
        raise DomainError("log", [a.shape], f"non-positive input (min {np.min(a):.6g})")
    return np.log(a), lambda g: (g / a,)


def _rule_tanh(values):
    (a,) = values
    value = np.tanh(a)
    return value, lambda g: (g * (1.0 - value * value),)


def _rule_relu(values):
    (a,) = values
    mask = a > 0.0
    return np.where(mask, a, 0.0), lambda g: (g * mask,)


def _rule_leaky_relu(values, slope=LEAKY_RELU_SLOPE):
    (a,) = values
    factor = np.where(a > 0.0, 1.0, slope)
    return a * factor, lambda g: (g * factor,)


def _rule_softplus(values):
    (a,) = values
    return np.logaddexp(0.0, a), lambda g: (g * expit(a),)


def _rule_sigmoid(values):
    (a,) = values
    value = expit(a)
    return value, lambda g: (g * value * (1.0 - value),)


def _rule_square(values):
    (a,) = values
    return a * a, lambda g: (2.0 * a * g,)


def _rule_sqrt(values):
    (a,) = values
    if np.any(a <= 0.0):
        raise DomainError("sqrt", [a.shape], f"non-positive input (min {np.min(a):.6g})")
    value = np.sqrt(a)
    return value, lambda g: (g / (2.0 * value),)


def _rule_negate(values):
    (a,) = values
    return -a, lambda g: (-g,)


def _rule_abs(values):
    (a,) = values
    return np.abs(a), lambda g: (g * np.sign(a),)


def _rule_clip(values, lo, hi):
    (a,) = values
    inside = (a >= lo) & (a <= hi)
    return np.clip(a, lo, hi), lambda g: (g * inside,)


def _rowvec(kind: str, m: np.ndarray, r: np.ndarray) -> np.ndarray:
    if m.ndim != 2 or r.size != m.shape[1] or r.ndim not in (1, 2) or (r.ndim == 2 and r.shape[0] != 1):
        raise ShapeError(kind, [m.shape, r.shape], "expected (n, d) matrix and (d,) or (1, d) row vector")
    return r.reshape(1, -1)


def _rule_broadcast_add_rowvec(values):
    m, r = values
    row = _rowvec("broadcast_add_rowvec", m, r)
    return m + row, lambda g: (g, g.sum(axis=0).reshape(r.shape))


def _rule_broadcast_mul_rowvec(values):
    m, r = values
    row = _rowvec("broadcast_mul_rowvec", m, r)
    return m * row, lambda g: (g * row, (g * m).sum(axis=0).reshape(r.shape))


def _rule_reshape(values, shape):
    (a,) = values
    shape = tuple(int(s) for s in shape)
    if -1 in shape:
        known = int(np.prod([s for s in shape if s != -1])) if len(shape) > 1 else 1
        if shape.count(-1) > 1 or known == 0 or a.size % known:
            raise ShapeError("reshape", [a.shape], f"cannot infer {shape}")
        shape = tuple(a.size // known if s == -1 else s for s in shape)
    if int(np.prod(shape)) != a.size:
        raise ShapeError("reshape", [a.shape], f"cannot reshape to {shape}")
    return a.reshape(shape), lambda g: (g.reshape(a.shape),)


def _rule_transpose(values, axes=None):
    (a,) = values
    axes = tuple(reversed(range(a.ndim))) if axes is None else tuple(axes)
    if sorted(axes) != list(range(a.ndim)):
        raise ShapeError("transpose", [a.shape], f"invalid axes {axes}")
    inverse = tuple(np.argsort(axes))
    return np.transpose(a, axes), lambda g: (np.transpose(g, inverse),)


def _rule_slice(values, axis, start, stop):
    (a,) = values
    _check_axis("slice", a, axis)
    if not 0 <= start <= stop <= a.shape[axis]:
        raise ShapeError("slice", [a.shape], f"range [{start}, {stop}) outside axis {axis}")
    index = [slice(None)] * a.ndim
    index[axis] = slice(start, stop)
    index = tuple(index)

    def vjp(g):
        full = np.zeros_like(a)
        full[index] = g
        return (full,)
    return a[index], vjp


def _rule_concat(values, axis=0):
    first = values[0]
    for v in values[1:]:
        if v.ndim != first.ndim or any(
            v.shape[i] != first.shape[i] for i in range(first.ndim) if i != axis % first.ndim
        ):
            raise ShapeError("concat", [x.shape for x in values], f"non-conforming along axis {axis}")
    bounds = np.cumsum([v.shape[axis] for v in values])[:-1]
    return np.concatenate(values, axis=axis), lambda g: tuple(np.split(g, bounds, axis=axis))


def _rule_logsumexp(values, axis=None):
    (a,) = values
    _check_axis("logsumexp", a, axis)
    value = _logsumexp(a, axis=axis)

    def vjp(g):
        if axis is None:
            return (np.exp(a - value) * g,)
        return (np.exp(a - np.expand_dims(value, axis)) * np.expand_dims(g, axis),)
    return value, vjp


def _rule_pairwise_diff(values):
    a, b = values
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[1]:
        raise ShapeError("pairwise_diff", [a.shape, b.shape], "expected (m, d) and (n, d)")
    return a[:, None, :] - b[None, :, :], lambda g: (g.sum(axis=1), -g.sum(axis=0))


_RULES = {
    "add": _rule_add,
    "sub": _rule_sub,
    "mul": _rule_mul,
    "div": _rule_div,
    "matmul": _rule_matmul,
    "sum": _rule_sum,
    "mean": _rule_mean,
    "exp": _rule_exp,
    "log": _rule_log,
    "tanh": _rule_tanh,
    "relu": _rule_relu,
    "leaky_relu": _rule_leaky_relu,
    "softplus": _rule_softplus,
    "sigmoid": _rule_sigmoid,
    "square": _rule_square,
    "sqrt": _rule_sqrt,
    "negate": _rule_negate,
    "abs": _rule_abs,
    "clip": _rule_clip,
    "broadcast_add_rowvec": _rule_broadcast_add_rowvec,
    "broadcast_mul_rowvec": _rule_broadcast_mul_rowvec,
    "reshape": _rule_reshape,
    "transpose": _rule_transpose,
    "slice": _rule_slice,
    "concat": _rule_concat,
    "logsumexp": _rule_logsumexp,
    "pairwise_diff": _rule_pairwise_diff,
}

OP_KINDS = frozenset(_RULES)


def forward_op(kind: str, *inputs, **attrs) -> Tensor:
    """Evaluate one op and record it on the operands' tape"""
    rule = _RULES.get(kind)
    if rule is None:
        raise ConfigError(f"unknown op kind '{kind}'")
    tape = next((x.tape for x in inputs if isinstance(x, Tensor)), None)
    if tape is None:
        raise TapeError(f"'{kind}' needs at least one Tensor operand")
    tensors = [tape.coerce(x) for x in inputs]
    values = [t.data for t in tensors]
    with np.errstate(all="ignore"):
        value, vjp = rule(values, **attrs)
    value = np.asarray(value, dtype=np.float64)
    if not np.all(np.isfinite(value)):
        raise NonFiniteError(kind, [v.shape for v in values])
    return tape._append(kind, tuple(t.node_id for t in tensors), value, vjp)


def add(a, b) -> Tensor: return forward_op("add", a, b)
def sub(a, b) -> Tensor: return forward_op("sub", a, b)
def mul(a, b) -> Tensor: return forward_op("mul", a, b)
def div(a, b) -> Tensor: return forward_op("div", a, b)
def matmul(a, b) -> Tensor: return forward_op("matmul", a, b)
def reduce_sum(a, axis: Optional[int] = None) -> Tensor: return forward_op("sum", a, axis=axis)
def reduce_mean(a, axis: Optional[int] = None) -> Tensor: return forward_op("mean", a, axis=axis)
def exp(a) -> Tensor: return forward_op("exp", a)
def log(a) -> Tensor: return forward_op("log", a)
def tanh(a) -> Tensor: return forward_op("tanh", a)
def relu(a) -> Tensor: return forward_op("relu", a)
def leaky_relu(a, slope: float = LEAKY_RELU_SLOPE) -> Tensor: return forward_op("leaky_relu", a, slope=slope)
def softplus(a) -> Tensor: return forward_op("softplus", a)
def sigmoid(a) -> Tensor: return forward_op("sigmoid", a)
def square(a) -> Tensor: return forward_op("square", a)
def sqrt(a) -> Tensor: return forward_op("sqrt", a)
def negate(a) -> Tensor: return forward_op("negate", a)
def absolute(a) -> Tensor: return forward_op("abs", a)
def clip(a, lo: float, hi: float) -> Tensor: return forward_op("clip", a, lo=lo, hi=hi)
def broadcast_add_rowvec(m, r) -> Tensor: return forward_op("broadcast_add_rowvec", m, r)
def broadcast_mul_rowvec(m, r) -> Tensor: return forward_op("broadcast_mul_rowvec", m, r)
def reshape(a, shape) -> Tensor: return forward_op("reshape", a, shape=tuple(shape))
def transpose(a, axes=None) -> Tensor: return forward_op("transpose", a, axes=axes)
def take_slice(a, axis: int, start: int, stop: int) -> Tensor:
    return forward_op("slice", a, axis=axis, start=start, stop=stop)
def concat(tensors: Sequence, axis: int = 0) -> Tensor: return forward_op("concat", *tensors, axis=axis)
def logsumexp(a, axis: Optional[int] = None) -> Tensor: return forward_op("logsumexp", a, axis=axis)
def pairwise_diff(a, b) -> Tensor: return forward_op("pairwise_diff", a, b)


def tile_rows(t: Tensor, times: int) -> Tensor:
    """Stack `times` copies of t along axis 0"""
    return t if times == 1 else concat([t] * times, axis=0)


def stack_columns(columns: Sequence[Tensor]) -> Tensor:
    """(n,) tensors -> (n, len(columns)) matrix"""
    return concat([reshape(c, (-1, 1)) for c in columns], axis=1)


def finite_difference_gradient(fn: Callable[[np.ndarray], float], x: np.ndarray,
                               step: float = 1e-5) -> np.ndarray:
    """Central-difference gradient of a scalar function of an array"""
    x = np.array(x, dtype=np.float64)
    grad = np.zeros_like(x)
    flat = x.reshape(-1)
    out = grad.reshape(-1)
    for i in range(flat.size):
        original = flat[i]
        flat[i] = original + step
        upper = fn(x)
        flat[i] = original - step
        lower = fn(x)
        flat[i] = original
        out[i] = (upper - lower) / (2.0 * step)
    return grad
