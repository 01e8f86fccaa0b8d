#!/usr/bin/env python3
"""
Adam optimiser over named float64 parameter arrays
"""
import math
from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np

from core.errors import ConfigError, NonFiniteError, ShapeError
from data.constants import OPTIMISER_PRESETS

PRESETS = OPTIMISER_PRESETS


@dataclass
class AdamState:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    clip_norm: Optional[float] = None
    step: int = 0
    first_moment: Dict[str, np.ndarray] = field(default_factory=dict)
    second_moment: Dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        if self.lr <= 0 or not 0 <= self.beta1 < 1 or not 0 <= self.beta2 < 1 or self.eps <= 0:
            raise ConfigError(f"invalid Adam hyper-parameters lr={self.lr}, "
                              f"beta1={self.beta1}, beta2={self.beta2}, eps={self.eps}")
        if self.clip_norm is not None and self.clip_norm <= 0:
            raise ConfigError(f"clip_norm must be > 0 when set, got {self.clip_norm}")

    @classmethod
    def from_preset(cls, name: str, **overrides) -> "AdamState":
        if name not in PRESETS:
            raise ConfigError(f"unknown optimiser preset '{name}', expected one of {sorted(PRESETS)}")
        lr, beta1, beta2 = PRESETS[name]
        return cls(**{"lr": lr, "beta1": beta1, "beta2": beta2, **overrides})


def global_norm(grads: Dict[str, np.ndarray]) -> float:
    return math.sqrt(sum(float(np.sum(g * g)) for g in grads.values()))


def adam_step(state: AdamState, params: Dict[str, np.ndarray],
              grads: Dict[str, np.ndarray]) -> Dict[str, np.ndarray]:
    """One bias-corrected Adam update; returns new parameter arrays and advances `state`"""
    for name, g in grads.items():
        if name not in params:
            raise ConfigError(f"gradient for unknown parameter '{name}'")
        if g.shape != params[name].shape:
            raise ShapeError("adam_step", [params[name].shape, g.shape], name)
        if not np.all(np.isfinite(g)):
            raise NonFiniteError("adam_step", [g.shape], f"non-finite gradient for '{name}'")

    scale = 1.0
    if state.clip_norm is not None:
        norm = global_norm(grads)
        if norm > state.clip_norm:
            scale = state.clip_norm / norm

    state.step += 1
    t = state.step
    correction1 = 1.0 - state.beta1 ** t
    correction2 = 1.0 - state.beta2 ** t
    updated = dict(params)
    for name, g in grads.items():
        if scale != 1.0:
            g = g * scale
        m = state.first_moment.get(name)
        v = state.second_moment.get(name)
        if m is None:
            m = np.zeros_like(g)
            v = np.zeros_like(g)
        m = state.beta1 * m + (1.0 - state.beta1) * g
        v = state.beta2 * v + (1.0 - state.beta2) * (g * g)
        state.first_moment[name] = m
        state.second_moment[name] = v
        m_hat = m / correction1
        v_hat = v / correction2
        updated[name] = params[name] - state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return updated
