#!/usr/bin/env python3
"""
Networks - encoder/decoder MLPs, VAE assembly and exact network transforms

Parameters live as plain float64 arrays on the model and are bound to a tape
per evaluation through `tape.param(name, array)`, so two objectives evaluated
on differently-transformed models still share gradient names.

Transforms:
- rescale(β):  mean × √β, variance × β, decoder input × 1/√β
- rotate(R):   mean → R mean, factor → R L, decoder input → Rᵀ z
Both are carried by a fixed post-encoder map A and a fixed pre-decoder map M;
the networks themselves are never modified.
"""
import math
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence

import numpy as np

from config import ROTATION_TOL
from core import tensor_ad as ad
from core.distributions import (
    GaussianPosterior,
    Likelihood,
    Prior,
    likelihood_log_prob,
)
from core.errors import ConfigError, ShapeError
from core.tensor_ad import Tape, Tensor

ACTIVATIONS = {
    "relu": ad.relu,
    "leaky_relu": ad.leaky_relu,
    "tanh": ad.tanh,
    "sigmoid": ad.sigmoid,
    "softplus": ad.softplus,
    "identity": lambda t: t,
}


@dataclass
class DenseLayer:
    weight: np.ndarray      # (in, out)
    bias: np.ndarray        # (out,)
    activation: str = "identity"

    def __post_init__(self):
        if self.activation not in ACTIVATIONS:
            raise ConfigError(f"unknown activation '{self.activation}', expected one of {sorted(ACTIVATIONS)}")
        if self.weight.ndim != 2 or self.bias.shape != (self.weight.shape[1],):
            raise ShapeError("dense_layer", [self.weight.shape, self.bias.shape], "weight (in, out) and bias (out,)")

    @property
    def in_dim(self) -> int:
        return self.weight.shape[0]

    @property
    def out_dim(self) -> int:
        return self.weight.shape[1]


@dataclass
class Mlp:
    layers: List[DenseLayer]

    def __post_init__(self):
        if not self.layers:
            raise ConfigError("an MLP needs at least one layer")
        for prev, nxt in zip(self.layers, self.layers[1:]):
            if prev.out_dim != nxt.in_dim:
                raise ShapeError("mlp", [prev.weight.shape, nxt.weight.shape], "consecutive layers do not conform")

    @classmethod
    def initialise(cls, widths: Sequence[int], activation: str, output_activation: str,
                   rng: np.random.Generator) -> "Mlp":
        """Uniform(±1/√fan_in) weights and biases; widths = [in, hidden..., out]"""
        if len(widths) < 2 or any(w < 1 for w in widths):
            raise ConfigError(f"invalid layer widths {list(widths)}")
        layers = []
        for i, (fan_in, fan_out) in enumerate(zip(widths, widths[1:])):
            bound = 1.0 / math.sqrt(fan_in)
            last = i == len(widths) - 2
            layers.append(DenseLayer(
                weight=rng.uniform(-bound, bound, size=(fan_in, fan_out)),
                bias=rng.uniform(-bound, bound, size=fan_out),
                activation=output_activation if last else activation,
            ))
        return cls(layers)

    @property
    def in_dim(self) -> int:
        return self.layers[0].in_dim

    @property
    def out_dim(self) -> int:
        return self.layers[-1].out_dim

    @property
    def widths(self) -> List[int]:
        return [self.in_dim] + [layer.out_dim for layer in self.layers]

    def named_parameters(self, prefix: str) -> Dict[str, np.ndarray]:
        out = {}
        for i, layer in enumerate(self.layers):
            out[f"{prefix}.{i}.weight"] = layer.weight
            out[f"{prefix}.{i}.bias"] = layer.bias
        return out

    def assign(self, prefix: str, params: Dict[str, np.ndarray]):
        for i, layer in enumerate(self.layers):
            for attr in ("weight", "bias"):
                name = f"{prefix}.{i}.{attr}"
                if name in params:
                    value = np.asarray(params[name], dtype=np.float64)
                    if value.shape != getattr(layer, attr).shape:
                        raise ShapeError("assign", [value.shape, getattr(layer, attr).shape], name)
                    setattr(layer, attr, value)

    def forward(self, tape: Tape, x, prefix: str) -> Tensor:
        h = x if isinstance(x, Tensor) else tape.constant(x)
        if h.ndim != 2 or h.shape[1] != self.in_dim:
            raise ShapeError("mlp_forward", [h.shape], f"expected (B, {self.in_dim}) input")
        for i, layer in enumerate(self.layers):
            w = tape.param(f"{prefix}.{i}.weight", layer.weight)
            b = tape.param(f"{prefix}.{i}.bias", layer.bias)
            h = ACTIVATIONS[layer.activation](ad.broadcast_add_rowvec(h @ w, b))
        return h

    def copy(self) -> "Mlp":
        return Mlp([DenseLayer(l.weight.copy(), l.bias.copy(), l.activation) for l in self.layers])


def _is_diagonal(a: np.ndarray) -> bool:
    return bool(np.all(a == np.diag(np.diag(a))))


@dataclass
class VaeModel:
    """
    Encoder q(z|x) = N(A μ(x), A diag(σ²(x)) Aᵀ), decoder p(x | decoder(M z))

    encoder_map A and decoder_map M default to the identity (None).
    """
    encoder: Mlp
    decoder: Mlp
    likelihood: Likelihood
    prior: Prior
    latent_dim: int
    encoder_map: Optional[np.ndarray] = None
    decoder_map: Optional[np.ndarray] = None
    metadata: Dict = field(default_factory=dict)

    def __post_init__(self):
        d = self.latent_dim
        if self.encoder.out_dim != 2 * d:
            raise ShapeError("vae_model", [(self.encoder.out_dim,), (d,)], "encoder must output 2D values")
        if self.decoder.in_dim != d:
            raise ShapeError("vae_model", [(self.decoder.in_dim,), (d,)], "decoder input must equal D")
        if self.prior.latent_dim != d:
            raise ConfigError(f"prior latent dim {self.prior.latent_dim} does not match model D={d}")
        for name in ("encoder_map", "decoder_map"):
            value = getattr(self, name)
            if value is None:
                continue
            value = np.asarray(value, dtype=np.float64)
            if value.shape != (d, d) or abs(np.linalg.det(value)) == 0.0:
                raise ConfigError(f"{name} must be an invertible {d}x{d} matrix")
            setattr(self, name, value)

    @classmethod
    def initialise(cls, input_dim: int, latent_dim: int, hidden: Sequence[int], likelihood: Likelihood,
                   prior: Prior, rng: np.random.Generator, activation: str = "relu") -> "VaeModel":
        encoder = Mlp.initialise([input_dim, *hidden, 2 * latent_dim], activation, "identity", rng)
        decoder = Mlp.initialise([latent_dim, *reversed(hidden), input_dim], activation,
                                 likelihood.output_activation, rng)
        return cls(encoder, decoder, likelihood, prior, latent_dim,
                   metadata={"activation": activation, "hidden": list(hidden)})

    @property
    def input_dim(self) -> int:
        return self.encoder.in_dim

    def parameters(self) -> Dict[str, np.ndarray]:
        """Trainable arrays in declaration order"""
        params = self.encoder.named_parameters("encoder")
        params.update(self.decoder.named_parameters("decoder"))
        params.update(self.prior.parameters())
        return params

    def network_parameter_names(self) -> List[str]:
        return [n for n in self.parameters() if n.startswith(("encoder.", "decoder."))]

    def assign(self, params: Dict[str, np.ndarray]):
        self.encoder.assign("encoder", params)
        self.decoder.assign("decoder", params)
        prior_params = self.prior.parameters()
        for name in prior_params:
            if name in params:
                self.prior.log_var = np.asarray(params[name], dtype=np.float64).copy()

    def copy(self) -> "VaeModel":
        prior = replace(self.prior)
        if hasattr(prior, "log_var"):
            prior.log_var = prior.log_var.copy()
        return replace(self, encoder=self.encoder.copy(), decoder=self.decoder.copy(), prior=prior,
                       metadata=dict(self.metadata))

    # ---------- evaluation ----------

    def encode(self, x, tape: Optional[Tape] = None) -> GaussianPosterior:
        tape = tape if tape is not None else Tape()
        h = self.encoder.forward(tape, x, "encoder")
        d = self.latent_dim
        mean = ad.take_slice(h, 1, 0, d)
        log_var = ad.take_slice(h, 1, d, 2 * d)
        a = self.encoder_map
        if a is None:
            return GaussianPosterior(mean, log_var)
        if _is_diagonal(a):
            scale = np.diag(a)
            return GaussianPosterior(ad.broadcast_mul_rowvec(mean, scale),
                                     ad.broadcast_add_rowvec(log_var, np.log(scale * scale)))
        return GaussianPosterior(mean @ a.T, log_var, mixing=a)

    def decode(self, z: Tensor) -> Tensor:
        """Decoder mean for a (B, D) latent batch"""
        if z.ndim != 2 or z.shape[1] != self.latent_dim:
            raise ShapeError("decode", [z.shape], f"expected (B, {self.latent_dim}) latents")
        if self.decoder_map is not None:
            z = z @ self.decoder_map.T
        return self.decoder.forward(z.tape, z, "decoder")

    def decode_log_prob(self, z: Tensor, x) -> Tensor:
        """log p(x_b | z_b) per row"""
        return likelihood_log_prob(self.likelihood, x, self.decode(z))

    # ---------- exact transforms ----------

    def rescale(self, beta: float) -> "VaeModel":
        """g_β: posterior moments scaled by (√β, β), decoder reads z/√β"""
        if not beta > 0:
            raise ConfigError(f"rescaling needs beta > 0, got {beta}")
        a = np.eye(self.latent_dim) if self.encoder_map is None else self.encoder_map
        if not _is_diagonal(a):
            raise ConfigError("rescaling needs a diagonal-covariance encoder")
        root = math.sqrt(beta)
        m = np.eye(self.latent_dim) if self.decoder_map is None else self.decoder_map
        return replace(self, encoder_map=root * a, decoder_map=m / root)

    def rotate(self, rotation: np.ndarray) -> "VaeModel":
        """Encoder mean → R μ with exact factor R L; decoder reads Rᵀ z"""
        r = np.asarray(rotation, dtype=np.float64)
        d = self.latent_dim
        if r.shape != (d, d):
            raise ShapeError("rotate", [r.shape], f"rotation must be {d}x{d}")
        orth_err = float(np.max(np.abs(r.T @ r - np.eye(d))))
        det_err = abs(float(np.linalg.det(r)) - 1.0)
        if orth_err > ROTATION_TOL or det_err > ROTATION_TOL:
            raise ConfigError(f"not a proper rotation (|RᵀR - I| = {orth_err:.3g}, |det R - 1| = {det_err:.3g})")
        a = np.eye(d) if self.encoder_map is None else self.encoder_map
        m = np.eye(d) if self.decoder_map is None else self.decoder_map
        return replace(self, encoder_map=r @ a, decoder_map=m @ r.T)


def encode_arrays(model: VaeModel, x: np.ndarray, batch_size: int = 1024):
    """(mean, log_var, mixing) of q(z|x) for every row of x, without gradients"""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != model.input_dim:
        raise ShapeError("encode", [x.shape], f"expected (n, {model.input_dim}) observations")
    means, log_vars, mixing = [], [], None
    for start in range(0, x.shape[0], batch_size):
        q = model.encode(x[start:start + batch_size])
        means.append(q.mean.data)
        log_vars.append(q.log_var.data)
        mixing = q.mixing
    return np.concatenate(means), np.concatenate(log_vars), mixing


def random_rotation(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed proper rotation"""
    q, r = np.linalg.qr(rng.standard_normal((dim, dim)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q
