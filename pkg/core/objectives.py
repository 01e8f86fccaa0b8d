#!/usr/bin/env python3
"""
Objectives - differentiable training objectives of a minibatch

    elbo              recon - KL(q(z|x) || p(z))
    beta_vae          recon - β KL
    entropy_reg_elbo  elbo + ((β-1)/2) log|S(x)|
    decomp            recon - β KL - α D(q(z), p(z))

All four share one evaluation path so that elbo, beta_vae(β=1) and
decomp(α=0, β=1) produce bit-identical values on shared noise.
Batch reduction is the mean over rows (and over the K reconstruction samples).
"""
import math
from dataclasses import dataclass
from typing import Dict, Optional, Sequence

import numpy as np

from core import tensor_ad as ad
from core.distributions import (
    gaussian_entropy,
    is_gaussian_prior,
    kl_gaussian_gaussian,
)
from core.divergences import MMD_SCALES, inclusive_kl_terms, mmd_dimwise_cauchy
from core.errors import ConfigError, ShapeError
from core.networks import VaeModel
from core.tensor_ad import Tape, Tensor

ELBO = "elbo"
BETA_VAE = "beta_vae"
ENTROPY_REG_ELBO = "entropy_reg_elbo"
DECOMP = "decomp"
VARIANTS = (ELBO, BETA_VAE, ENTROPY_REG_ELBO, DECOMP)

INCLUSIVE_KL = "inclusive-kl"
MMD_DIMWISE = "mmd-dimwise"
DIVERGENCES = (INCLUSIVE_KL, MMD_DIMWISE)


@dataclass(frozen=True)
class ObjectiveSpec:
    variant: str = ELBO
    beta: float = 1.0
    alpha: float = 0.0
    divergence: str = INCLUSIVE_KL
    num_samples: int = 1
    divergence_samples: int = 1000
    mmd_scales: Sequence[float] = MMD_SCALES

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ConfigError(f"unknown objective '{self.variant}', expected one of {list(VARIANTS)}")
        if self.variant in (BETA_VAE, ENTROPY_REG_ELBO) and not self.beta > 0:
            raise ConfigError(f"{self.variant} needs beta > 0, got {self.beta}")
        if self.variant == DECOMP:
            if self.alpha < 0 or self.beta < 0:
                raise ConfigError(f"decomp needs alpha >= 0 and beta >= 0, got {self.alpha}, {self.beta}")
            if self.divergence not in DIVERGENCES:
                raise ConfigError(f"unknown divergence '{self.divergence}', expected one of {list(DIVERGENCES)}")
        if self.num_samples < 1 or self.divergence_samples < 1:
            raise ConfigError("sample counts must be >= 1")


@dataclass
class ObjectiveTerms:
    value: Tensor
    reconstruction: Tensor
    kl: Tensor
    divergence: Optional[Tensor] = None
    entropy: float = 0.0

    def as_row(self) -> Dict[str, float]:
        return {
            "objective": self.value.item(),
            "reconstruction": self.reconstruction.item(),
            "kl": self.kl.item(),
            "divergence": self.divergence.item() if self.divergence is not None else 0.0,
            "entropy": self.entropy,
        }


def _noise(eps, batch: int, dim: int) -> np.ndarray:
    eps = np.asarray(eps, dtype=np.float64)
    if eps.ndim == 2:
        eps = eps[None]
    if eps.ndim != 3 or eps.shape[1:] != (batch, dim):
        raise ShapeError("objective_noise", [eps.shape, (batch, dim)], "noise must be (K, B, D) or (B, D)")
    return eps


def _evaluate(model: VaeModel, x, eps, beta: float, tape: Optional[Tape],
              alpha: float = 0.0, divergence: str = INCLUSIVE_KL, rng: Optional[np.random.Generator] = None,
              entropy_weight: float = 0.0, divergence_samples: int = 1000,
              mmd_scales: Sequence[float] = MMD_SCALES) -> ObjectiveTerms:
    tape = tape if tape is not None else Tape()
    x = np.asarray(x, dtype=np.float64)
    q = model.encode(x, tape)
    b, d = q.mean.shape
    eps = _noise(eps, b, d)
    k = eps.shape[0]

    tiled = q.tiled(k)
    z = tiled.sample(eps.reshape(k * b, d))
    reconstruction = model.decode_log_prob(z, np.tile(x, (k, 1))).mean()

    if is_gaussian_prior(model.prior):
        kl = kl_gaussian_gaussian(q, model.prior).mean()
    else:
        kl = (tiled.log_prob(z) - model.prior.log_prob(z)).mean()

    value = reconstruction - beta * kl
    entropy_rows = gaussian_entropy(q)
    if entropy_weight != 0.0:
        value = value + entropy_weight * q.log_det_cov().mean()

    div = None
    if alpha != 0.0:
        if rng is None:
            raise ConfigError("the decomposition divergence needs an rng for prior samples")
        if divergence == INCLUSIVE_KL:
            div = inclusive_kl_terms(q, model.prior, model.prior.sample(rng, divergence_samples)).mean()
        elif divergence == MMD_DIMWISE:
            div = mmd_dimwise_cauchy(z, model.prior.sample(rng, z.shape[0]), mmd_scales)
        else:
            raise ConfigError(f"unknown divergence '{divergence}'")
        value = value - alpha * div

    return ObjectiveTerms(value, reconstruction, kl, div, float(np.mean(entropy_rows.data)))


def elbo(model: VaeModel, x, eps, tape: Optional[Tape] = None) -> ObjectiveTerms:
    return _evaluate(model, x, eps, 1.0, tape)


def beta_vae(model: VaeModel, x, beta: float, eps, tape: Optional[Tape] = None) -> ObjectiveTerms:
    if beta < 0:
        raise ConfigError(f"beta_vae needs beta >= 0, got {beta}")
    return _evaluate(model, x, eps, beta, tape)


def entropy_reg_elbo(model: VaeModel, x, beta: float, eps, tape: Optional[Tape] = None) -> ObjectiveTerms:
    if not is_gaussian_prior(model.prior):
        raise ConfigError(f"entropy-regularised ELBO needs a Gaussian prior, not '{model.prior.kind}'")
    if not beta > 0:
        raise ConfigError(f"entropy_reg_elbo needs beta > 0, got {beta}")
    return _evaluate(model, x, eps, 1.0, tape, entropy_weight=0.5 * (beta - 1.0))


def decomp_objective(model: VaeModel, x, alpha: float, beta: float, divergence: str, eps,
                     rng: Optional[np.random.Generator], tape: Optional[Tape] = None,
                     divergence_samples: int = 1000, mmd_scales: Sequence[float] = MMD_SCALES) -> ObjectiveTerms:
    if alpha < 0 or beta < 0:
        raise ConfigError(f"decomp needs alpha >= 0 and beta >= 0, got {alpha}, {beta}")
    if divergence not in DIVERGENCES:
        raise ConfigError(f"unknown divergence '{divergence}', expected one of {list(DIVERGENCES)}")
    return _evaluate(model, x, eps, beta, tape, alpha=alpha, divergence=divergence, rng=rng,
                     divergence_samples=divergence_samples, mmd_scales=mmd_scales)


def evaluate_objective(spec: ObjectiveSpec, model: VaeModel, x, eps, rng: Optional[np.random.Generator] = None,
                       tape: Optional[Tape] = None) -> ObjectiveTerms:
    if spec.variant == ELBO:
        return elbo(model, x, eps, tape)
    if spec.variant == BETA_VAE:
        return beta_vae(model, x, spec.beta, eps, tape)
    if spec.variant == ENTROPY_REG_ELBO:
        return entropy_reg_elbo(model, x, spec.beta, eps, tape)
    return decomp_objective(model, x, spec.alpha, spec.beta, spec.divergence, eps, rng, tape,
                            spec.divergence_samples, spec.mmd_scales)


def check_compatible(spec: ObjectiveSpec, model: VaeModel):
    """Reject objective/prior pairs that cannot be evaluated"""
    if spec.variant == ENTROPY_REG_ELBO and not is_gaussian_prior(model.prior):
        raise ConfigError(f"entropy_reg_elbo needs a Gaussian prior, not '{model.prior.kind}'")


def importance_log_evidence(model: VaeModel, x: np.ndarray, num_samples: int,
                            rng: np.random.Generator) -> np.ndarray:
    """Importance-sampled log p(x) per row with q(z|x) as proposal"""
    x = np.asarray(x, dtype=np.float64)
    tape = Tape()
    q = model.encode(x, tape)
    b, d = q.mean.shape
    eps = rng.standard_normal((num_samples * b, d))
    tiled = q.tiled(num_samples)
    z = tiled.sample(eps)
    log_w = (model.decode_log_prob(z, np.tile(x, (num_samples, 1))) + model.prior.log_prob(z)
             - tiled.log_prob(z))
    log_w = ad.reshape(log_w, (num_samples, b))
    return ad.logsumexp(log_w, axis=0).data - math.log(num_samples)
