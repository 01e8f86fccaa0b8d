#!/usr/bin/env python3
"""
Divergences between the aggregate encoding q(z) = (1/n) Σ_i q(z|x_i) and the prior

- inclusive KL(p || q) by prior samples and a log-sum-exp over the encodings
- dimension-wise Cauchy-kernel MMD² (V-statistic)
- naive minibatch estimator of H[q(z)] and its brute-force oracle
- exclusive KL(q || p) through the oracle entropy

Every mixture density is evaluated in log space.
"""
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.special import logsumexp

from config import ORACLE_MAX_COMPONENTS
from core import tensor_ad as ad
from core.distributions import GaussianPosterior, Prior, pairwise_log_prob_array, prior_log_prob
from core.errors import ConfigError, ShapeError
from core.networks import VaeModel, encode_arrays
from core.tensor_ad import Tape, Tensor
from data.constants import MMD_SCALES


@dataclass
class DivergenceEstimate:
    value: float
    std_error: float = 0.0
    num_samples: int = 0
    num_components: int = 0

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "std_error": self.std_error,
            "num_samples": self.num_samples,
            "num_components": self.num_components,
        }


def _mc_estimate(terms: np.ndarray, num_components: int) -> DivergenceEstimate:
    m = terms.size
    se = float(np.std(terms, ddof=1) / math.sqrt(m)) if m > 1 else 0.0
    return DivergenceEstimate(float(np.mean(terms)), se, m, num_components)


# ============== INCLUSIVE KL ==============

def inclusive_kl_terms(q: GaussianPosterior, prior: Prior, z_prior: np.ndarray) -> Tensor:
    """
    Per-sample log p(z_j) - log((1/n) Σ_i q(z_j|x_i)) for z_j ~ p

    Differentiable in the encoder (and learnable prior) parameters.
    """
    z_prior = np.asarray(z_prior, dtype=np.float64)
    if z_prior.ndim != 2 or z_prior.shape[0] < 1:
        raise ConfigError("inclusive KL needs at least one prior sample")
    n = q.batch_size
    log_q = ad.logsumexp(q.pairwise_log_prob(z_prior), axis=1) - math.log(n)
    log_p = prior.log_prob(q.tape.constant(z_prior))
    return log_p - log_q


def inclusive_kl_estimate(model: VaeModel, x: np.ndarray, num_samples: int,
                          rng: np.random.Generator) -> DivergenceEstimate:
    if num_samples < 1 or len(x) < 1:
        raise ConfigError("inclusive KL needs J >= 1 prior samples and n >= 1 data points")
    q = model.encode(x)
    terms = inclusive_kl_terms(q, model.prior, model.prior.sample(rng, num_samples))
    return _mc_estimate(terms.data, q.batch_size)


# ============== MMD ==============

def _validate_scales(scales: Sequence[float]):
    if len(scales) == 0 or any(s <= 0 for s in scales):
        raise ConfigError(f"MMD length scales must be non-empty and positive, got {list(scales)}")


def _cauchy_gram_mean(a: Tensor, b: Tensor, scales: Sequence[float]) -> Tensor:
    """mean_{ij} Σ_d Σ_ℓ σ_ℓ / (σ_ℓ + (a_id - b_jd)²)"""
    sq = ad.pairwise_diff(a, b).square()
    total = None
    for s in scales:
        term = ad.div(float(s), sq + float(s)).sum()
        total = term if total is None else total + term
    return total * (1.0 / (a.shape[0] * b.shape[0]))


def mmd_dimwise_cauchy(z, w, scales: Sequence[float] = MMD_SCALES):
    """
    V-statistic MMD² between samples z (m, D) and w (m', D)

    Returns a scalar Tensor when z is a Tensor, else a float.
    """
    _validate_scales(scales)
    as_tensor = isinstance(z, Tensor)
    tape = z.tape if as_tensor else Tape()
    zt = z if as_tensor else tape.constant(np.asarray(z, dtype=np.float64))
    wt = w if isinstance(w, Tensor) else tape.constant(np.asarray(w, dtype=np.float64))
    if zt.ndim != 2 or wt.ndim != 2 or zt.shape[1] != wt.shape[1]:
        raise ShapeError("mmd_dimwise_cauchy", [zt.shape, wt.shape], "expected (m, D) and (m', D)")
    if zt.shape[0] < 1 or wt.shape[0] < 1:
        raise ConfigError("MMD needs non-empty sample sets")
    value = (_cauchy_gram_mean(zt, zt, scales) + _cauchy_gram_mean(wt, wt, scales)
             - 2.0 * _cauchy_gram_mean(zt, wt, scales))
    return value if as_tensor else float(value.data)


def mmd_dimwise_cauchy_bruteforce(z: np.ndarray, w: np.ndarray,
                                  scales: Sequence[float] = MMD_SCALES) -> float:
    """Explicit double sum of the same kernel"""
    z = np.asarray(z, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)

    def kernel(x, y):
        return sum(float(np.sum(s / (s + (x - y) ** 2))) for s in scales)

    def gram_mean(a, b):
        total = 0.0
        for i in range(len(a)):
            for j in range(len(b)):
                total += kernel(a[i], b[j])
        return total / (len(a) * len(b))

    return gram_mean(z, z) + gram_mean(w, w) - 2.0 * gram_mean(z, w)


# ============== AGGREGATE ENTROPY ==============

def naive_entropy_from_arrays(mean: np.ndarray, log_var: np.ndarray, z: np.ndarray, n: int,
                              mixing: Optional[np.ndarray] = None) -> float:
    """
    Minibatch estimator of H[q(z)] with z_b ~ q(z|x_b):

        q̂(z_b) = q(z_b|x_b)/n + (n-1)/(n(B-1)) Σ_{b'≠b} q(z_b|x_b')
    """
    b = mean.shape[0]
    if b < 2:
        raise ConfigError(f"the minibatch entropy estimator needs B >= 2, got {b}")
    if n < b:
        raise ConfigError(f"dataset size n={n} is smaller than the minibatch B={b}")
    log_q = pairwise_log_prob_array(mean, log_var, z, mixing)     # (B, B): [z_b, x_b']
    weights = np.full((b, b), math.log(n - 1) - math.log(n) - math.log(b - 1))
    np.fill_diagonal(weights, -math.log(n))
    log_q_hat = logsumexp(log_q + weights, axis=1)
    return float(-np.mean(log_q_hat))


def naive_aggregate_entropy(model: VaeModel, x: np.ndarray, n: int, eps: np.ndarray) -> float:
    q = model.encode(x)
    z = q.sample(eps).data
    return naive_entropy_from_arrays(q.mean.data, q.log_var.data, z, n, q.mixing)


def _check_components(n: int):
    if n < 1:
        raise ConfigError("the aggregate encoding needs at least one component")
    if n > ORACLE_MAX_COMPONENTS:
        raise ConfigError(f"oracle aggregate density capped at {ORACLE_MAX_COMPONENTS} components, got {n}")


def sample_aggregate(mean: np.ndarray, log_var: np.ndarray, num_samples: int, rng: np.random.Generator,
                     mixing: Optional[np.ndarray] = None) -> np.ndarray:
    """Draws from the uniform mixture of the n encodings"""
    idx = rng.integers(0, mean.shape[0], size=num_samples)
    noise = rng.standard_normal((num_samples, mean.shape[1])) * np.exp(0.5 * log_var[idx])
    if mixing is not None:
        noise = noise @ mixing.T
    return mean[idx] + noise


def aggregate_log_density(mean: np.ndarray, log_var: np.ndarray, z: np.ndarray,
                          mixing: Optional[np.ndarray] = None) -> np.ndarray:
    return logsumexp(pairwise_log_prob_array(mean, log_var, z, mixing), axis=1) - math.log(mean.shape[0])


def oracle_entropy_from_arrays(mean: np.ndarray, log_var: np.ndarray, num_samples: int,
                               rng: np.random.Generator,
                               mixing: Optional[np.ndarray] = None) -> DivergenceEstimate:
    _check_components(mean.shape[0])
    z = sample_aggregate(mean, log_var, num_samples, rng, mixing)
    return _mc_estimate(-aggregate_log_density(mean, log_var, z, mixing), mean.shape[0])


def oracle_aggregate_entropy(model: VaeModel, x: np.ndarray, num_samples: int,
                             rng: np.random.Generator) -> DivergenceEstimate:
    _check_components(len(x))
    mean, log_var, mixing = encode_arrays(model, x)
    return oracle_entropy_from_arrays(mean, log_var, num_samples, rng, mixing)


def exclusive_kl_from_arrays(mean: np.ndarray, log_var: np.ndarray, prior: Prior, num_samples: int,
                             rng: np.random.Generator,
                             mixing: Optional[np.ndarray] = None) -> DivergenceEstimate:
    """KL(q || p) = -H[q] - E_q[log p], both from the same aggregate samples"""
    _check_components(mean.shape[0])
    z = sample_aggregate(mean, log_var, num_samples, rng, mixing)
    terms = aggregate_log_density(mean, log_var, z, mixing) - prior_log_prob(prior, z)
    return _mc_estimate(terms, mean.shape[0])


def exclusive_kl_from_entropy(model: VaeModel, x: np.ndarray, num_samples: int,
                              rng: np.random.Generator, prior: Optional[Prior] = None) -> DivergenceEstimate:
    _check_components(len(x))
    mean, log_var, mixing = encode_arrays(model, x)
    return exclusive_kl_from_arrays(mean, log_var, prior or model.prior, num_samples, rng, mixing)
