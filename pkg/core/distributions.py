#!/usr/bin/env python3
"""
Distributions - priors, Gaussian encoder posteriors and likelihoods

Priors (all factor over rows of a (B, D) latent batch):
- IsotropicGaussian  N(0, σ² I)
- DiagGaussian       N(0, diag(exp(log_var))), optionally learnable
- StudentTProduct    Π_d t_ν(z_d), unit scale, location 0
- GaussianMixture    Σ_c π_c N(μ_c, diag(σ²_c))
- SpikeSlab          Π_d (1-γ) N(z_d; 0, 1) + γ N(z_d; 0, σ0²)

Log densities are built from tensor_ad ops so they are differentiable in
the latent batch (and in learnable prior parameters); *_array helpers
evaluate the same expressions on plain arrays.
"""
import math
import warnings
from dataclasses import dataclass, field
from typing import Dict, Optional, Union

import numpy as np
from scipy import integrate
from scipy.special import gammaln
from scipy.special import logsumexp as np_logsumexp

from config import BERNOULLI_CLAMP, QUADRATURE_TOL
from core import tensor_ad as ad
from core.errors import ConfigError, IntegrationError, NumericError, ShapeError
from core.tensor_ad import Tape, Tensor

LOG_2PI = math.log(2.0 * math.pi)
PRIOR_LOG_VAR_PARAM = "prior.log_var"


# ============== ENCODER POSTERIOR ==============

@dataclass
class GaussianPosterior:
    """
    Batch of Gaussian encodings q(z|x_b) = N(mean_b, S_b)

    Diagonal form: S_b = diag(exp(log_var_b)).
    Full form: S_b = L_b L_bᵀ with the exact factor L_b = mixing @ diag(exp(log_var_b / 2)),
    where `mixing` is a fixed invertible D x D map shared by the batch.
    """
    mean: Tensor
    log_var: Tensor
    mixing: Optional[np.ndarray] = None
    _mixing_inv: Optional[np.ndarray] = field(default=None, init=False, repr=False)
    _mixing_logdet: float = field(default=0.0, init=False, repr=False)

    def __post_init__(self):
        if self.mean.shape != self.log_var.shape or self.mean.ndim != 2:
            raise ShapeError("posterior", [self.mean.shape, self.log_var.shape],
                             "mean and log-variance must both be (B, D)")
        if self.mixing is not None:
            mixing = np.asarray(self.mixing, dtype=np.float64)
            d = self.latent_dim
            if mixing.shape != (d, d):
                raise ShapeError("posterior", [self.mean.shape, mixing.shape], "mixing must be D x D")
            sign, logdet = np.linalg.slogdet(mixing)
            if sign == 0 or not np.isfinite(logdet):
                raise NumericError("singular covariance factor in posterior")
            self.mixing = mixing
            self._mixing_inv = np.linalg.inv(mixing)
            self._mixing_logdet = float(logdet)

    @classmethod
    def from_arrays(cls, mean, log_var, mixing=None, tape: Optional[Tape] = None) -> "GaussianPosterior":
        tape = tape if tape is not None else Tape()
        return cls(tape.constant(np.atleast_2d(mean)), tape.constant(np.atleast_2d(log_var)), mixing)

    @property
    def tape(self) -> Tape:
        return self.mean.tape

    @property
    def latent_dim(self) -> int:
        return self.mean.shape[1]

    @property
    def batch_size(self) -> int:
        return self.mean.shape[0]

    @property
    def is_diagonal(self) -> bool:
        return self.mixing is None

    def log_det_cov(self) -> Tensor:
        """log|S_b| per row"""
        logdet = self.log_var.sum(axis=1)
        if self.mixing is None:
            return logdet
        return logdet + 2.0 * self._mixing_logdet

    def covariance_array(self) -> np.ndarray:
        """(B, D, D) covariance matrices"""
        var = np.exp(self.log_var.data)
        if self.mixing is None:
            return np.stack([np.diag(v) for v in var])
        return np.stack([self.mixing @ np.diag(v) @ self.mixing.T for v in var])

    def mean_array(self) -> np.ndarray:
        return self.mean.data

    def sample(self, eps) -> Tensor:
        """Reparameterised z = mean + L eps, row-wise; eps is (B, D)"""
        eps = np.asarray(eps.data if isinstance(eps, Tensor) else eps, dtype=np.float64)
        if eps.shape != self.mean.shape:
            raise ShapeError("reparam_sample", [self.mean.shape, eps.shape], "noise must match the mean")
        scaled = ad.exp(0.5 * self.log_var) * eps
        if self.mixing is not None:
            scaled = scaled @ self.mixing.T
        return self.mean + scaled

    def tiled(self, times: int) -> "GaussianPosterior":
        """Posterior repeated `times` times along the batch axis"""
        return GaussianPosterior(ad.tile_rows(self.mean, times), ad.tile_rows(self.log_var, times), self.mixing)

    def log_prob(self, z: Tensor) -> Tensor:
        """log q(z_b | x_b) for a (B, D) batch of points, one per row"""
        diff = z - self.mean
        if self.mixing is not None:
            diff = diff @ self._mixing_inv.T
        quad = (diff.square() * ad.exp(-self.log_var)).sum(axis=1)
        d = self.latent_dim
        value = -0.5 * (quad + self.log_var.sum(axis=1) + d * LOG_2PI)
        if self.mixing is not None:
            value = value - self._mixing_logdet
        return value

    def pairwise_log_prob(self, z: np.ndarray) -> Tensor:
        """
        (J, B) matrix of log q(z_j | x_b) for fixed points z (J, D)

        Expanded-square form so every op is a matmul or row-vector broadcast.
        """
        z = np.asarray(z, dtype=np.float64)
        if z.ndim != 2 or z.shape[1] != self.latent_dim:
            raise ShapeError("pairwise_log_prob", [z.shape, self.mean.shape], "points must be (J, D)")
        mean = self.mean
        if self.mixing is not None:
            z = z @ self._mixing_inv.T
            mean = mean @ self._mixing_inv.T
        inv_var = ad.exp(-self.log_var)
        cross = z @ (mean * inv_var).T
        sq = (z * z) @ inv_var.T
        row = -0.5 * ((mean.square() * inv_var).sum(axis=1) + self.log_var.sum(axis=1))
        constant = -0.5 * self.latent_dim * LOG_2PI - self._mixing_logdet
        return ad.broadcast_add_rowvec(cross - 0.5 * sq, row) + constant


def pairwise_log_prob_array(mean: np.ndarray, log_var: np.ndarray, z: np.ndarray,
                            mixing: Optional[np.ndarray] = None,
                            chunk_elements: int = 1 << 22) -> np.ndarray:
    """(J, n) log N(z_j; mean_i, S_i) by direct differences, chunked over rows of z"""
    mean = np.asarray(mean, dtype=np.float64)
    log_var = np.asarray(log_var, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    logdet_mixing = 0.0
    if mixing is not None:
        inv = np.linalg.inv(mixing)
        z = z @ inv.T
        mean = mean @ inv.T
        logdet_mixing = float(np.linalg.slogdet(mixing)[1])
    n, d = mean.shape
    inv_var = np.exp(-log_var)
    row = -0.5 * (log_var.sum(axis=1) + d * LOG_2PI) - logdet_mixing
    step = max(1, chunk_elements // max(1, n * d))
    out = np.empty((z.shape[0], n))
    for start in range(0, z.shape[0], step):
        block = z[start:start + step]
        diff = block[:, None, :] - mean[None, :, :]
        out[start:start + step] = row[None, :] - 0.5 * np.einsum("jnd,nd->jn", diff * diff, inv_var)
    return out


def gaussian_entropy(q: GaussianPosterior) -> Tensor:
    """H[N(μ, S)] = (D/2)(1 + log 2π) + ½ log|S|, per row"""
    d = q.latent_dim
    return 0.5 * q.log_det_cov() + 0.5 * d * (1.0 + LOG_2PI)


# ============== PRIORS ==============

def _latent_check(z: Tensor, latent_dim: int, kind: str):
    if z.ndim != 2 or z.shape[1] != latent_dim:
        raise ShapeError(kind, [z.shape], f"expected (B, {latent_dim}) latents")


@dataclass
class IsotropicGaussian:
    latent_dim: int
    variance: float = 1.0
    kind = "isotropic_gaussian"

    def __post_init__(self):
        if self.variance <= 0 or self.latent_dim < 1:
            raise ConfigError(f"isotropic Gaussian needs variance > 0 and D >= 1, "
                              f"got {self.variance}, {self.latent_dim}")

    @property
    def is_gaussian(self) -> bool:
        return True

    def log_var_array(self) -> np.ndarray:
        return np.full(self.latent_dim, math.log(self.variance))

    def log_var_row(self, tape: Tape) -> Tensor:
        return tape.constant(self.log_var_array())

    def log_prob(self, z: Tensor) -> Tensor:
        _latent_check(z, self.latent_dim, "prior_log_prob")
        d = self.latent_dim
        return z.square().sum(axis=1) * (-0.5 / self.variance) - 0.5 * d * (LOG_2PI + math.log(self.variance))

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.standard_normal((n, self.latent_dim)) * math.sqrt(self.variance)

    def parameters(self) -> Dict[str, np.ndarray]:
        return {}


@dataclass
class DiagGaussian:
    log_var: np.ndarray
    learnable: bool = False
    kind = "diag_gaussian"

    def __post_init__(self):
        self.log_var = np.array(self.log_var, dtype=np.float64).reshape(-1)
        if self.log_var.size < 1 or not np.all(np.isfinite(self.log_var)):
            raise ConfigError("diagonal Gaussian needs a finite, non-empty log-variance vector")

    @property
    def latent_dim(self) -> int:
        return self.log_var.size

    @property
    def is_gaussian(self) -> bool:
        return True

    def log_var_array(self) -> np.ndarray:
        return self.log_var

    def log_var_row(self, tape: Tape) -> Tensor:
        if self.learnable:
            return tape.param(PRIOR_LOG_VAR_PARAM, self.log_var)
        return tape.constant(self.log_var)

    def log_prob(self, z: Tensor) -> Tensor:
        _latent_check(z, self.latent_dim, "prior_log_prob")
        lv = self.log_var_row(z.tape)
        quad = ad.broadcast_mul_rowvec(z.square(), ad.exp(-lv)).sum(axis=1)
        return -0.5 * (quad + lv.sum() + self.latent_dim * LOG_2PI)

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.standard_normal((n, self.latent_dim)) * np.exp(0.5 * self.log_var)

    def parameters(self) -> Dict[str, np.ndarray]:
        return {PRIOR_LOG_VAR_PARAM: self.log_var} if self.learnable else {}


@dataclass
class StudentTProduct:
    latent_dim: int
    nu: float
    kind = "student_t"

    def __post_init__(self):
        if self.nu <= 0 or self.latent_dim < 1:
            raise ConfigError(f"Student-t prior needs nu > 0 and D >= 1, got {self.nu}, {self.latent_dim}")

    @property
    def is_gaussian(self) -> bool:
        return False

    @property
    def _log_const(self) -> float:
        nu = self.nu
        return float(gammaln(0.5 * (nu + 1.0)) - gammaln(0.5 * nu) - 0.5 * math.log(nu * math.pi))

    def log_prob(self, z: Tensor) -> Tensor:
        _latent_check(z, self.latent_dim, "prior_log_prob")
        tails = ad.log(1.0 + z.square() / self.nu).sum(axis=1)
        return -0.5 * (self.nu + 1.0) * tails + self.latent_dim * self._log_const

    def marginal_log_prob(self, z: np.ndarray) -> np.ndarray:
        return self._log_const - 0.5 * (self.nu + 1.0) * np.log1p(np.square(z) / self.nu)

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.standard_t(self.nu, size=(n, self.latent_dim))

    def parameters(self) -> Dict[str, np.ndarray]:
        return {}


@dataclass
class GaussianMixture:
    weights: np.ndarray
    means: np.ndarray
    variances: np.ndarray
    kind = "gaussian_mixture"

    def __post_init__(self):
        self.weights = np.array(self.weights, dtype=np.float64).reshape(-1)
        self.means = np.atleast_2d(np.array(self.means, dtype=np.float64))
        self.variances = np.array(self.variances, dtype=np.float64)
        if self.variances.ndim == 0:
            self.variances = np.full(self.means.shape, float(self.variances))
        c, d = self.means.shape
        if self.weights.shape != (c,) or self.variances.shape != (c, d):
            raise ConfigError(f"mixture shapes disagree: weights {self.weights.shape}, "
                              f"means {self.means.shape}, variances {self.variances.shape}")
        if np.any(self.weights < 0) or abs(self.weights.sum() - 1.0) > 1e-12:
            raise ConfigError(f"mixture weights must be >= 0 and sum to 1, got {self.weights.tolist()}")
        if np.any(self.variances <= 0):
            raise ConfigError("mixture variances must be > 0")

    @property
    def latent_dim(self) -> int:
        return self.means.shape[1]

    @property
    def num_components(self) -> int:
        return self.means.shape[0]

    @property
    def is_gaussian(self) -> bool:
        return False

    def log_prob(self, z: Tensor) -> Tensor:
        _latent_check(z, self.latent_dim, "prior_log_prob")
        columns = []
        for c in range(self.num_components):
            if self.weights[c] == 0.0:
                continue
            diff = ad.broadcast_add_rowvec(z, -self.means[c])
            quad = ad.broadcast_mul_rowvec(diff.square(), 1.0 / self.variances[c]).sum(axis=1)
            offset = math.log(self.weights[c]) - 0.5 * float(np.sum(np.log(2.0 * math.pi * self.variances[c])))
            columns.append(offset - 0.5 * quad)
        return ad.logsumexp(ad.stack_columns(columns), axis=1)

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        components = rng.choice(self.num_components, size=n, p=self.weights)
        noise = rng.standard_normal((n, self.latent_dim))
        return self.means[components] + noise * np.sqrt(self.variances[components])

    def parameters(self) -> Dict[str, np.ndarray]:
        return {}


@dataclass
class SpikeSlab:
    latent_dim: int
    gamma: float
    slab_off_variance: float = 0.05
    kind = "spike_slab"

    def __post_init__(self):
        if not 0.0 <= self.gamma <= 1.0:
            raise ConfigError(f"spike-and-slab gamma must lie in [0, 1], got {self.gamma}")
        if self.slab_off_variance <= 0 or self.latent_dim < 1:
            raise ConfigError("spike-and-slab needs slab-off variance > 0 and D >= 1")

    @property
    def is_gaussian(self) -> bool:
        return False

    def log_prob(self, z: Tensor) -> Tensor:
        _latent_check(z, self.latent_dim, "prior_log_prob")
        z2 = z.square()
        parts = []
        if self.gamma < 1.0:
            parts.append(z2 * -0.5 + (math.log1p(-self.gamma) - 0.5 * LOG_2PI))
        if self.gamma > 0.0:
            s0 = self.slab_off_variance
            parts.append(z2 * (-0.5 / s0) + (math.log(self.gamma) - 0.5 * (LOG_2PI + math.log(s0))))
        if len(parts) == 1:
            return parts[0].sum(axis=1)
        b, d = z.shape
        stacked = ad.concat([ad.reshape(p, (b, d, 1)) for p in parts], axis=2)
        return ad.logsumexp(stacked, axis=2).sum(axis=1)

    def marginal_log_prob(self, z: np.ndarray) -> np.ndarray:
        z2 = np.square(z)
        terms = []
        if self.gamma < 1.0:
            terms.append(math.log1p(-self.gamma) - 0.5 * LOG_2PI - 0.5 * z2)
        if self.gamma > 0.0:
            s0 = self.slab_off_variance
            terms.append(math.log(self.gamma) - 0.5 * (LOG_2PI + math.log(s0)) - 0.5 * z2 / s0)
        return np_logsumexp(np.stack(terms), axis=0)

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        off = rng.random((n, self.latent_dim)) < self.gamma
        scale = np.where(off, math.sqrt(self.slab_off_variance), 1.0)
        return rng.standard_normal((n, self.latent_dim)) * scale

    def parameters(self) -> Dict[str, np.ndarray]:
        return {}


Prior = Union[IsotropicGaussian, DiagGaussian, StudentTProduct, GaussianMixture, SpikeSlab]
GaussianPrior = Union[IsotropicGaussian, DiagGaussian]


def is_gaussian_prior(p: Prior) -> bool:
    return isinstance(p, (IsotropicGaussian, DiagGaussian))


def prior_log_prob(p: Prior, z) -> Union[Tensor, np.ndarray, float]:
    """
    Exact log p(z)

    Tensor input -> differentiable (B,) Tensor; array input (D,) or (B, D) ->
    float or (B,) array.
    """
    if isinstance(z, Tensor):
        return p.log_prob(z)
    z = np.asarray(z, dtype=np.float64)
    if z.ndim == 1:
        if z.shape[0] != p.latent_dim:
            raise ShapeError("prior_log_prob", [z.shape], f"expected length {p.latent_dim}")
        return float(p.log_prob(Tape().constant(z[None, :])).data[0])
    return p.log_prob(Tape().constant(z)).data.copy()


def prior_sample(p: Prior, rng: np.random.Generator, n: Optional[int] = None) -> np.ndarray:
    """One draw (D,) when n is None, else (n, D)"""
    if n is None:
        return p.sample(rng, 1)[0]
    return p.sample(rng, n)


def anneal_gaussian(p: Prior, beta: float) -> GaussianPrior:
    """f_β(z) ∝ p(z)^β for Gaussian p: N(0, Σ/β)"""
    if beta <= 0:
        raise ConfigError(f"annealing needs beta > 0, got {beta}")
    if isinstance(p, IsotropicGaussian):
        return IsotropicGaussian(p.latent_dim, p.variance / beta)
    if isinstance(p, DiagGaussian):
        return DiagGaussian(p.log_var - math.log(beta), learnable=False)
    raise ConfigError(f"annealed density is only materialised for Gaussian priors, not '{p.kind}'")


# ============== NORMALISING CONSTANT F_β ==============

@dataclass
class LogNormaliser:
    value: float
    std_error: float = 0.0
    method: str = "closed_form"


def _symmetric_quadrature(log_density, beta: float) -> float:
    """∫ exp(β log f(z)) dz over R for a density symmetric about 0"""
    def integrand(t):
        return math.exp(beta * float(log_density(np.array(t))))

    total, error = 0.0, 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            for lo, hi in ((0.0, 20.0), (20.0, np.inf)):
                value, abserr = integrate.quad(integrand, lo, hi, epsabs=0.0, epsrel=1e-12, limit=400)
                total += value
                error += abserr
        except integrate.IntegrationWarning as e:
            raise IntegrationError(f"quadrature did not converge: {e}") from e
    if error > QUADRATURE_TOL * max(1.0, total):
        raise IntegrationError(f"quadrature error estimate {error:.3g} exceeds tolerance {QUADRATURE_TOL}")
    if total <= 0.0 or not math.isfinite(total):
        raise IntegrationError(f"normalising integral is not positive and finite ({total})")
    return 2.0 * total


def log_norm_const_F(p: Prior, beta: float, rng: Optional[np.random.Generator] = None,
                     num_samples: int = 100_000) -> LogNormaliser:
    """log F_β = log ∫ p(z)^β dz"""
    if beta <= 0:
        raise ConfigError(f"F_beta needs beta > 0, got {beta}")
    if beta == 1.0:
        return LogNormaliser(0.0, 0.0, "exact")

    if is_gaussian_prior(p):
        d = p.latent_dim
        logdet = float(np.sum(p.log_var_array()))
        value = 0.5 * d * (1.0 - beta) * LOG_2PI + 0.5 * (1.0 - beta) * logdet - 0.5 * d * math.log(beta)
        return LogNormaliser(value, 0.0, "closed_form")

    if isinstance(p, StudentTProduct):
        if beta * (p.nu + 1.0) <= 1.0:
            raise IntegrationError(
                f"∫ t_nu(z)^beta dz diverges for beta*(nu+1) = {beta * (p.nu + 1.0):.4g} <= 1")
        per_dim = _symmetric_quadrature(p.marginal_log_prob, beta)
        return LogNormaliser(p.latent_dim * math.log(per_dim), 0.0, "quadrature")

    if isinstance(p, SpikeSlab):
        per_dim = _symmetric_quadrature(p.marginal_log_prob, beta)
        return LogNormaliser(p.latent_dim * math.log(per_dim), 0.0, "quadrature")

    if isinstance(p, GaussianMixture):
        if rng is None:
            raise ConfigError("mixture F_beta is estimated by importance sampling and needs an rng")
        z = p.sample(rng, num_samples)
        log_w = (beta - 1.0) * prior_log_prob(p, z)
        value = float(np_logsumexp(log_w) - math.log(num_samples))
        weights = np.exp(log_w - log_w.max())
        rel_se = float(np.std(weights, ddof=1) / (np.mean(weights) * math.sqrt(num_samples)))
        return LogNormaliser(value, rel_se, "importance_sampling")

    raise ConfigError(f"unsupported prior '{getattr(p, 'kind', type(p).__name__)}'")


# ============== KL DIVERGENCES ==============

def kl_gaussian_gaussian(q: GaussianPosterior, p: GaussianPrior) -> Tensor:
    """Closed-form KL(N(μ, S) || N(0, Σ)) per row, Σ diagonal"""
    if not is_gaussian_prior(p):
        raise ConfigError(f"closed-form KL needs a Gaussian prior, not '{p.kind}'")
    if p.latent_dim != q.latent_dim:
        raise ShapeError("kl_gaussian_gaussian", [q.mean.shape, (p.latent_dim,)], "latent dims differ")
    d = q.latent_dim
    lv_p = p.log_var_row(q.tape)
    inv_p = ad.exp(-lv_p)
    var_q = ad.exp(q.log_var)
    if q.mixing is None:
        trace = ad.broadcast_mul_rowvec(var_q, inv_p).sum(axis=1)
    else:
        weights = ad.reshape(ad.reshape(inv_p, (1, d)) @ (q.mixing * q.mixing), (d,))
        trace = ad.broadcast_mul_rowvec(var_q, weights).sum(axis=1)
    maha = ad.broadcast_mul_rowvec(q.mean.square(), inv_p).sum(axis=1)
    return 0.5 * (trace + maha - q.log_det_cov() + (lv_p.sum() - float(d)))


def kl_q_prior_mc_samples(q: GaussianPosterior, p: Prior, eps: np.ndarray) -> Tensor:
    """(K, B) per-sample log q(z_k|x) - log p(z_k), z_k = μ + L eps_k"""
    eps = np.asarray(eps, dtype=np.float64)
    if eps.ndim == 2:
        eps = eps[None]
    k, b, d = eps.shape
    if (b, d) != q.mean.shape:
        raise ShapeError("kl_q_prior_mc", [q.mean.shape, eps.shape], "noise must be (K, B, D)")
    tiled = q.tiled(k)
    z = tiled.sample(eps.reshape(k * b, d))
    return ad.reshape(tiled.log_prob(z) - p.log_prob(z), (k, b))


def kl_q_prior_mc(q: GaussianPosterior, p: Prior, num_samples: Optional[int] = None,
                  rng: Optional[np.random.Generator] = None, eps: Optional[np.ndarray] = None) -> Tensor:
    """Reparameterised Monte-Carlo KL(q || p) per row, averaged over K samples"""
    if eps is None:
        if rng is None or num_samples is None or num_samples < 1:
            raise ConfigError("kl_q_prior_mc needs either eps or (num_samples >= 1, rng)")
        eps = rng.standard_normal((num_samples,) + q.mean.shape)
    return kl_q_prior_mc_samples(q, p, eps).mean(axis=0)


# ============== LIKELIHOODS ==============

@dataclass(frozen=True)
class BernoulliMean:
    clamp: float = BERNOULLI_CLAMP
    kind = "bernoulli"
    output_activation = "sigmoid"


@dataclass(frozen=True)
class LaplaceFixedScale:
    scale: float = 0.1
    kind = "laplace"
    output_activation = "identity"

    def __post_init__(self):
        if self.scale <= 0:
            raise ConfigError(f"Laplace scale must be > 0, got {self.scale}")


@dataclass(frozen=True)
class GaussianFixedScale:
    variance: float = 1.0
    kind = "gaussian"
    output_activation = "identity"

    def __post_init__(self):
        if self.variance <= 0:
            raise ConfigError(f"Gaussian likelihood variance must be > 0, got {self.variance}")


Likelihood = Union[BernoulliMean, LaplaceFixedScale, GaussianFixedScale]


def likelihood_log_prob(lik: Likelihood, x: np.ndarray, m: Tensor) -> Tensor:
    """Σ over pixels of log p(x | m), one value per row of the batch"""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != m.shape:
        raise ShapeError("likelihood_log_prob", [x.shape, m.shape], "targets must match decoder output")
    if isinstance(lik, BernoulliMean):
        if np.any(x < 0.0) or np.any(x > 1.0):
            raise ConfigError("Bernoulli targets must lie in [0, 1]")
        mean = ad.clip(m, lik.clamp, 1.0 - lik.clamp)
        return (x * ad.log(mean) + (1.0 - x) * ad.log(1.0 - mean)).sum(axis=1)
    if isinstance(lik, LaplaceFixedScale):
        b = lik.scale
        return (ad.absolute(m - x) * (-1.0 / b) - math.log(2.0 * b)).sum(axis=1)
    if isinstance(lik, GaussianFixedScale):
        s2 = lik.variance
        return ((m - x).square() * (-0.5 / s2) - 0.5 * (LOG_2PI + math.log(s2))).sum(axis=1)
    raise ConfigError(f"unsupported likelihood {type(lik).__name__}")
