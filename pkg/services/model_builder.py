#!/usr/bin/env python3
"""
Model Builder - turns validated config schemas into core objects and back

Covers priors (including the PCA-softmax initialisation), likelihoods,
objective specs, optimiser state and checkpoint metadata.
"""
import logging
from typing import Any, Dict, Optional, Tuple

import numpy as np
from scipy.special import log_softmax

from core.distributions import (
    BernoulliMean,
    DiagGaussian,
    GaussianFixedScale,
    GaussianMixture,
    IsotropicGaussian,
    LaplaceFixedScale,
    Likelihood,
    Prior,
    SpikeSlab,
    StudentTProduct,
)
from core.errors import ConfigError, FormatError
from core.networks import VaeModel
from core.objectives import ObjectiveSpec
from core.optimizer import AdamState
from models import (
    DiagPriorConfig,
    ExperimentConfig,
    IsotropicPriorConfig,
    LikelihoodConfig,
    MixturePriorConfig,
    ObjectiveConfig,
    OptimizerConfig,
    SpikeSlabPriorConfig,
    StudentTPriorConfig,
)

logger = logging.getLogger(__name__)


# ============== PRIORS ==============

def pca_softmax_log_var(observations: np.ndarray, latent_dim: int) -> np.ndarray:
    """
    Per-dimension prior log-variances from the data spectrum

    Top-D singular values of the centred data pass through a softmax; the
    standard deviations are D·softmax, computed in log space.
    """
    x = np.asarray(observations, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 2:
        raise ConfigError("pca-softmax initialisation needs at least 2 observation rows")
    singular = np.linalg.svd(x - x.mean(axis=0), compute_uv=False)
    top = np.zeros(latent_dim)
    k = min(latent_dim, singular.size)
    top[:k] = singular[:k]
    if top.max() <= 0:
        raise ConfigError("pca-softmax initialisation needs data with non-zero variance")
    return 2.0 * (np.log(latent_dim) + log_softmax(top))


def build_prior(cfg, latent_dim: int, observations: Optional[np.ndarray] = None) -> Prior:
    if isinstance(cfg, IsotropicPriorConfig):
        return IsotropicGaussian(latent_dim, cfg.variance)
    if isinstance(cfg, DiagPriorConfig):
        if cfg.log_var is not None:
            log_var = np.asarray(cfg.log_var, dtype=np.float64)
        elif cfg.variances is not None:
            log_var = np.log(np.asarray(cfg.variances, dtype=np.float64))
        elif cfg.init == "pca-softmax":
            if observations is None:
                raise ConfigError("pca-softmax initialisation needs the training data")
            log_var = pca_softmax_log_var(observations, latent_dim)
            logger.info(f"[Builder] pca-softmax prior variances {np.round(np.exp(log_var), 4).tolist()}")
        else:
            log_var = np.zeros(latent_dim)
        return DiagGaussian(log_var, learnable=cfg.learnable)
    if isinstance(cfg, StudentTPriorConfig):
        return StudentTProduct(latent_dim, cfg.nu)
    if isinstance(cfg, MixturePriorConfig):
        return GaussianMixture(cfg.weights, cfg.means, cfg.variance)
    if isinstance(cfg, SpikeSlabPriorConfig):
        return SpikeSlab(latent_dim, cfg.gamma, cfg.slab_off_variance)
    raise ConfigError(f"unsupported prior config {type(cfg).__name__}")


def prior_to_dict(prior: Prior) -> Dict[str, Any]:
    """Concrete prior description for checkpoint metadata"""
    if isinstance(prior, IsotropicGaussian):
        return {"kind": prior.kind, "latent_dim": prior.latent_dim, "variance": prior.variance}
    if isinstance(prior, DiagGaussian):
        return {"kind": prior.kind, "log_var": prior.log_var.tolist(), "learnable": prior.learnable}
    if isinstance(prior, StudentTProduct):
        return {"kind": prior.kind, "latent_dim": prior.latent_dim, "nu": prior.nu}
    if isinstance(prior, GaussianMixture):
        return {"kind": prior.kind, "weights": prior.weights.tolist(), "means": prior.means.tolist(),
                "variances": prior.variances.tolist()}
    if isinstance(prior, SpikeSlab):
        return {"kind": prior.kind, "latent_dim": prior.latent_dim, "gamma": prior.gamma,
                "slab_off_variance": prior.slab_off_variance}
    raise ConfigError(f"unsupported prior {type(prior).__name__}")


def prior_from_dict(spec: Dict[str, Any]) -> Prior:
    kind = spec.get("kind")
    try:
        if kind == IsotropicGaussian.kind:
            return IsotropicGaussian(int(spec["latent_dim"]), float(spec["variance"]))
        if kind == DiagGaussian.kind:
            return DiagGaussian(np.asarray(spec["log_var"], dtype=np.float64), bool(spec["learnable"]))
        if kind == StudentTProduct.kind:
            return StudentTProduct(int(spec["latent_dim"]), float(spec["nu"]))
        if kind == GaussianMixture.kind:
            return GaussianMixture(spec["weights"], spec["means"], spec["variances"])
        if kind == SpikeSlab.kind:
            return SpikeSlab(int(spec["latent_dim"]), float(spec["gamma"]), float(spec["slab_off_variance"]))
    except KeyError as e:
        raise FormatError("metadata", f"prior '{kind}' is missing {e}") from e
    raise FormatError("metadata", f"unknown prior kind '{kind}'")


# ============== LIKELIHOODS ==============

def build_likelihood(cfg: LikelihoodConfig) -> Likelihood:
    if cfg.kind == "bernoulli":
        return BernoulliMean()
    if cfg.kind == "laplace":
        return LaplaceFixedScale(cfg.scale)
    return GaussianFixedScale(cfg.variance)


def likelihood_to_dict(lik: Likelihood) -> Dict[str, Any]:
    if isinstance(lik, LaplaceFixedScale):
        return {"kind": lik.kind, "scale": lik.scale}
    if isinstance(lik, GaussianFixedScale):
        return {"kind": lik.kind, "variance": lik.variance}
    return {"kind": lik.kind}


def likelihood_from_dict(spec: Dict[str, Any]) -> Likelihood:
    return build_likelihood(LikelihoodConfig(**spec))


# ============== OBJECTIVE / OPTIMISER ==============

def objective_spec(cfg: ObjectiveConfig) -> ObjectiveSpec:
    return ObjectiveSpec(
        variant=cfg.variant,
        beta=cfg.beta,
        alpha=cfg.alpha,
        divergence=cfg.divergence,
        num_samples=cfg.num_samples,
        divergence_samples=cfg.divergence_samples,
        mmd_scales=tuple(cfg.mmd_scales),
    )


def adam_state(cfg: OptimizerConfig) -> AdamState:
    return AdamState(**cfg.resolved())


# ============== MODELS ==============

def build_model(config: ExperimentConfig, observations: np.ndarray, rng: np.random.Generator) -> VaeModel:
    """Fresh model for `config`, sized to the observation width"""
    d = config.model.latent_dim
    prior = build_prior(config.prior, d, observations)
    likelihood = build_likelihood(config.likelihood)
    return VaeModel.initialise(observations.shape[1], d, config.model.hidden, likelihood, prior, rng,
                               config.model.activation)


def model_metadata(model: VaeModel, seed: int, extra: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
    meta = {
        "architecture": {
            "input_dim": model.input_dim,
            "latent_dim": model.latent_dim,
            "hidden": model.encoder.widths[1:-1],
            "activation": model.metadata.get("activation", "relu"),
        },
        "prior": prior_to_dict(model.prior),
        "likelihood": likelihood_to_dict(model.likelihood),
        "seed": int(seed),
    }
    if extra:
        meta.update(extra)
    return meta


def model_from_checkpoint(metadata: Dict[str, Any], params: Dict[str, np.ndarray]) -> Tuple[VaeModel, int]:
    """Rebuild a model from checkpoint contents; returns (model, seed)"""
    try:
        arch = metadata["architecture"]
        prior = prior_from_dict(metadata["prior"])
        likelihood = likelihood_from_dict(metadata["likelihood"])
        seed = int(metadata.get("seed", 0))
        model = VaeModel.initialise(int(arch["input_dim"]), int(arch["latent_dim"]), arch["hidden"],
                                    likelihood, prior, np.random.default_rng(0), arch["activation"])
    except (KeyError, TypeError) as e:
        raise FormatError("metadata", f"incomplete model description: {e}") from e
    missing = [name for name in model.parameters() if name not in params]
    if missing:
        raise FormatError("payload", f"checkpoint lacks parameters {missing}")
    model.assign(params)
    return model, seed


def log_prior_summary(model: VaeModel):
    prior = model.prior
    if isinstance(prior, DiagGaussian):
        logger.info(f"[Builder] prior {prior.kind} variances "
                    f"{np.round(np.exp(prior.log_var), 4).tolist()} learnable={prior.learnable}")
    else:
        logger.info(f"[Builder] prior {prior.kind} D={model.latent_dim}")
