#!/usr/bin/env python3
"""
Pydantic schemas - experiment configuration documents and report payloads
"""
import json
import os
from typing import Annotated, Any, Dict, List, Literal, Optional, Sequence, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from core.errors import ConfigError
from data.constants import (
    COLLAPSED_STD,
    DISENTANGLEMENT_BATCH,
    DISENTANGLEMENT_VOTES,
    FACTOR_IMAGE_SIZE,
    LAPLACE_SCALE,
    MMD_SCALES,
    OPTIMISER_PRESETS,
    PINWHEEL,
    SPIKE_SLAB,
)

SCHEMA_VERSION = 1


class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid")


# =====================================================
# Prior / Likelihood Specs
# =====================================================

class IsotropicPriorConfig(StrictModel):
    kind: Literal["isotropic_gaussian"] = "isotropic_gaussian"
    variance: float = Field(1.0, gt=0)


class DiagPriorConfig(StrictModel):
    """log_var given explicitly, or derived at build time from `init`"""
    kind: Literal["diag_gaussian"] = "diag_gaussian"
    log_var: Optional[List[float]] = None
    variances: Optional[List[float]] = None
    learnable: bool = False
    init: Literal["ones", "pca-softmax"] = "ones"

    @model_validator(mode="after")
    def check_source(self):
        if self.log_var is not None and self.variances is not None:
            raise ValueError("give either log_var or variances, not both")
        if self.variances is not None and any(v <= 0 for v in self.variances):
            raise ValueError("prior variances must be > 0")
        return self


class StudentTPriorConfig(StrictModel):
    kind: Literal["student_t"] = "student_t"
    nu: float = Field(..., gt=0)


class MixturePriorConfig(StrictModel):
    kind: Literal["gaussian_mixture"] = "gaussian_mixture"
    weights: List[float]
    means: List[List[float]]
    variance: Union[float, List[List[float]]] = 1.0

    @model_validator(mode="after")
    def check_shapes(self):
        if len(self.weights) != len(self.means) or not self.means:
            raise ValueError(f"{len(self.weights)} weights for {len(self.means)} component means")
        if len({len(m) for m in self.means}) != 1:
            raise ValueError("all component means need the same dimension")
        return self


class SpikeSlabPriorConfig(StrictModel):
    kind: Literal["spike_slab"] = "spike_slab"
    gamma: float = Field(SPIKE_SLAB["gamma"], ge=0, le=1)
    slab_off_variance: float = Field(SPIKE_SLAB["slab_off_variance"], gt=0)


PriorConfig = Annotated[
    Union[IsotropicPriorConfig, DiagPriorConfig, StudentTPriorConfig, MixturePriorConfig, SpikeSlabPriorConfig],
    Field(discriminator="kind"),
]


class LikelihoodConfig(StrictModel):
    kind: Literal["bernoulli", "laplace", "gaussian"] = "gaussian"
    scale: float = Field(LAPLACE_SCALE, gt=0)
    variance: float = Field(1.0, gt=0)


# =====================================================
# Experiment Config
# =====================================================

class ObjectiveConfig(StrictModel):
    variant: Literal["elbo", "beta_vae", "entropy_reg_elbo", "decomp"] = "elbo"
    beta: float = Field(1.0, ge=0)
    alpha: float = Field(0.0, ge=0)
    divergence: Literal["inclusive-kl", "mmd-dimwise"] = "inclusive-kl"
    num_samples: int = Field(1, ge=1)
    divergence_samples: int = Field(1000, ge=1)
    mmd_scales: List[float] = Field(default_factory=lambda: list(MMD_SCALES))

    @field_validator("mmd_scales")
    @classmethod
    def positive_scales(cls, v: List[float]):
        if not v or any(s <= 0 for s in v):
            raise ValueError("mmd_scales must be a non-empty list of positive length scales")
        return v


class OptimizerConfig(StrictModel):
    """Explicit values override the preset; without a preset the pinwheel recipe applies"""
    preset: Optional[Literal["shapes", "pinwheel", "fashion"]] = None
    lr: Optional[float] = Field(None, gt=0)
    beta1: Optional[float] = Field(None, ge=0, lt=1)
    beta2: Optional[float] = Field(None, ge=0, lt=1)
    eps: float = Field(1e-8, gt=0)
    clip_norm: Optional[float] = Field(None, gt=0)

    def resolved(self) -> Dict[str, float]:
        lr, beta1, beta2 = OPTIMISER_PRESETS[self.preset or "pinwheel"]
        return {
            "lr": self.lr if self.lr is not None else lr,
            "beta1": self.beta1 if self.beta1 is not None else beta1,
            "beta2": self.beta2 if self.beta2 is not None else beta2,
            "eps": self.eps,
            "clip_norm": self.clip_norm,
        }


class DatasetConfig(StrictModel):
    source: Literal["pinwheel", "factor_images", "npy", "idx"]
    path: Optional[str] = None
    labels_path: Optional[str] = None
    subset: Optional[int] = Field(None, ge=1)
    resize: Optional[int] = Field(None, ge=1)
    # pinwheel
    num_classes: int = Field(PINWHEEL["num_classes"], ge=1)
    per_class: int = Field(PINWHEEL["per_class"], ge=1)
    radial_std: float = Field(PINWHEEL["radial_std"], gt=0)
    tangential_std: float = Field(PINWHEEL["tangential_std"], gt=0)
    rate: float = PINWHEEL["rate"]
    # factor images
    cardinalities: Optional[Dict[str, int]] = None
    image_size: int = Field(FACTOR_IMAGE_SIZE, ge=2)

    @model_validator(mode="after")
    def check_files(self):
        if self.source in ("npy", "idx"):
            if not self.path:
                raise ValueError(f"dataset source '{self.source}' needs a path")
            if not os.path.isfile(self.path):
                raise ValueError(f"dataset file not found: {self.path}")
        elif self.path is not None:
            raise ValueError(f"dataset source '{self.source}' is generated and takes no path")
        if self.labels_path is not None and not os.path.isfile(self.labels_path):
            raise ValueError(f"labels file not found: {self.labels_path}")
        return self


class ModelConfig(StrictModel):
    latent_dim: int = Field(..., ge=1)
    hidden: List[int] = Field(default_factory=lambda: [64, 64])
    activation: Literal["relu", "leaky_relu", "tanh", "sigmoid", "softplus"] = "relu"

    @field_validator("hidden")
    @classmethod
    def positive_widths(cls, v: List[int]):
        if any(w < 1 for w in v):
            raise ValueError("hidden widths must be >= 1")
        return v


MetricName = Literal[
    "sparsity", "disentanglement", "inclusive_kl", "mmd", "mutual_information",
    "encoder_entropy", "class_magnitudes",
]


class EvaluationConfig(StrictModel):
    every: int = Field(0, ge=0)  # 0: final metrics only
    disentanglement_batch: int = Field(DISENTANGLEMENT_BATCH, ge=2)
    disentanglement_votes: int = Field(DISENTANGLEMENT_VOTES, ge=1)
    collapsed_std: float = Field(COLLAPSED_STD, ge=0)
    divergence_samples: int = Field(1000, ge=2)
    oracle_samples: int = Field(2000, ge=2)
    mmd_samples: int = Field(500, ge=2)
    max_rows: int = Field(4096, ge=2)


class ExperimentConfig(StrictModel):
    schema_version: Literal[1] = SCHEMA_VERSION
    name: str = "experiment"
    dataset: DatasetConfig
    model: ModelConfig
    prior: PriorConfig = Field(default_factory=IsotropicPriorConfig)
    likelihood: LikelihoodConfig = Field(default_factory=LikelihoodConfig)
    objective: ObjectiveConfig = Field(default_factory=ObjectiveConfig)
    optimizer: OptimizerConfig = Field(default_factory=OptimizerConfig)
    batch_size: Optional[int] = Field(None, ge=1)  # None: full batch
    epochs: int = Field(1, ge=1)
    seed: int = Field(0, ge=0)
    metrics: List[MetricName] = Field(default_factory=list)
    evaluation: EvaluationConfig = Field(default_factory=EvaluationConfig)
    out: str = "runs/experiment"
    log_every: int = Field(10, ge=1)

    @model_validator(mode="after")
    def check_prior_dims(self):
        d = self.model.latent_dim
        prior = self.prior
        sizes = []
        if isinstance(prior, DiagPriorConfig):
            sizes = [len(v) for v in (prior.log_var, prior.variances) if v is not None]
        elif isinstance(prior, MixturePriorConfig):
            sizes = [len(prior.means[0])]
        for size in sizes:
            if size != d:
                raise ValueError(f"prior dimension {size} does not match model.latent_dim={d}")
        return self


# =====================================================
# Verification / Bias Study Config
# =====================================================

class Theorem1Sweep(StrictModel):
    trials: int = Field(100, ge=1)
    latent_dims: List[int] = Field(default_factory=lambda: [2, 8])
    beta_min: float = Field(0.1, gt=0)
    beta_max: float = Field(10.0, gt=0)
    student_t_trials: int = Field(20, ge=0)
    student_t_nu: float = Field(5.0, gt=0)


class CorollarySweep(StrictModel):
    trials: int = Field(100, ge=1)
    latent_dims: List[int] = Field(default_factory=lambda: [2, 8])
    beta_min: float = Field(0.1, gt=0)
    beta_max: float = Field(10.0, gt=0)


class RotationSweep(StrictModel):
    trials: int = Field(100, ge=1)
    latent_dims: List[int] = Field(default_factory=lambda: [2, 8])
    beta: float = Field(1.0, gt=0)
    anisotropic_variances: List[float] = Field(default_factory=lambda: [2.0, 0.5])
    anisotropic_trials: int = Field(10, ge=0)
    min_kl_difference: float = Field(1e-3, ge=0)


class VerificationConfig(StrictModel):
    schema_version: Literal[1] = SCHEMA_VERSION
    seed: int = Field(0, ge=0)
    out: str = "runs/verify"
    checks: List[Literal["theorem1", "corollary", "rotation"]] = Field(
        default_factory=lambda: ["theorem1", "corollary", "rotation"])
    input_dim: int = Field(6, ge=1)
    hidden: List[int] = Field(default_factory=lambda: [8])
    batch_size: int = Field(16, ge=1)
    num_samples: int = Field(2, ge=1)
    theorem1: Theorem1Sweep = Field(default_factory=Theorem1Sweep)
    corollary: CorollarySweep = Field(default_factory=CorollarySweep)
    rotation: RotationSweep = Field(default_factory=RotationSweep)

    @model_validator(mode="after")
    def check_ranges(self):
        for sweep in (self.theorem1, self.corollary):
            if sweep.beta_min > sweep.beta_max:
                raise ValueError(f"beta_min {sweep.beta_min} exceeds beta_max {sweep.beta_max}")
        if len(self.rotation.anisotropic_variances) < 2 or any(v <= 0 for v in self.rotation.anisotropic_variances):
            raise ValueError("anisotropic_variances needs at least 2 positive entries")
        return self


class BiasStudyConfig(StrictModel):
    schema_version: Literal[1] = SCHEMA_VERSION
    seed: int = Field(0, ge=0)
    out: str = "runs/bias-study"
    n: int = Field(1024, ge=2)
    batch_sizes: List[int] = Field(default_factory=lambda: [64, 1024])
    latent_dim: int = Field(2, ge=1)
    separations: List[float] = Field(default_factory=lambda: [0.0, 1.0, 100.0])
    trials: int = Field(200, ge=2)
    oracle_samples: int = Field(4000, ge=2)

    @model_validator(mode="after")
    def check_batches(self):
        for b in self.batch_sizes:
            if not 2 <= b <= self.n:
                raise ValueError(f"batch size {b} must lie in [2, n={self.n}]")
        if any(s < 0 for s in self.separations):
            raise ValueError("separations must be >= 0")
        return self


# =====================================================
# Report Models
# =====================================================

class IdentityReportModel(BaseModel):
    check: str
    beta: float
    lhs: float
    rhs: float
    residual: float
    tolerance: float
    passed: bool
    terms: Dict[str, float] = {}
    gradient_residual: Optional[float] = None
    flags: List[str] = []
    latent_dim: Optional[int] = None


class CheckSummary(BaseModel):
    check: str
    trials: int
    passed: bool
    max_residual: float
    max_gradient_residual: Optional[float] = None
    failures: List[IdentityReportModel] = []
    notes: List[str] = []


class VerificationReport(BaseModel):
    seed: int
    passed: bool
    checks: List[CheckSummary] = []


class BiasStudyRowModel(BaseModel):
    n: int
    batch_size: int
    latent_dim: int
    separation: float
    trials: int
    mean_estimate: float
    std_error: float
    predicted: float
    oracle: float
    oracle_std_error: float
    gap_predicted: float
    gap_oracle: float
    within_oracle_band: bool


class RunSummary(BaseModel):
    run_id: str
    files: List[str] = []
    config: Optional[Dict[str, Any]] = None
    metrics: Dict[str, Any] = {}


# =====================================================
# Job Models
# =====================================================

class TrainJobRequest(BaseModel):
    config: Dict[str, Any]
    overrides: List[str] = []


class JobInfo(BaseModel):
    job_id: str
    kind: str
    status: Literal["queued", "running", "done", "failed"]
    created_at: str
    finished_at: Optional[str] = None
    result: Optional[Dict[str, Any]] = None
    error: Optional[str] = None


# =====================================================
# Loading helpers
# =====================================================

def apply_overrides(tree: Dict[str, Any], overrides: Sequence[str]) -> Dict[str, Any]:
    """
    Edit a raw config tree by dot-path before validation

    Args:
        tree: Parsed JSON object (not modified)
        overrides: "a.b.c=value" entries; value parsed as JSON when possible

    Returns:
        New tree with the overrides applied
    """
    result = json.loads(json.dumps(tree))
    for entry in overrides:
        key, sep, raw = entry.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"override '{entry}' must look like key=value")
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = result
        parts = key.strip().split(".")
        for part in parts[:-1]:
            child = node.setdefault(part, {})
            if not isinstance(child, dict):
                raise ConfigError(f"override '{entry}': '{part}' is not an object")
            node = child
        node[parts[-1]] = value
    return result


def validate_config(schema, tree: Dict[str, Any], source: Optional[str] = None):
    """Validate a raw tree against `schema`, reporting every violation as one ConfigError"""
    try:
        return schema.model_validate(tree)
    except ValidationError as e:
        problems = "; ".join(
            f"{'.'.join(str(p) for p in err['loc']) or '<root>'}: {err['msg']}" for err in e.errors())
        where = f"{source}: " if source else ""
        raise ConfigError(f"{where}invalid {schema.__name__}: {problems}") from e


__all__ = [
    "SCHEMA_VERSION",
    "IsotropicPriorConfig",
    "DiagPriorConfig",
    "StudentTPriorConfig",
    "MixturePriorConfig",
    "SpikeSlabPriorConfig",
    "PriorConfig",
    "LikelihoodConfig",
    "ObjectiveConfig",
    "OptimizerConfig",
    "DatasetConfig",
    "ModelConfig",
    "EvaluationConfig",
    "ExperimentConfig",
    "Theorem1Sweep",
    "CorollarySweep",
    "RotationSweep",
    "VerificationConfig",
    "BiasStudyConfig",
    "IdentityReportModel",
    "CheckSummary",
    "VerificationReport",
    "BiasStudyRowModel",
    "RunSummary",
    "TrainJobRequest",
    "JobInfo",
    "apply_overrides",
    "validate_config",
]
