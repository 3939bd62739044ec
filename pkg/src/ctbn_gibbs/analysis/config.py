"""Experiment configuration documents."""

from enum import Enum
from pathlib import Path
from typing import List, Literal, Optional

from pydantic import BaseModel, Field, field_validator, model_validator

from ..exact.bridge import DEFAULT_GRID
from ..models.ctbn_model import DEFAULT_STATE_SPACE_CAP
from ..sampler.forward import DEFAULT_DEPTH
from ..sampler.gibbs import SweepOrder
from ..stats.sufficient_stats import DEFAULT_ERROR_THRESHOLD


class ExperimentKind(str, Enum):
    """Studies the experiment runner can reproduce."""

    ERROR_VS_SAMPLES = "error-vs-samples"
    ERROR_VS_BURNIN = "error-vs-burnin"
    SHARPNESS = "sharpness"
    SCALING = "scaling"
    TIMESCALE = "timescale"


class NetworkSpec(BaseModel):
    """Where the network comes from: a generator with parameters or a model file."""

    generator: Literal["chain", "timescale", "file"] = "chain"
    components: int = Field(5, ge=1, description="Number of components N")
    states: int = Field(5, ge=2, description="States per component d")
    perturb: float = Field(0.05, ge=0, description="Multiplicative rate noise")
    seed: Optional[int] = Field(None, description="Seed of the rate perturbation")
    base_rate: float = Field(1.0, gt=0, description="Fastest exit rate (timescale)")
    follow_weight: float = Field(4.0, gt=0, description="Destination bias (timescale)")
    path: Optional[Path] = Field(None, description="Model document (generator 'file')")

    @model_validator(mode="after")
    def _check_path(self) -> "NetworkSpec":
        if self.generator == "file" and self.path is None:
            raise ValueError("a 'file' network needs a path")
        return self


class ExperimentConfig(BaseModel):
    """Everything one experiment run needs; all counts are positive."""

    network: NetworkSpec = Field(default_factory=NetworkSpec)
    evidence: str = Field("e1", description="Named evidence set e1..e5")
    evidence_path: Optional[Path] = Field(None, description="Evidence document instead of a named set")
    horizon: float = Field(3.0, gt=0, description="Time horizon T")

    chains: int = Field(10, ge=1)
    burn_in: List[int] = Field(default_factory=lambda: [0, 100, 500])
    samples: List[int] = Field(default_factory=lambda: [10, 100, 1000])
    thinning: int = Field(1, ge=1)
    seed: int = Field(0, description="Root seed; chain streams are spawned from it")
    order: SweepOrder = SweepOrder.SYSTEMATIC
    depth: int = Field(DEFAULT_DEPTH, ge=1, description="Bisection depth")
    workers: int = Field(1, ge=1, description="Worker processes for chains")

    grid_n: int = Field(DEFAULT_GRID, ge=2, description="Simpson grid of the exact oracle")
    state_space_cap: int = Field(DEFAULT_STATE_SPACE_CAP, ge=1)
    error_threshold: float = Field(DEFAULT_ERROR_THRESHOLD, ge=0)
    error_components: Optional[List[int]] = Field(None, description="Restrict the error to these")
    reference_chains: int = Field(10, ge=1)
    reference_burn_in: int = Field(1000, ge=0)
    reference_sweeps: int = Field(10000, ge=1)

    alphas: List[float] = Field(default_factory=lambda: [0.25, 0.5, 1.0, 2.0, 4.0])
    sizes: List[int] = Field(default_factory=lambda: [5, 10, 20])

    output: Path = Field(Path("results"), description="Output directory")

    @field_validator("burn_in")
    @classmethod
    def _check_burn_in(cls, value: List[int]) -> List[int]:
        if not value or any(b < 0 for b in value):
            raise ValueError("burn_in needs at least one non-negative entry")
        return sorted(value)

    @field_validator("samples", "sizes")
    @classmethod
    def _check_positive(cls, value: List[int]) -> List[int]:
        if not value or any(n < 1 for n in value):
            raise ValueError("counts must be a non-empty list of positive integers")
        return sorted(value)

    @field_validator("alphas")
    @classmethod
    def _check_alphas(cls, value: List[float]) -> List[float]:
        if not value or any(a < 0 for a in value):
            raise ValueError("sharpness values must be non-negative")
        return value

    @field_validator("evidence")
    @classmethod
    def _check_evidence(cls, value: str) -> str:
        if value not in ("e1", "e2", "e3", "e4", "e5"):
            raise ValueError(f"unknown evidence set {value!r}")
        return value
