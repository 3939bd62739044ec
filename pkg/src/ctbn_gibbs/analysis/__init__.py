"""Networks, evidence sets and experiment orchestration."""

from .config import ExperimentConfig, ExperimentKind, NetworkSpec
from .evidence_sets import EVIDENCE_SETS, make_evidence
from .networks import (
    component_exit_rates,
    generate_chain_network,
    generate_timescale_network,
    sharpen,
)
from .runner import ChainJob, ChainResult, ExperimentRunner, make_jobs, run_chain_job, run_jobs

__all__ = [
    "ExperimentConfig",
    "ExperimentKind",
    "NetworkSpec",
    "EVIDENCE_SETS",
    "make_evidence",
    "component_exit_rates",
    "generate_chain_network",
    "generate_timescale_network",
    "sharpen",
    "ChainJob",
    "ChainResult",
    "ExperimentRunner",
    "make_jobs",
    "run_chain_job",
    "run_jobs",
]
