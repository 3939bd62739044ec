"""
Exact Gibbs sampling for continuous-time Bayesian networks.

This package samples trajectories of factored continuous-time Markov
processes conditioned on point and interval evidence, one component at a
time given its Markov blanket, and ships a brute-force oracle on the joint
state space to check the sampler against.
"""

__version__ = "0.1.0"
__author__ = "Developer"
__email__ = "dev@example.com"

from .errors import CTBNError, ZeroProbabilityEvidenceError
from .exact import exact_sufficient_stats
from .models import CTBNModel, ComponentTrajectory, Evidence, JointTrajectory
from .sampler import GibbsSampler, run_chain
from .stats import SufficientStats, accumulate_stats, average_relative_error

__all__ = [
    "CTBNError",
    "ZeroProbabilityEvidenceError",
    "exact_sufficient_stats",
    "CTBNModel",
    "ComponentTrajectory",
    "Evidence",
    "JointTrajectory",
    "GibbsSampler",
    "run_chain",
    "SufficientStats",
    "accumulate_stats",
    "average_relative_error",
]
