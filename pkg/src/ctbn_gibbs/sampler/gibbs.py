"""
Gibbs chain over joint CTBN trajectories.

Each sweep resamples every component once from its exact conditional given
the current trajectories of its Markov blanket and its own evidence.
"""

import logging
from enum import Enum
from typing import Iterator, List, Optional

import numpy as np

from ..errors import NumericalInputError
from ..models.ctbn_model import CTBNModel
from ..models.evidence import Evidence
from ..models.trajectory import JointTrajectory
from .forward import DEFAULT_DEPTH, sample_component_trajectory, sample_constrained_trajectory
from .timeline import homogeneous_timeline

logger = logging.getLogger(__name__)


class SweepOrder(str, Enum):
    """Order in which a sweep visits the components."""

    SYSTEMATIC = "systematic"
    RANDOM = "random"


def initialize_trajectory(
    model: CTBNModel,
    evidence: Evidence,
    rng: np.random.Generator,
    depth: int = DEFAULT_DEPTH,
) -> JointTrajectory:
    """Overdispersed starting point consistent with the evidence.

    Every component is sampled independently against its own evidence under
    the conditional rate matrix of a uniformly drawn parent assignment.
    """
    trajectories = []
    for i in range(model.num_components):
        config = int(rng.integers(model.num_parent_configs(i)))
        rate_matrix = model.cims[i][config]
        trajectories.append(
            sample_constrained_trajectory(
                i,
                evidence.for_component(i),
                evidence.horizon,
                model.initial[i],
                lambda window, i=i, Q=rate_matrix: homogeneous_timeline(i, Q, window),
                rng,
                depth,
            )
        )
    return JointTrajectory(components=trajectories)


def gibbs_sweep(
    model: CTBNModel,
    joint: JointTrajectory,
    evidence: Evidence,
    rng: np.random.Generator,
    order: SweepOrder = SweepOrder.SYSTEMATIC,
    depth: int = DEFAULT_DEPTH,
) -> JointTrajectory:
    """Resample each component once; returns the new joint trajectory."""
    if SweepOrder(order) is SweepOrder.RANDOM:
        components = [int(i) for i in rng.permutation(model.num_components)]
    else:
        components = list(range(model.num_components))
    for i in components:
        trajectory = sample_component_trajectory(
            model, i, joint, evidence.for_component(i), rng, depth
        )
        joint = joint.replace(trajectory)
    return joint


class GibbsSampler:
    """A single Gibbs chain owning its trajectory and random stream.

    Usage:
        sampler = GibbsSampler(model, evidence, seed=7)
        samples = sampler.run(burn_in=100, n_samples=50, thinning=2)
    """

    def __init__(
        self,
        model: CTBNModel,
        evidence: Evidence,
        rng: Optional[np.random.Generator] = None,
        seed: Optional[int] = None,
        order: SweepOrder = SweepOrder.SYSTEMATIC,
        depth: int = DEFAULT_DEPTH,
    ):
        evidence.check_against(model)
        evidence.observed_jumps()
        self.model = model
        self.evidence = evidence
        self.rng = rng if rng is not None else np.random.default_rng(seed)
        self.order = SweepOrder(order)
        self.depth = depth
        self.state: Optional[JointTrajectory] = None
        self.sweeps_done = 0

    def initialize(self, joint: Optional[JointTrajectory] = None) -> JointTrajectory:
        """Start from ``joint`` if given, else from an overdispersed draw."""
        if joint is None:
            joint = initialize_trajectory(self.model, self.evidence, self.rng, self.depth)
        else:
            joint.check_states(self.model.state_sizes)
            if joint.horizon != self.evidence.horizon:
                raise NumericalInputError(
                    f"starting trajectory ends at {joint.horizon}, evidence at {self.evidence.horizon}"
                )
        self.state = joint
        self.sweeps_done = 0
        return joint

    def sweep(self) -> JointTrajectory:
        if self.state is None:
            self.initialize()
        assert self.state is not None
        self.state = gibbs_sweep(
            self.model, self.state, self.evidence, self.rng, self.order, self.depth
        )
        self.sweeps_done += 1
        return self.state

    def iterate(self, burn_in: int, n_samples: int, thinning: int = 1) -> Iterator[JointTrajectory]:
        """Yield sample k after burn_in + k·thinning sweeps, k = 1..n_samples."""
        if burn_in < 0 or n_samples < 0 or thinning < 1:
            raise NumericalInputError(
                f"invalid chain lengths: burn_in={burn_in}, n_samples={n_samples}, "
                f"thinning={thinning}"
            )
        if self.state is None:
            self.initialize()
        for _ in range(burn_in):
            self.sweep()
        logger.debug(f"Burn-in of {burn_in} sweeps complete")
        for _ in range(n_samples):
            for _ in range(thinning):
                self.sweep()
            assert self.state is not None
            yield self.state

    def run(self, burn_in: int, n_samples: int, thinning: int = 1) -> List[JointTrajectory]:
        return list(self.iterate(burn_in, n_samples, thinning))


def iterate_chain(
    model: CTBNModel,
    evidence: Evidence,
    burn_in: int,
    n_samples: int,
    thinning: int,
    rng: np.random.Generator,
    order: SweepOrder = SweepOrder.SYSTEMATIC,
    depth: int = DEFAULT_DEPTH,
) -> Iterator[JointTrajectory]:
    sampler = GibbsSampler(model, evidence, rng=rng, order=order, depth=depth)
    return sampler.iterate(burn_in, n_samples, thinning)


def run_chain(
    model: CTBNModel,
    evidence: Evidence,
    burn_in: int,
    n_samples: int,
    thinning: int,
    rng: np.random.Generator,
    order: SweepOrder = SweepOrder.SYSTEMATIC,
    depth: int = DEFAULT_DEPTH,
) -> List[JointTrajectory]:
    """Initialise, burn in, then record n_samples sweeps spaced by thinning."""
    return list(iterate_chain(model, evidence, burn_in, n_samples, thinning, rng, order, depth))
