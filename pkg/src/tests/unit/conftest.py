"""Shared fixtures: small CTBNs and hand-built trajectories."""

import numpy as np
import pytest

from ctbn_gibbs.models.ctbn_model import CTBNModel
from ctbn_gibbs.models.trajectory import JointTrajectory

from .factories import random_model, trajectory


@pytest.fixture
def two_state_model():
    """One component leaving state 0 at rate 1.5 and state 1 at rate 0.5."""
    return CTBNModel(
        state_sizes=[2],
        parents=[[]],
        cims=[[[-1.5, 1.5], [0.5, -0.5]]],
        initial=[[0.25, 0.75]],
    )


@pytest.fixture
def chain_model():
    """X0 -> X1, three states each."""
    return random_model(np.random.default_rng(11), [3, 3], [[], [0]])


@pytest.fixture
def collider_model():
    """X0 -> X1 <- X2 and X1 -> X3, two states each."""
    return random_model(np.random.default_rng(5), [2, 2, 2, 2], [[], [0, 2], [], [1]])


@pytest.fixture
def collider_joint():
    """Fixed trajectories for the collider model on [0, 2]."""
    return JointTrajectory(
        components=[
            trajectory(0, 2.0, 0, [(0.3, 1), (1.4, 0)]),
            trajectory(1, 2.0, 0, [(0.9, 1)]),
            trajectory(2, 2.0, 1, [(0.6, 0)]),
            trajectory(3, 2.0, 0, [(0.5, 1), (1.1, 0), (1.7, 1)]),
        ]
    )
