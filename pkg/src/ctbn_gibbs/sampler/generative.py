"""Generative simulation of a CTBN (one component changes per event)."""

import logging
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..errors import NumericalInputError
from ..models.ctbn_model import CTBNModel, check_joint_state
from ..models.trajectory import ComponentTrajectory, JointTrajectory

logger = logging.getLogger(__name__)


def _draw_initial_state(model: CTBNModel, rng: np.random.Generator) -> List[int]:
    return [int(rng.choice(len(vector), p=vector)) for vector in model.initial]


def simulate_forward(
    model: CTBNModel,
    horizon: float,
    rng: np.random.Generator,
    initial_state: Optional[Sequence[int]] = None,
) -> JointTrajectory:
    """Simulate [0, horizon] by the direct method.

    At each event the waiting time is exponential in the summed exit rate of
    all components; the moving component is picked proportionally to its
    exit rate and its new state proportionally to its conditional row.
    """
    if not horizon > 0:
        raise NumericalInputError(f"horizon must be positive, got {horizon}")
    if initial_state is None:
        state = _draw_initial_state(model, rng)
    else:
        check_joint_state(model, initial_state)
        state = [int(s) for s in initial_state]

    M = model.num_components
    start = list(state)
    transitions: List[List[Tuple[float, int]]] = [[] for _ in range(M)]
    t = 0.0

    while True:
        rows = [
            model.conditional_rates(i, [state[p] for p in model.parents[i]])[state[i]]
            for i in range(M)
        ]
        exit_rates = np.array([-row[state[i]] for i, row in enumerate(rows)])
        total = float(exit_rates.sum())
        if not total > 0.0:
            break
        t += rng.exponential(1.0 / total)
        if t >= horizon:
            break
        i = int(np.searchsorted(np.cumsum(exit_rates) / total, rng.random(), side="right"))
        i = min(i, M - 1)
        weights = np.clip(rows[i], 0.0, None)
        weights[state[i]] = 0.0
        new_state = int(rng.choice(len(weights), p=weights / weights.sum()))
        transitions[i].append((t, new_state))
        state[i] = new_state

    logger.debug(f"Simulated {sum(map(len, transitions))} transitions on [0, {horizon:.4g}]")
    return JointTrajectory(
        components=[
            ComponentTrajectory(
                component=i,
                t_start=0.0,
                t_end=horizon,
                initial_state=start[i],
                transitions=transitions[i],
            )
            for i in range(M)
        ]
    )
