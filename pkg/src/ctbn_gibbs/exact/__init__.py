"""Exact reference computations on the amalgamated state space."""

from .bridge import (
    DEFAULT_GRID,
    BridgeQuery,
    bridge_marginal,
    component_conditional_marginal,
    exact_sufficient_stats,
)
from .coarsened import (
    IntervalEvent,
    PointEvent,
    coarsened_step_matrix,
    event_probability,
    event_probability_coarsened,
    joint_states_where,
)

__all__ = [
    "DEFAULT_GRID",
    "BridgeQuery",
    "bridge_marginal",
    "component_conditional_marginal",
    "exact_sufficient_stats",
    "IntervalEvent",
    "PointEvent",
    "coarsened_step_matrix",
    "event_probability",
    "event_probability_coarsened",
    "joint_states_where",
]
