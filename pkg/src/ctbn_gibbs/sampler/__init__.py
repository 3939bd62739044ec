"""Exact Gibbs sampling of CTBN trajectories."""

from .backward import BackwardMessages, backward_pass, segment_propagator
from .forward import (
    DEFAULT_DEPTH,
    WindowSampler,
    sample_component_trajectory,
    sample_constrained_trajectory,
    sample_next_state,
    sample_transition_time,
    survival_cdf_eval,
)
from .generative import simulate_forward
from .gibbs import (
    GibbsSampler,
    SweepOrder,
    gibbs_sweep,
    initialize_trajectory,
    iterate_chain,
    run_chain,
)
from .timeline import (
    BlanketTransition,
    SegmentTimeline,
    build_timeline,
    child_transition_scaler,
    count_blanket_intervals,
    homogeneous_timeline,
    reduced_rate_matrix,
)

__all__ = [
    "BackwardMessages",
    "backward_pass",
    "segment_propagator",
    "DEFAULT_DEPTH",
    "WindowSampler",
    "sample_component_trajectory",
    "sample_constrained_trajectory",
    "sample_next_state",
    "sample_transition_time",
    "survival_cdf_eval",
    "simulate_forward",
    "GibbsSampler",
    "SweepOrder",
    "gibbs_sweep",
    "initialize_trajectory",
    "iterate_chain",
    "run_chain",
    "BlanketTransition",
    "SegmentTimeline",
    "build_timeline",
    "child_transition_scaler",
    "count_blanket_intervals",
    "homogeneous_timeline",
    "reduced_rate_matrix",
]
