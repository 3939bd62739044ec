"""Data models for continuous-time Bayesian networks."""

from .ctbn_model import (
    DEFAULT_STATE_SPACE_CAP,
    CTBNModel,
    JointState,
    ModelViolation,
    ValidationReport,
    amalgamate,
    check_joint_state,
    joint_index,
    joint_state,
    joint_states_table,
    markov_blanket,
    parent_projection,
    validate_model,
)
from .evidence import (
    ComponentEvidence,
    Evidence,
    FreeWindow,
    ObservedJump,
    IntervalObservation,
    ObservedSpan,
    PointObservation,
)
from .trajectory import ComponentTrajectory, JointTrajectory

__all__ = [
    "DEFAULT_STATE_SPACE_CAP",
    "CTBNModel",
    "JointState",
    "ModelViolation",
    "ValidationReport",
    "amalgamate",
    "check_joint_state",
    "joint_index",
    "joint_state",
    "joint_states_table",
    "markov_blanket",
    "parent_projection",
    "validate_model",
    "ComponentEvidence",
    "Evidence",
    "FreeWindow",
    "ObservedJump",
    "IntervalObservation",
    "ObservedSpan",
    "PointObservation",
    "ComponentTrajectory",
    "JointTrajectory",
]
