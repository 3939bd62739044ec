"""
Sufficient statistics of CTBN trajectories.

For every component i the statistics are indexed by the flattened parent
assignment u: residence[i][u, a] is the time spent in state a while the
parents are in u, transitions[i][u, a, b] counts a → b jumps under u.
"""

import logging
from typing import Any, List, Optional, Sequence

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, field_validator

from ..errors import NumericalInputError
from ..models.ctbn_model import CTBNModel
from ..models.trajectory import JointTrajectory

logger = logging.getLogger(__name__)

DEFAULT_ERROR_THRESHOLD = 0.05

STATS_COLUMNS = ["component", "parent_state_index", "state_a", "state_b", "value"]


class SufficientStats(BaseModel):
    """Residence times and transition counts per (component, parent state)."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    horizon: float = Field(..., gt=0, description="Time horizon T")
    residence: List[np.ndarray] = Field(..., description="(P_i, d_i) arrays")
    transitions: List[np.ndarray] = Field(..., description="(P_i, d_i, d_i) arrays")

    @field_validator("residence", "transitions", mode="before")
    @classmethod
    def _coerce_arrays(cls, value: Any) -> List[np.ndarray]:
        return [np.array(array, dtype=float) for array in value]

    @classmethod
    def zeros_like(cls, model: CTBNModel, horizon: float) -> "SufficientStats":
        residence = []
        transitions = []
        for i, d in enumerate(model.state_sizes):
            P = model.num_parent_configs(i)
            residence.append(np.zeros((P, d)))
            transitions.append(np.zeros((P, d, d)))
        return cls(horizon=horizon, residence=residence, transitions=transitions)

    @property
    def num_components(self) -> int:
        return len(self.residence)

    def _selected(self, components: Optional[Sequence[int]]) -> List[int]:
        if components is None:
            return list(range(self.num_components))
        for i in components:
            if not 0 <= i < self.num_components:
                raise NumericalInputError(f"component id {i} out of range")
        return list(components)

    def flatten(self, components: Optional[Sequence[int]] = None) -> np.ndarray:
        """All statistics of the chosen components as one vector."""
        parts = []
        for i in self._selected(components):
            parts.append(self.residence[i].ravel())
            parts.append(self.transitions[i].ravel())
        return np.concatenate(parts) if parts else np.zeros(0)

    def to_frame(self) -> pd.DataFrame:
        """Stats dump rows; state_b is blank for residence times."""
        rows = []
        for i in range(self.num_components):
            P, d = self.residence[i].shape
            for u in range(P):
                for a in range(d):
                    rows.append((i, u, a, None, float(self.residence[i][u, a])))
                for a in range(d):
                    for b in range(d):
                        if a != b:
                            rows.append((i, u, a, b, float(self.transitions[i][u, a, b])))
        frame = pd.DataFrame(rows, columns=STATS_COLUMNS)
        frame["state_b"] = frame["state_b"].astype("Int64")
        return frame

    def total_residence(self, i: int) -> float:
        return float(self.residence[i].sum())


def accumulate_stats(model: CTBNModel, joint: JointTrajectory) -> SufficientStats:
    """Realised statistics of one joint trajectory.

    A transition of component i is attributed to the parent state in force
    just before it (left limits of the parents' trajectories).
    """
    joint.check_states(model.state_sizes)
    stats = SufficientStats.zeros_like(model, joint.horizon)
    horizon = joint.horizon

    for i in range(model.num_components):
        parents = model.parents[i]
        trajectory = joint[i]
        times = {trajectory.t_start, *trajectory.transition_times.tolist()}
        for p in parents:
            times.update(t for t in joint[p].transition_times.tolist() if t < horizon)
        grid = np.array(sorted(times))
        lengths = np.diff(np.append(grid, horizon))

        states = trajectory.states_at(grid)
        configs = _parent_configs(model, i, [joint[p].states_at(grid) for p in parents], len(grid))
        np.add.at(stats.residence[i], (configs, states), lengths)

        if trajectory.num_transitions:
            jump_times = trajectory.transition_times
            sources = trajectory.states_before(jump_times)
            targets = trajectory.states_at(jump_times)
            jump_configs = _parent_configs(
                model, i, [joint[p].states_before(jump_times) for p in parents], len(jump_times)
            )
            np.add.at(stats.transitions[i], (jump_configs, sources, targets), 1.0)

    return stats


def _parent_configs(
    model: CTBNModel, i: int, parent_states: List[np.ndarray], n: int
) -> np.ndarray:
    if not parent_states:
        return np.zeros(n, dtype=np.int64)
    dims = tuple(model.state_sizes[p] for p in model.parents[i])
    return np.ravel_multi_index(tuple(parent_states), dims)


def mean_stats(samples: Sequence[SufficientStats]) -> SufficientStats:
    """Entrywise mean of equally shaped statistics."""
    if not samples:
        raise NumericalInputError("cannot average an empty list of statistics")
    first = samples[0]
    n = len(samples)
    residence = [
        sum(sample.residence[i] for sample in samples) / n for i in range(first.num_components)
    ]
    transitions = [
        sum(sample.transitions[i] for sample in samples) / n for i in range(first.num_components)
    ]
    return SufficientStats(horizon=first.horizon, residence=residence, transitions=transitions)


def average_relative_error(
    est: SufficientStats,
    truth: SufficientStats,
    threshold: float = DEFAULT_ERROR_THRESHOLD,
    components: Optional[Sequence[int]] = None,
) -> float:
    """Mean of |est - truth| / truth over the entries with truth > threshold."""
    return relative_error(est.flatten(components), truth.flatten(components), threshold)


def relative_error(
    estimate: np.ndarray, reference: np.ndarray, threshold: float = DEFAULT_ERROR_THRESHOLD
) -> float:
    """average_relative_error on already flattened statistics."""
    if estimate.shape != reference.shape:
        raise NumericalInputError(
            f"statistics shapes differ: {estimate.shape} vs {reference.shape}"
        )
    if not np.all(np.isfinite(reference)):
        raise NumericalInputError("reference statistics contain non-finite entries")
    mask = reference > threshold
    if not mask.any():
        raise NumericalInputError(f"no reference statistic exceeds the threshold {threshold}")
    return float(np.mean(np.abs(estimate[mask] - reference[mask]) / reference[mask]))


def trajectory_log_likelihood(model: CTBNModel, joint: JointTrajectory) -> float:
    """Complete-data log-likelihood of a joint trajectory."""
    stats = accumulate_stats(model, joint)
    value = 0.0
    with np.errstate(divide="ignore"):
        for i in range(model.num_components):
            value += float(np.log(model.initial[i][joint[i].initial_state]))
            cims = model.cims[i]
            counts = stats.transitions[i]
            used = counts > 0
            value += float(np.sum(counts[used] * np.log(cims[used])))
            diagonal = np.diagonal(cims, axis1=1, axis2=2)
            value += float(np.sum(stats.residence[i] * diagonal))
    return value
