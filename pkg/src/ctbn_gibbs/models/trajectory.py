"""Piecewise-constant sample paths of CTBN components."""

from functools import cached_property
from typing import List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..errors import NumericalInputError


class ComponentTrajectory(BaseModel):
    """Right-continuous trajectory of one component on [t_start, t_end].

    ``transitions`` holds ``(time, new_state)`` pairs with times strictly
    increasing and strictly inside the bounds.
    """

    model_config = ConfigDict(frozen=True)

    component: int = Field(..., description="Component id")
    t_start: float = Field(0.0, description="Start of the time window")
    t_end: float = Field(..., description="End of the time window")
    initial_state: int = Field(..., description="State at t_start")
    transitions: List[Tuple[float, int]] = Field(default_factory=list)

    @model_validator(mode="after")
    def _check_invariants(self) -> "ComponentTrajectory":
        if not self.t_end >= self.t_start:
            raise ValueError(f"t_end {self.t_end} precedes t_start {self.t_start}")
        previous_time = self.t_start
        previous_state = self.initial_state
        for time, state in self.transitions:
            if not previous_time < time < self.t_end:
                raise ValueError(
                    f"transition time {time} not strictly increasing inside "
                    f"({self.t_start}, {self.t_end})"
                )
            if state == previous_state:
                raise ValueError(f"transition at {time} does not change the state {state}")
            previous_time, previous_state = time, state
        return self

    @cached_property
    def _times(self) -> np.ndarray:
        return np.array([self.t_start] + [t for t, _ in self.transitions])

    @cached_property
    def _states(self) -> np.ndarray:
        return np.array([self.initial_state] + [s for _, s in self.transitions], dtype=int)

    @property
    def num_transitions(self) -> int:
        return len(self.transitions)

    @property
    def final_state(self) -> int:
        return int(self._states[-1])

    @property
    def transition_times(self) -> np.ndarray:
        return self._times[1:]

    def state_at(self, t: float) -> int:
        """Value at t (transitions at exactly t already applied)."""
        index = int(np.searchsorted(self._times, t, side="right")) - 1
        return int(self._states[max(index, 0)])

    def state_before(self, t: float) -> int:
        """Left limit at t; equals the initial state at t_start."""
        index = int(np.searchsorted(self._times, t, side="left")) - 1
        return int(self._states[max(index, 0)])

    def states_at(self, times: Sequence[float]) -> np.ndarray:
        indices = np.searchsorted(self._times, np.asarray(times), side="right") - 1
        return self._states[np.maximum(indices, 0)]

    def states_before(self, times: Sequence[float]) -> np.ndarray:
        indices = np.searchsorted(self._times, np.asarray(times), side="left") - 1
        return self._states[np.maximum(indices, 0)]

    def segments(self) -> List[Tuple[float, float, int]]:
        """Maximal constant pieces as (start, end, state)."""
        bounds = list(self._times) + [self.t_end]
        return [
            (float(bounds[k]), float(bounds[k + 1]), int(self._states[k]))
            for k in range(len(self._states))
        ]

    def check_states(self, num_states: int) -> None:
        if np.any(self._states < 0) or np.any(self._states >= num_states):
            raise NumericalInputError(
                f"trajectory of component {self.component} leaves [0, {num_states})"
            )


class JointTrajectory(BaseModel):
    """One trajectory per component over a shared [0, T]."""

    model_config = ConfigDict(frozen=True)

    components: List[ComponentTrajectory] = Field(..., description="Per-component paths")

    @model_validator(mode="after")
    def _check_shared_bounds(self) -> "JointTrajectory":
        if not self.components:
            raise ValueError("a joint trajectory needs at least one component")
        t_start, t_end = self.components[0].t_start, self.components[0].t_end
        for index, trajectory in enumerate(self.components):
            if trajectory.component != index:
                raise ValueError(f"trajectory at position {index} is for component {trajectory.component}")
            if trajectory.t_start != t_start or trajectory.t_end != t_end:
                raise ValueError("component trajectories do not share their bounds")
        return self

    @property
    def horizon(self) -> float:
        return self.components[0].t_end

    @property
    def t_start(self) -> float:
        return self.components[0].t_start

    def __getitem__(self, i: int) -> ComponentTrajectory:
        return self.components[i]

    def __len__(self) -> int:
        return len(self.components)

    def state_at(self, t: float) -> Tuple[int, ...]:
        return tuple(trajectory.state_at(t) for trajectory in self.components)

    def check_states(self, state_sizes: Sequence[int]) -> None:
        """Raise NumericalInputError unless every component stays in its state space."""
        if len(state_sizes) != len(self.components):
            raise NumericalInputError(
                f"joint trajectory has {len(self.components)} components, expected {len(state_sizes)}"
            )
        for trajectory, d in zip(self.components, state_sizes):
            trajectory.check_states(d)

    def replace(self, trajectory: ComponentTrajectory) -> "JointTrajectory":
        components = list(self.components)
        components[trajectory.component] = trajectory
        return JointTrajectory(components=components)

    def total_transitions(self, component: Optional[int] = None) -> int:
        if component is not None:
            return self.components[component].num_transitions
        return sum(trajectory.num_transitions for trajectory in self.components)
