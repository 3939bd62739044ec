"""
Markov-blanket timelines for single-component resampling.

Given the trajectories of the blanket of component i, the window is cut at
every blanket transition. Within a segment the blanket state is constant
and the dynamics of X_i are governed by a reduced rate matrix: the
component's conditional rates plus, on the diagonal, the children's
staying rates as a function of X_i. Terms of the blanket's own rate that do
not depend on X_i are dropped; they cancel on normalisation.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Tuple

import numpy as np

from ..errors import NumericalInputError
from ..models.ctbn_model import CTBNModel, markov_blanket
from ..models.trajectory import JointTrajectory

logger = logging.getLogger(__name__)

BlanketState = Dict[int, int]


def _child_configs(
    model: CTBNModel, i: int, j: int, v: Mapping[int, int]
) -> np.ndarray:
    """Parent-config index of child j for every value of X_i."""
    configs = np.empty(model.state_sizes[i], dtype=np.int64)
    for a in range(model.state_sizes[i]):
        parent_states = [a if p == i else _lookup(v, p) for p in model.parents[j]]
        configs[a] = model.parent_config_index(j, parent_states)
    return configs


def _lookup(v: Mapping[int, int], component: int) -> int:
    try:
        return int(v[component])
    except KeyError:
        raise NumericalInputError(
            f"blanket assignment is missing component {component}"
        ) from None


def reduced_rate_matrix(model: CTBNModel, i: int, v: Mapping[int, int]) -> np.ndarray:
    """Reduced rate matrix of component i under blanket assignment v.

    Off-diagonals are the conditional rates of X_i; the diagonal adds
    Σ_{j ∈ Child(i)} q^{j}_{x_j, x_j | u_j(a)}.
    """
    model.check_component(i)
    u = model.parent_config_index(i, [_lookup(v, p) for p in model.parents[i]])
    R = np.array(model.cims[i][u], dtype=float)
    for j in model.children(i):
        x_j = _lookup(v, j)
        configs = _child_configs(model, i, j, v)
        R[np.diag_indices_from(R)] += model.cims[j][configs, x_j, x_j]
    return R


def child_transition_scaler(
    model: CTBNModel,
    i: int,
    j: int,
    from_state: int,
    to_state: int,
    v: Mapping[int, int],
) -> np.ndarray:
    """Rate of the child transition from_state → to_state as a function of X_i."""
    if j not in model.children(i):
        raise NumericalInputError(f"component {j} is not a child of component {i}")
    if from_state == to_state:
        raise NumericalInputError("a child transition must change the child's state")
    configs = _child_configs(model, i, j, v)
    return np.array(model.cims[j][configs, from_state, to_state], dtype=float)


@dataclass(frozen=True)
class BlanketTransition:
    """A transition of a blanket member at a segment boundary."""

    component: int
    from_state: int
    to_state: int


@dataclass(frozen=True)
class SegmentTimeline:
    """Segments of a sampling window with constant blanket state.

    ``boundaries`` has K + 2 entries (window start, K interior boundaries,
    window end). ``scalers[k]`` is the product of child-transition scalers at
    boundary k, or None where no child of i transitions (always None at the
    window ends).
    """

    component: int
    boundaries: np.ndarray
    rates: List[np.ndarray]
    blanket_states: List[BlanketState]
    transitions: List[List[BlanketTransition]] = field(default_factory=list)
    scalers: List[Optional[np.ndarray]] = field(default_factory=list)

    @property
    def num_segments(self) -> int:
        return len(self.rates)

    @property
    def start(self) -> float:
        return float(self.boundaries[0])

    @property
    def end(self) -> float:
        return float(self.boundaries[-1])

    @property
    def num_states(self) -> int:
        return self.rates[0].shape[0]

    def segment_index(self, t: float) -> int:
        """Segment k with boundaries[k] <= t < boundaries[k + 1] (last for t = end)."""
        k = int(np.searchsorted(self.boundaries, t, side="right")) - 1
        return min(max(k, 0), self.num_segments - 1)

    def shifted(self, c: float) -> "SegmentTimeline":
        """Copy with c added to every diagonal entry of every reduced matrix."""
        rates = [R + c * np.eye(R.shape[0]) for R in self.rates]
        return SegmentTimeline(
            component=self.component,
            boundaries=self.boundaries,
            rates=rates,
            blanket_states=self.blanket_states,
            transitions=self.transitions,
            scalers=self.scalers,
        )


def build_timeline(
    i: int,
    joint: JointTrajectory,
    window: Tuple[float, float],
    model: CTBNModel,
) -> SegmentTimeline:
    """Cut the window at every blanket transition strictly inside it."""
    s0, s1 = float(window[0]), float(window[1])
    if not s0 < s1:
        raise NumericalInputError(f"window [{s0}, {s1}] is empty")
    blanket = sorted(markov_blanket(model, i))
    children = set(model.children(i))

    events: Dict[float, List[BlanketTransition]] = {}
    for j in blanket:
        trajectory = joint[j]
        for time, new_state in trajectory.transitions:
            if s0 < time < s1:
                event = BlanketTransition(j, trajectory.state_before(time), new_state)
                events.setdefault(time, []).append(event)

    times = sorted(events)
    boundaries = np.array([s0] + times + [s1])

    state: BlanketState = {j: joint[j].state_at(s0) for j in blanket}
    cache: Dict[Tuple[Tuple[int, int], ...], np.ndarray] = {}

    def rates_for(v: BlanketState) -> np.ndarray:
        key = tuple(sorted(v.items()))
        if key not in cache:
            cache[key] = reduced_rate_matrix(model, i, v)
        return cache[key]

    rates = [rates_for(state)]
    states = [dict(state)]
    transitions: List[List[BlanketTransition]] = [[]]
    scalers: List[Optional[np.ndarray]] = [None]

    for time in times:
        scaler = None
        for event in events[time]:
            if event.component in children:
                factor = child_transition_scaler(
                    model, i, event.component, event.from_state, event.to_state, state
                )
                scaler = factor if scaler is None else scaler * factor
        for event in events[time]:
            state[event.component] = event.to_state
        transitions.append(events[time])
        scalers.append(scaler)
        rates.append(rates_for(state))
        states.append(dict(state))

    transitions.append([])
    scalers.append(None)

    logger.debug(
        f"Timeline for component {i} on [{s0:.4g}, {s1:.4g}]: "
        f"{len(rates)} segments, {len(cache)} distinct blanket states"
    )
    return SegmentTimeline(
        component=i,
        boundaries=boundaries,
        rates=rates,
        blanket_states=states,
        transitions=transitions,
        scalers=scalers,
    )


def homogeneous_timeline(
    i: int, rate_matrix: np.ndarray, window: Tuple[float, float]
) -> SegmentTimeline:
    """Single-segment timeline with a fixed rate matrix and no scalers."""
    s0, s1 = float(window[0]), float(window[1])
    return SegmentTimeline(
        component=i,
        boundaries=np.array([s0, s1]),
        rates=[np.asarray(rate_matrix, dtype=float)],
        blanket_states=[{}],
        transitions=[[], []],
        scalers=[None, None],
    )


def count_blanket_intervals(model: CTBNModel, i: int, joint: JointTrajectory) -> int:
    """Number of constant-blanket segments of component i over [0, T]."""
    times = set()
    for j in markov_blanket(model, i):
        times.update(float(t) for t, _ in joint[j].transitions)
    return len(times) + 1
