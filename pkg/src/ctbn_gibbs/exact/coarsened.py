"""
The h-coarsened discrete-time chain and event probabilities.

The coarsened chain steps with I + hQ, the first-order truncation of
exp(hQ). Events are finite conjunctions of point and interval constraints on
the joint state; for the discrete chain a point event at t reads the state
at the step below t (or above it for right limits) and an interval event
(s, t] constrains every step from the one above s to the one below t.
"""

import logging
from typing import Dict, List, Optional, Sequence, Union

import numpy as np
from pydantic import BaseModel, Field, model_validator

from ..errors import EvidenceError, NumericalInputError
from ..linalg.propagators import matrix_exponential
from ..models.ctbn_model import CTBNModel, joint_states_table

logger = logging.getLogger(__name__)

ROUNDING_TOLERANCE = 1e-9


class PointEvent(BaseModel):
    """X(t) (or X(t+) when right_limit) lies in ``states``."""

    time: float = Field(..., ge=0)
    states: List[int] = Field(..., min_length=1, description="Allowed flat joint states")
    right_limit: bool = False


class IntervalEvent(BaseModel):
    """X stays in ``states`` throughout (start, end]."""

    start: float = Field(..., ge=0)
    end: float = Field(...)
    states: List[int] = Field(..., min_length=1, description="Allowed flat joint states")

    @model_validator(mode="after")
    def _check_order(self) -> "IntervalEvent":
        if not self.end > self.start:
            raise ValueError(f"interval ({self.start}, {self.end}] is empty")
        return self


Constraint = Union[PointEvent, IntervalEvent]


def joint_states_where(model: CTBNModel, assignment: Dict[int, int]) -> List[int]:
    """Flat indices of the joint states matching a partial assignment."""
    states = joint_states_table(model)
    mask = np.ones(states.shape[0], dtype=bool)
    for i, value in assignment.items():
        mask &= states[:, i] == value
    return [int(k) for k in np.flatnonzero(mask)]


def coarsened_step_matrix(Q: np.ndarray, h: float) -> np.ndarray:
    """I + hQ, defined while h < min_a(-1/q_aa)."""
    Q = np.asarray(Q, dtype=float)
    if Q.ndim != 2 or Q.shape[0] != Q.shape[1] or not np.all(np.isfinite(Q)):
        raise NumericalInputError(f"rate matrix must be finite and square, got shape {Q.shape}")
    if not h >= 0.0:
        raise NumericalInputError(f"step must be non-negative, got {h}")
    exits = -np.diag(Q)
    if np.any(exits > 0.0) and not h < float(np.min(1.0 / exits[exits > 0.0])):
        raise NumericalInputError(
            f"step h={h} is too large: I + hQ is not a distribution "
            f"(need h < {float(np.min(1.0 / exits[exits > 0.0])):.6g})"
        )
    return np.eye(Q.shape[0]) + h * Q


def _mask(states: Sequence[int], size: int) -> np.ndarray:
    mask = np.zeros(size, dtype=bool)
    try:
        mask[list(states)] = True
    except IndexError:
        raise EvidenceError(f"event names a state outside [0, {size})") from None
    return mask


def _floor_steps(t: float, h: float) -> int:
    return int(np.floor(t / h + ROUNDING_TOLERANCE))


def _ceil_steps(t: float, h: float) -> int:
    return int(np.ceil(t / h - ROUNDING_TOLERANCE))


class _StepMasks:
    """Allowed states per discrete step, for a set of coarsened constraints."""

    def __init__(self, constraints: Sequence[Constraint], h: float, size: int):
        self.size = size
        self.points: Dict[int, np.ndarray] = {}
        self.intervals: List[tuple] = []
        for constraint in constraints:
            allowed = _mask(constraint.states, size)
            if isinstance(constraint, PointEvent):
                n = _ceil_steps(constraint.time, h) if constraint.right_limit else _floor_steps(constraint.time, h)
                self.points[n] = self.points.get(n, np.ones(size, dtype=bool)) & allowed
            else:
                first, last = _ceil_steps(constraint.start, h), _floor_steps(constraint.end, h)
                if first <= last:
                    self.intervals.append((first, last, allowed))

    def last_step(self) -> int:
        steps = [0] + list(self.points) + [last for _, last, _ in self.intervals]
        return max(steps)

    def breakpoints(self, n_end: int) -> List[int]:
        marks = {0, n_end, *self.points}
        for first, last, _ in self.intervals:
            marks.update({first, last, last + 1})
        return sorted(m for m in marks if 0 <= m <= n_end)

    def at(self, n: int) -> np.ndarray:
        mask = self.points.get(n, np.ones(self.size, dtype=bool)).copy()
        for first, last, allowed in self.intervals:
            if first <= n <= last:
                mask &= allowed
        return mask


def _coarsened_mass(
    P: np.ndarray, initial: np.ndarray, constraints: Sequence[Constraint], h: float
) -> float:
    masks = _StepMasks(constraints, h, P.shape[0])
    n_end = masks.last_step()
    p = initial * masks.at(0)
    log_scale = 0.0
    marks = masks.breakpoints(n_end)
    for lo, hi in zip(marks, marks[1:]):
        gap = hi - lo - 1
        if gap > 0:
            inner = P * masks.at(lo + 1)[np.newaxis, :]
            p = p @ np.linalg.matrix_power(inner, gap)
        p = (p @ P) * masks.at(hi)
        total = float(p.sum())
        if not total > 0.0:
            return 0.0
        p, log_scale = p / total, log_scale + float(np.log(total))
    return float(np.exp(log_scale + np.log(p.sum()))) if p.sum() > 0 else 0.0


def _continuous_mass(Q: np.ndarray, initial: np.ndarray, constraints: Sequence[Constraint]) -> float:
    size = Q.shape[0]
    points: Dict[float, np.ndarray] = {}
    intervals = []
    for constraint in constraints:
        allowed = _mask(constraint.states, size)
        if isinstance(constraint, PointEvent):
            points[constraint.time] = points.get(constraint.time, np.ones(size, dtype=bool)) & allowed
        else:
            intervals.append((constraint.start, constraint.end, allowed))
            points[constraint.start] = points.get(constraint.start, np.ones(size, dtype=bool)) & allowed

    times = sorted({0.0, *points, *(end for _, end, _ in intervals)})
    p = np.asarray(initial, dtype=float) * points.get(0.0, np.ones(size, dtype=bool))
    log_scale = 0.0
    for lo, hi in zip(times, times[1:]):
        allowed = np.ones(size, dtype=bool)
        for start, end, interval_mask in intervals:
            if start <= lo and hi <= end:
                allowed &= interval_mask
        generator = Q * np.outer(allowed, allowed)
        p = np.clip(p @ matrix_exponential(generator, hi - lo), 0.0, None)
        p = p * points.get(hi, np.ones(size, dtype=bool))
        total = float(p.sum())
        if not total > 0.0:
            return 0.0
        p, log_scale = p / total, log_scale + float(np.log(total))
    return float(np.exp(log_scale + np.log(p.sum()))) if p.sum() > 0 else 0.0


def _check_distribution(initial: np.ndarray, size: int) -> np.ndarray:
    initial = np.asarray(initial, dtype=float)
    if initial.shape != (size,) or np.any(initial < 0) or abs(initial.sum() - 1.0) > 1e-9:
        raise NumericalInputError("initial distribution must be a probability vector over the states")
    return initial


def _conditional(joint_mass: float, condition_mass: float) -> float:
    if not condition_mass > 0.0:
        raise EvidenceError("conditioning event has probability zero")
    return joint_mass / condition_mass


def event_probability_coarsened(
    Q: np.ndarray,
    h: float,
    initial: np.ndarray,
    event: Sequence[Constraint],
    condition: Optional[Sequence[Constraint]] = None,
) -> float:
    """Pr_h of the coarsened event, optionally conditioned, by forward filtering."""
    if not h > 0.0:
        raise NumericalInputError(f"step must be positive, got {h}")
    P = coarsened_step_matrix(Q, h)
    initial = _check_distribution(initial, P.shape[0])
    if not condition:
        return _coarsened_mass(P, initial, event, h)
    both = _coarsened_mass(P, initial, list(event) + list(condition), h)
    return _conditional(both, _coarsened_mass(P, initial, condition, h))


def event_probability(
    Q: np.ndarray,
    initial: np.ndarray,
    event: Sequence[Constraint],
    condition: Optional[Sequence[Constraint]] = None,
) -> float:
    """Continuous-time probability of the event, optionally conditioned."""
    Q = np.asarray(Q, dtype=float)
    initial = _check_distribution(initial, Q.shape[0])
    if not condition:
        return _continuous_mass(Q, initial, event)
    both = _continuous_mass(Q, initial, list(event) + list(condition))
    return _conditional(both, _continuous_mass(Q, initial, condition))
