"""
Point and interval observations of CTBN components.

Interval observations pin a component on [start, end): the trajectory is
right-continuous, so the observed value holds at ``start`` and up to (but
not necessarily at) ``end``. For windowing purposes both edges of an
interval act as point evidence for the adjacent unobserved stretches.
"""

import logging
from typing import Dict, List, NamedTuple, Optional, Tuple

from pydantic import BaseModel, Field, field_validator, model_validator

from ..errors import EvidenceError, ZeroProbabilityEvidenceError
from .ctbn_model import CTBNModel

logger = logging.getLogger(__name__)


class PointObservation(BaseModel):
    """X_i(time) = state."""

    time: float = Field(..., description="Observation time")
    state: int = Field(..., ge=0, description="Observed state")


class IntervalObservation(BaseModel):
    """X_i constant and equal to state on [start, end)."""

    start: float = Field(..., description="Interval start")
    end: float = Field(..., description="Interval end")
    state: int = Field(..., ge=0, description="Observed state")

    @model_validator(mode="after")
    def _check_order(self) -> "IntervalObservation":
        if not self.end > self.start:
            raise ValueError(f"interval [{self.start}, {self.end}] is empty")
        return self


class ObservedSpan(NamedTuple):
    """Stretch on which the component is pinned (a point when start == end)."""

    start: float
    end: float
    state: int


class ObservedJump(NamedTuple):
    """Transition forced where two observed spans with different values touch."""

    time: float
    from_state: int
    to_state: int


class FreeWindow(NamedTuple):
    """Maximal unobserved stretch, with its pinned edge values if any."""

    start: float
    end: float
    start_state: Optional[int]
    end_state: Optional[int]


class ComponentEvidence(BaseModel):
    """All observations of a single component."""

    points: List[PointObservation] = Field(default_factory=list)
    intervals: List[IntervalObservation] = Field(default_factory=list)

    @model_validator(mode="after")
    def _check_consistency(self) -> "ComponentEvidence":
        intervals = sorted(self.intervals, key=lambda obs: obs.start)
        for left, right in zip(intervals, intervals[1:]):
            if right.start < left.end:
                raise ValueError(
                    f"intervals [{left.start}, {left.end}) and "
                    f"[{right.start}, {right.end}) overlap"
                )
        seen: Dict[float, int] = {}
        for point in self.points:
            if seen.get(point.time, point.state) != point.state:
                raise ValueError(f"conflicting point observations at t={point.time}")
            seen[point.time] = point.state
            for interval in intervals:
                if interval.start <= point.time < interval.end and point.state != interval.state:
                    raise ValueError(
                        f"point observation {point.state} at t={point.time} disagrees "
                        f"with interval [{interval.start}, {interval.end}) = {interval.state}"
                    )
        return self

    @property
    def is_empty(self) -> bool:
        return not self.points and not self.intervals

    def spans(self) -> List[ObservedSpan]:
        """Observed stretches, merged where they touch with equal values."""
        items = [ObservedSpan(p.time, p.time, p.state) for p in self.points]
        items += [ObservedSpan(i.start, i.end, i.state) for i in self.intervals]
        items.sort(key=lambda span: (span.start, span.end))

        merged: List[ObservedSpan] = []
        for span in items:
            if merged:
                last = merged[-1]
                inside = span.start < last.end
                touching = span.start == last.end and span.state == last.state
                if inside or touching:
                    merged[-1] = ObservedSpan(last.start, max(last.end, span.end), last.state)
                    continue
            merged.append(span)
        return merged

    def observed_jumps(self) -> List[ObservedJump]:
        spans = self.spans()
        return [
            ObservedJump(right.start, left.state, right.state)
            for left, right in zip(spans, spans[1:])
            if right.start == left.end and right.state != left.state
        ]

    def partition(self, horizon: float) -> Tuple[List[ObservedSpan], List[FreeWindow]]:
        """Split [0, horizon] into observed spans and free windows."""
        spans = self.spans()
        windows: List[FreeWindow] = []
        cursor, cursor_state = 0.0, None
        for span in spans:
            if span.start > cursor:
                windows.append(FreeWindow(cursor, span.start, cursor_state, span.state))
            cursor, cursor_state = span.end, span.state
        if cursor < horizon:
            windows.append(FreeWindow(cursor, horizon, cursor_state, None))
        return spans, windows

    def is_fully_observed(self, horizon: float) -> bool:
        _, windows = self.partition(horizon)
        return not windows


class Evidence(BaseModel):
    """Observations for every component over [0, horizon]."""

    horizon: float = Field(..., gt=0, description="Time horizon T")
    components: Dict[int, ComponentEvidence] = Field(default_factory=dict)

    @field_validator("components", mode="before")
    @classmethod
    def _coerce_keys(cls, value: Dict) -> Dict:
        return {int(key): item for key, item in value.items()}

    @model_validator(mode="after")
    def _check_times(self) -> "Evidence":
        for i, evidence in self.components.items():
            for point in evidence.points:
                if not 0.0 <= point.time <= self.horizon:
                    raise ValueError(f"component {i}: point time {point.time} outside [0, {self.horizon}]")
            for interval in evidence.intervals:
                if interval.start < 0.0 or interval.end > self.horizon:
                    raise ValueError(
                        f"component {i}: interval [{interval.start}, {interval.end}] "
                        f"outside [0, {self.horizon}]"
                    )
        return self

    def for_component(self, i: int) -> ComponentEvidence:
        return self.components.get(i, ComponentEvidence())

    def check_against(self, model: CTBNModel) -> None:
        """Raise EvidenceError for unknown components or out-of-range states."""
        for i, evidence in self.components.items():
            if not 0 <= i < model.num_components:
                raise EvidenceError(f"evidence names unknown component {i}")
            d = model.state_sizes[i]
            states = [p.state for p in evidence.points] + [o.state for o in evidence.intervals]
            for state in states:
                if state >= d:
                    raise EvidenceError(f"component {i}: observed state {state} out of range [0, {d})")

    def observed_jumps(self) -> List[Tuple[int, ObservedJump]]:
        """Forced transitions of every component, ordered by time.

        A jump at the horizon, or two components jumping at the same instant,
        has probability zero under any CTBN and raises
        ZeroProbabilityEvidenceError.
        """
        jumps = sorted(
            (
                (i, jump)
                for i, evidence in self.components.items()
                for jump in evidence.observed_jumps()
            ),
            key=lambda item: (item[1].time, item[0]),
        )
        for i, jump in jumps:
            if jump.time >= self.horizon:
                raise ZeroProbabilityEvidenceError(
                    f"observed transition {jump.from_state} -> {jump.to_state} "
                    f"at the horizon t={jump.time:.6g}",
                    component=i,
                )
        for (i, first), (j, second) in zip(jumps, jumps[1:]):
            if first.time == second.time:
                raise ZeroProbabilityEvidenceError(
                    f"components {i} and {j} are observed to change state together "
                    f"at t={first.time:.6g}"
                )
        return jumps

    def point_states(self, time: float) -> Dict[int, int]:
        """Components observed at exactly ``time`` (points or covering intervals)."""
        observed: Dict[int, int] = {}
        for i, evidence in self.components.items():
            for point in evidence.points:
                if point.time == time:
                    observed[i] = point.state
            for interval in evidence.intervals:
                if interval.start <= time < interval.end:
                    observed[i] = interval.state
        return observed

    def to_document(self) -> Dict:
        return {
            "horizon": self.horizon,
            "components": {
                str(i): evidence.model_dump() for i, evidence in sorted(self.components.items())
            },
        }
