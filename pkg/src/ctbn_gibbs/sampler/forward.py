"""
Forward sampling of a single component given its blanket.

For the current state x0 at time s, the probability of staying in x0 until
t factors into a forward scalar (staying rate integrated over the blanket
segments, times child-transition rates at crossed boundaries) and the
backward message at t, normalised by the backward message at s:

    F(t) = 1 - past(t) · future_x0(t) / future_x0(s)

The transition time is drawn by inverting F: a scan over segment ends
locates the segment, then a fixed-depth bisection finds the time. The new
state is drawn proportionally to q_{x0,x} · future_x(τ).
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Tuple, Union

import numpy as np

from ..errors import ZeroProbabilityEvidenceError
from ..linalg.propagators import squaring_ladder
from ..models.ctbn_model import CTBNModel
from ..models.evidence import ComponentEvidence, FreeWindow, ObservedSpan
from ..models.trajectory import ComponentTrajectory, JointTrajectory
from .backward import BackwardMessages, backward_pass, normalise, segment_propagator
from .timeline import SegmentTimeline, build_timeline

logger = logging.getLogger(__name__)

DEFAULT_DEPTH = 40
BOUNDARY_TOLERANCE = 1e-15
MAX_REDRAWS = 1000

TimelineFactory = Callable[[Tuple[float, float]], SegmentTimeline]


@dataclass(frozen=True)
class TransitionDraw:
    """A located transition time with the backward message there."""

    time: float
    segment: int
    future: np.ndarray


def _log(value: float) -> float:
    return math.log(value) if value > 0.0 else -math.inf


class WindowSampler:
    """Inverse-CDF sampler for one component over one timeline.

    Backward messages at interior times and the squaring ladders used by the
    bisection are cached, so redraws and later transitions in the same
    window reuse them.
    """

    def __init__(
        self,
        timeline: SegmentTimeline,
        messages: BackwardMessages,
        depth: int = DEFAULT_DEPTH,
    ):
        self.timeline = timeline
        self.messages = messages
        self.depth = depth
        self._futures: Dict[float, Tuple[np.ndarray, float, int]] = {}
        self._ladders: Dict[Tuple[int, float], np.ndarray] = {}

    def future(self, t: float) -> Tuple[np.ndarray, float, int]:
        """Normalised backward message at t, its log scale and segment."""
        cached = self._futures.get(t)
        if cached is not None:
            return cached
        k = self.timeline.segment_index(t)
        boundaries = self.timeline.boundaries
        if t == boundaries[k]:
            return self.messages.after[k], float(self.messages.after_log_scale[k]), k
        dt = float(boundaries[k + 1] - t)
        if dt <= 0.0:
            return self.messages.before[k + 1], float(self.messages.before_log_scale[k + 1]), k
        raw = segment_propagator(self.timeline.rates[k], dt) @ self.messages.before[k + 1]
        vector, scale = normalise(raw)
        result = (vector, float(self.messages.before_log_scale[k + 1]) + scale, k)
        self._futures[t] = result
        return result

    def _log_future_start(self, x0: int, start: float) -> float:
        vector, scale, _ = self.future(start)
        log_f0 = _log(vector[x0]) + scale
        if not np.isfinite(log_f0):
            raise ZeroProbabilityEvidenceError(
                f"state {x0} at t={start:.6g} cannot reach the remaining evidence",
                component=self.timeline.component,
                window=(self.timeline.start, self.timeline.end),
            )
        return log_f0

    def _crossing_log_factor(self, x0: int, boundary: int) -> float:
        scaler = self.timeline.scalers[boundary]
        return 0.0 if scaler is None else _log(scaler[x0])

    @staticmethod
    def _cdf_value(log_ratio: float) -> float:
        if log_ratio >= 0.0:
            return 0.0
        return min(max(1.0 - math.exp(log_ratio), 0.0), 1.0)

    def cdf(self, x0: int, t: float, start: Optional[float] = None) -> float:
        """F(t) for a component sitting in x0 since ``start``."""
        timeline = self.timeline
        start = timeline.start if start is None else start
        if t <= start:
            return 0.0
        t = min(t, timeline.end)
        log_f0 = self._log_future_start(x0, start)

        k = timeline.segment_index(start)
        cursor, log_past = start, 0.0
        while True:
            boundary = float(timeline.boundaries[k + 1])
            rate = float(timeline.rates[k][x0, x0])
            if t <= boundary or k == timeline.num_segments - 1:
                log_past += rate * (t - cursor)
                vector, scale, _ = self.future(t) if t < boundary else (
                    self.messages.before[k + 1], float(self.messages.before_log_scale[k + 1]), k
                )
                return self._cdf_value(log_past + _log(vector[x0]) + scale - log_f0)
            log_past += rate * (boundary - cursor) + self._crossing_log_factor(x0, k + 1)
            cursor, k = boundary, k + 1

    def search(self, xi: float, x0: int, start: Optional[float] = None) -> Optional[TransitionDraw]:
        """Locate τ with F(τ) = xi, or None when F(window end) < xi."""
        timeline = self.timeline
        start = timeline.start if start is None else start
        k = timeline.segment_index(start)
        if xi <= 0.0:
            vector, _, k = self.future(start)
            return TransitionDraw(time=start, segment=k, future=vector)
        log_f0 = self._log_future_start(x0, start)

        cursor, log_past = start, 0.0
        while True:
            boundary = float(timeline.boundaries[k + 1])
            rate = float(timeline.rates[k][x0, x0])
            log_past_end = log_past + rate * (boundary - cursor)
            log_future_end = _log(self.messages.before[k + 1][x0]) + float(
                self.messages.before_log_scale[k + 1]
            )
            if self._cdf_value(log_past_end + log_future_end - log_f0) >= xi:
                return self._bisect(xi, x0, k, cursor, log_past, log_f0)
            if k == timeline.num_segments - 1:
                return None
            log_past = log_past_end + self._crossing_log_factor(x0, k + 1)
            cursor, k = boundary, k + 1

    def _ladder(self, k: int, lo: float) -> np.ndarray:
        key = (k, lo)
        ladder = self._ladders.get(key)
        if ladder is None:
            span = float(self.timeline.boundaries[k + 1]) - lo
            ladder = squaring_ladder(self.timeline.rates[k], span, self.depth)
            self._ladders[key] = ladder
        return ladder

    def _bisect(
        self, xi: float, x0: int, k: int, lo: float, log_past_lo: float, log_f0: float
    ) -> TransitionDraw:
        end = float(self.timeline.boundaries[k + 1])
        rate = float(self.timeline.rates[k][x0, x0])
        ladder = self._ladder(k, lo)

        hi, step = end, end - lo
        f_hi = self.messages.before[k + 1]
        scale_hi = float(self.messages.before_log_scale[k + 1])
        for increment in ladder:
            step *= 0.5
            mid = lo + step
            f_mid = f_hi + increment @ f_hi
            log_past_mid = log_past_lo + rate * step
            if self._cdf_value(log_past_mid + _log(f_mid[x0]) + scale_hi - log_f0) >= xi:
                f_hi, scale = normalise(np.clip(f_mid, 0.0, None))
                hi, scale_hi = mid, scale_hi + scale
            else:
                lo, log_past_lo = mid, log_past_mid
        if hi < end:
            self._futures[hi] = (f_hi, scale_hi, k)
        return TransitionDraw(time=hi, segment=k, future=f_hi)

    def next_state_probabilities(self, x: int, draw: TransitionDraw) -> Optional[np.ndarray]:
        """Law of the state entered at draw.time; None if every weight is zero."""
        weights = np.clip(self.timeline.rates[draw.segment][x], 0.0, None) * draw.future
        weights[x] = 0.0
        total = float(weights.sum())
        if not total > 0.0:
            return None
        return weights / total

    def collides(self, draw: TransitionDraw, start: float) -> bool:
        boundaries = self.timeline.boundaries
        near = boundaries[draw.segment: draw.segment + 2]
        return draw.time <= start or bool(np.any(np.abs(near - draw.time) <= BOUNDARY_TOLERANCE))

    def sample(self, x_start: int, rng: np.random.Generator) -> List[Tuple[float, int]]:
        """Sample the transitions of the window starting from x_start."""
        d = self.timeline.num_states
        x, cursor = x_start, self.timeline.start
        transitions: List[Tuple[float, int]] = []
        while True:
            redraws = 0
            while True:
                xi = rng.random()
                if xi == 0.0:
                    continue
                draw = self.search(xi, x, cursor)
                if draw is None:
                    return transitions
                probabilities = None
                if not self.collides(draw, cursor):
                    probabilities = self.next_state_probabilities(x, draw)
                if probabilities is not None:
                    break
                redraws += 1
                if redraws > MAX_REDRAWS:
                    raise ZeroProbabilityEvidenceError(
                        "no admissible transition could be drawn",
                        component=self.timeline.component,
                        window=(self.timeline.start, self.timeline.end),
                    )
                logger.warning(f"Redrawing xi for component {self.timeline.component} at t={draw.time:.6g}")
            x = int(rng.choice(d, p=probabilities))
            transitions.append((draw.time, x))
            cursor = draw.time


def survival_cdf_eval(
    x0: int,
    t: float,
    timeline: SegmentTimeline,
    messages: BackwardMessages,
    start: Optional[float] = None,
) -> float:
    """F(t): probability of leaving x0 before t given blanket and evidence."""
    return WindowSampler(timeline, messages).cdf(x0, t, start)


def sample_transition_time(
    xi: float,
    x0: int,
    timeline: SegmentTimeline,
    messages: BackwardMessages,
    start: Optional[float] = None,
    depth: int = DEFAULT_DEPTH,
) -> Optional[float]:
    """Inverse-CDF transition time for uniform draw xi; None past the window end."""
    draw = WindowSampler(timeline, messages, depth).search(xi, x0, start)
    return None if draw is None else draw.time


def next_state_distribution(
    x_cur: int, tau: float, timeline: SegmentTimeline, messages: BackwardMessages
) -> np.ndarray:
    sampler = WindowSampler(timeline, messages)
    vector, _, k = sampler.future(tau)
    probabilities = sampler.next_state_probabilities(x_cur, TransitionDraw(tau, k, vector))
    if probabilities is None:
        raise ZeroProbabilityEvidenceError(
            f"no state reachable from {x_cur} at t={tau:.6g}", component=timeline.component
        )
    return probabilities


def sample_next_state(
    x_cur: int,
    tau: float,
    timeline: SegmentTimeline,
    messages: BackwardMessages,
    rng: np.random.Generator,
) -> int:
    """Draw the state entered at tau (always different from x_cur)."""
    probabilities = next_state_distribution(x_cur, tau, timeline, messages)
    return int(rng.choice(len(probabilities), p=probabilities))


def sample_constrained_trajectory(
    i: int,
    evidence_i: ComponentEvidence,
    horizon: float,
    initial: np.ndarray,
    make_timeline: TimelineFactory,
    rng: np.random.Generator,
    depth: int = DEFAULT_DEPTH,
) -> ComponentTrajectory:
    """Sample component i on [0, horizon] honouring its own evidence exactly.

    Observed spans are copied; each free window gets its own timeline and
    backward pass, pinned at whichever edges are observed.
    """
    spans, windows = evidence_i.partition(horizon)
    pieces: List[Union[ObservedSpan, FreeWindow]] = [*spans, *windows]
    pieces.sort(key=lambda piece: (piece.start, isinstance(piece, FreeWindow)))

    initial_state: Optional[int] = None
    state: Optional[int] = None
    transitions: List[Tuple[float, int]] = []

    for piece in pieces:
        if isinstance(piece, ObservedSpan):
            if state is None:
                initial_state = state = piece.state
            elif piece.state != state:
                if piece.start >= horizon:
                    raise ZeroProbabilityEvidenceError(
                        f"observed change to state {piece.state} at the horizon", component=i
                    )
                transitions.append((piece.start, piece.state))
                state = piece.state
            continue

        timeline = make_timeline((piece.start, piece.end))
        messages = backward_pass(timeline, piece.end_state)
        sampler = WindowSampler(timeline, messages, depth)
        if state is None:
            start_message, _ = messages.at_start()
            weights = np.asarray(initial, dtype=float) * start_message
            if not weights.sum() > 0.0:
                raise ZeroProbabilityEvidenceError(
                    "no initial state is compatible with the evidence",
                    component=i, window=(timeline.start, timeline.end),
                )
            initial_state = state = int(rng.choice(len(weights), p=weights / weights.sum()))
        window_transitions = sampler.sample(state, rng)
        transitions.extend(window_transitions)
        if window_transitions:
            state = window_transitions[-1][1]

    assert initial_state is not None
    return ComponentTrajectory(
        component=i,
        t_start=0.0,
        t_end=horizon,
        initial_state=initial_state,
        transitions=transitions,
    )


def sample_component_trajectory(
    model: CTBNModel,
    i: int,
    joint: JointTrajectory,
    evidence_i: ComponentEvidence,
    rng: np.random.Generator,
    depth: int = DEFAULT_DEPTH,
) -> ComponentTrajectory:
    """Resample X_i given the current blanket trajectories and its evidence."""
    return sample_constrained_trajectory(
        i,
        evidence_i,
        joint.horizon,
        model.initial[i],
        lambda window: build_timeline(i, joint, window, model),
        rng,
        depth,
    )
