"""
Backward messages over a segment timeline.

The message at a boundary is the likelihood of the remaining blanket
trajectory and end evidence as a function of the current value of X_i.
Messages are kept as (max-normalised vector, log scale) pairs so long
windows do not underflow.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from ..errors import ZeroProbabilityEvidenceError
from ..linalg.propagators import matrix_exponential
from .timeline import SegmentTimeline

logger = logging.getLogger(__name__)


def segment_propagator(R: np.ndarray, dt: float) -> np.ndarray:
    """exp(dt·R) with round-off negatives clamped to zero."""
    return np.clip(matrix_exponential(R, dt), 0.0, None)


def normalise(vector: np.ndarray) -> Tuple[np.ndarray, float]:
    """Scale to unit max-norm; returns the vector and log of the factor removed."""
    peak = float(vector.max()) if vector.size else 0.0
    if not peak > 0.0:
        return vector, -np.inf
    return vector / peak, float(np.log(peak))


@dataclass(frozen=True)
class BackwardMessages:
    """Backward messages at every boundary of a timeline.

    ``after[k]`` is the message just after boundary k (before the segment
    that starts there); ``before[k]`` is the message just before boundary k,
    i.e. ``after[k]`` multiplied by the child-transition scaler at k. At the
    window start ``before[0] == after[0]``; at the window end both are the
    terminal vector.
    """

    after: np.ndarray
    after_log_scale: np.ndarray
    before: np.ndarray
    before_log_scale: np.ndarray

    def at_start(self) -> Tuple[np.ndarray, float]:
        return self.after[0], float(self.after_log_scale[0])


def terminal_message(num_states: int, terminal: Optional[int]) -> np.ndarray:
    if terminal is None:
        return np.ones(num_states)
    vector = np.zeros(num_states)
    vector[terminal] = 1.0
    return vector


def backward_pass(
    timeline: SegmentTimeline, terminal: Optional[int] = None
) -> BackwardMessages:
    """Propagate the end condition back to the window start.

    ``terminal`` is the pinned end state, or None for an unconstrained end.
    """
    K2 = timeline.num_segments + 1
    d = timeline.num_states
    after = np.zeros((K2, d))
    before = np.zeros((K2, d))
    after_scale = np.zeros(K2)
    before_scale = np.zeros(K2)

    after[-1] = before[-1] = terminal_message(d, terminal)

    for k in range(timeline.num_segments - 1, -1, -1):
        dt = timeline.boundaries[k + 1] - timeline.boundaries[k]
        vector = segment_propagator(timeline.rates[k], dt) @ before[k + 1]
        after[k], scale = normalise(vector)
        after_scale[k] = before_scale[k + 1] + scale

        scaler = timeline.scalers[k] if k > 0 else None
        if scaler is not None:
            before[k], scale = normalise(after[k] * scaler)
            before_scale[k] = after_scale[k] + scale
        else:
            before[k], before_scale[k] = after[k], after_scale[k]

        if not np.isfinite(after_scale[k]) or not np.isfinite(before_scale[k]):
            raise ZeroProbabilityEvidenceError(
                "blanket trajectory and evidence have probability zero",
                component=timeline.component,
                window=(timeline.start, timeline.end),
            )

    return BackwardMessages(
        after=after,
        after_log_scale=after_scale,
        before=before,
        before_log_scale=before_scale,
    )
