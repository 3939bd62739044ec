"""Named evidence sets e1-e5 for the chain-network studies."""

import logging
from typing import Dict, List, Optional

import numpy as np

from ..errors import EvidenceError
from ..models.ctbn_model import CTBNModel
from ..models.evidence import ComponentEvidence, Evidence, IntervalObservation, PointObservation
from ..sampler.generative import simulate_forward

logger = logging.getLogger(__name__)

EVIDENCE_SETS = ("e1", "e2", "e3", "e4", "e5")

# X^(T) = (s0, s1, s3, s0, s1), repeated for longer chains
END_PATTERN = (0, 1, 3, 0, 1)


def _points(values: Dict[int, List[PointObservation]], M: int) -> Dict[int, ComponentEvidence]:
    return {i: ComponentEvidence(points=values.get(i, [])) for i in range(M)}


def _end_states(model: CTBNModel) -> List[int]:
    states = [END_PATTERN[i % len(END_PATTERN)] for i in range(model.num_components)]
    for i, (state, d) in enumerate(zip(states, model.state_sizes)):
        if state >= d:
            raise EvidenceError(
                f"end evidence needs state s{state} but component {i} has only {d} states"
            )
    return states


def make_evidence(
    name: str,
    model: CTBNModel,
    T: float = 3.0,
    rng: Optional[np.random.Generator] = None,
) -> Evidence:
    """Build evidence set ``name`` for a chain network over [0, T].

    e1: all components start in s0 and end in the end pattern.
    e2: start in s0 plus the complete trajectory of the last component.
    e3: start and end in s0.
    e4: start in s0 only.
    e5: e1 plus X_0 held at s0 throughout.
    """
    if name not in EVIDENCE_SETS:
        raise EvidenceError(f"unknown evidence set {name!r}; expected one of {EVIDENCE_SETS}")
    if not T > 0:
        raise EvidenceError(f"horizon must be positive, got {T}")
    M = model.num_components
    start = {i: [PointObservation(time=0.0, state=0)] for i in range(M)}

    if name == "e4":
        components = _points(start, M)
    elif name == "e3":
        components = _points(
            {i: start[i] + [PointObservation(time=T, state=0)] for i in range(M)}, M
        )
    elif name in ("e1", "e5"):
        ends = _end_states(model)
        components = _points(
            {i: start[i] + [PointObservation(time=T, state=ends[i])] for i in range(M)}, M
        )
        if name == "e5":
            components[0] = ComponentEvidence(
                points=components[0].points,
                intervals=[IntervalObservation(start=0.0, end=T, state=0)],
            )
    else:
        rng = rng if rng is not None else np.random.default_rng()
        trajectory = simulate_forward(model, T, rng, initial_state=[0] * M)[M - 1]
        components = _points(start, M)
        components[M - 1] = ComponentEvidence(
            points=[PointObservation(time=T, state=trajectory.final_state)],
            intervals=[
                IntervalObservation(start=s, end=e, state=state)
                for s, e, state in trajectory.segments()
            ],
        )
        logger.debug(f"e2 observes {trajectory.num_transitions} transitions of component {M - 1}")

    return Evidence(horizon=T, components=components)
