"""
Brute-force inference on the amalgamated state space.

These routines exponentiate the joint rate matrix directly and are only
meant for small networks: they are the reference the sampler is checked
against.
"""

import logging
from functools import reduce
from typing import Any, Dict, List, NamedTuple, Optional, Set, Tuple

import numpy as np
import scipy.integrate
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from ..errors import NumericalInputError, UnsupportedEvidenceError, ZeroProbabilityEvidenceError
from ..linalg.propagators import matrix_exponential
from ..models.ctbn_model import (
    DEFAULT_STATE_SPACE_CAP,
    CTBNModel,
    amalgamate,
    joint_index,
    joint_states_table,
)
from ..models.evidence import Evidence
from ..models.trajectory import JointTrajectory
from ..stats.sufficient_stats import SufficientStats

logger = logging.getLogger(__name__)

DEFAULT_GRID = 2000
ALIGNMENT_TOLERANCE = 1e-9


class BridgeQuery(BaseModel):
    """Marginal query on a Markov bridge from a0 at time 0 to aT at time T."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    Q: np.ndarray = Field(..., description="Joint rate matrix")
    a0: int = Field(..., ge=0, description="Flat index of the start state")
    aT: int = Field(..., ge=0, description="Flat index of the end state")
    T: float = Field(..., gt=0, description="Horizon")
    t: float = Field(..., description="Query time in [0, T]")

    @field_validator("Q", mode="before")
    @classmethod
    def _coerce_rates(cls, value: Any) -> np.ndarray:
        return np.array(value, dtype=float)

    @model_validator(mode="after")
    def _check_ranges(self) -> "BridgeQuery":
        if not 0.0 <= self.t <= self.T:
            raise ValueError(f"query time {self.t} outside [0, {self.T}]")
        S = self.Q.shape[0]
        if self.a0 >= S or self.aT >= S:
            raise ValueError(f"endpoint states must lie in [0, {S})")
        return self


def bridge_marginal(q: BridgeQuery) -> np.ndarray:
    """Law of X(t) given X(0) = a0 and X(T) = aT."""
    Z = matrix_exponential(q.Q, q.T)[q.a0, q.aT]
    if not Z > 0.0:
        raise ZeroProbabilityEvidenceError(
            f"bridge from {q.a0} to {q.aT} over T={q.T} has probability zero"
        )
    head = matrix_exponential(q.Q, q.t)[q.a0, :]
    tail = matrix_exponential(q.Q, q.T - q.t)[:, q.aT]
    marginal = np.clip(head * tail / Z, 0.0, None)
    return marginal / marginal.sum()


def _grid_index(time: float, h: float, grid_n: int, horizon: float) -> int:
    k = int(round(time / h))
    if abs(k * h - time) > ALIGNMENT_TOLERANCE * max(1.0, horizon) or not 0 <= k <= grid_n:
        raise UnsupportedEvidenceError(
            f"observation time {time} is not on the integration grid (step {h:.6g})"
        )
    return k


def _observation_indices(evidence: Evidence, grid_n: int) -> Set[int]:
    """Interior grid points where some observation starts or ends."""
    horizon = evidence.horizon
    h = horizon / grid_n
    times = [
        time
        for observations in evidence.components.values()
        for time in [
            *(point.time for point in observations.points),
            *(t for interval in observations.intervals for t in (interval.start, interval.end)),
        ]
    ]
    indices = {_grid_index(time, h, grid_n, horizon) for time in times}
    return {k for k in indices if 0 < k < grid_n}


def _evidence_masks(
    evidence: Evidence, states: np.ndarray, grid_n: int
) -> Tuple[np.ndarray, np.ndarray]:
    """Allowed joint states at each grid point and during each grid step."""
    S = states.shape[0]
    horizon = evidence.horizon
    h = horizon / grid_n
    point_masks = np.ones((grid_n + 1, S), dtype=bool)
    step_masks = np.ones((grid_n, S), dtype=bool)
    for i, observations in evidence.components.items():
        column = states[:, i]
        for point in observations.points:
            k = _grid_index(point.time, h, grid_n, horizon)
            point_masks[k] &= column == point.state
        for interval in observations.intervals:
            ks = _grid_index(interval.start, h, grid_n, horizon)
            ke = _grid_index(interval.end, h, grid_n, horizon)
            point_masks[ks:ke] &= column == interval.state
            step_masks[ks:ke] &= column == interval.state
    return point_masks, step_masks


class _ForcedJump(NamedTuple):
    """Observed jump of one component at a grid point, on the joint space."""

    component: int
    from_state: int
    to_state: int
    source: np.ndarray
    target: np.ndarray
    rates: np.ndarray


def _forced_jumps(
    evidence: Evidence, Q: np.ndarray, states: np.ndarray, strides: np.ndarray, grid_n: int
) -> Dict[int, _ForcedJump]:
    """Observed jumps by grid index; source state a moves to target a' at rate Q[a, a']."""
    horizon = evidence.horizon
    h = horizon / grid_n
    forced = {}
    for i, jump in evidence.observed_jumps():
        k = _grid_index(jump.time, h, grid_n, horizon)
        source = np.flatnonzero(states[:, i] == jump.from_state)
        target = source + (jump.to_state - jump.from_state) * strides[i]
        forced[k] = _ForcedJump(i, jump.from_state, jump.to_state, source, target, Q[source, target])
    return forced


def _step_propagators(
    Q: np.ndarray, h: float, step_masks: np.ndarray
) -> Tuple[List[np.ndarray], np.ndarray]:
    unique, inverse = np.unique(step_masks, axis=0, return_inverse=True)
    propagators = []
    for allowed in unique:
        restricted = Q * np.outer(allowed, allowed)
        propagators.append(np.clip(matrix_exponential(restricted, h), 0.0, None))
    return propagators, np.asarray(inverse).reshape(-1)


def _normalised(vector: np.ndarray) -> np.ndarray:
    total = float(vector.sum())
    if not total > 0.0:
        raise ZeroProbabilityEvidenceError("evidence has probability zero under the model")
    return vector / total


def _piecewise_simpson(
    values: np.ndarray, right: np.ndarray, left: np.ndarray, cuts: List[int], h: float
) -> np.ndarray:
    """Simpson's rule over grid pieces split at discontinuities.

    ``values[k]`` is used at interior grid points; at a cut k the piece
    ending there takes ``left[k]`` and the piece starting there ``right[k]``.
    """
    N = values.shape[0] - 1
    bounds = [0, *cuts, N]
    total = np.zeros(values.shape[1:])
    for lo, hi in zip(bounds, bounds[1:]):
        piece = values[lo: hi + 1].copy()
        if lo in cuts:
            piece[0] = right[lo]
        if hi in cuts:
            piece[-1] = left[hi]
        if hi - lo < 2:
            total += 0.5 * h * (piece[0] + piece[-1])
        else:
            total += scipy.integrate.simpson(piece, dx=h, axis=0)
    return total


def _component_configs(model: CTBNModel, i: int, states: np.ndarray) -> np.ndarray:
    parents = model.parents[i]
    if not parents:
        return np.zeros(states.shape[0], dtype=np.int64)
    dims = tuple(model.state_sizes[p] for p in parents)
    return np.ravel_multi_index(tuple(states[:, p] for p in parents), dims)


def exact_sufficient_stats(
    model: CTBNModel,
    evidence: Evidence,
    grid_n: int = DEFAULT_GRID,
    cap: int = DEFAULT_STATE_SPACE_CAP,
) -> SufficientStats:
    """Expected sufficient statistics given evidence, by forward-backward on a grid.

    Forward and backward factors are computed at grid_n + 1 equally spaced
    times with exact step propagators, then residence densities and bridged
    transition intensities are integrated with Simpson's rule. Observation
    times must lie on the grid. An observed jump multiplies both messages by
    its rate at its grid point, counts as one transition and splits the
    integration there.
    """
    if grid_n < 2:
        raise NumericalInputError(f"grid_n must be at least 2, got {grid_n}")
    evidence.check_against(model)
    Q = amalgamate(model, cap)
    states = joint_states_table(model)
    S = states.shape[0]
    N = grid_n
    h = evidence.horizon / N

    point_masks, step_masks = _evidence_masks(evidence, states, N)
    propagators, step_kind = _step_propagators(Q, h, step_masks)
    strides = np.cumprod([1] + list(model.state_sizes[:0:-1]))[::-1]
    forced = _forced_jumps(evidence, Q, states, strides, N)

    alpha = np.empty((N + 1, S))
    alpha_pre = np.empty((N + 1, S))
    alpha_pre[0] = _normalised(reduce(np.kron, model.initial))
    alpha[0] = _normalised(alpha_pre[0] * point_masks[0])
    for k in range(N):
        alpha_pre[k + 1] = _normalised(alpha[k] @ propagators[step_kind[k]])
        entering = alpha_pre[k + 1]
        if k + 1 in forced:
            jump = forced[k + 1]
            entering = np.zeros(S)
            entering[jump.target] = alpha_pre[k + 1, jump.source] * jump.rates
        alpha[k + 1] = _normalised(entering * point_masks[k + 1])

    # beta_post[k] is the message at the left limit of grid point k
    beta = np.empty((N + 1, S))
    beta_post = np.empty((N + 1, S))
    beta[N] = 1.0
    beta_post[N] = point_masks[N].astype(float)
    for k in range(N - 1, -1, -1):
        beta[k] = _normalised(propagators[step_kind[k]] @ beta_post[k + 1])
        beta_post[k] = beta[k] * point_masks[k]
        if k in forced:
            jump = forced[k]
            leaving = np.zeros(S)
            leaving[jump.source] = jump.rates * beta_post[k, jump.target]
            beta_post[k] = leaving

    Z_right = np.einsum("ks,ks->k", alpha, beta)
    Z_left = np.einsum("ks,ks->k", alpha_pre, beta_post)
    if not np.all(Z_right > 0.0) or not np.all(Z_left > 0.0):
        raise ZeroProbabilityEvidenceError("evidence has probability zero under the model")

    cuts = sorted(_observation_indices(evidence, N) | set(forced))
    occupancy = alpha * beta / Z_right[:, np.newaxis]
    occupancy_left = alpha_pre * beta_post / Z_left[:, np.newaxis]
    occupancy_integral = _piecewise_simpson(occupancy, occupancy, occupancy_left, cuts, h)

    stats = SufficientStats.zeros_like(model, evidence.horizon)
    flat = np.arange(S)

    for i in range(model.num_components):
        column = states[:, i]
        configs = _component_configs(model, i, states)
        np.add.at(stats.residence[i], (configs, column), occupancy_integral)

        for b in range(model.state_sizes[i]):
            valid = column != b
            x = flat[valid]
            y = x + (b - column[valid]) * strides[i]
            rates = Q[x, y]
            allowed = step_masks[:, x] & step_masks[:, y]
            right = alpha[:N, x] * rates * beta[:N, y] * allowed / Z_right[:N, np.newaxis]
            left = alpha_pre[1:, x] * rates * beta_post[1:, y] * allowed / Z_left[1:, np.newaxis]

            intensity = np.empty((N + 1, x.size))
            intensity[0] = right[0]
            intensity[N] = left[N - 1]
            intensity[1:N] = 0.5 * (right[1:] + left[:-1])
            right_limits = np.vstack([right, left[-1:]])
            left_limits = np.vstack([right[:1], left])
            expected = _piecewise_simpson(intensity, right_limits, left_limits, cuts, h)
            np.add.at(stats.transitions[i], (configs[x], column[x], b), expected)

    for k, jump in forced.items():
        weights = alpha_pre[k, jump.source] * beta_post[k, jump.source] / Z_left[k]
        configs = _component_configs(model, jump.component, states)[jump.source]
        np.add.at(stats.transitions[jump.component], (configs, jump.from_state, jump.to_state), weights)

    logger.info(f"Exact statistics on {S} joint states over a {N}-step grid")
    return stats


def component_conditional_marginal(
    model: CTBNModel,
    i: int,
    joint: JointTrajectory,
    window: Tuple[float, float],
    start_state: Optional[int],
    end_state: Optional[int],
    t: float,
    cap: int = DEFAULT_STATE_SPACE_CAP,
) -> np.ndarray:
    """Law of X_i(t) given every other component's trajectory and X_i's window ends.

    Works on the amalgamated rate matrix restricted to the joint states that
    agree with the other components, with their transition rates applied at
    each of their jumps. An unobserved start uses the initial factor of i.
    """
    model.check_component(i)
    s0, s1 = float(window[0]), float(window[1])
    if not s0 <= t <= s1:
        raise NumericalInputError(f"query time {t} outside window [{s0}, {s1}]")
    Q = amalgamate(model, cap)
    d = model.state_sizes[i]
    others = [j for j in range(model.num_components) if j != i]

    def indices(v: Dict[int, int]) -> np.ndarray:
        return np.array(
            [joint_index(model, [a if c == i else v[c] for c in range(model.num_components)])
             for a in range(d)]
        )

    events = sorted(
        (time, j, state)
        for j in others
        for time, state in joint[j].transitions
        if s0 < time < s1
    )
    v = {j: joint[j].state_at(s0) for j in others}
    bounds = [s0]
    segment_indices = [indices(v)]
    jumps: List[Optional[np.ndarray]] = [None]
    for time, j, state in events:
        before = segment_indices[-1]
        v[j] = state
        after = indices(v)
        bounds.append(time)
        segment_indices.append(after)
        jumps.append(Q[before, after])
    bounds.append(s1)
    K = len(segment_indices)
    k_t = min(max(int(np.searchsorted(bounds, t, side="right")) - 1, 0), K - 1)

    def generator(k: int) -> np.ndarray:
        idx = segment_indices[k]
        return Q[np.ix_(idx, idx)]

    if start_state is None:
        forward = np.array(model.initial[i], dtype=float)
    else:
        forward = np.zeros(d)
        forward[start_state] = 1.0
    for k in range(k_t + 1):
        if k > 0:
            forward = forward * jumps[k]
        until = t if k == k_t else bounds[k + 1]
        forward = _normalised(forward @ matrix_exponential(generator(k), until - bounds[k]))

    if end_state is None:
        backward = np.ones(d)
    else:
        backward = np.zeros(d)
        backward[end_state] = 1.0
    for k in range(K - 1, k_t - 1, -1):
        since = t if k == k_t else bounds[k]
        backward = _normalised(matrix_exponential(generator(k), bounds[k + 1] - since) @ backward)
        if k > k_t:
            backward = backward * jumps[k]

    return _normalised(forward * backward)
