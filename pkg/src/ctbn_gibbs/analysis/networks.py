"""
Synthetic CTBN generators for the convergence studies.

The chain network has a root that cycles through two loops and followers
that try to copy their parent's state. The timescale network slows every
link of the chain down by a factor of two.
"""

import logging
from typing import List, Optional

import numpy as np

from ..errors import ConfigurationError
from ..models.ctbn_model import CTBNModel, validate_model

logger = logging.getLogger(__name__)

LOOP_RATE = 2.0
OFF_LOOP_RATE = 0.05
FOLLOW_RATE = 5.0
NON_FOLLOW_RATE = 0.2
PERTURB = 0.05

# s0 → s1 → s2 → s0 and s0 → s3 → s4 → s0
ROOT_LOOPS = [(0, 1), (1, 2), (2, 0), (0, 3), (3, 4), (4, 0)]


def _with_diagonal(rates: np.ndarray) -> np.ndarray:
    """Set each diagonal to minus the sum of the row's off-diagonals."""
    rates = np.array(rates, dtype=float)
    d = rates.shape[-1]
    rates[..., np.arange(d), np.arange(d)] = 0.0
    rates[..., np.arange(d), np.arange(d)] = -rates.sum(axis=-1)
    return rates


def _perturbed(rates: np.ndarray, perturb: float, rng: np.random.Generator) -> np.ndarray:
    noise = rng.uniform(-1.0, 1.0, size=rates.shape)
    return rates * (1.0 + perturb * noise)


def _root_rates(d: int, loop_rate: float, off_loop_rate: float) -> np.ndarray:
    rates = np.full((d, d), off_loop_rate)
    edges = ROOT_LOOPS if d == 5 else [(a, (a + 1) % d) for a in range(d)]
    for a, b in edges:
        rates[a, b] = loop_rate
    return rates


def _follower_rates(d: int, d_parent: int, follow_rate: float, non_follow_rate: float) -> np.ndarray:
    """(d_parent, d, d) table with higher intensity towards the parent's state."""
    rates = np.full((d_parent, d, d), non_follow_rate)
    for c in range(min(d, d_parent)):
        rates[c, :, c] = follow_rate
    return rates


def _build(cims: List[np.ndarray], state_sizes: List[int], parents: List[List[int]]) -> CTBNModel:
    model = CTBNModel(
        state_sizes=state_sizes,
        parents=parents,
        cims=cims,
        initial=[np.full(d, 1.0 / d) for d in state_sizes],
    )
    report = validate_model(model)
    if not report.is_valid:
        raise ConfigurationError(f"generated network is invalid: {report.summary()}")
    return model


def generate_chain_network(
    N: int,
    d: int = 5,
    perturb: float = PERTURB,
    seed: Optional[int] = None,
    loop_rate: float = LOOP_RATE,
    off_loop_rate: float = OFF_LOOP_RATE,
    follow_rate: float = FOLLOW_RATE,
    non_follow_rate: float = NON_FOLLOW_RATE,
) -> CTBNModel:
    """Chain X_0 → X_1 → ... → X_{N-1} with looping root and copying followers."""
    if N < 1 or d < 2:
        raise ConfigurationError(f"chain network needs N >= 1 and d >= 2, got N={N}, d={d}")
    if perturb < 0 or min(loop_rate, off_loop_rate, follow_rate, non_follow_rate) <= 0:
        raise ConfigurationError("rates must be positive and perturb non-negative")
    rng = np.random.default_rng(seed)

    root = _perturbed(_root_rates(d, loop_rate, off_loop_rate), perturb, rng)
    cims = [_with_diagonal(root[np.newaxis])]
    for _ in range(1, N):
        table = _follower_rates(d, d, follow_rate, non_follow_rate)
        cims.append(_with_diagonal(_perturbed(table, perturb, rng)))

    parents = [[]] + [[i - 1] for i in range(1, N)]
    logger.debug(f"Generated chain network with {N} components of {d} states")
    return _build(cims, [d] * N, parents)


def generate_timescale_network(
    N: int,
    d: int = 2,
    base_rate: float = 1.0,
    follow_weight: float = 4.0,
) -> CTBNModel:
    """Chain whose component i leaves every state at rate base_rate · 2^-i.

    The exit rate does not depend on the parent; only the destination is
    biased towards the parent's state.
    """
    if N < 1 or d < 2 or base_rate <= 0 or follow_weight <= 0:
        raise ConfigurationError("timescale network needs N >= 1, d >= 2 and positive rates")
    cims = []
    for i in range(N):
        exit_rate = base_rate * 2.0 ** -i
        configs = 1 if i == 0 else d
        table = np.ones((configs, d, d))
        if i > 0:
            for c in range(d):
                table[c, :, c] = follow_weight
        table[:, np.arange(d), np.arange(d)] = 0.0
        table = exit_rate * table / table.sum(axis=-1, keepdims=True)
        cims.append(_with_diagonal(table))
    parents = [[]] + [[i - 1] for i in range(1, N)]
    return _build(cims, [d] * N, parents)


def component_exit_rates(model: CTBNModel) -> np.ndarray:
    """Mean exit rate of each component over states and parent assignments."""
    return np.array([float(-np.diagonal(cims, axis1=1, axis2=2).mean()) for cims in model.cims])


def sharpen(model: CTBNModel, alpha: float) -> CTBNModel:
    """Reweight each row's jump profile by the power alpha, keeping its exit rate.

    alpha = 1 leaves the model unchanged, alpha = 0 makes every jump
    destination equally likely and large alpha concentrates on the fastest.
    """
    if not alpha >= 0:
        raise ConfigurationError(f"sharpness must be non-negative, got {alpha}")
    cims = []
    for i, table in enumerate(model.cims):
        d = table.shape[-1]
        off = np.array(table, dtype=float)
        off[..., np.arange(d), np.arange(d)] = 0.0
        if alpha == 0 and np.any((off == 0) & ~np.eye(d, dtype=bool)):
            raise ConfigurationError(
                f"component {i} has a zero rate; 0^0 is undefined for alpha = 0"
            )
        powered = np.where(np.eye(d, dtype=bool), 0.0, off ** alpha)
        totals = powered.sum(axis=-1, keepdims=True)
        profile = np.divide(powered, totals, out=np.zeros_like(powered), where=totals > 0)
        exits = -np.diagonal(table, axis1=1, axis2=2)[..., np.newaxis]
        cims.append(_with_diagonal(exits * profile))
    return CTBNModel(
        state_sizes=list(model.state_sizes),
        parents=[list(p) for p in model.parents],
        cims=cims,
        initial=[np.array(v) for v in model.initial],
    )
