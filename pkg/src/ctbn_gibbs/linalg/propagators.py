"""
Dense matrix exponentials and distribution propagation.

Nothing here assumes stochasticity: the reduced generators used by the
sampler have non-positive row sums, not zero ones.
"""

import numpy as np
import scipy.linalg

from ..errors import NumericalInputError

TAYLOR_NORM = 2.0 ** -8
TAYLOR_TERMS = 6


def _as_square(A: np.ndarray, name: str = "matrix") -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise NumericalInputError(f"{name} must be square, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise NumericalInputError(f"{name} has non-finite entries")
    return A


def matrix_exponential(A: np.ndarray, t: float = 1.0) -> np.ndarray:
    """exp(tA) by scaling and squaring with a Padé approximant."""
    A = _as_square(A)
    if not np.isfinite(t) or t < 0:
        raise NumericalInputError(f"time must be finite and non-negative, got {t}")
    if t == 0.0:
        return np.eye(A.shape[0])
    return scipy.linalg.expm(t * A)


def squaring_ladder(A: np.ndarray, duration: float, depth: int) -> np.ndarray:
    """Increments exp(2^-l·duration·A) - I for l = 1..depth, stacked.

    Only the finest level is exponentiated; coarser ones follow by squaring
    the increment, (I + M)^2 - I = 2M + M², so near-identity levels keep
    their relative accuracy.
    """
    A = _as_square(A)
    if depth < 1:
        raise NumericalInputError(f"depth must be at least 1, got {depth}")
    if not np.isfinite(duration) or duration < 0:
        raise NumericalInputError(f"duration must be finite and non-negative, got {duration}")
    B = duration * 2.0 ** -depth * A
    if np.linalg.norm(B, 1) <= TAYLOR_NORM:
        term = B
        increment = B.copy()
        for k in range(2, TAYLOR_TERMS + 1):
            term = term @ B / k
            increment += term
    else:
        increment = scipy.linalg.expm(B) - np.eye(A.shape[0])

    ladder = np.empty((depth,) + A.shape)
    ladder[-1] = increment
    for level in range(depth - 2, -1, -1):
        finer = ladder[level + 1]
        ladder[level] = 2.0 * finer + finer @ finer
    return ladder


def propagate_distribution(Q: np.ndarray, p0: np.ndarray, t: float) -> np.ndarray:
    """Solve the master equation: returns exp(tQ)ᵀ p0."""
    Q = _as_square(Q, "rate matrix")
    p0 = np.asarray(p0, dtype=float)
    if p0.shape != (Q.shape[0],):
        raise NumericalInputError(
            f"distribution of length {p0.shape} does not match rate matrix {Q.shape}"
        )
    p = p0 @ matrix_exponential(Q, t)
    return np.clip(p, 0.0, None)


def stationary_distribution(Q: np.ndarray) -> np.ndarray:
    """Normalised left null vector of an irreducible rate matrix."""
    Q = _as_square(Q, "rate matrix")
    basis = scipy.linalg.null_space(Q.T)
    if basis.shape[1] != 1:
        raise NumericalInputError(
            f"rate matrix has a {basis.shape[1]}-dimensional stationary space"
        )
    vector = basis[:, 0]
    return np.abs(vector) / np.abs(vector).sum()
