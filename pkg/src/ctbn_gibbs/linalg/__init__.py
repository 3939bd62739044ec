"""Small dense-matrix numerics."""

from .propagators import (
    matrix_exponential,
    propagate_distribution,
    squaring_ladder,
    stationary_distribution,
)

__all__ = [
    "matrix_exponential",
    "propagate_distribution",
    "squaring_ladder",
    "stationary_distribution",
]
