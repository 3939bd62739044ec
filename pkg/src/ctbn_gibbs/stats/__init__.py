"""Sufficient statistics, Monte Carlo averages and error metrics."""

from .sufficient_stats import (
    DEFAULT_ERROR_THRESHOLD,
    STATS_COLUMNS,
    SufficientStats,
    accumulate_stats,
    average_relative_error,
    mean_stats,
    relative_error,
    trajectory_log_likelihood,
)

__all__ = [
    "DEFAULT_ERROR_THRESHOLD",
    "STATS_COLUMNS",
    "SufficientStats",
    "accumulate_stats",
    "average_relative_error",
    "mean_stats",
    "relative_error",
    "trajectory_log_likelihood",
]
