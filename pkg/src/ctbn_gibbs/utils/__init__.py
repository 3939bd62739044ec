"""Utility functions for the CTBN Gibbs sampler."""

from .logging_config import setup_logging

__all__ = [
    "setup_logging",
]
