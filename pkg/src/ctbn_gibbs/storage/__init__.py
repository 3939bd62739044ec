"""Persistence of documents and result tables."""

from .result_store import TRAJECTORY_COLUMNS, ResultStore, trajectories_frame

__all__ = ["TRAJECTORY_COLUMNS", "ResultStore", "trajectories_frame"]
