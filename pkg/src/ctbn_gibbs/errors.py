"""
Exception hierarchy for the CTBN Gibbs sampler.

Each error carries the process exit code the command-line entry point
reports when it escapes a subcommand.
"""

from typing import Any, Optional, Tuple


class CTBNError(Exception):
    """Base class for all library errors."""

    exit_code: int = 1


class ModelValidationError(CTBNError):
    """A model document violates the CTBN invariants."""

    exit_code = 2

    def __init__(self, message: str, report: Optional[Any] = None):
        super().__init__(message)
        self.report = report


class EvidenceError(CTBNError):
    """Evidence is malformed or internally inconsistent."""

    exit_code = 2


class ConfigurationError(CTBNError):
    """An experiment configuration is invalid."""

    exit_code = 2


class ZeroProbabilityEvidenceError(CTBNError):
    """Evidence has probability zero under the model (and current blanket)."""

    exit_code = 3

    def __init__(
        self,
        message: str,
        component: Optional[int] = None,
        window: Optional[Tuple[float, float]] = None,
    ):
        if component is not None:
            message = f"{message} (component {component}"
            if window is not None:
                message += f", window [{window[0]:.6g}, {window[1]:.6g}]"
            message += ")"
        super().__init__(message)
        self.component = component
        self.window = window


class StateSpaceTooLargeError(CTBNError):
    """The amalgamated state space exceeds the oracle cap."""


class UnsupportedEvidenceError(CTBNError):
    """The exact oracle cannot represent the given evidence."""


class NumericalInputError(CTBNError, ValueError):
    """Non-finite, ill-shaped or out-of-range numerical input."""
