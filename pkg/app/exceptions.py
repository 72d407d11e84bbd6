"""Error hierarchy for the laboratory.

Input problems and numerical failures are kept apart so the command line can
map them to distinct exit codes.
"""
from typing import Optional


class CesaroLabError(Exception):
    """Base class for every error raised by the laboratory."""

    exit_code = 1


class InvalidInputError(CesaroLabError, ValueError):
    """Malformed input or a parameter outside the declared range."""

    exit_code = 1


class NumericalError(CesaroLabError):
    """A numerical procedure could not certify its result.

    Attributes:
        achieved_error: Best error estimate reached before giving up, if known.
    """

    exit_code = 2

    def __init__(self, message: str, achieved_error: Optional[float] = None):
        super().__init__(message)
        self.achieved_error = achieved_error

    def __str__(self) -> str:
        base = super().__str__()
        if self.achieved_error is None:
            return base
        return f"{base} (achieved error {self.achieved_error:.3e})"


class QuadratureError(NumericalError):
    """Adaptive quadrature did not converge or the integral diverges."""


class CancellationError(NumericalError):
    """A compensated sum lost more digits than the tolerance allows."""
