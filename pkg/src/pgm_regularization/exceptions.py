"""
Exception hierarchy for the pgm-regularization workbench.
"""

from typing import Optional


class PGMRegularizationError(Exception):
    """Base class for all errors raised by this package."""


class InvalidInputError(PGMRegularizationError, ValueError):
    """Raised on non-finite values, bad arguments or dimension mismatches."""


class DomainError(InvalidInputError):
    """Raised when an argument lies outside the domain of a formula."""


class StateSpaceTooLargeError(InvalidInputError):
    """Raised when exhaustive enumeration of a Potts state space is requested above the cap."""


class NoRootError(PGMRegularizationError, RuntimeError):
    """Raised when no sign-changing bracket can be found for a residual."""


class BracketError(NoRootError):
    """Raised when a supplied bracket does not straddle a root."""


class ConvergenceError(PGMRegularizationError, RuntimeError):
    """Raised when an iterative solver hits its iteration cap.

    Attributes:
        last_value: Last monitored quantity (dual gap, gradient norm or iterate).
    """

    def __init__(self, message: str, last_value: Optional[float] = None):
        super().__init__(message)
        self.last_value = last_value


class DegenerateSolutionError(PGMRegularizationError, ArithmeticError):
    """Raised when the inferred couplings vanish and a ratio is undefined."""


class InvariantViolationError(PGMRegularizationError, AssertionError):
    """Raised when two independent evaluations of the same quantity disagree."""
