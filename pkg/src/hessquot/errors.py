"""Exception types shared across the package."""

from __future__ import annotations


class InvalidDegreeError(ValueError):
    """Requested degree of an elementary symmetric function is out of range."""


class NotAdmissibleError(ValueError):
    """Eigenvalues are outside the Garding cone required by the operator."""

    def __init__(self, message: str, margin: float, node: int | None = None, residual=None):
        super().__init__(message)
        self.margin = margin
        self.node = node
        self.residual = residual


class InfeasibleSpecError(ValueError):
    """A sampling request whose constraints cannot be satisfied."""


class SamplingExhaustedError(RuntimeError):
    """Rejection sampling ran out of its attempt budget."""


class OutOfDomainError(ValueError):
    """Point lies outside the closed domain."""


class OutOfCollarError(ValueError):
    """Point lies outside the boundary collar where the distance is smooth."""


class SolverError(RuntimeError):
    """Base class for nonlinear solver failures."""


class LineSearchError(SolverError):
    """Backtracking shrank the Newton step below the minimum."""


class ContinuationError(SolverError):
    """Homotopy step size fell below its floor."""

    def __init__(self, message: str, last_t: float, report=None):
        super().__init__(message)
        self.last_t = last_t
        self.report = report


class ExpressionSyntaxError(ValueError):
    """Malformed expression text. ``offset`` is a 1-based byte position."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class ExpressionDomainError(ArithmeticError):
    """Expression evaluation left the domain of an operation."""


class ConfigError(ValueError):
    """Run configuration failed schema or consistency checks."""
