"""Exception types shared across the package."""


class HiddenConvexError(Exception):
    """Base class for all package errors."""


class DomainError(HiddenConvexError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class InfeasiblePointError(DomainError):
    """A point violates the feasible set; the message names the constraint."""


class ConfigurationError(HiddenConvexError):
    """A required constant, parameter, or config key is missing or invalid."""


class UnsupportedOperationError(HiddenConvexError):
    """The operation is not defined for this set kind or problem class."""


class ScheduleError(HiddenConvexError):
    """A schedule violates the hypothesis inequalities of its regime."""


class ConvergenceFailureError(HiddenConvexError):
    """An inner solver exhausted its budget before reaching tolerance."""

    def __init__(self, message, best_residual=None, iterations=None):
        super().__init__(message)
        self.best_residual = best_residual
        self.iterations = iterations


class InternalConsistencyError(HiddenConvexError):
    """A state arose that the problem's structural conditions rule out."""


class DiagnosticsError(HiddenConvexError):
    """A problem instance failed its structural certification."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report
