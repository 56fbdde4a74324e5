"""Exception types shared across the lab."""


class BMLabError(Exception):
    """Base class for all lab errors."""


class DomainError(BMLabError, ValueError):
    """An argument lies outside the domain of an operation."""


class ResolutionError(BMLabError):
    """The path is too coarse for the requested geometric scale."""


class BudgetExceededError(BMLabError):
    """Refinement would exceed the allowed budget.

    ``partial`` carries whatever could be computed before giving up.
    """

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class DegenerateFitError(BMLabError):
    """Not enough non-zero data to fit a model."""


class ToleranceError(BMLabError):
    """Quadrature did not reach the requested tolerance."""

    def __init__(self, message, error_bound=float("nan")):
        super().__init__(message)
        self.error_bound = error_bound


class ConfigError(BMLabError):
    """Malformed or unknown configuration."""
