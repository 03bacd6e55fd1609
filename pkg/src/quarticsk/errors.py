"""Exception types shared across the package."""


class QuarticSKError(Exception):
    """Base class for package errors."""


class ResourceLimitError(QuarticSKError):
    """A requested computation exceeds a configured size or work cap."""


class BudgetExceededError(ResourceLimitError):
    """A sweep's estimated work exceeds its budget; raised before any work starts."""

    def __init__(self, message, estimate=None, budget=None):
        super().__init__(message)
        self.estimate = estimate
        self.budget = budget


class EmptyBandError(QuarticSKError, ValueError):
    """The magnetization band contains no point of the grid {-1 + 2k/N}."""

    def __init__(self, message, nearest=()):
        super().__init__(message)
        self.nearest = tuple(nearest)
