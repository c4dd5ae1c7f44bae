"""Exception types shared across the package."""


class CloneForgeError(Exception):
    """Base class for package-specific errors."""


class BudgetExceededError(CloneForgeError):
    """An exhaustive enumeration would exceed the configured budget.

    This is a recoverable condition, not a verdict: callers should either
    retry with a specialized checker or report the check as inconclusive.
    """

    def __init__(self, message, *, required=None, budget=None):
        super().__init__(message)
        self.required = required
        self.budget = budget


class GuardExceededError(CloneForgeError):
    """A closure computation hit one of its feasibility guards."""
