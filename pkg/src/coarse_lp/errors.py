"""Exception types shared across the package."""


class BudgetExceededError(RuntimeError):
    """A construction would exceed the configured vertex budget."""

    def __init__(self, what, needed, budget):
        super().__init__(f"{what}: needs more than {budget} vertices (reached {needed})")
        self.needed = needed
        self.budget = budget


class NonConvergenceError(RuntimeError):
    """An iterative solver stopped before reaching its tolerance."""

    def __init__(self, message, residual, iterations):
        super().__init__(f"{message} (residual {residual:.3e} after {iterations} iterations)")
        self.residual = residual
        self.iterations = iterations


class RegionError(ValueError):
    """A quantity depends on vertices outside the represented region."""
