"""Exception types shared across the package."""


class InvalidInput(ValueError):
    """An argument violates a documented precondition."""


class NoConvergence(RuntimeError):
    """An iterative solve exhausted its iteration budget."""


class DegenerateDenominator(RuntimeError):
    """A fixed-point denominator fell below the safe-division floor."""


class NumericalFailure(RuntimeError):
    """A linear-algebra kernel failed or a numerical sanity check broke."""


class ConfigError(InvalidInput):
    """A run configuration failed validation; carries the offending field."""

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")
