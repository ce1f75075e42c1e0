"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """Invalid or inconsistent user-supplied configuration (grids, keys, ranges)."""


class NumericalError(ArithmeticError):
    """A numerical evaluation produced a non-finite or otherwise unusable value."""


class ConformalBreakdownError(RuntimeError):
    """The conformal surface parametrization degenerated (Jacobian loss)."""

    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time
