"""Exception types shared across the package."""


class ShapeError(ValueError):
    """Array dimensions are incompatible with an operation's contract."""


class ContractError(RuntimeError):
    """An operation was called in a state its contract forbids."""


class NumericError(ArithmeticError):
    """A computation produced (or received) NaN/Inf values."""


class ConfigError(ValueError):
    """Invalid configuration: bad value, unknown key, or inconsistent setup."""


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of a formula."""


class DivergenceError(RuntimeError):
    """Adversarial training diverged; carries the trace collected so far."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


class ConvergenceError(RuntimeError):
    """An iterative solve did not converge; carries the iterate trajectory."""

    def __init__(self, message, trajectory=None):
        super().__init__(message)
        self.trajectory = trajectory
