"""Exception types shared across the package."""


class CritnetError(Exception):
    """Base class for package errors."""


class ParameterError(CritnetError, ValueError):
    """A parameter violates a documented precondition."""

    def __init__(self, name, message):
        self.name = name
        super().__init__(f"{name}: {message}")


class ConvergenceError(CritnetError, ArithmeticError):
    """A numerical routine failed its own accuracy check."""


class InsufficientDataError(CritnetError, ValueError):
    """Too few samples (or bins) to compute the requested estimate."""
