"""Exception types shared across the package."""


class GuessworkError(Exception):
    """Base class for package-specific failures."""


class ValidationError(GuessworkError, ValueError):
    """Malformed distribution, model, or argument."""


class CapExceededError(GuessworkError, RuntimeError):
    """A materialization or enumeration guard was exceeded."""


class NumericError(GuessworkError, RuntimeError):
    """An iterative routine failed to converge."""
