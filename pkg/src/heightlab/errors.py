"""Exception types shared across the package."""


class HeightLabError(Exception):
    """Base class for all package errors."""


class ParseError(HeightLabError):
    """Malformed field, scalar, vector, or matrix text."""

    def __init__(self, message: str, position: int | None = None):
        if position is not None:
            message = f"{message} (at position {position})"
        super().__init__(message)
        self.position = position


class DegenerateInputError(HeightLabError):
    """Input lies in a subspace where the requested quantity is undefined."""


class ResourceBudgetError(HeightLabError):
    """Entry bit-size budget exceeded during matrix power computation."""


class NumericError(HeightLabError):
    """A float computation failed its validation corridor."""
