"""Exception types shared across psflow packages."""


class InvalidParameterError(ValueError):
    """A numeric argument is outside its valid range."""


class ConfigurationError(ValueError):
    """A sketch or detector configuration violates its invariants."""


class TraceFormatError(ValueError):
    """A trace file line could not be parsed."""

    def __init__(self, message: str, line_number: int | None = None):
        self.line_number = line_number
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)


class ConsistencyError(RuntimeError):
    """An internal invariant of a data structure no longer holds."""
