"""Exception taxonomy shared across the toolkit.

The CLI maps these onto exit codes: ConfigError -> 1, DataError -> 2,
NumericalError -> 3.
"""


class DataSelectError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(DataSelectError):
    """Invalid configuration, flags, or parameter values."""


class DataError(DataSelectError):
    """Malformed or inconsistent input data."""


class ParseError(DataError):
    """A file failed to parse; carries the offending line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class NumericalError(DataSelectError):
    """A numerical procedure diverged or produced non-finite values."""
