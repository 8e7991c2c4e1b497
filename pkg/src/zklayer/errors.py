"""Exception types raised across the package."""


class ZKError(Exception):
    """Base class for all package errors."""


class DomainError(ZKError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class DataError(ZKError, ValueError):
    """Input data is not finite or otherwise unusable."""


class UsageError(ZKError, ValueError):
    """An operation was called in a way its contract does not allow."""


class ConfigError(ZKError, ValueError):
    """An experiment configuration failed to parse or validate.

    ``field`` names the offending key (dotted path) and ``line`` the
    1-based line of the document, when known.
    """

    def __init__(self, message, field=None, line=None):
        self.field = field
        self.line = line
        where = []
        if field is not None:
            where.append(f"field '{field}'")
        if line is not None:
            where.append(f"line {line}")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)


class ConvergenceError(ZKError, RuntimeError):
    """A fixed-point iteration diverged."""


class InstabilityError(ZKError, RuntimeError):
    """The time stepper produced non-finite values."""

    def __init__(self, message, step=None):
        self.step = step
        super().__init__(message)
