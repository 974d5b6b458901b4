"""Exception types raised across the package."""


class QxferError(Exception):
    """Base class for all package errors."""


class ParameterError(QxferError, ValueError):
    """A physical or protocol parameter is outside its valid range."""


class DomainError(QxferError, ValueError):
    """A function was evaluated outside its domain."""


class ConfigError(QxferError, ValueError):
    """A simulation or sweep configuration is inconsistent."""


class SingularConfigurationError(QxferError, ArithmeticError):
    """A circuit configuration hits a pole of the model."""


class RangeError(QxferError, ValueError):
    """A requested target lies outside the reachable range."""


class CutoffError(QxferError, ValueError):
    """A truncation cutoff is too small for the requested accuracy."""

    def __init__(self, message, required):
        super().__init__(message)
        self.required = required
