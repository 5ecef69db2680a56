"""Exception and warning types raised across the package."""


class FracChainError(Exception):
    """Base class for all package errors."""


class DomainError(FracChainError, ValueError):
    """Input outside the domain of an operation (non-finite state, bad order...)."""


class RangeError(FracChainError, OverflowError):
    """Result not representable as a finite double."""


class PreconditionError(FracChainError, ValueError):
    """Operation called on inputs that violate its stated precondition."""


class ConfigError(FracChainError, ValueError):
    """Malformed or inconsistent run configuration."""


class IntegrationError(FracChainError, RuntimeError):
    """Time integration failed at a given step."""

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class DivergenceError(IntegrationError):
    """The integrated state became non-finite."""


class NonPhysicalParameterWarning(UserWarning):
    """Refuge fractions outside [0, 1): allowed, but not ecologically meaningful."""
