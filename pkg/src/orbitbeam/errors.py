"""Exception types shared across the package."""


class OrbitbeamError(Exception):
    """Base class for all package errors."""


class ArgumentError(OrbitbeamError, ValueError):
    """An argument is outside the domain an operation accepts."""


class ConfigurationError(OrbitbeamError, ValueError):
    """A configuration cannot be resolved into a runnable plan."""


class NumericFailure(OrbitbeamError, ArithmeticError):
    """A numerical procedure failed to converge.

    ``partial`` carries whatever intermediate value(s) were available.
    """

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class ZFUnavailable(OrbitbeamError, ArithmeticError):
    """The Gram matrix of a trial is too ill-conditioned for zero-forcing."""
