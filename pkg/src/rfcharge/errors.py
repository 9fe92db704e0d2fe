"""Exception types raised across the package."""


class RfChargeError(Exception):
    """Base class for all package errors."""


class InvalidParameterError(RfChargeError, ValueError):
    pass


class SingularGeometryError(RfChargeError, ValueError):
    pass


class DegenerateProblemError(RfChargeError, ValueError):
    pass


class NumericalFailure(RfChargeError, ArithmeticError):
    pass


class ConfigError(RfChargeError, ValueError):
    """Configuration schema or invariant violation.

    ``field`` names the offending key (dotted path) when known.
    """

    def __init__(self, message, field=None):
        self.field = field
        if field is not None:
            message = f"{field}: {message}"
        super().__init__(message)
