class BorellLabError(Exception):
    """Base class for all errors raised by the package."""


class DomainError(BorellLabError, ValueError):
    pass


class ConfigurationError(BorellLabError, ValueError):
    pass


class TrivialFunctionError(BorellLabError, ValueError):
    """Raised when a construction needs a nontrivial function (not a.e. 0 or 1)."""


class UnsupportedGeometryError(BorellLabError, NotImplementedError):
    pass


class RegimeError(BorellLabError, ValueError):
    """Coefficients do not match the regime an operation requires."""


class ConstructionError(BorellLabError, ValueError):
    pass


class UnsupportedRepresentationError(BorellLabError, NotImplementedError):
    """The operation needs a symbolic representation the input does not have."""
