"""Exception hierarchy shared by all modules."""


class ConeHeatError(Exception):
    """Base class for library errors."""


class DomainError(ConeHeatError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class BesselOverflowError(ConeHeatError, OverflowError):
    """Unscaled value does not fit in a double; use the scaled form."""


class DiscontinuityError(DomainError):
    """Angle sits on a jump of the contour term E(z, v)."""


class PreconditionError(DomainError):
    """Caller violated a documented precondition."""


class UnsupportedConfigurationError(ConeHeatError, ValueError):
    """Configuration the implementation deliberately does not cover."""
