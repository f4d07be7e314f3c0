"""Heat kernel of flat cones C_beta x R^m and the estimates built on it."""

from .errors import (
    BesselOverflowError,
    ConeHeatError,
    DiscontinuityError,
    DomainError,
    PreconditionError,
    UnsupportedConfigurationError,
)

__version__ = "0.1.0"

__all__ = [
    "BesselOverflowError",
    "ConeHeatError",
    "DiscontinuityError",
    "DomainError",
    "PreconditionError",
    "UnsupportedConfigurationError",
    "__version__",
]
