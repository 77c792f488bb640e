"""Shared exception and warning types."""


class FunGraphError(Exception):
    """Base class for all package errors."""


class ConfigError(FunGraphError):
    """Invalid configuration or parameter values."""


class DataError(FunGraphError):
    """Malformed or inconsistent input data."""


class DimensionMismatch(DataError):
    """Array shapes are incompatible with each other or with the grid."""


class IncompatibleGrid(ConfigError):
    """Grid length incompatible with the requested basis construction."""


class RankDeficient(DataError):
    """A basis matrix does not have full row rank."""


class NotPositiveDefinite(FunGraphError):
    """A matrix required to be positive definite is not."""


class DegenerateRates(ConfigError):
    """Hypoexponential rates are not strictly positive and pairwise distinct."""


class DomainError(ConfigError):
    """Argument outside the mathematical domain of an operation."""


class LossyRepresentation(UserWarning):
    """Basis truncation lost more energy than the configured tolerance."""


class AllGridZero(UserWarning):
    """Every proposal grid point had zero density; state left unchanged."""
