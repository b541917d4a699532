"""Exception hierarchy shared by all lptnsim modules."""


class LptnError(Exception):
    """Base class for every error raised by this package."""


class ShapeError(LptnError):
    """Tensor/matrix dimensions are inconsistent with the requested operation."""


class ValidationError(LptnError):
    """An input violates a documented precondition (normalization, Hermiticity, ...)."""


class ContractViolationError(LptnError):
    """An internal contract was broken (wrong orthogonality center, non-Hermitian input, ...)."""


class CapacityError(LptnError):
    """A dense reconstruction or exact propagation exceeds the configured size cap."""


class NumericError(LptnError):
    """A numerical routine failed to converge or overflowed."""


class CompletePositivityError(LptnError):
    """A Choi matrix is negative beyond tolerance; the map is not completely positive."""


class ConfigError(LptnError):
    """A run configuration document is malformed; the message names the offending key."""
