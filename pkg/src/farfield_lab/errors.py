"""Exception types raised across the package."""


class FarFieldLabError(Exception):
    """Base class for all package errors."""


class DomainError(FarFieldLabError, ValueError):
    """Argument outside the domain of a map or chart."""


class GeometryError(FarFieldLabError, ValueError):
    """Medium support does not fit inside the computational box."""


class ConvergenceError(FarFieldLabError, RuntimeError):
    """Iterative solver exceeded its iteration budget."""


class SingularMatrixError(FarFieldLabError, RuntimeError):
    """LU pivot breakdown (near-resonant discretization)."""


class NonconvergenceError(FarFieldLabError, RuntimeError):
    """Series truncation did not reach its decay certificate."""


class InsufficientSignal(FarFieldLabError, ValueError):
    """Too few coefficients above the noise floor to fit a decay rate."""


class OutOfRadius(FarFieldLabError, ValueError):
    """Evaluation point outside the trust region of a Taylor model."""
