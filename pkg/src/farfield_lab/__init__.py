"""Far field patterns of penetrable media in 2-D and numerical checks of their joint analyticity."""

__version__ = "0.1.0"

from .errors import (  # noqa: F401
    ConvergenceError,
    DomainError,
    GeometryError,
    InsufficientSignal,
    NonconvergenceError,
    OutOfRadius,
    SingularMatrixError,
)
