"""Second-order-cone programming: problem container, interior-point solver, KKT audit."""

from .ipm import DEFAULT_MAX_ITERS, DEFAULT_TOL, solve
from .program import ConicProgram, DimensionError, Dual, SolverResult, kkt_residuals

__all__ = [
    "ConicProgram",
    "DimensionError",
    "Dual",
    "SolverResult",
    "DEFAULT_MAX_ITERS",
    "DEFAULT_TOL",
    "kkt_residuals",
    "solve",
]
