"""Right-hand sides and derived quantities of the quaternionic Riccati equation."""

from .coefficients import (
    TAU_ZERO,
    CoefficientEvaluator,
    DerivedCoefficients,
    LinearSystemRHS,
    MatrixRiccatiRHS,
    RealRHS,
    derived_coefficients,
    linear_system_rhs,
    matrix_riccati_rhs,
    real_rhs,
)
from .fivers import Fiver, FiverCheck, FiverMaps, build_fivers, check_fiver_eps, eval_W
from .quadrature import CumulativeIntegral, adaptive_simpson, quad_Igh
from .transforms import Transform, transform_coefficients, transform_of

__all__ = [
    "TAU_ZERO", "CoefficientEvaluator", "DerivedCoefficients", "LinearSystemRHS", "MatrixRiccatiRHS",
    "RealRHS", "derived_coefficients", "linear_system_rhs", "matrix_riccati_rhs", "real_rhs",
    "Fiver", "FiverCheck", "FiverMaps", "build_fivers", "check_fiver_eps", "eval_W",
    "CumulativeIntegral", "adaptive_simpson", "quad_Igh",
    "Transform", "transform_coefficients", "transform_of",
]
