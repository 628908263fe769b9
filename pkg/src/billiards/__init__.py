"""Numerical toolkit for convex planar billiards near the boundary."""

from .curves import CurveSpec, ConvexCurve, build_curve, curvature_at
from .errors import (BilliardsError, ValidationError, NumericalError,
                     NonConvex, DegenerateSpec, OutOfDomain, EscapesDomain)

__all__ = [
    "CurveSpec", "ConvexCurve", "build_curve", "curvature_at",
    "BilliardsError", "ValidationError", "NumericalError",
    "NonConvex", "DegenerateSpec", "OutOfDomain", "EscapesDomain",
]

__version__ = "0.1.0"
