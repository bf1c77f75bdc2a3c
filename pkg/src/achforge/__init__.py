"""Numerical toolkit for complex hyperbolic space and glued ACH Einstein data."""

__version__ = "0.1.0"

from . import chyp, einstein, jet, nu, preglue, sampling, tensor  # noqa: E402,F401
from .chyp import (  # noqa: E402,F401
    HoroPoint,
    ProjectivePoint,
    Region,
    chyp_metric,
    chyp_metric_siegel,
    conversion_K,
    dilation_H,
    inversion_I,
)
from .tensor import MetricField, Sym2Field, curvature  # noqa: E402,F401
