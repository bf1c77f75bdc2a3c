"""Reference metrics and tensor fields used for cross-checks."""

from __future__ import annotations

import numpy as np

from . import jet as J
from .tensor import MetricField, Sym2Field

__all__ = [
    "flat_metric",
    "round_sphere",
    "real_hyperbolic",
    "product_h2h2",
    "scaled_metric",
    "polynomial_sym2",
    "random_polynomial_sym2",
]


def flat_metric(dim: int = 4) -> MetricField:
    return MetricField(lambda x: np.eye(dim) + x[0] * 0.0, dim, name="flat")


def round_sphere(dim: int = 4) -> MetricField:
    """Unit sphere in stereographic coordinates: ``4|dx|^2 / (1+|x|^2)^2``."""
    def g(x):
        r2 = J.einsum("i,i->", x, x)
        return np.eye(dim) * (4.0 / ((1.0 + r2) * (1.0 + r2)))

    return MetricField(g, dim, name="round sphere")


def real_hyperbolic(dim: int = 4) -> MetricField:
    """Curvature -1 ball model: ``4|dx|^2 / (1-|x|^2)^2``."""
    def g(x):
        r2 = J.einsum("i,i->", x, x)
        return np.eye(dim) * (4.0 / ((1.0 - r2) * (1.0 - r2)))

    return MetricField(g, dim, name="real hyperbolic")


def product_h2h2() -> MetricField:
    """Product of two curvature -1 half-planes, coordinates ``(x1, y1, x2, y2)``."""
    P = np.diag([1.0, 1.0, 0.0, 0.0])
    Q = np.diag([0.0, 0.0, 1.0, 1.0])

    def g(x):
        return P * (1.0 / (x[1] * x[1])) + Q * (1.0 / (x[3] * x[3]))

    return MetricField(g, 4, name="H2 x H2")


def scaled_metric(g: MetricField, c: float) -> MetricField:
    return MetricField(lambda x: g(x) * c, g.dim, name=f"{c} * {g.name}",
                       complex_orientation=g.complex_orientation)


def polynomial_sym2(A, B, C) -> Sym2Field:
    """``h_ij(x) = A_ij + B_ijk x_k + C_ijkl x_k x_l`` (symmetrized in ``ij``)."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    C = np.asarray(C, dtype=float)
    A = 0.5 * (A + A.T)
    B = 0.5 * (B + B.transpose(1, 0, 2))
    C = 0.5 * (C + C.transpose(1, 0, 2, 3))
    dim = A.shape[0]

    def h(x):
        return A + J.einsum("ijk,k->ij", B, x) + J.einsum("ijkl,k,l->ij", C, x, x)

    return Sym2Field(h, dim, name="polynomial")


def random_polynomial_sym2(rng: np.random.Generator, dim: int = 4, scale: float = 1.0) -> Sym2Field:
    """Random quadratic symmetric 2-tensor field."""
    return polynomial_sym2(scale * rng.normal(size=(dim, dim)),
                           scale * rng.normal(size=(dim, dim, dim)),
                           0.3 * scale * rng.normal(size=(dim, dim, dim, dim)))
