"""Coordinate tensor calculus for Riemannian metrics given as callables.

A metric is a function from a coordinate vector to a symmetric matrix.  The
function must be written with the jet-aware helpers in :mod:`achforge.jet`
(or plain arithmetic operators), so that evaluating it on a seeded jet yields
exact derivatives.

Curvature conventions used throughout::

    R(X, Y)Z = nabla_X nabla_Y Z - nabla_Y nabla_X Z - nabla_[X,Y] Z
    R^l_{ijk} = d_i Gamma^l_{jk} - d_j Gamma^l_{ik}
                + Gamma^l_{im} Gamma^m_{jk} - Gamma^l_{jm} Gamma^m_{ik}
    R_{ijkl} = g(R(e_i, e_j) e_k, e_l)          (so R_{ijji} > 0 on spheres)
    Ric_{jk} = R^i_{ijk}
    (R-ring h)(u, v) = sum_i h(R(e_i, u) v, e_i) (equals (tr h) g - h on S^n)

With these signs the curvature operator on 2-forms is the identity on the
round sphere.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import jet as J
from .jet import Jet

__all__ = [
    "MetricField",
    "Sym2Field",
    "CurvaturePackage",
    "orthonormal_frame",
    "gram_schmidt",
    "metric_jet",
    "christoffel",
    "christoffel_jet",
    "riemann_up_jet",
    "curvature",
    "sectional_curvature",
    "ring_action",
    "ring_action_frame",
    "weyl_tensor_frame",
    "weyl_split_4d",
    "weyl_minus_tensor",
    "weyl_plus_tensor",
    "lambda2_pairs",
    "self_dual_basis",
    "operator_from_tensor",
    "tensor_from_operator",
    "covariant_derivative_jet",
    "covariant_derivative",
    "second_covariant_derivative",
    "rough_laplacian",
    "norm2",
    "EINSTEIN_TOL",
]

EINSTEIN_TOL = 1e-6


class _Field:
    """Callable wrapper carrying the chart dimension."""

    def __init__(self, func: Callable, dim: int, name: str = "", complex_orientation: int = 1):
        self.func = func
        self.dim = int(dim)
        self.name = name or getattr(func, "__name__", "field")
        # Orientation of the chart relative to a preferred (e.g. complex)
        # orientation; used as the default by orientation-dependent operators.
        self.complex_orientation = int(complex_orientation)

    def __call__(self, x):
        return self.func(x)

    def jet(self, p, order: int) -> Jet:
        """Evaluate on an identity-seeded jet at ``p``."""
        p = np.asarray(p, dtype=float)
        if p.shape != (self.dim,):
            raise ValueError(f"{self.name}: expected a point of dimension {self.dim}")
        out = self.func(J.seed(p, order))
        if not isinstance(out, Jet):
            # Constant field: promote to a jet with vanishing derivatives.
            tmpl = J.seed(p, order)
            out = J.zeros_like_jet(tmpl, np.shape(out)) + np.asarray(out, dtype=float)
        return out

    def at(self, p) -> np.ndarray:
        return np.asarray(J.value(self.func(np.asarray(p, dtype=float))))


class MetricField(_Field):
    """Smooth Riemannian metric on a coordinate chart."""


class Sym2Field(_Field):
    """Smooth symmetric covariant 2-tensor field on a coordinate chart."""


def orthonormal_frame(G: np.ndarray) -> np.ndarray:
    """Gram-Schmidt frame of the coordinate basis; columns are the vectors.

    The frame is upper triangular with positive diagonal, hence it carries the
    orientation of the chart.
    """
    L = np.linalg.cholesky(np.asarray(G, dtype=float))
    return np.linalg.inv(L).T


def gram_schmidt(G, basis=None):
    """Orthonormalize ``basis`` (columns, default identity) for the form ``G``.

    Works on plain arrays and on jets, so frames can be differentiated.
    """
    m = G.shape[0]
    cols = []
    for j in range(m):
        if basis is None:
            e = np.zeros(m)
            e[j] = 1.0
            v = e
        else:
            v = basis[:, j]
        for c in cols:
            v = v - J.einsum("a,ab,b->", c, G, v) * c
        nrm = J.sqrt(J.einsum("a,ab,b->", v, G, v))
        cols.append(v * (1.0 / nrm))
    return J.stack(cols, axis=1)


def metric_jet(g: MetricField, p, order: int) -> Jet:
    G = g.jet(p, order)
    return (G + G.T) * 0.5


def christoffel_jet(G: Jet) -> Jet:
    """Christoffel symbols ``Gamma[k, i, j]`` as a jet of one order less."""
    dG = G.grad()  # dG[a, b, c] = d_a g_bc
    first = (dG + dG.transpose(1, 0, 2) - dG.transpose(1, 2, 0)) * 0.5  # [i, j, l]
    ginv = J.inv(G.lower())
    return J.einsum("kl,ijl->kij", ginv, first)


def christoffel(g: MetricField, p) -> np.ndarray:
    """Christoffel symbols ``Gamma[k, i, j] = Gamma^k_{ij}`` at ``p``."""
    return christoffel_jet(metric_jet(g, p, 1)).value


def riemann_up_jet(G: Jet) -> Jet:
    """``Rup[l, i, j, k] = R^l_{ijk}`` as a jet two orders below ``G``."""
    gam = christoffel_jet(G)
    dgam = gam.grad()  # [m, k, i, j]
    g0 = gam.lower()
    lin = dgam.transpose(1, 0, 2, 3) - dgam.transpose(1, 2, 0, 3)
    quad = J.einsum("lim,mjk->lijk", g0, g0) - J.einsum("ljm,mik->lijk", g0, g0)
    return lin + quad


def lambda2_pairs(dim: int):
    return list(itertools.combinations(range(dim), 2))


def operator_from_tensor(T: np.ndarray) -> np.ndarray:
    """Matrix of a curvature-type 4-tensor acting on 2-forms (frame basis).

    Entry ``[(ab), (cd)]`` equals ``T[a, b, d, c]``; this is the identity for
    the round unit sphere.
    """
    pairs = lambda2_pairs(T.shape[0])
    M = np.empty((len(pairs), len(pairs)))
    for r, (a, b) in enumerate(pairs):
        for c_, (c, d) in enumerate(pairs):
            M[r, c_] = T[a, b, d, c]
    return M


def tensor_from_operator(M: np.ndarray, dim: int) -> np.ndarray:
    """Inverse of :func:`operator_from_tensor` for symmetric operators."""
    pairs = lambda2_pairs(dim)
    T = np.zeros((dim,) * 4)
    for r, (a, b) in enumerate(pairs):
        for c_, (c, d) in enumerate(pairs):
            v = M[r, c_]
            T[a, b, d, c] = v
            T[b, a, d, c] = -v
            T[a, b, c, d] = -v
            T[b, a, c, d] = v
    return T


def self_dual_basis(orientation: int = 1):
    """Orthonormal bases of the (+) and (-) eigenspaces of the Hodge star.

    Returned as two 3x6 arrays whose rows are coefficient vectors in the
    basis ``e_a ^ e_b`` (a < b) of an oriented orthonormal frame.  With
    ``orientation=-1`` the frame is negatively oriented and the two roles are
    exchanged.
    """
    pairs = lambda2_pairs(4)
    idx = {p: i for i, p in enumerate(pairs)}

    def form(*terms):
        v = np.zeros(6)
        for sgn, p in terms:
            v[idx[p]] += sgn
        return v / np.sqrt(2.0)

    sd = np.array([form((1, (0, 1)), (1, (2, 3))),
                   form((1, (0, 2)), (-1, (1, 3))),
                   form((1, (0, 3)), (1, (1, 2)))])
    asd = np.array([form((1, (0, 1)), (-1, (2, 3))),
                    form((1, (0, 2)), (1, (1, 3))),
                    form((1, (0, 3)), (-1, (1, 2)))])
    if orientation not in (1, -1):
        raise ValueError("orientation must be +1 or -1")
    return (sd, asd) if orientation == 1 else (asd, sd)


@dataclass
class CurvaturePackage:
    """Curvature data of a metric at one point.

    Frame quantities refer to :func:`orthonormal_frame` of the metric.
    """

    point: np.ndarray
    metric: np.ndarray
    metric_inv: np.ndarray
    christoffel: np.ndarray
    riemann_up: np.ndarray
    riemann: np.ndarray
    ricci: np.ndarray
    scalar: float
    frame: np.ndarray
    orientation: int = 1
    weyl_plus: Optional[np.ndarray] = field(default=None, repr=False)
    weyl_minus: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def dim(self) -> int:
        return self.metric.shape[0]

    def riemann_frame(self) -> np.ndarray:
        E = self.frame
        return np.einsum("ijkl,ia,jb,kc,ld->abcd", self.riemann, E, E, E, E)

    def ricci_frame(self) -> np.ndarray:
        E = self.frame
        return E.T @ self.ricci @ E

    def traceless_ricci_frame(self) -> np.ndarray:
        return self.ricci_frame() - self.scalar / self.dim * np.eye(self.dim)


def curvature(g: MetricField, p, orientation: int = 1) -> CurvaturePackage:
    """Full curvature package of ``g`` at ``p``.

    In dimension four the Weyl blocks are filled in for the given
    orientation (+1 means the chart orientation).
    """
    p = np.asarray(p, dtype=float)
    G = metric_jet(g, p, 2)
    G0 = G.value
    if not np.all(np.isfinite(G0)):
        raise ValueError("metric is not finite at the requested point")
    evals = np.linalg.eigvalsh(G0)
    if evals.min() <= 0:
        raise ValueError(f"metric is not positive definite at {p} (min eigenvalue {evals.min():.3e})")
    ginv = np.linalg.inv(G0)
    gam = christoffel_jet(G.lower()).value
    rup = riemann_up_jet(G).value
    rdown = np.einsum("lm,mijk->ijkl", G0, rup)
    ric = np.einsum("iijk->jk", rup)
    ric = 0.5 * (ric + ric.T)
    scal = float(np.einsum("jk,jk->", ginv, ric))
    pkg = CurvaturePackage(point=p, metric=G0, metric_inv=ginv, christoffel=gam,
                           riemann_up=rup, riemann=rdown, ricci=ric, scalar=scal,
                           frame=orthonormal_frame(G0), orientation=orientation)
    if G0.shape[0] == 4:
        pkg.weyl_plus, pkg.weyl_minus = weyl_split_4d(pkg, orientation)
    return pkg


def sectional_curvature(pkg: CurvaturePackage, X, Y) -> float:
    """Sectional curvature of the plane spanned by coordinate vectors X, Y."""
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    G = pkg.metric
    denom = (X @ G @ X) * (Y @ G @ Y) - (X @ G @ Y) ** 2
    if denom <= 1e-14 * max((X @ G @ X) * (Y @ G @ Y), 1e-300):
        raise ValueError("sectional curvature needs linearly independent vectors")
    num = np.einsum("ijkl,i,j,k,l->", pkg.riemann, X, Y, Y, X)
    return float(num / denom)


def ring_action(pkg: CurvaturePackage, h) -> np.ndarray:
    """Action of the curvature on a symmetric 2-tensor (coordinate components)."""
    h = np.asarray(h, dtype=float)
    return np.einsum("aq,mabc,mq->bc", pkg.metric_inv, pkg.riemann_up, h)


def ring_action_frame(T: np.ndarray, h: np.ndarray) -> np.ndarray:
    """Same contraction for a frame 4-tensor and frame components of h."""
    return np.einsum("iuvm,mi->uv", T, h)


def weyl_tensor_frame(pkg: CurvaturePackage) -> np.ndarray:
    """Weyl tensor in the orthonormal frame (dimension >= 3)."""
    m = pkg.dim
    if m < 3:
        raise ValueError("Weyl tensor needs dimension >= 3")
    R = pkg.riemann_frame()
    ric = pkg.ricci_frame()
    P = (ric - pkg.scalar / (2.0 * (m - 1)) * np.eye(m)) / (m - 2)
    d = np.eye(m)
    kn = (np.einsum("jk,il->ijkl", P, d) + np.einsum("il,jk->ijkl", P, d)
          - np.einsum("ik,jl->ijkl", P, d) - np.einsum("jl,ik->ijkl", P, d))
    return R - kn


def weyl_split_4d(pkg: CurvaturePackage, orientation: int = 1):
    """Blocks of the Weyl operator on the (+) and (-) parts of the 2-forms.

    Returns two symmetric trace-free 3x3 matrices in the orthonormal bases of
    :func:`self_dual_basis`.
    """
    if pkg.dim != 4:
        raise ValueError("Weyl splitting requires a 4-dimensional metric")
    M = operator_from_tensor(weyl_tensor_frame(pkg))
    P, Q = self_dual_basis(orientation)
    wp = P @ M @ P.T
    wm = Q @ M @ Q.T
    return 0.5 * (wp + wp.T), 0.5 * (wm + wm.T)


def weyl_plus_tensor(pkg: CurvaturePackage, orientation: int = 1) -> np.ndarray:
    """Frame 4-tensor of the (+) Weyl block alone."""
    wp, _ = weyl_split_4d(pkg, orientation)
    P, _ = self_dual_basis(orientation)
    return tensor_from_operator(P.T @ wp @ P, 4)


def weyl_minus_tensor(pkg: CurvaturePackage, orientation: int = 1) -> np.ndarray:
    """Frame 4-tensor of the (-) Weyl block alone."""
    _, wm = weyl_split_4d(pkg, orientation)
    _, Q = self_dual_basis(orientation)
    return tensor_from_operator(Q.T @ wm @ Q, 4)


def covariant_derivative_jet(T: Jet, gam: Jet) -> Jet:
    """Levi-Civita derivative of a covariant tensor jet.

    ``T`` has all indices down; ``gam`` is the Christoffel jet with order one
    less than ``T``.  The derivative index is prepended.
    """
    r = T.ndim
    letters = "abcdefgh"[:r]
    out = T.grad()
    T0 = T.lower()
    for s in range(r):
        t_in = letters[:s] + "y" + letters[s + 1:]
        out = out - J.einsum(f"yz{letters[s]},{t_in}->z{letters}", gam, T0)
    return out


def _field_jet(T, p, order: int) -> Jet:
    if isinstance(T, _Field):
        return T.jet(p, order)
    out = T(J.seed(np.asarray(p, dtype=float), order))
    return out


def covariant_derivative(T, g: MetricField, p) -> np.ndarray:
    """``(nabla T)[k, i, j]`` at ``p`` for a covariant tensor field T."""
    Tj = _field_jet(T, p, 1)
    gam = christoffel_jet(metric_jet(g, p, 1))
    return covariant_derivative_jet(Tj, gam.lower(0)).value


def second_covariant_derivative(T, g: MetricField, p) -> np.ndarray:
    """``(nabla nabla T)[l, k, ...] = (nabla_l (nabla T))_k...`` at ``p``."""
    Tj = _field_jet(T, p, 2)
    gam = christoffel_jet(metric_jet(g, p, 2))  # order 1
    dT = covariant_derivative_jet(Tj, gam)  # order 1
    return covariant_derivative_jet(dT, gam.lower()).value


def rough_laplacian(T, g: MetricField, p) -> np.ndarray:
    """``nabla^* nabla T = - g^{lk} nabla_l nabla_k T``."""
    ddT = second_covariant_derivative(T, g, p)
    ginv = np.linalg.inv(g.at(p))
    return -np.einsum("lk,lk...->...", ginv, ddT)


def norm2(h: np.ndarray, ginv: np.ndarray) -> float:
    """Squared pointwise norm of a covariant 2-tensor."""
    return float(np.einsum("ia,jb,ij,ab->", ginv, ginv, h, h))
