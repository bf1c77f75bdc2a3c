"""The gauged Einstein operator and its linearization.

The module also holds the Weitzenbock check on Einstein 4-manifolds with the
(+) Weyl action on ``Lambda^2_+ (x) Lambda^2_-``.  Rate measurements use the
least-squares decay fit here, and the weighted L^2 integrability test on
complex hyperbolic space lives at the end.
"""

from __future__ import annotations

import logging
from math import gamma
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.special import roots_jacobi, roots_legendre

from . import chyp as C
from . import jet as J
from .tensor import (
    EINSTEIN_TOL,
    MetricField,
    Sym2Field,
    christoffel_jet,
    covariant_derivative_jet,
    curvature,
    metric_jet,
    norm2,
    ring_action,
    ring_action_frame,
    riemann_up_jet,
    rough_laplacian,
    second_covariant_derivative,
    self_dual_basis,
    weyl_minus_tensor,
    weyl_plus_tensor,
)

log = logging.getLogger(__name__)

__all__ = [
    "einstein_residual",
    "gauged_operator_Phi",
    "bianchi_gauge",
    "linearized_L",
    "psi_basis",
    "WeitzenbockTerms",
    "weitzenbock_terms",
    "trace_free_part",
    "weitzenbock_residual",
    "trace_equation",
    "wplus_action_alpha",
    "DecayFit",
    "decay_fit",
    "L2Verdict",
    "l2_weight_integrability",
]


def _einstein_constant(g: MetricField, n: Optional[int]) -> float:
    if n is None:
        n = g.dim // 2
    return (n + 1) / 2.0


def einstein_residual(g: MetricField, n: Optional[int], p):
    """``Ric + (n+1)/2 g`` at ``p`` and its pointwise norm."""
    pk = curvature(g, p)
    E = pk.ricci + _einstein_constant(g, n) * pk.metric
    return E, float(np.sqrt(norm2(E, pk.metric_inv)))


def bianchi_gauge(g: MetricField, h: MetricField, p, order: int = 1):
    """``delta^g h + (1/2) d tr^g h`` as a 1-form jet of the given order."""
    Gj = metric_jet(g, p, order + 1)
    Hj = metric_jet(h, p, order + 1)
    gam = christoffel_jet(Gj)  # order `order`
    Dh = covariant_derivative_jet(Hj, gam)  # [i, k, j]
    ginv = J.inv(Gj.lower())
    div = J.einsum("ik,ikj->j", ginv, Dh) * (-1.0)
    tr = J.einsum("ab,ab->", J.inv(Gj), Hj)
    return div + tr.grad() * 0.5


def gauged_operator_Phi(g: MetricField, h: MetricField, p, n: Optional[int] = None) -> np.ndarray:
    """``Ric^h + (n+1)/2 h + (delta^h)^* (delta^g h + d tr^g h / 2)`` at ``p``.

    The adjoint ``(delta^h)^*`` of the divergence is the symmetrized
    Levi-Civita derivative of ``h``.
    """
    p = np.asarray(p, dtype=float)
    Hj = metric_jet(h, p, 2)
    H0 = Hj.value
    if np.linalg.eigvalsh(H0).min() <= 0:
        raise ValueError("h is degenerate at the requested point")
    rup = riemann_up_jet(Hj).value
    ric = np.einsum("iijk->jk", rup)
    ric = 0.5 * (ric + ric.T)
    beta = bianchi_gauge(g, h, p, 1)
    gam_h = christoffel_jet(Hj.lower()).value
    Db = beta.grad().value - np.einsum("mij,m->ij", gam_h, beta.value)
    return ric + _einstein_constant(h, n) * H0 + 0.5 * (Db + Db.T)


def linearized_L(g: MetricField, hdot, p, n: Optional[int] = None) -> np.ndarray:
    """``(1/2) nabla^* nabla h - R h + (Ric o h + h o Ric)/2 + (n+1)/2 h``."""
    p = np.asarray(p, dtype=float)
    pk = curvature(g, p)
    h0 = np.asarray(J.value(hdot(p)), dtype=float)
    lap = rough_laplacian(hdot, g, p)
    comp = pk.ricci @ pk.metric_inv @ h0
    return (0.5 * lap - ring_action(pk, h0) + 0.5 * (comp + comp.T)
            + _einstein_constant(g, n) * h0)


# ------------------------------------------------------------- Weitzenbock
def _skew(coeffs: np.ndarray) -> np.ndarray:
    """4x4 matrix ``Omega[s, t] = omega(e_s, e_t)`` from pair coefficients."""
    Om = np.zeros((4, 4))
    k = 0
    for s in range(4):
        for t in range(s + 1, 4):
            Om[s, t] = coeffs[k]
            Om[t, s] = -coeffs[k]
            k += 1
    return Om


def psi_basis(orientation: int = 1):
    """Forms and the isomorphism ``Lambda^2_+ (x) Lambda^2_- -> S^2_0``.

    Returns ``(Op, Om, S)``: the (+) and (-) forms as 3 matrices each and
    ``S[a, b] = Psi(omega+_a (x) omega-_b)`` where
    ``Psi(a (x) b)(u, v) = <A u, B v>`` and ``A, B`` are the skew
    endomorphisms ``w -> <x, w> y - <y, w> x`` attached to ``x ^ y``.
    """
    P, Q = self_dual_basis(orientation)
    Op = np.array([_skew(r) for r in P])
    Om = np.array([_skew(r) for r in Q])
    # The endomorphism of a form with matrix Omega is -Omega.
    S = np.einsum("asu,bsv->abuv", -Op, -Om)
    return Op, Om, S


@dataclass
class WeitzenbockTerms:
    """Frame components of both sides of the identity at one point."""

    lhs: np.ndarray
    dd: np.ndarray
    wminus: np.ndarray
    scal_term: np.ndarray
    h: np.ndarray

    @property
    def rhs(self) -> np.ndarray:
        return self.dd - self.wminus - self.scal_term

    @property
    def residual(self) -> float:
        return float(np.linalg.norm(self.lhs - self.rhs))


def trace_free_part(hdot, g: MetricField) -> Sym2Field:
    """The field ``h - (tr_g h / dim) g``."""
    dim = g.dim

    def f(x):
        H = hdot(x)
        G = g(x)
        tr = J.einsum("ab,ab->", J.inv(G), H)
        return H - G * (tr * (1.0 / dim))

    return Sym2Field(f, dim, name="trace-free part")


def weitzenbock_terms(g: MetricField, hdot, p, orientation: Optional[int] = None,
                      einstein_tol: float = EINSTEIN_TOL) -> WeitzenbockTerms:
    """Both sides of ``(1/2) nabla^* nabla - R = d+ d+^* - W- - s/12``."""
    p = np.asarray(p, dtype=float)
    if g.dim != 4:
        raise ValueError("the Weitzenbock check needs a 4-dimensional metric")
    if orientation is None:
        orientation = g.complex_orientation
    pk = curvature(g, p, orientation)
    ric0 = pk.traceless_ricci_frame()
    e_res = float(np.linalg.norm(ric0))
    if e_res > einstein_tol:
        raise ValueError(f"metric is not Einstein at the point (traceless Ricci {e_res:.3e})")
    E = pk.frame
    h_raw = np.asarray(J.value(hdot(p)), dtype=float)
    tr_raw = float(np.einsum("ab,ab->", pk.metric_inv, h_raw))
    if abs(tr_raw) > 1e-10 * max(1.0, np.abs(h_raw).max()):
        log.warning("projecting input onto its trace-free part (trace %.3e)", tr_raw)
    h0 = trace_free_part(hdot, g)
    ddh = second_covariant_derivative(h0, g, p)  # [l, k, i, j]
    T = np.einsum("lkij,la,kb,ic,jd->abcd", ddh, E, E, E, E)
    hf = E.T @ np.asarray(J.value(h0(p))) @ E
    Rf = pk.riemann_frame()
    lap = -np.einsum("aacd->cd", T)
    lhs = 0.5 * lap - ring_action_frame(Rf, hf)

    Op, Om, S = psi_basis(orientation)
    Smat = S.reshape(9, 16).T  # columns are basis tensors
    coeff = np.linalg.lstsq(Smat, T.reshape(16, 16).T, rcond=None)[0]  # [ab, xy]
    c = coeff.T.reshape(4, 4, 3, 3)  # c[x, y, a, b]
    F = np.einsum("xyab,ast->xystb", c, Op)  # (nabla^2_{x,y} beta)(e_s, e_t) (b passive)
    # (d delta beta)(x, y) = -sum_i [F(x, i, i, y) - F(y, i, i, x)]
    D = -(np.einsum("xiiyb->xyb", F) - np.einsum("yiixb->xyb", F))
    norms = np.einsum("ast,ast->a", Op, Op)
    e = np.einsum("xyb,axy->ab", D, Op) / norms[:, None]
    dd = np.einsum("ab,abuv->uv", e, S)

    Wm = weyl_minus_tensor(pk, orientation)
    wminus = ring_action_frame(Wm, hf)
    return WeitzenbockTerms(lhs=lhs, dd=dd, wminus=wminus, scal_term=pk.scalar / 12.0 * hf, h=hf)


def weitzenbock_residual(g: MetricField, hdot, p, orientation: Optional[int] = None,
                         drop_wminus: bool = False) -> float:
    """Frobenius norm (orthonormal frame) of LHS - RHS of the identity."""
    t = weitzenbock_terms(g, hdot, p, orientation)
    rhs = t.dd - t.scal_term - (0.0 if drop_wminus else t.wminus)
    return float(np.linalg.norm(t.lhs - rhs))


def trace_equation(g: MetricField, phi, p):
    """Trace of ``((1/2) nabla^* nabla - R)(phi g)`` and ``(1/2) Lap tr - (s/4) tr``.

    Returns both numbers; the second uses the scalar Laplacian of ``tr h``.
    """
    p = np.asarray(p, dtype=float)
    pk = curvature(g, p)
    dim = g.dim
    h = Sym2Field(lambda x: g(x) * phi(x), dim)
    lap = rough_laplacian(h, g, p)
    lhs_t = 0.5 * lap - ring_action(pk, np.asarray(J.value(h(p))))
    trace_lhs = float(np.einsum("ab,ab->", pk.metric_inv, lhs_t))
    # scalar Laplacian of tr h = dim * phi: -g^{ij}(d_i d_j f - Gamma^k_ij d_k f)
    x = J.seed(p, 2)
    f = phi(x) * float(dim)
    hess = f.derivative_tensor(2)
    grad = f.derivative_tensor(1)
    lapf = -np.einsum("ij,ij->", pk.metric_inv, hess - np.einsum("kij,k->ij", pk.christoffel, grad))
    tr = float(f.value)
    return trace_lhs, 0.5 * lapf - pk.scalar / 4.0 * tr


def wplus_action_alpha(g: MetricField, xi_coeffs, p, orientation: Optional[int] = None,
                       spectrum_tol: float = 1e-6):
    """Ratio ``W+ (omega xi) / (omega xi)`` for the (+) eigenform omega.

    ``xi_coeffs`` are the coefficients of an anti-self-dual form in the basis
    of :func:`achforge.tensor.self_dual_basis`.  Returns ``(ratio, spread)``,
    where ``spread`` is the largest deviation among component-wise ratios.
    """
    p = np.asarray(p, dtype=float)
    if orientation is None:
        orientation = g.complex_orientation
    pk = curvature(g, p, orientation)
    s = pk.scalar
    ev, vec = np.linalg.eigh(pk.weyl_plus)
    target = np.array(sorted([s / 6.0, -s / 12.0, -s / 12.0]))
    if np.abs(np.sort(ev) - target).max() > spectrum_tol * max(1.0, abs(s)):
        raise ValueError(f"W+ spectrum {ev} does not match (s/6, -s/12, -s/12)")
    i = int(np.argmin(np.abs(ev - s / 6.0)))
    omega = vec[:, i]
    Op, Om, S = psi_basis(orientation)
    xi = np.asarray(xi_coeffs, dtype=float)
    h = np.einsum("a,b,abuv->uv", omega, xi, S)
    if np.abs(h).max() == 0:
        return 0.0, 0.0
    Wp = weyl_plus_tensor(pk, orientation)
    out = ring_action_frame(Wp, h)
    ratio = float(np.sum(out * h) / np.sum(h * h))
    mask = np.abs(h) > 1e-8 * np.abs(h).max()
    comp = out[mask] / h[mask]
    return ratio, float(np.abs(comp - ratio).max())


# --------------------------------------------------------------- decay fits
@dataclass
class DecayFit:
    slope: float
    intercept: float
    r2: float
    npoints: int
    stderr: float = 0.0

    def band(self, z: float = 2.0):
        return self.slope - z * self.stderr, self.slope + z * self.stderr


def decay_fit(samples: Sequence) -> DecayFit:
    """Least squares on ``(log scale, log value)``."""
    arr = np.asarray(samples, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2 or arr.shape[0] < 4:
        raise ValueError("decay_fit needs at least 4 (scale, value) pairs")
    if np.any(arr <= 0) or not np.all(np.isfinite(arr)):
        raise ValueError("decay_fit needs positive finite data")
    x, y = np.log(arr[:, 0]), np.log(arr[:, 1])
    (slope, intercept), cov = np.polyfit(x, y, 1, cov="unscaled")
    resid = y - (slope * x + intercept)
    ss_res = float(resid @ resid)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot
    dof = max(len(x) - 2, 1)
    stderr = float(np.sqrt(cov[0, 0] * ss_res / dof))
    return DecayFit(float(slope), float(intercept), float(r2), len(x), stderr)


# ------------------------------------------------------ weighted L^2 check
@dataclass
class L2Verdict:
    verdict: str
    delta: float
    delta_prime: float
    n: int
    far_slope: float
    far_shells: list = field(default_factory=list)
    near_shells: list = field(default_factory=list)
    partial_sums: list = field(default_factory=list)

    @property
    def convergent(self) -> bool:
        return self.verdict == "convergent"


def _shell_integral(delta, dprime, n, r_lo, r_hi, eps, nodes=24):
    """``int f^delta hat_f^(n - delta') dvol`` over ``r_lo <= |z_n| < r_hi``.

    Coordinates: ``z_n = r e^{i theta}``, ``u = s r cos(theta)``,
    ``|W|^2 = 4 r cos(theta) (1 - s)``.  The endpoint singularities in ``s``
    and ``sin(theta)`` are absorbed by Gauss-Jacobi rules; the radial
    direction uses Gauss-Legendre in ``log r``.
    """
    a_s = n - 2.0                      # (1 - s)^(n-2) from the W-sphere
    b_s = delta - dprime - 1.0         # s^(delta - delta' - 1) from u
    ps, ws = roots_jacobi(nodes, a_s, b_s)
    s_nodes = 0.5 * (ps + 1.0)
    s_w = ws * 0.5 ** (a_s + b_s + 1.0)
    p_exp = n + delta - dprime - 2.0   # power of cos(theta)
    at = 0.5 * (p_exp - 1.0)
    pt, wt = roots_jacobi(nodes, at, at)
    pr, wr = roots_legendre(nodes)
    lr = 0.5 * (np.log(r_hi) - np.log(r_lo)) * pr + 0.5 * (np.log(r_hi) + np.log(r_lo))
    wr = wr * 0.5 * (np.log(r_hi) - np.log(r_lo))
    sphere = 2.0 * np.pi ** (n - 1) / gamma(n - 1)  # area of S^{2n-3}
    R, T, S = np.meshgrid(np.exp(lr), pt, s_nodes, indexing="ij")
    W = wr[:, None, None] * wt[None, :, None] * s_w[None, None, :]
    cth = np.sqrt(1.0 - T * T)
    c = R * cth
    u = S * c
    wsq = 4.0 * c * (1.0 - S)
    x = (u + 0.25 * wsq) ** 2 + (R * T) ** 2
    fh = C.hat_f_array(u, x, eps)
    dens = u ** (delta - n - 1.0) * fh ** (n - dprime)
    # r dr = r^2 dlog r, dtheta = dt / cos, dW = |S| 2^(2n-3) c^(n-1) (1-s)^(n-2) ds
    jac = R * R * sphere * 2.0 ** (2 * n - 3) * c ** (n - 1) * (1.0 - S) ** (n - 2) / cth
    rule_weight = S ** b_s * (1.0 - S) ** a_s * cth ** (p_exp - 1.0)
    return float(np.sum(W * dens * jac / rule_weight))


def l2_weight_integrability(delta: float, delta_prime: float, n: int = 2, shells: int = 8,
                            eps: float = 0.1, slope_tol: float = 0.02) -> L2Verdict:
    """Decide whether ``f^(delta/2)`` lies in the weighted space ``L^2_{delta'}``.

    The weight is ``hat_f``.  The integral is split into dyadic shells in
    ``|z_n|``: towards the point at infinity (``|z_n| -> inf``) and towards
    the origin.  Each shell integral is evaluated by quadrature; the verdict
    is ``convergent`` when both sequences of shell integrals decay
    geometrically (log-log slope below ``-slope_tol``).
    """
    if not (0 < delta_prime < delta):
        raise ValueError("need 0 < delta' < delta")
    far = [(2.0 ** k, _shell_integral(delta, delta_prime, n, 2.0 ** k, 2.0 ** (k + 1), eps))
           for k in range(2, 2 + shells)]
    near = [(2.0 ** -(k + 1), _shell_integral(delta, delta_prime, n, 2.0 ** -(k + 1), 2.0 ** -k, eps))
            for k in range(2, 2 + shells)]
    far_fit = decay_fit(far)
    near_fit = decay_fit([(1.0 / a, v) for a, v in near])
    ok = far_fit.slope < -slope_tol and near_fit.slope < -slope_tol
    partial = list(np.cumsum([v for _, v in far]))
    return L2Verdict("convergent" if ok else "divergent", delta, delta_prime, n, far_fit.slope,
                     far, near, partial)
