"""Approximate Einstein data near boundary points and the 1-handle assembly.

The ambient manifold is represented in standardized coordinates near a
boundary point: a collar ``u > 0`` with the model contact form ``eta0`` and a
user supplied CR structure ``J1`` (anchored so that ``J1 = J0`` at the origin)
plus a symmetric correction ``kappa``.  Everything here works in the
horospherical chart ``(u, v, x_1, y_1, ...)`` of :mod:`achforge.chyp`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import chyp as C
from . import jet as J
from .jet import Jet
from .tensor import MetricField, Sym2Field, gram_schmidt

__all__ = [
    "cutoff_chi",
    "chi_tau",
    "GluingParams",
    "GluedCR",
    "glued_J",
    "GluedMetric",
    "glued_metric",
    "default_kappa",
    "glued_potential",
    "KleinConfiguration",
    "klein_assemble",
    "f_check",
    "weight_sharp",
    "log_weight_gradient",
    "FrameField",
    "adapted_frame",
    "lie_bracket",
    "frame_brackets",
]


# ------------------------------------------------------------------ cutoffs
def _psi(t):
    """``exp(-1/t)`` for ``t > 0`` and 0 otherwise (jet-capable)."""
    tv = float(np.asarray(J.value(t)))
    if tv <= 0.0:
        return t * 0.0
    return J.exp(-1.0 / t)


def cutoff_chi(s):
    """Smooth step: 0 for ``s <= 1/3``, 1 for ``s >= 2/3``, increasing between."""
    sv = float(np.asarray(J.value(s)))
    if sv <= 1.0 / 3.0:
        return s * 0.0
    if sv >= 2.0 / 3.0:
        return s * 0.0 + 1.0
    a = _psi(s - 1.0 / 3.0)
    b = _psi(2.0 / 3.0 - s)
    return a / (a + b)


def chi_tau(h, tau: Sequence[float]):
    """``chi((|z_n| - tau0) / (tau1 - tau0))`` at a horo point (jet-capable)."""
    t0, t1 = float(tau[0]), float(tau[1])
    if not t0 < t1:
        raise ValueError("cutoff needs tau0 < tau1")
    r = J.sqrt(C.zn_modulus2(h))
    return cutoff_chi((r - t0) * (1.0 / (t1 - t0)))


# ---------------------------------------------------------------- parameters
@dataclass(frozen=True)
class GluingParams:
    """Radii of the two surgery sides.

    ``lam[j] = (lambda_0^j, lambda_1^j)`` and ``tau[j] = (tau_0^j, tau_1^j)``.
    The twist (phase ``theta`` and unitary block ``U``) parametrizes the
    freedom in the identification.
    """

    lam: tuple
    tau: tuple
    theta: float = 0.0
    U: Optional[tuple] = None
    rtol: float = 1e-12

    def __post_init__(self):
        lam = tuple(tuple(float(x) for x in row) for row in self.lam)
        tau = tuple(tuple(float(x) for x in row) for row in self.tau)
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "tau", tau)
        self.validate()

    @classmethod
    def from_scales(cls, lambda1: float, tau1: float, theta: float = 0.0, U=None) -> "GluingParams":
        """Symmetric parameters from ``lambda_1`` and ``tau_1``."""
        lam = (lambda1 ** 2, lambda1)
        tau = (tau1 / 2.0, tau1)
        return cls((lam, lam), (tau, tau), theta, None if U is None else _freeze(U))

    def validate(self) -> None:
        if len(self.lam) != 2 or len(self.tau) != 2:
            raise ValueError("gluing parameters need two sides")
        for j in range(2):
            l0, l1 = self.lam[j]
            t0, t1 = self.tau[j]
            if not (0 < l0 < l1 < t0 < t1 < 1):
                raise ValueError(f"side {j}: need 0 < lambda0 < lambda1 < tau0 < tau1 < 1")
            if abs(t0 - t1 / 2.0) > self.rtol * t1:
                raise ValueError(f"side {j}: need tau0 = tau1/2")
            if abs(l0 - l1 * l1) > self.rtol * l0:
                raise ValueError(f"side {j}: need lambda0 = lambda1^2")
        for k in range(2):
            if abs(self.lam[0][k] - self.lam[1][k]) > self.rtol * self.lam[0][k]:
                raise ValueError("both sides must use the same lambda radii")
        if abs(self.lam[0][0] * self.lam[0][1] - self.lam[1][0] * self.lam[1][1]) > \
                self.rtol * self.lam[0][0] * self.lam[0][1]:
            raise ValueError("products lambda0*lambda1 differ between the sides")

    @property
    def K(self) -> float:
        return float(np.sqrt(self.lam[0][1] / self.lam[0][0]))

    @property
    def m(self) -> float:
        """Geometric mean ``sqrt(lambda0 lambda1)`` (the identified disk radius)."""
        return float(np.sqrt(self.lam[0][0] * self.lam[0][1]))

    def twist_matrix(self, n: int) -> np.ndarray:
        if self.U is None:
            return np.eye(n - 1, dtype=complex)
        U = np.asarray(self.U, dtype=complex)
        if U.shape != (n - 1, n - 1):
            raise ValueError("twist block has the wrong size")
        return U

    def to_dict(self) -> dict:
        d = {"lambda": [list(r) for r in self.lam], "tau": [list(r) for r in self.tau],
             "theta": self.theta, "K": self.K}
        if self.U is not None:
            U = np.asarray(self.U, dtype=complex)
            d["U_real"] = U.real.tolist()
            d["U_imag"] = U.imag.tolist()
        return d


def _freeze(U):
    U = np.asarray(U, dtype=complex)
    return tuple(tuple(complex(x) for x in row) for row in U)


# ------------------------------------------------------------ glued CR data
class GluedCR:
    """``J_tau(u, v, W) = J1(chi^2 v, chi W)`` with ``chi = chi_tau``.

    Frame matrices refer to the contact frame ``(X_k, Y_k)``.  Points are
    horospherical; ``u = 0`` gives boundary values.
    """

    def __init__(self, J1: C.CRStructure, tau: Sequence[float], anchor_tol: float = 1e-12):
        self.J1 = J1
        self.n = J1.n
        self.tau = (float(tau[0]), float(tau[1]))
        if not self.tau[0] < self.tau[1]:
            raise ValueError("cutoff needs tau0 < tau1")
        origin = np.zeros(2 * self.n - 1)
        j_origin = np.asarray(J.value(J1(origin)))
        if np.abs(j_origin - C.J0_matrix(self.n)).max() > anchor_tol:
            raise ValueError("anchoring condition violated: J1 differs from J0 at the origin")

    def chi(self, h):
        return chi_tau(h, self.tau)

    def scaled_point(self, h):
        x = self.chi(h)
        comps = [x * x * h[1]]
        for k in range(2, h.shape[0]):
            comps.append(x * h[k])
        return J.stack(comps)

    def frame_matrix(self, h):
        return self.J1(self.scaled_point(h))

    def gamma(self, h):
        return J.einsum("ab,bc->ac", C.omega_matrix(self.n), self.frame_matrix(h))

    def __call__(self, h):
        return self.frame_matrix(h)


def glued_J(J1: C.CRStructure, tau: Sequence[float], q) -> np.ndarray:
    """``J_tau`` at a boundary point ``q = (v, x_1, y_1, ...)`` of ``P_0``."""
    q = np.asarray(q, dtype=float)
    return np.asarray(J.value(GluedCR(J1, tau).frame_matrix(np.concatenate([[0.0], q]))))


def default_kappa(n: int = 2, amplitude: float = 1.0, coeffs=None, support: float = 2.0 / 3.0) -> Sym2Field:
    """``kappa = w * psi(u) * B`` with ``B`` constant in the model coframe.

    The coframe is ``(du/u, eta0/u, dx_k/sqrt(u), dy_k/sqrt(u))``, in which
    ``g^CH`` is the identity; ``psi`` cuts off for ``u >= support``.  Thus
    ``|nabla^k kappa| = O(w)`` with ``w = sqrt(u)``.
    """
    dim = 2 * n
    if coeffs is None:
        rng = np.random.default_rng(12345)
        A = rng.normal(size=(dim, dim))
        B = 0.5 * (A + A.T)
        B = B / np.linalg.norm(B, 2)
    else:
        B = np.asarray(coeffs, dtype=float)
        B = 0.5 * (B + B.T)
    B = amplitude * B

    def kappa(h):
        u = h[0]
        rows = [J.stack([1.0 / u] + [0.0] * (dim - 1))]
        rows.append(C._eta0_coeffs(h, n) * (1.0 / u))
        su = 1.0 / J.sqrt(u)
        for k in range(2, dim):
            e = [0.0] * dim
            e[k] = 1.0
            rows.append(J.stack(e) * su)
        Theta = J.stack(rows)  # Theta[a, i] = component i of coframe a
        w = J.sqrt(u)
        cut = 1.0 - cutoff_chi(u * (1.0 / support))
        return J.einsum("ai,ab,bj->ij", Theta, B, Theta) * (w * cut)

    return Sym2Field(kappa, dim, name="kappa")


class GluedMetric(MetricField):
    """``g_tau = (du^2 + eta0^2)/u^2 + gamma_tau/u + chi_tau kappa``."""

    def __init__(self, J1: C.CRStructure, tau: Sequence[float], kappa: Optional[Sym2Field] = None,
                 side: int = 0):
        self.cr = GluedCR(J1, tau)
        self.kappa = kappa
        self.side = side
        n = J1.n
        self.n = n
        dim = 2 * n
        du = np.zeros(dim)
        du[0] = 1.0
        self._dudu = np.outer(du, du)
        super().__init__(self._eval, dim, name=f"g_tau(side={side})",
                         complex_orientation=C.HORO_COMPLEX_ORIENTATION)

    def _eval(self, h):
        n, dim = self.n, self.dim
        u = h[0]
        if np.any(J.value(u) <= 0):
            raise ValueError("glued metric needs u > 0")
        eta = C._eta0_coeffs(h, n)
        ee = J.einsum("i,j->ij", eta, eta)
        inv_u = 1.0 / u
        gam = self.cr.gamma(h)
        gam = (gam + gam.T) * 0.5 if isinstance(gam, Jet) else 0.5 * (gam + gam.T)
        emb = np.zeros((dim - 2, dim))
        emb[:, 2:] = np.eye(dim - 2)
        Gw = J.einsum("ai,ab,bj->ij", emb, gam, emb)
        G = (ee + self._dudu) * (inv_u * inv_u) + Gw * inv_u
        if self.kappa is not None:
            G = G + self.kappa(h) * self.cr.chi(h)
        return G

    def check_positive(self, h) -> None:
        ev = np.linalg.eigvalsh(self.at(h))
        if ev.min() <= 0:
            raise ValueError(f"gluing destroyed positivity at {np.asarray(h)}")


def glued_metric(J1: C.CRStructure, kappa: Optional[Sym2Field], tau: Sequence[float], p) -> np.ndarray:
    """Value of :class:`GluedMetric` at one point, with the positivity check."""
    g = GluedMetric(J1, tau, kappa)
    g.check_positive(p)
    return g.at(p)


# --------------------------------------------------------- Kahler potentials
def glued_potential(u_ambient: Callable, phi_ambient: Callable, tau: Sequence[float]):
    """Interpolated defining function and Kahler potential (Siegel chart).

    Returns callables ``(u_tau, phi_tau)``.  With ``tau2 = sqrt(tau0 tau1)``,
    ``u_tau = (1 - chi') f + chi' u`` for the cutoff on ``(tau0, tau2)`` and
    ``phi_tau = -ln u_tau + chi'' (phi + ln u)`` for the cutoff on ``(tau2, tau1)``.
    """
    t0, t1 = float(tau[0]), float(tau[1])
    if not t0 < t1:
        raise ValueError("cutoff needs tau0 < tau1")
    t2 = float(np.sqrt(t0 * t1))

    def chi_s(s, a, b):
        W, zn = C.siegel_complex(s)
        r = J.sqrt(J.absolute2(zn))
        return cutoff_chi((r - a) * (1.0 / (b - a)))

    def u_tau(s):
        c1 = chi_s(s, t0, t2)
        f = C.height_siegel(s)
        return (1.0 - c1) * f + c1 * u_ambient(s)

    def phi_tau(s):
        c2 = chi_s(s, t2, t1)
        ua = u_tau(s)
        return -1.0 * J.log(ua) + c2 * (phi_ambient(s) + J.log(u_ambient(s)))

    return u_tau, phi_tau


# -------------------------------------------------------- Klein assembly
def f_check(q, eps: float = 0.1):
    """``f * (f o I_1) / hat_f`` at a horo point; ``I_1``-invariant.

    It equals ``f`` near ``|z_n| = K`` and ``f o I_1`` near ``|z_n| = 1/K``.
    """
    u = q[0]
    return u * C.I1_pullback_f(q) / C.hat_f(q, eps)


@dataclass
class KleinConfiguration:
    """Charts and identification maps of the 1-handle construction.

    Side ``j`` has the annulus ``V_j = {lambda0 <= |z_n| < lambda1}`` in its
    standardized chart; the reference annulus is ``{1/K <= |z_n| < K}``.
    ``Phi[j]`` maps the reference annulus onto ``V_j`` and the identification
    is ``iota = Phi[1] o S o Phi[0]^{-1}`` with ``S`` the inversion ``I_1``
    (sharp variant) or the conversion ``K_1`` (flat variant).
    """

    params: GluingParams
    n: int
    variant: str
    Phi: tuple
    S: C.Isometry
    metrics: tuple = ()
    eps: float = 0.1

    @property
    def reference(self) -> C.Region:
        return C.Region("Annulus", (1.0 / self.params.K, self.params.K))

    def annulus(self, j: int) -> C.Region:
        l0, l1 = self.params.lam[j]
        return C.Region("Annulus", (l0, l1))

    @property
    def identification(self) -> C.Isometry:
        return self.Phi[1].compose(self.S).compose(self.Phi[0].inverse())

    def iota(self, h):
        """Identification ``V_0 -> V_1`` on horo coordinates (jet-capable)."""
        return self.identification.on_horo(h)

    def to_reference(self, j: int, h):
        """Reference-annulus point corresponding to ``h`` in ``V_j``."""
        if j == 0:
            return self.Phi[0].inverse().on_horo(h)
        return self.S.inverse().on_horo(self.Phi[1].inverse().on_horo(h))

    def from_reference(self, j: int, q):
        if j == 0:
            return self.Phi[0].on_horo(q)
        return self.Phi[1].on_horo(self.S.on_horo(q))

    def transition_defect(self, h) -> float:
        """Relative deviation of ``iota^* g_1`` from ``g_0`` at ``h`` in ``V_0``."""
        if not self.metrics:
            raise ValueError("no glued metrics attached to the configuration")
        g0, g1 = self.metrics
        pb = C.pullback_metric(g1, self.iota, g0.dim)
        A = pb.at(h)
        B = g0.at(h)
        return float(np.abs(A - B).max() / np.abs(B).max())


def klein_assemble(params: GluingParams, n: int = 2, variant: str = "sharp",
                   J1: Sequence[C.CRStructure] = (), kappa: Sequence[Optional[Sym2Field]] = (),
                   eps: float = 0.1) -> KleinConfiguration:
    """Build the handle charts for ``params``; ``variant`` is ``sharp`` or ``flat``."""
    if not isinstance(params, GluingParams):
        raise TypeError("params must be GluingParams")
    params.validate()
    if variant not in ("sharp", "flat"):
        raise ValueError("variant must be 'sharp' or 'flat'")
    if params.K ** 2 < 1.0 / (1.0 - eps):
        raise ValueError("K is too small for the weight transition width")
    m = params.m
    mu0 = np.sqrt(m)
    mu1 = np.sqrt(m) * np.exp(1j * params.theta)
    Phi0 = C.dilation_H(mu0, n)
    Phi1 = C.dilation_H(mu1, n, params.twist_matrix(n))
    S = C.inversion_I(1.0, n) if variant == "sharp" else C.conversion_K(1.0, n)
    metrics = ()
    if J1:
        ks = list(kappa) + [None] * (2 - len(kappa))
        metrics = tuple(GluedMetric(J1[j], params.tau[j], ks[j], side=j) for j in range(2))
    return KleinConfiguration(params, n, variant, (Phi0, Phi1), S, metrics, eps)


def weight_sharp(config: KleinConfiguration, p, chart: str = "far"):
    """Global defining function ``f#`` (returns ``(f#, w#)``).

    ``chart`` is ``far`` (ambient collar, ``f# = u``), ``p0``/``p1`` (the
    standardized chart at that boundary point) or ``handle`` (reference
    annulus).  Points of the removed balls ``|z_n| < lambda0`` are rejected.
    """
    m = config.params.m
    h = p.as_real() if isinstance(p, C.HoroPoint) else p
    if chart == "far":
        f = h[0]
    elif chart == "handle":
        f = m * f_check(h, config.eps)
    elif chart in ("p0", "p1"):
        j = int(chart[1])
        l0, l1 = config.params.lam[j]
        r = float(np.sqrt(np.asarray(J.value(C.zn_modulus2(h)))))
        if r < l0 * (1 - 1e-12):
            raise ValueError("point lies in a removed half-ball")
        if r >= l1:
            f = h[0]
        else:
            f = m * f_check(config.to_reference(j, h), config.eps)
    else:
        raise ValueError(f"unknown chart {chart!r}")
    return f, J.sqrt(f)


def log_weight_gradient(config: KleinConfiguration, p, chart: str, g: MetricField) -> float:
    """``|d ln w#|_g`` at ``p`` (in the given chart)."""
    p = np.asarray(p, dtype=float)
    x = J.seed(p, 1)
    _, w = weight_sharp(config, x, chart)
    dlog = (J.log(w)).grad().value
    ginv = np.linalg.inv(g.at(p))
    return float(np.sqrt(dlog @ ginv @ dlog))


# ------------------------------------------------------------ frame brackets
@dataclass
class FrameField:
    """Ordered vector fields given as one callable returning column vectors."""

    func: Callable
    flavor: str = "model"
    labels: tuple = field(default_factory=tuple)

    def __call__(self, h):
        return self.func(h)

    def orthonormality_defect(self, g: MetricField, h) -> float:
        F = np.asarray(J.value(self.func(np.asarray(h, dtype=float))))
        G = g.at(h)
        return float(np.abs(F.T @ G @ F - np.eye(F.shape[1])).max())


def adapted_frame(cr: Optional[GluedCR] = None, n: int = 2) -> FrameField:
    """``(u d_u, u d_v, sqrt(u) X~_j)`` with ``X~_j`` orthonormal for gamma_tau.

    Without ``cr`` the model structure ``J0`` is used (``X~ = X``).
    """
    if cr is not None:
        n = cr.n
    dim = 2 * n

    def func(h):
        u = h[0]
        # Contact frame X_k, Y_k in horo coordinates (u component zero).
        cols = []
        for k in range(n - 1):
            x, y = h[2 + 2 * k], h[3 + 2 * k]
            X = [0.0, 0.5 * y] + [0.0] * (dim - 2)
            X[2 + 2 * k] = 1.0
            Y = [0.0, -0.5 * x] + [0.0] * (dim - 2)
            Y[3 + 2 * k] = 1.0
            cols += [J.stack(X), J.stack(Y)]
        Xmat = J.stack(cols, axis=1)  # dim x (2n-2)
        if cr is not None:
            gam = cr.gamma(h)
            gam = (gam + gam.T) * 0.5
            Cm = gram_schmidt(gam)
            Xmat = J.einsum("ia,aj->ij", Xmat, Cm)
        e0 = [u] + [0.0] * (dim - 1)
        e1 = [0.0, u] + [0.0] * (dim - 2)
        su = J.sqrt(u)
        first = J.stack([J.stack(e0), J.stack(e1)], axis=1)
        return J.stack([first[:, 0], first[:, 1]] + [Xmat[:, j] * su for j in range(dim - 2)], axis=1)

    return FrameField(func, "perturbed" if cr is not None else "model",
                      tuple(["Y0", "Y1"] + [f"Y{j}" for j in range(2, dim)]))


def lie_bracket(A: Callable, B: Callable, h) -> np.ndarray:
    """``[A, B]`` at ``h`` for jet-capable vector fields (coordinate components)."""
    x = J.seed(np.asarray(h, dtype=float), 1)
    Aj, Bj = A(x), B(x)
    dA = Aj.grad().value  # [i, k] = d_i A^k
    dB = Bj.grad().value
    return Aj.value @ dB - Bj.value @ dA


def frame_brackets(frame: FrameField, h) -> np.ndarray:
    """Structure constants ``c[k, a, b]`` with ``[Y_a, Y_b] = c[k, a, b] Y_k``."""
    x = J.seed(np.asarray(h, dtype=float), 1)
    F = frame(x)  # columns are fields
    F0 = F.value
    dF = F.grad().value  # [i, k, a] = d_i F^k_a
    m = F0.shape[1]
    out = np.zeros((F0.shape[0], m, m))
    Finv = np.linalg.inv(F0)
    for a in range(m):
        for b in range(m):
            br = F0[:, a] @ dF[:, :, b] - F0[:, b] @ dF[:, :, a]
            out[:, a, b] = Finv @ br
    return out
