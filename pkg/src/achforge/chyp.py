"""Complex hyperbolic space in explicit coordinates, with its isometries and CR data.

Three coordinate systems are used.

* Projective: ``Z = (z_0, ..., z_n)`` with the Hermitian form
  ``<Z, Z'> = 2 (conj(z_0) z'_n + conj(z_n) z'_0) + sum_k conj(z_k) z'_k``.
* Affine Siegel chart ``z_0 = -1``: complex ``(W, z_n)``, or its real version
  ``s = (x_1, y_1, ..., x_{n-1}, y_{n-1}, a, b)`` with ``z_n = a + i b``.
  The height is ``f = Re z_n - |W|^2 / 4``.
* Horospherical: ``h = (u, v, x_1, y_1, ...)`` with ``u = f`` and
  ``u + i v = conj(z_n) - |W|^2 / 4``.  The metric reads
  ``(du^2 + eta0^2) / u^2 + |dW|^2 / u`` with ``eta0 = dv + (x dy - y dx) / 2``.

Every real-chart map in this module accepts numpy arrays or jets, so the
tensor machinery can differentiate through it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import jet as J
from .jet import Jet
from .tensor import MetricField

__all__ = [
    "ProjectivePoint",
    "HoroPoint",
    "Region",
    "CRStructure",
    "Isometry",
    "hermitian_form",
    "height_projective",
    "chyp_metric_projective",
    "affine_to_projective",
    "projective_to_affine",
    "to_horospherical",
    "from_horospherical",
    "siegel_to_horo",
    "horo_to_siegel",
    "siegel_complex",
    "horo_complex",
    "complex_to_horo",
    "height_siegel",
    "chyp_metric",
    "HORO_COMPLEX_ORIENTATION",
    "chyp_metric_siegel",
    "pullback_metric",
    "PullbackMetric",
    "dilation_H",
    "inversion_I",
    "conversion_K",
    "region_classify",
    "zn_modulus2",
    "contact_form_eta0",
    "d_eta0",
    "reeb_field",
    "contact_frame",
    "J0_matrix",
    "omega_matrix",
    "standard_cr",
    "symplectic_cr",
    "normal_form_cr",
    "generic_cr",
    "J_std",
    "kahler_metric_from_potential",
    "fefferman_residual",
    "varpi",
    "hat_f",
    "hat_f_array",
    "hat_f_raw",
    "I1_pullback_f",
]


# ------------------------------------------------------------------ points
@dataclass(frozen=True)
class ProjectivePoint:
    """Homogeneous coordinates ``[z_0 : ... : z_n]``."""

    Z: np.ndarray

    def __post_init__(self):
        Z = np.asarray(self.Z, dtype=complex)
        if Z.ndim != 1 or Z.size < 2:
            raise ValueError("projective point needs at least two coordinates")
        if not np.any(Z != 0):
            raise ValueError("projective point cannot be the zero vector")
        object.__setattr__(self, "Z", Z)

    @property
    def n(self) -> int:
        return self.Z.size - 1


@dataclass(frozen=True)
class HoroPoint:
    """Horospherical coordinates ``(u, v, W)``; ``u = 0`` marks the boundary."""

    u: float
    v: float
    W: np.ndarray = field(default_factory=lambda: np.zeros(1, dtype=complex))

    def __post_init__(self):
        object.__setattr__(self, "W", np.atleast_1d(np.asarray(self.W, dtype=complex)))
        if self.u < 0:
            raise ValueError("horospherical height must be nonnegative")

    @property
    def n(self) -> int:
        return self.W.size + 1

    def as_real(self) -> np.ndarray:
        out = np.empty(2 * self.n)
        out[0], out[1] = self.u, self.v
        out[2::2] = self.W.real
        out[3::2] = self.W.imag
        return out

    @classmethod
    def from_real(cls, h) -> "HoroPoint":
        h = np.asarray(h, dtype=float)
        return cls(float(h[0]), float(h[1]), h[2::2] + 1j * h[3::2])


# ----------------------------------------------------------------- hermitian
def hermitian_form(Z, Zp) -> complex:
    """``<Z, Z'>`` of signature (n, 1); conjugate-linear in the first slot."""
    Z = np.asarray(getattr(Z, "Z", Z), dtype=complex)
    Zp = np.asarray(getattr(Zp, "Z", Zp), dtype=complex)
    if Z.shape != Zp.shape:
        raise ValueError("hermitian_form: length mismatch")
    return complex(2.0 * (np.conj(Z[0]) * Zp[-1] + np.conj(Z[-1]) * Zp[0])
                   + np.sum(np.conj(Z[1:-1]) * Zp[1:-1]))


def height_projective(Z) -> float:
    """``f = -<Z, Z> / (4 |z_0|^2)``; positive exactly on the interior."""
    Z = np.asarray(getattr(Z, "Z", Z), dtype=complex)
    return float(-hermitian_form(Z, Z).real / (4.0 * abs(Z[0]) ** 2))


def chyp_metric_projective(Z, V) -> float:
    """Squared length of the tangent vector ``V`` at ``[Z]``."""
    Z = np.asarray(getattr(Z, "Z", Z), dtype=complex)
    V = np.asarray(V, dtype=complex)
    zz = hermitian_form(Z, Z).real
    if zz >= 0:
        raise ValueError("not an interior point")
    zv = hermitian_form(Z, V)
    return float(4.0 * (zz * hermitian_form(V, V).real - abs(zv) ** 2) / (-zz * zz))


def affine_to_projective(z) -> ProjectivePoint:
    z = np.asarray(z, dtype=complex)
    return ProjectivePoint(np.concatenate([[-1.0 + 0j], z]))


def projective_to_affine(Z) -> np.ndarray:
    """Normalize to ``z_0 = -1`` and drop ``z_0``."""
    Z = np.asarray(getattr(Z, "Z", Z), dtype=complex)
    if abs(Z[0]) == 0:
        raise ValueError("point at infinity of the affine chart (z_0 = 0)")
    return (Z * (-1.0 / Z[0]))[1:]


def to_horospherical(z, interior: bool = True) -> HoroPoint:
    """Affine Siegel coordinates ``(W, z_n)`` (or a projective point) to horo."""
    if isinstance(z, ProjectivePoint):
        z = projective_to_affine(z)
    z = np.asarray(z, dtype=complex)
    W, zn = z[:-1], z[-1]
    f = zn.real - 0.25 * np.sum(np.abs(W) ** 2)
    if interior and f <= 0:
        raise ValueError(f"point is not in the Siegel domain (f = {f:.3e})")
    if f < 0:
        raise ValueError("point lies outside the closed Siegel domain")
    return HoroPoint(float(max(f, 0.0)), float(-zn.imag), W)


def from_horospherical(p: HoroPoint) -> np.ndarray:
    W = np.asarray(p.W, dtype=complex)
    zn = p.u + 0.25 * np.sum(np.abs(W) ** 2) - 1j * p.v
    return np.concatenate([W, [zn]])


# ------------------------------------------------------ jet-capable charts
def _pairs(x, n):
    return [(x[2 + 2 * k], x[3 + 2 * k]) for k in range(n - 1)]


def horo_complex(h):
    """Complex Siegel data ``(W list, z_n)`` from a real horo vector."""
    n = _dim_n(h)
    u, v = h[0], h[1]
    W = [x + 1j * y for x, y in _pairs(h, n)]
    w2 = sum((x * x + y * y for x, y in _pairs(h, n)), 0.0)
    zn = (u + 0.25 * w2) + (-1j) * v
    return W, zn


def complex_to_horo(W, zn):
    """Inverse of :func:`horo_complex` (returns a real vector or jet)."""
    w2 = sum((J.absolute2(w) for w in W), 0.0)
    u = J.real(zn) - 0.25 * w2
    v = -J.imag(zn)
    comps = [u, v]
    for w in W:
        comps += [J.real(w), J.imag(w)]
    return J.stack(comps)


def siegel_complex(s):
    n = _dim_n(s)
    W = [s[2 * k] + 1j * s[2 * k + 1] for k in range(n - 1)]
    zn = s[2 * n - 2] + 1j * s[2 * n - 1]
    return W, zn


def siegel_to_horo(s):
    W, zn = siegel_complex(s)
    return complex_to_horo(W, zn)


def horo_to_siegel(h):
    W, zn = horo_complex(h)
    comps = []
    for w in W:
        comps += [J.real(w), J.imag(w)]
    comps += [J.real(zn), J.imag(zn)]
    return J.stack(comps)


def height_siegel(s):
    """``f = Re z_n - |W|^2 / 4`` in the real Siegel chart."""
    n = _dim_n(s)
    w2 = sum((s[2 * k] * s[2 * k] + s[2 * k + 1] * s[2 * k + 1] for k in range(n - 1)), 0.0)
    return s[2 * n - 2] - 0.25 * w2


def zn_modulus2(h):
    """``|z_n / z_0|^2 = (u + |W|^2/4)^2 + v^2`` at a horo point."""
    n = _dim_n(h)
    w2 = sum((x * x + y * y for x, y in _pairs(h, n)), 0.0)
    a = h[0] + 0.25 * w2
    return a * a + h[1] * h[1]


def _dim_n(x) -> int:
    d = x.shape[0]
    if d % 2 or d < 2:
        raise ValueError("real chart dimension must be even and positive")
    return d // 2


def _check_n(n: int) -> int:
    n = int(n)
    if n < 1 or 2 * n > 8:
        raise ValueError("complex dimension must satisfy 1 <= n and 2n <= 8")
    return n


# ------------------------------------------------------------------ metrics
#: Sign of the horospherical chart orientation relative to the complex one.
HORO_COMPLEX_ORIENTATION = -1

def _eta0_coeffs(h, n):
    comps = [0.0, 1.0]
    for x, y in _pairs(h, n):
        comps += [-0.5 * y, 0.5 * x]
    return J.stack(comps)


def chyp_metric(n: int = 2) -> MetricField:
    """``g^CH`` in horospherical coordinates (real dimension 2n)."""
    n = _check_n(n)
    dim = 2 * n
    du = np.zeros(dim)
    du[0] = 1.0
    dudu = np.outer(du, du)
    flat_w = np.diag([0.0, 0.0] + [1.0] * (dim - 2))

    def g(h):
        u = h[0]
        if np.any(J.value(u) <= 0):
            raise ValueError("complex hyperbolic metric needs u > 0")
        eta = _eta0_coeffs(h, n)
        ee = J.einsum("i,j->ij", eta, eta)
        inv_u = 1.0 / u
        return (ee + dudu) * (inv_u * inv_u) + inv_u * flat_w

    # The chart (u, v, x, y) is opposite to the complex orientation.
    return MetricField(g, dim, name=f"gCH(n={n}, horo)", complex_orientation=HORO_COMPLEX_ORIENTATION)


def chyp_metric_siegel(n: int = 2) -> MetricField:
    """``g^CH`` in the real Siegel chart, from the projective formula."""
    n = _check_n(n)
    dim = 2 * n
    # Tangent directions of the affine chart as vectors of C^{n+1}.
    V = np.zeros((dim, n + 1), dtype=complex)
    for k in range(n):
        V[2 * k, k + 1] = 1.0
        V[2 * k + 1, k + 1] = 1j
    Hmat = np.diag([0.0] + [1.0] * (n - 1) + [0.0]).astype(complex)
    Hmat[0, n] = Hmat[n, 0] = 2.0
    HV = np.conj(V) @ Hmat @ V.T  # <V_i, V_j>

    def g(s):
        W, zn = siegel_complex(s)
        Z = J.stack([-1.0 + 0j] + W + [zn]) if isinstance(s, Jet) else np.array([-1.0] + W + [zn])
        HZ = J.einsum("ab,b->a", Hmat, Z)
        zz = J.real(J.einsum("a,a->", J.conj(Z), HZ))
        if np.any(J.value(zz) >= 0):
            raise ValueError("not an interior point")
        a_i = J.einsum("ia,a->i", np.conj(V), HZ)  # <V_i, Z>
        cross = J.einsum("i,j->ij", a_i, J.conj(a_i))
        num = J.real(zz * HV - cross) * 4.0
        return num * (-1.0 / (zz * zz))

    return MetricField(g, dim, name=f"gCH(n={n}, siegel)")


class PullbackMetric(MetricField):
    """``phi^* g`` for a jet-capable chart map ``phi``."""

    def __init__(self, g: MetricField, phi: Callable, dim: Optional[int] = None, name: str = ""):
        self.base = g
        self.phi = phi
        super().__init__(self._eval, dim or g.dim, name or f"pullback({g.name})",
                         complex_orientation=g.complex_orientation)

    def _pull(self, x1: Jet) -> Jet:
        y = self.phi(x1)
        D = y.grad()  # D[i, a] = d_i phi^a
        G = self.base(y.lower())
        if not isinstance(G, Jet):
            G = J.zeros_like_jet(D, np.shape(G)) + G
        return J.einsum("ia,ab,jb->ij", D, G, D)

    def _eval(self, x):
        if isinstance(x, Jet):
            # Re-seed one order higher; only identity-seeded jets are supported.
            p = x.value
            ref = J.seed(p, x.order)
            if not np.allclose(x.data, ref.data, rtol=0, atol=0):
                raise ValueError("pullback metrics must be evaluated on seeded jets")
            return self._pull(J.seed(p, x.order + 1))
        return self._pull(J.seed(np.asarray(x, dtype=float), 1)).value

    def jet(self, p, order: int) -> Jet:
        return self._pull(J.seed(np.asarray(p, dtype=float), order + 1))


def pullback_metric(g: MetricField, phi: Callable, dim: Optional[int] = None) -> PullbackMetric:
    return PullbackMetric(g, phi, dim)


# ---------------------------------------------------------------- isometries
class Isometry:
    """Projective (anti)linear map preserving the Hermitian form."""

    def __init__(self, matrix, antiholomorphic: bool = False, name: str = "isometry"):
        self.matrix = np.asarray(matrix, dtype=complex)
        self.antiholomorphic = bool(antiholomorphic)
        self.name = name

    @property
    def n(self) -> int:
        return self.matrix.shape[0] - 1

    def __call__(self, Z):
        if isinstance(Z, HoroPoint):
            return HoroPoint.from_real(self.on_horo(Z.as_real()))
        Zarr = np.asarray(getattr(Z, "Z", Z), dtype=complex)
        if self.antiholomorphic:
            Zarr = np.conj(Zarr)
        out = self.matrix @ Zarr
        return ProjectivePoint(out) if isinstance(Z, ProjectivePoint) else out

    def _affine(self, W, zn):
        Z = [(-1.0 + 0j)] + list(W) + [zn]
        if self.antiholomorphic:
            Z = [J.conj(z) for z in Z]
        M = self.matrix
        out = []
        for i in range(self.n + 1):
            acc = 0.0
            for j in range(self.n + 1):
                if M[i, j] != 0:
                    acc = acc + M[i, j] * Z[j]
            out.append(acc)
        scale = -1.0 / out[0]
        return [w * scale for w in out[1:-1]], out[-1] * scale

    def on_horo(self, h):
        W, zn = horo_complex(h)
        W2, zn2 = self._affine(W, zn)
        return complex_to_horo(W2, zn2)

    def on_siegel(self, s):
        W, zn = siegel_complex(s)
        W2, zn2 = self._affine(W, zn)
        comps = []
        for w in W2:
            comps += [J.real(w), J.imag(w)]
        comps += [J.real(zn2), J.imag(zn2)]
        return J.stack(comps)

    def compose(self, other: "Isometry") -> "Isometry":
        """``self o other``."""
        B = np.conj(other.matrix) if self.antiholomorphic else other.matrix
        return Isometry(self.matrix @ B, self.antiholomorphic ^ other.antiholomorphic,
                        f"{self.name}*{other.name}")

    def inverse(self) -> "Isometry":
        Minv = np.linalg.inv(self.matrix)
        if self.antiholomorphic:
            Minv = np.conj(Minv)
        return Isometry(Minv, self.antiholomorphic, f"{self.name}^-1")


def dilation_H(mu: complex, n: int = 2, U=None) -> Isometry:
    """``H_mu = diag(1/conj(mu), U, mu)``; scales ``f`` by ``|mu|^2``."""
    mu = complex(mu)
    if mu == 0:
        raise ValueError("dilation parameter must be nonzero")
    n = _check_n(n)
    U = np.eye(n - 1, dtype=complex) if U is None else np.asarray(U, dtype=complex)
    if U.shape != (n - 1, n - 1) or not np.allclose(U.conj().T @ U, np.eye(n - 1), atol=1e-12):
        raise ValueError("twist block must be a unitary (n-1)x(n-1) matrix")
    M = np.zeros((n + 1, n + 1), dtype=complex)
    M[0, 0] = 1.0 / np.conj(mu)
    M[1:n, 1:n] = U
    M[n, n] = mu
    return Isometry(M, False, f"H({mu:.3g})")


def _inversion_matrix(lam: float, n: int) -> np.ndarray:
    if lam <= 0:
        raise ValueError("inversion radius must be positive")
    M = np.zeros((n + 1, n + 1), dtype=complex)
    M[0, n] = 1.0 / lam
    M[n, 0] = lam
    M[1:n, 1:n] = np.eye(n - 1)
    return M


def inversion_I(lam: float, n: int = 2) -> Isometry:
    """Holomorphic involution swapping ``B+_lam`` and ``B-_lam``."""
    return Isometry(_inversion_matrix(lam, _check_n(n)), False, f"I({lam:.3g})")


def conversion_K(lam: float, n: int = 2) -> Isometry:
    """Antiholomorphic companion of :func:`inversion_I`."""
    return Isometry(_inversion_matrix(lam, _check_n(n)), True, f"K({lam:.3g})")


# ------------------------------------------------------------------ regions
@dataclass(frozen=True)
class Region:
    """Named subsets of the closed ball.

    ``kind`` is one of ``BPlus``, ``BMinus``, ``Disk``, ``Annulus``,
    ``Paraboloid``, ``BoundaryBall``; ``params`` holds one or two positives.
    """

    kind: str
    params: tuple

    _ARITY = {"BPlus": 1, "BMinus": 1, "Disk": 1, "Annulus": 2, "Paraboloid": 1, "BoundaryBall": 1}

    def __post_init__(self):
        if self.kind not in self._ARITY:
            raise ValueError(f"unknown region kind {self.kind!r}")
        params = tuple(float(x) for x in np.atleast_1d(self.params))
        object.__setattr__(self, "params", params)
        if len(params) != self._ARITY[self.kind]:
            raise ValueError(f"{self.kind} takes {self._ARITY[self.kind]} parameter(s)")
        if any(not np.isfinite(x) or x <= 0 for x in params):
            raise ValueError("region parameters must be positive")
        if self.kind == "Annulus" and not params[0] < params[1]:
            raise ValueError("Annulus requires lambda0 < lambda1")

    @classmethod
    def from_dict(cls, d: dict) -> "Region":
        return cls(d["kind"], tuple(d["params"]))

    def to_dict(self) -> dict:
        return {"kind": self.kind, "params": list(self.params)}


def _as_projective(p) -> np.ndarray:
    if isinstance(p, ProjectivePoint):
        return p.Z
    if isinstance(p, HoroPoint):
        return affine_to_projective(from_horospherical(p)).Z
    arr = np.asarray(p)
    if np.iscomplexobj(arr):
        return arr
    return affine_to_projective(from_horospherical(HoroPoint.from_real(arr))).Z


def region_classify(p, region: Region, tol: float = 1e-12) -> bool:
    """Membership test; ``p`` may be given in any of the supported coordinate forms."""
    Z = _as_projective(p)
    r0, rn = abs(Z[0]), abs(Z[-1])
    kind, prm = region.kind, region.params
    if kind == "BPlus":
        return bool(rn < prm[0] * r0 * (1 - tol))
    if kind == "BMinus":
        return bool(rn > prm[0] * r0 * (1 + tol))
    if kind == "Disk":
        return bool(abs(rn - prm[0] * r0) <= tol * max(rn, prm[0] * r0))
    if kind == "Annulus":
        return bool(prm[0] * r0 * (1 - tol) <= rn < prm[1] * r0)
    if r0 == 0:
        return False
    f = height_projective(Z)
    if kind == "Paraboloid":
        return bool(abs(f - prm[0]) <= tol * max(1.0, prm[0]))
    # BoundaryBall: boundary points (f = 0) with |z_n| < tau |z_0|.
    return bool(abs(f) <= tol * max(1.0, rn / r0) and rn < prm[0] * r0)


# ------------------------------------------------------------ contact / CR
def contact_form_eta0(q) -> np.ndarray:
    """``eta0 = dv + (x dy - y dx)/2`` on ``P_0`` with coordinates (v, x, y, ...)."""
    q = np.asarray(q, dtype=float)
    out = np.zeros_like(q)
    out[0] = 1.0
    out[1::2] = -0.5 * q[2::2]
    out[2::2] = 0.5 * q[1::2]
    return out


def d_eta0(dim_boundary: int) -> np.ndarray:
    """Matrix of ``d eta0 = sum dx ^ dy`` on ``P_0`` coordinates (v, x, y, ...)."""
    M = np.zeros((dim_boundary, dim_boundary))
    for k in range(1, dim_boundary, 2):
        M[k, k + 1] = 1.0
        M[k + 1, k] = -1.0
    return M


def reeb_field(q) -> np.ndarray:
    R = np.zeros(np.shape(q)[0])
    R[0] = 1.0
    return R


def contact_frame(q) -> np.ndarray:
    """Columns ``X_1, Y_1, ...`` spanning ``ker eta0`` at ``q`` on ``P_0``.

    ``X_k = d/dx_k + (y_k/2) d/dv`` and ``Y_k = d/dy_k - (x_k/2) d/dv``, so
    ``d eta0(X_k, Y_k) = 1``.
    """
    q = np.asarray(q, dtype=float)
    m = q.size - 1
    F = np.zeros((q.size, m))
    for k in range(m // 2):
        x, y = q[1 + 2 * k], q[2 + 2 * k]
        F[1 + 2 * k, 2 * k] = 1.0
        F[0, 2 * k] = 0.5 * y
        F[2 + 2 * k, 2 * k + 1] = 1.0
        F[0, 2 * k + 1] = -0.5 * x
    return F


def J0_matrix(n: int) -> np.ndarray:
    """Standard structure in the frame (X_k, Y_k): ``X -> Y``, ``Y -> -X``."""
    m = 2 * (n - 1)
    M = np.zeros((m, m))
    for k in range(n - 1):
        M[2 * k + 1, 2 * k] = 1.0
        M[2 * k, 2 * k + 1] = -1.0
    return M


def omega_matrix(n: int) -> np.ndarray:
    """``d eta0`` in the frame (X_k, Y_k)."""
    return -J0_matrix(n)


class CRStructure:
    """Complex structure on ``ker eta0`` given in the frame (X_k, Y_k).

    ``func(q)`` returns the ``(2n-2)x(2n-2)`` matrix at the boundary point
    ``q = (v, x_1, y_1, ...)``; it must be jet-capable.
    """

    def __init__(self, func: Callable, n: int, name: str = "J"):
        self.func = func
        self.n = _check_n(n)
        self.name = name

    def __call__(self, q):
        return self.func(q)

    def gamma(self, q):
        """Frame matrix of ``gamma = d eta0(., J .)``."""
        return J.einsum("ab,bc->ac", omega_matrix(self.n), self.func(q))

    def check(self, q, tol: float = 1e-12) -> None:
        M = np.asarray(J.value(self.func(np.asarray(q, dtype=float))))
        m = M.shape[0]
        if np.abs(M @ M + np.eye(m)).max() > tol * max(1.0, np.abs(M).max() ** 2):
            raise ValueError("J does not square to -1 on the contact distribution")
        G = omega_matrix(self.n) @ M
        if np.abs(G - G.T).max() > 1e-10 * max(1.0, np.abs(G).max()) or np.linalg.eigvalsh(
                0.5 * (G + G.T)).min() <= 0:
            raise ValueError("CR structure is not strictly pseudoconvex here")


def standard_cr(n: int = 2) -> CRStructure:
    J0 = J0_matrix(_check_n(n))
    return CRStructure(lambda q: J0, n, "J0")


def symplectic_cr(n: int, a: Callable, b: Callable, name: str = "J1") -> CRStructure:
    """``J = P J0 P^{-1}`` with ``P`` block-diagonal ``[[e^a, b], [0, e^-a]]``.

    ``a`` and ``b`` are jet-capable scalar functions of the boundary point.
    Each block is symplectic, so ``gamma = P^{-T} P^{-1}`` is positive.
    """
    n = _check_n(n)
    m = 2 * (n - 1)

    def func(q):
        av, bv = a(q), b(q)
        ea, ema = J.exp(av), J.exp(-1.0 * av)
        blk = _block_conj(ea, ema, bv)
        rows = []
        for i in range(m):
            row = []
            for j in range(m):
                if i // 2 == j // 2:
                    row.append(blk[i % 2][j % 2])
                else:
                    row.append(0.0)
            rows.append(J.stack(row) if any(isinstance(r, Jet) for r in row) else np.array(row))
        if any(isinstance(r, Jet) for r in rows):
            return J.stack(rows)
        return np.array(rows, dtype=float)

    return CRStructure(func, n, name)


def _block_conj(ea, ema, b):
    """Entries of ``P J0 P^{-1}`` for ``P = [[ea, b], [0, ema]]``, ``ea*ema = 1``."""
    # P J0 = [[b, -ea], [ema, 0]];  P^{-1} = [[ema, -b], [0, ea]].
    return [[b * ema, -(b * b) - ea * ea],
            [ema * ema, -(ema * b)]]


def normal_form_cr(n: int = 2, amp: float = 0.1) -> CRStructure:
    """Test deformation vanishing to weighted order two at the origin.

    The functions ``a`` and ``b`` are combinations of ``v`` and quadratic
    monomials in ``W``, the order at which a standardized structure can first
    differ from ``J0``.
    """
    def a(q):
        acc = 0.7 * q[0]
        for k in range(n - 1):
            x, y = q[1 + 2 * k], q[2 + 2 * k]
            acc = acc + (x * x - 0.5 * y * y + 0.4 * x * y)
        return acc * amp

    def b(q):
        acc = -0.4 * q[0]
        for k in range(n - 1):
            x, y = q[1 + 2 * k], q[2 + 2 * k]
            acc = acc + (0.6 * x * y + 0.3 * (x * x + y * y))
        return acc * amp

    return symplectic_cr(n, a, b, "J1(normal form)")


def generic_cr(n: int = 2, amp: float = 0.1) -> CRStructure:
    """Test deformation that is linear in ``W`` (weighted order one)."""
    def a(q):
        acc = 0.0
        for k in range(n - 1):
            acc = acc + (q[1 + 2 * k] + 0.5 * q[2 + 2 * k])
        return acc * amp

    def b(q):
        acc = 0.0
        for k in range(n - 1):
            acc = acc + (0.8 * q[2 + 2 * k] - 0.3 * q[1 + 2 * k])
        return acc * amp

    return symplectic_cr(n, a, b, "J1(generic)")


# --------------------------------------------------------- Kahler potential
def J_std(n: int) -> np.ndarray:
    """Complex structure of the real Siegel chart: ``d/dx -> d/dy``."""
    m = 2 * n
    M = np.zeros((m, m))
    for k in range(n):
        M[2 * k + 1, 2 * k] = 1.0
        M[2 * k, 2 * k + 1] = -1.0
    return M


def kahler_metric_from_potential(phi: Callable, Jfield, p) -> np.ndarray:
    """Metric ``g = omega(., J .)`` of ``omega = d d^c phi``, ``d^c phi = -d phi o J``.

    ``Jfield`` is a constant matrix or a jet-capable callable returning the
    matrix of ``J`` (columns are images of coordinate vectors).
    """
    p = np.asarray(p, dtype=float)
    x = J.seed(p, 2)
    Jm = Jfield(J.seed(p, 1)) if callable(Jfield) else np.asarray(Jfield, dtype=float)
    dphi = phi(x).grad()  # order 1, shape (d,)
    dc = J.einsum("j,ji->i", dphi, Jm) * (-1.0)
    ddc = dc.grad().value  # [a, b] = d_a (dc)_b
    omega = ddc - ddc.T
    J0 = np.asarray(J.value(Jm))
    G = omega @ J0
    G = 0.5 * (G + G.T)
    if not np.all(np.isfinite(G)) or np.linalg.eigvalsh(G).min() <= 0:
        raise ValueError(f"potential not plurisubharmonic at point {p}")
    return G


def fefferman_residual(u: Callable, s) -> float:
    """``det [[u, u_kbar], [u_j, u_jkbar]] - (-1/4)^n`` in the Siegel chart."""
    s = np.asarray(s, dtype=float)
    n = _dim_n(s)
    U = u(J.seed(s, 2))
    val = U.value
    gr = U.derivative_tensor(1)
    H = U.derivative_tensor(2)
    # Wirtinger derivatives: d/dz = (d/dx - i d/dy)/2.
    dz = np.array([0.5 * (gr[2 * k] - 1j * gr[2 * k + 1]) for k in range(n)])
    dzb = np.conj(dz)
    hxx = H[0::2, 0::2]
    hyy = H[1::2, 1::2]
    hxy = H[0::2, 1::2]
    hyx = H[1::2, 0::2]
    # u_{j kbar} = (u_xx + u_yy + i(u_xy - u_yx)) / 4 in index (j, k).
    ddb = 0.25 * (hxx + hyy + 1j * (hxy - hyx))
    M = np.zeros((n + 1, n + 1), dtype=complex)
    M[0, 0] = val
    M[0, 1:] = dzb
    M[1:, 0] = dz
    M[1:, 1:] = ddb
    return float((np.linalg.det(M) - (-0.25) ** n).real)


# ------------------------------------------------------------- smoothed f
def _smoothstep_integral(t):
    """Antiderivative of the quintic smoothstep ``6t^5 - 15t^4 + 10t^3``."""
    t2 = t * t
    t4 = t2 * t2
    return t4 * (t2 - 3.0 * t + 2.5)


def varpi(x, eps: float = 0.1):
    """Decreasing weight equal to 1 for ``x <= 1-eps`` and ``1/x`` for ``x >= 1+eps``.

    It is ``1/M`` where ``M' `` is a quintic smoothstep from 0 to 1 across
    ``[1-eps, 1+eps]``, so ``M`` goes from the constant 1 to the identity.
    """
    xv = np.asarray(J.value(x))
    if xv.ndim:
        raise ValueError("varpi expects a scalar argument")
    if xv <= 1.0 - eps:
        return x * 0.0 + 1.0
    if xv >= 1.0 + eps:
        return 1.0 / x
    t = (x - (1.0 - eps)) * (1.0 / (2.0 * eps))
    M = 1.0 + 2.0 * eps * _smoothstep_integral(t)
    return 1.0 / M


def hat_f_raw(h, eps: float = 0.1):
    """``u * varpi(|z_n|^2)`` before symmetrization."""
    return h[0] * varpi(zn_modulus2(h), eps)


def I1_pullback_f(h):
    """``f o I_1 = u / |z_n|^2``."""
    return h[0] / zn_modulus2(h)


def hat_f(h, eps: float = 0.1):
    """Smoothed, ``I_1``-invariant defining function at a horo point.

    Symmetrized as ``(f_raw + f_raw o I_1) / 2``.  Equals ``u`` wherever
    ``|z_n|^2 <= 1/(1+eps)`` and ``u/|z_n|^2`` where ``|z_n|^2 >= 1/(1-eps)``.
    """
    if isinstance(h, HoroPoint):
        h = h.as_real()
    x = zn_modulus2(h)
    u = h[0]
    a = u * varpi(x, eps)
    b = (u / x) * varpi(1.0 / x, eps)
    return (a + b) * 0.5


def _varpi_array(x, eps):
    x = np.asarray(x, dtype=float)
    t = np.clip((x - (1.0 - eps)) / (2.0 * eps), 0.0, 1.0)
    M = np.where(x >= 1.0 + eps, x, 1.0 + 2.0 * eps * _smoothstep_integral(t))
    return 1.0 / M


def hat_f_array(u, x, eps: float = 0.1):
    """Vectorized :func:`hat_f` from ``u`` and ``x = |z_n|^2`` (plain arrays)."""
    u = np.asarray(u, dtype=float)
    x = np.asarray(x, dtype=float)
    return 0.5 * (u * _varpi_array(x, eps) + (u / x) * _varpi_array(1.0 / x, eps))
