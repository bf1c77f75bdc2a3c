"""The characteristic-number integrand with its region quadrature.

The module also keeps the bookkeeping of 1-handle additions.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import gamma
from typing import Callable, Optional, Sequence

import numpy as np

from .sampling import sobol, _directions
from .tensor import MetricField, curvature

__all__ = [
    "NuIntegrandSample",
    "nu_integrand",
    "CoordinateBox",
    "TransitionShell",
    "Estimate",
    "integrate_region",
    "SurgeryLedger",
    "surgery_bookkeeping",
]

PREFACTOR = 1.0 / (8.0 * np.pi ** 2)


@dataclass
class NuIntegrandSample:
    point: np.ndarray
    wminus2: float
    wplus2: float
    ric0_2: float
    scal2: float
    value: float

    def recompute(self) -> float:
        return PREFACTOR * (3.0 * self.wminus2 - self.wplus2 - 0.5 * self.ric0_2 + self.scal2 / 24.0)


def nu_integrand(g: MetricField, p, orientation: Optional[int] = None) -> NuIntegrandSample:
    """``(3|W-|^2 - |W+|^2 - |Ric0|^2/2 + Scal^2/24) / (8 pi^2)`` at ``p``.

    ``|W+-|^2`` is the sum of squared eigenvalues of the Weyl operator on
    ``Lambda^2_+-``.  The orientation defaults to the complex orientation of
    the chart carried by ``g``.
    """
    if g.dim != 4:
        raise ValueError("the integrand is defined in real dimension 4")
    if orientation is None:
        orientation = g.complex_orientation
    pk = curvature(g, p, orientation)
    wp2 = float(np.sum(pk.weyl_plus ** 2))
    wm2 = float(np.sum(pk.weyl_minus ** 2))
    r02 = float(np.sum(pk.traceless_ricci_frame() ** 2))
    s2 = float(pk.scalar ** 2)
    s = NuIntegrandSample(np.asarray(p, dtype=float), wm2, wp2, r02, s2, 0.0)
    s.value = s.recompute()
    return s


# ------------------------------------------------------------- quadrature
@dataclass
class CoordinateBox:
    """Axis-aligned box ``lo <= x <= hi`` in the chart of the metric."""

    lo: Sequence[float]
    hi: Sequence[float]

    def __post_init__(self):
        self.lo = np.asarray(self.lo, dtype=float)
        self.hi = np.asarray(self.hi, dtype=float)
        if self.lo.shape != self.hi.shape:
            raise ValueError("box corners have different dimensions")
        if not (np.all(np.isfinite(self.lo)) and np.all(np.isfinite(self.hi))):
            raise ValueError("region has infinite extent; truncate it first")
        if np.any(self.hi <= self.lo):
            raise ValueError("empty box")

    @property
    def dim(self) -> int:
        return len(self.lo)

    def map(self, U: np.ndarray):
        """Points and coordinate Jacobians for uniform ``U``."""
        X = self.lo + (self.hi - self.lo) * U
        return X, np.full(len(U), float(np.prod(self.hi - self.lo)))


@dataclass
class TransitionShell:
    """Horo points with ``r_lo <= |z_n| <= r_hi`` and ``u >= u_min``.

    ``u_min > 0`` is required: without it the volume is infinite.
    """

    r_lo: float
    r_hi: float
    u_min: float
    n: int = 2

    def __post_init__(self):
        if not (0 < self.r_lo < self.r_hi) or not np.isfinite(self.r_hi):
            raise ValueError("shell radii must satisfy 0 < r_lo < r_hi < inf")
        if not self.u_min > 0:
            raise ValueError("region has infinite volume; u_min must be positive")

    @property
    def dim(self) -> int:
        return 3 + (1 if self.n == 2 else 2 * self.n - 2)

    def map(self, U: np.ndarray):
        n = self.n
        r = self.r_lo + (self.r_hi - self.r_lo) * U[:, 0]
        th = (U[:, 1] - 0.5) * np.pi
        c = r * np.cos(th)
        u = U[:, 2] * c
        rho = np.sqrt(4.0 * (c - u))
        X = np.empty((len(U), 2 * n))
        X[:, 0] = u
        X[:, 1] = -r * np.sin(th)
        X[:, 2:] = rho[:, None] * _directions(U[:, 3:], 2 * n - 2)
        sphere = 2.0 * np.pi ** (n - 1) / gamma(n - 1)
        # du dv dW = r dr dtheta |S| 2^(2n-3) c^(n-1) (1-s)^(n-2) ds
        jac = (self.r_hi - self.r_lo) * np.pi * r * sphere * 2.0 ** (2 * n - 3) \
            * c ** (n - 1) * (1.0 - U[:, 2]) ** (n - 2)
        jac = np.where(u >= self.u_min, jac, 0.0)
        return X, jac


@dataclass
class Estimate:
    value: float
    error: float
    N: int
    replicates: int


def integrate_region(g: MetricField, region, N: int, seed, integrand: Optional[Callable] = None,
                     replicates: int = 8) -> Estimate:
    """Randomized quasi-Monte Carlo estimate of ``int F dvol_g``.

    ``F`` defaults to the nu integrand.  The ``N`` points are split into
    independently scrambled Sobol replicates; the error bar is the standard
    error of the replicate means.
    """
    if not hasattr(region, "map"):
        raise ValueError("region must be a CoordinateBox or TransitionShell")
    if N < 2 * replicates or replicates < 2:
        raise ValueError("need at least two points per replicate and two replicates")
    if integrand is None:
        def integrand(p):
            return nu_integrand(g, p).value
    per = N // replicates
    seeds = np.random.SeedSequence(seed).spawn(replicates)
    means = []
    for ss in seeds:
        U = sobol(region.dim, per, np.random.default_rng(ss))
        X, jac = region.map(U)
        acc = 0.0
        for x, j in zip(X, jac):
            if j == 0.0:
                continue
            G = g.at(x)
            acc += integrand(x) * np.sqrt(np.linalg.det(G)) * j
        means.append(acc / per)
    means = np.array(means)
    return Estimate(float(means.mean()), float(means.std(ddof=1) / np.sqrt(replicates)),
                    per * replicates, replicates)


# -------------------------------------------------------- bookkeeping
@dataclass(frozen=True)
class SurgeryLedger:
    """Changes of ``(chi, tau, nu)`` under ``k`` 1-handles."""

    k: int
    chi_delta: int
    tau_delta: int
    nu_delta: int

    def __post_init__(self):
        if (self.chi_delta, self.tau_delta, self.nu_delta) != (-self.k, 0, self.k):
            raise ValueError("inconsistent surgery ledger")

    def __add__(self, other: "SurgeryLedger") -> "SurgeryLedger":
        return SurgeryLedger(self.k + other.k, self.chi_delta + other.chi_delta,
                             self.tau_delta + other.tau_delta, self.nu_delta + other.nu_delta)

    def as_tuple(self):
        return (self.chi_delta, self.tau_delta, self.nu_delta)

    def to_dict(self) -> dict:
        return {"k": self.k, "chi_delta": self.chi_delta, "tau_delta": self.tau_delta,
                "nu_delta": self.nu_delta}


def surgery_bookkeeping(k: int) -> SurgeryLedger:
    """Ledger for ``k`` handles.

    Each handle lowers the Euler number by one and leaves the signature
    alone.  The integrand vanishes on the complex hyperbolic pieces that are
    cut and reglued, so the Gauss-Bonnet type formula moves nu by the
    Euler-number change with the opposite sign.
    """
    if isinstance(k, bool) or not isinstance(k, (int, np.integer)) or k < 1:
        raise ValueError("k must be a positive integer")
    k = int(k)
    chi = -k
    tau = 0
    nu = -chi
    return SurgeryLedger(k, chi, tau, nu)
