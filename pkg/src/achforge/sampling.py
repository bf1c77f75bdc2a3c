"""Deterministic low-discrepancy sampling of model regions in horo coordinates."""

from __future__ import annotations

import warnings

import numpy as np
from scipy.stats import norm, qmc

from . import chyp as C

__all__ = ["sobol", "sample_region", "sample_interior", "sample_shell", "sample_boundary_ball"]


def sobol(d: int, N: int, seed) -> np.ndarray:
    """Scrambled Sobol points in ``[0, 1)^d``, kept strictly inside the cube."""
    if N < 1:
        raise ValueError("sample count must be positive")
    eng = qmc.Sobol(d=d, scramble=True, seed=seed)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)
        X = eng.random(N)
    return np.clip(X, 1e-12, 1.0 - 1e-12)


def _directions(X: np.ndarray, m: int) -> np.ndarray:
    """Unit vectors in ``R^m`` from uniform coordinates (``m >= 2``)."""
    if m == 2:
        a = 2.0 * np.pi * X[:, 0]
        return np.stack([np.cos(a), np.sin(a)], axis=1)
    G = norm.ppf(X[:, :m])
    return G / np.linalg.norm(G, axis=1, keepdims=True)


def _shell_points(U: np.ndarray, r_lo: float, r_hi: float, n: int, theta_margin: float) -> np.ndarray:
    """Map uniform coordinates to horo points with ``r_lo <= |z_n| < r_hi``.

    Uses ``z_n = r e^{i theta}``, ``u = s r cos(theta)`` and
    ``|W|^2 = 4 (r cos(theta) - u)``.
    """
    r = r_lo + (r_hi - r_lo) * U[:, 0]
    th = (U[:, 1] - 0.5) * np.pi * (1.0 - theta_margin)
    c = r * np.cos(th)
    u = U[:, 2] * c
    rho = np.sqrt(4.0 * (c - u))
    H = np.empty((len(U), 2 * n))
    H[:, 0] = u
    H[:, 1] = -r * np.sin(th)
    if n > 1:
        H[:, 2:] = rho[:, None] * _directions(U[:, 3:], 2 * n - 2)
    return H


def _dims(n: int) -> int:
    return 3 + (1 if n == 2 else 2 * n - 2)


def sample_shell(r_lo: float, r_hi: float, N: int, seed, n: int = 2, theta_margin: float = 0.02) -> np.ndarray:
    """Interior points with ``r_lo <= |z_n| < r_hi``."""
    if not 0 <= r_lo < r_hi:
        raise ValueError("empty shell")
    return _shell_points(sobol(_dims(n), N, seed), r_lo, r_hi, n, theta_margin)


def sample_interior(N: int, seed, n: int = 2, u_range=(0.05, 5.0), box: float = 2.0) -> np.ndarray:
    """Interior horo points with ``u`` log-uniform and ``(v, W)`` in a box."""
    X = sobol(2 * n, N, seed)
    lo, hi = np.log(u_range[0]), np.log(u_range[1])
    H = box * (2.0 * X - 1.0)
    H[:, 0] = np.exp(lo + (hi - lo) * X[:, 0])
    return H


def sample_boundary_ball(tau: float, N: int, seed, n: int = 2) -> np.ndarray:
    """Boundary points ``(v, x, y, ...)`` of ``P_0`` with ``|z_n| < tau``."""
    U = sobol(_dims(n) - 1, N, seed)
    r = tau * U[:, 0]
    th = (U[:, 1] - 0.5) * np.pi
    Q = np.empty((N, 2 * n - 1))
    Q[:, 0] = -r * np.sin(th)
    rho = np.sqrt(4.0 * r * np.cos(th))
    Q[:, 1:] = rho[:, None] * _directions(U[:, 2:], 2 * n - 2)
    return Q


def sample_region(region: C.Region, N: int, seed, n: int = 2, window: float = 1.0) -> np.ndarray:
    """Points of a named region as real horo vectors, shape ``(N, 2n)``.

    ``BMinus`` points are images of ``BPlus`` points under ``I_lambda``;
    ``Paraboloid`` is restricted to ``|v|, |W_k| <= window``.  Boundary
    regions return points with ``u = 0``.
    """
    kind, prm = region.kind, region.params
    if kind == "Annulus":
        return sample_shell(prm[0], prm[1], N, seed, n)
    if kind == "BPlus":
        return sample_shell(0.0, prm[0], N, seed, n)
    if kind == "BMinus":
        inner = sample_shell(0.0, prm[0], N, seed, n)
        I = C.inversion_I(prm[0], n)
        out = np.array([I.on_horo(h) for h in inner])
        return out
    if kind == "Disk":
        U = sobol(_dims(n), N, seed)
        U[:, 0] = 0.0
        return _shell_points(U, prm[0], prm[0] * (1 + 1e-15), n, 0.02)
    if kind == "Paraboloid":
        X = sobol(2 * n - 1, N, seed)
        H = np.empty((N, 2 * n))
        H[:, 0] = prm[0]
        H[:, 1:] = window * (2.0 * X - 1.0)
        return H
    if kind == "BoundaryBall":
        Q = sample_boundary_ball(prm[0], N, seed, n)
        return np.concatenate([np.zeros((N, 1)), Q], axis=1)
    raise ValueError(f"cannot sample region {kind!r}")
