import numpy as np
import pytest

from achforge import chyp as C
from achforge import models as M
from achforge.nu import (CoordinateBox, SurgeryLedger, TransitionShell, integrate_region, nu_integrand,
                         surgery_bookkeeping)
from achforge.sampling import sample_interior


def test_integrand_vanishes_on_complex_hyperbolic_plane():
    g = C.chyp_metric(2)
    for p in sample_interior(20, 0, 2):
        s = nu_integrand(g, p)
        assert abs(s.value) < 1e-10
        assert np.isclose(s.value, s.recompute())


def test_integrand_on_sphere_and_flat_space():
    s = nu_integrand(M.round_sphere(), np.array([0.1, 0.2, -0.3, 0.4]))
    assert np.isclose(s.value, 144.0 / 24.0 / (8 * np.pi ** 2))
    assert np.isclose(s.value, 3.0 / (4.0 * np.pi ** 2))
    assert nu_integrand(M.flat_metric(), np.zeros(4)).value == 0.0


def test_orientation_swaps_weyl_parts():
    g = C.chyp_metric(2)
    p = np.array([0.7, 0.3, 0.2, -0.5])
    a = nu_integrand(g, p, g.complex_orientation)
    b = nu_integrand(g, p, -g.complex_orientation)
    assert np.isclose(a.wplus2, b.wminus2) and np.isclose(a.wminus2, b.wplus2)
    assert abs(b.value) > 1e-3


def test_integrand_needs_dimension_four():
    with pytest.raises(ValueError):
        nu_integrand(C.chyp_metric(3), np.ones(6))


def test_box_volume_against_closed_form():
    g = C.chyp_metric(2)
    box = CoordinateBox([0.5, -1, -1, -1], [1.0, 1, 1, 1])
    est = integrate_region(g, box, 1024, 1, integrand=lambda p: 1.0)
    exact = 8.0 * (0.5 ** -2 - 1.0) / 2.0
    assert abs(est.value - exact) < max(5 * est.error, 1e-2)


def test_shell_volume_against_monte_carlo_oracle():
    g = C.chyp_metric(2)
    est = integrate_region(g, TransitionShell(0.25, 0.5, 0.05), 4096, 2, integrand=lambda p: 1.0)
    # plain Monte Carlo in (u, v, rho) with the rotation of W integrated out
    rng = np.random.default_rng(0)
    N = 400_000
    u = rng.uniform(0.05, 0.5, N)
    v = rng.uniform(-0.5, 0.5, N)
    rho = rng.uniform(0.0, np.sqrt(2.0), N)
    z = (u + rho ** 2 / 4) ** 2 + v ** 2
    vals = np.where((z >= 0.0625) & (z <= 0.25), 2 * np.pi * rho * u ** -3.0, 0.0) * 0.45 * np.sqrt(2.0)
    oracle, oerr = vals.mean(), vals.std() / np.sqrt(N)
    assert abs(est.value - oracle) < 4 * np.hypot(est.error, oerr)


def test_collar_integral_of_nu_is_zero():
    g = C.chyp_metric(2)
    est = integrate_region(g, TransitionShell(0.25, 1.0, 0.1), 128, 3)
    assert abs(est.value) <= max(3 * est.error, 1e-9)


def test_infinite_regions_are_rejected():
    with pytest.raises(ValueError, match="infinite"):
        CoordinateBox([0.0, -np.inf, 0, 0], [1.0, 1, 1, 1])
    with pytest.raises(ValueError, match="infinite"):
        TransitionShell(0.25, 0.5, 0.0)
    with pytest.raises(ValueError):
        integrate_region(C.chyp_metric(2), object(), 64, 0)


def test_quadrature_is_seed_deterministic():
    g = C.chyp_metric(2)
    box = CoordinateBox([0.5, -1, -1, -1], [1.0, 1, 1, 1])
    a = integrate_region(g, box, 64, 9, integrand=lambda p: p[0])
    b = integrate_region(g, box, 64, 9, integrand=lambda p: p[0])
    assert a == b


@pytest.mark.parametrize("k", [1, 2, 3])
def test_surgery_ledger(k):
    assert surgery_bookkeeping(k).as_tuple() == (-k, 0, k)


def test_surgery_ledger_addition_and_validation():
    assert surgery_bookkeeping(1) + surgery_bookkeeping(2) == surgery_bookkeeping(3)
    assert surgery_bookkeeping(2).to_dict() == {"k": 2, "chi_delta": -2, "tau_delta": 0, "nu_delta": 2}
    for bad in (0, -1, 1.5, True):
        with pytest.raises(ValueError):
            surgery_bookkeeping(bad)
    with pytest.raises(ValueError):
        SurgeryLedger(1, -1, 0, 2)
