import numpy as np
import pytest

from achforge import chyp as C
from achforge.sampling import sample_boundary_ball, sample_interior, sample_region, sample_shell, sobol

REGIONS = [C.Region("Annulus", (0.25, 0.5)), C.Region("BPlus", (0.3,)), C.Region("BMinus", (0.3,)),
           C.Region("Disk", (0.4,)), C.Region("Paraboloid", (0.2,)), C.Region("BoundaryBall", (0.5,))]


@pytest.mark.parametrize("n", [2, 3])
@pytest.mark.parametrize("region", REGIONS, ids=lambda r: r.kind)
def test_samples_lie_in_region_and_are_deterministic(region, n):
    P = sample_region(region, 200, 7, n)
    assert P.shape == (200, 2 * n)
    assert all(C.region_classify(p, region, tol=1e-9) for p in P)
    assert np.array_equal(P, sample_region(region, 200, 7, n))
    assert not np.array_equal(P, sample_region(region, 200, 8, n))


def test_sobol_is_inside_unit_cube():
    X = sobol(5, 100, 0)
    assert X.shape == (100, 5) and X.min() > 0 and X.max() < 1
    with pytest.raises(ValueError):
        sobol(2, 0, 0)


def test_shell_and_interior_helpers():
    H = sample_shell(0.25, 0.5, 64, 1)
    r = np.sqrt(np.array([float(C.zn_modulus2(h)) for h in H]))
    assert r.min() >= 0.25 - 1e-12 and r.max() < 0.5
    assert np.all(H[:, 0] > 0)
    with pytest.raises(ValueError):
        sample_shell(0.5, 0.25, 8, 1)
    I = sample_interior(64, 2, 3, u_range=(0.1, 2.0))
    assert I.shape == (64, 6) and I[:, 0].min() >= 0.1 and I[:, 0].max() <= 2.0
    Q = sample_boundary_ball(0.5, 32, 3)
    assert Q.shape == (32, 3)


def test_shell_coverage_reaches_both_boundaries():
    region = C.Region("Annulus", (0.25, 0.5))
    P = sample_region(region, 4096, 0)
    r = np.sqrt(np.array([float(C.zn_modulus2(p)) for p in P]))
    width = 0.25
    assert r.min() - 0.25 <= width / 10
    assert 0.5 - r.max() <= width / 10
