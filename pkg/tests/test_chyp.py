import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from achforge import chyp as C
from achforge import jet as J
from achforge.tensor import curvature, norm2, sectional_curvature

RNG = np.random.default_rng(11)


def random_horo(n, rng=RNG):
    return np.concatenate([[rng.uniform(0.1, 3.0)], rng.normal(size=2 * n - 1)])


def horo_to_Z(h):
    return C.affine_to_projective(C.from_horospherical(C.HoroPoint.from_real(h))).Z


@pytest.mark.parametrize("n", [2, 3])
def test_horo_metric_matches_projective_formula(n):
    h = random_horo(n)
    Z = horo_to_Z(h)
    eps = 1e-6
    V = []
    for i in range(2 * n):
        e = np.zeros(2 * n)
        e[i] = eps
        V.append((horo_to_Z(h + e) - horo_to_Z(h - e)) / (2 * eps))
    G = np.zeros((2 * n, 2 * n))
    for i in range(2 * n):
        for j in range(2 * n):
            G[i, j] = 0.5 * (C.chyp_metric_projective(Z, V[i] + V[j]) - C.chyp_metric_projective(Z, V[i])
                             - C.chyp_metric_projective(Z, V[j]))
    assert np.allclose(C.chyp_metric(n).at(h), G, rtol=1e-6, atol=1e-6)


@pytest.mark.parametrize("n", [2, 3])
def test_model_is_einstein(n):
    g = C.chyp_metric(n)
    for _ in range(10):
        pk = curvature(g, random_horo(n))
        E = pk.ricci + (n + 1) / 2 * pk.metric
        assert np.sqrt(norm2(E, pk.metric_inv)) < 1e-10


def test_siegel_metric_is_pullback_of_horo_metric():
    n = 2
    s = np.array([0.3, -0.2, 1.0, 0.4])
    pb = C.pullback_metric(C.chyp_metric(n), C.siegel_to_horo)
    assert np.allclose(C.chyp_metric_siegel(n).at(s), pb.at(s), atol=1e-12)


def test_holomorphic_sectional_curvature_pinching():
    n = 2
    gs = C.chyp_metric_siegel(n)
    Jst = C.J_std(n)
    s = np.array([0.3, -0.2, 1.0, 0.4])
    pk = curvature(gs, s)
    X = RNG.normal(size=4)
    assert np.isclose(sectional_curvature(pk, X, Jst @ X), -1.0)
    Y = RNG.normal(size=4)
    G = pk.metric
    for v in (X, Jst @ X):
        Y = Y - (v @ G @ Y) / (v @ G @ v) * v
    assert np.isclose(sectional_curvature(pk, X, Y), -0.25)
    for _ in range(50):
        K = sectional_curvature(pk, RNG.normal(size=4), RNG.normal(size=4))
        assert -1 - 1e-9 <= K <= -0.25 + 1e-9


def test_weyl_plus_spectrum_in_complex_orientation():
    g = C.chyp_metric(2)
    pk = curvature(g, np.array([0.7, 0.3, 0.2, -0.5]), g.complex_orientation)
    assert np.isclose(pk.scalar, -6.0)
    ev = np.sort(np.linalg.eigvalsh(pk.weyl_plus))
    assert np.allclose(ev, [-1.0, 0.5, 0.5])
    assert np.abs(pk.weyl_minus).max() < 1e-12


@settings(max_examples=40, deadline=None)
@given(st.floats(0.01, 10), st.floats(-5, 5), st.floats(-5, 5), st.floats(-5, 5))
def test_horo_roundtrip(u, v, x, y):
    p = C.HoroPoint(u, v, np.array([x + 1j * y]))
    Z = C.affine_to_projective(C.from_horospherical(p))
    q = C.to_horospherical(Z)
    assert np.allclose(q.as_real(), p.as_real(), atol=1e-9 * (1 + abs(x) + abs(y)) ** 2)
    assert np.isclose(C.height_projective(Z), u, rtol=1e-9, atol=1e-9 * (1 + x * x + y * y))


def test_exterior_point_rejected():
    with pytest.raises(ValueError):
        C.to_horospherical(np.array([3.0 + 0j, 0.1 + 0j]))
    with pytest.raises(ValueError):
        C.chyp_metric_projective(np.array([-1.0, 3.0, 0.1]), np.array([0, 1.0, 0]))


def form_matrix(n):
    Q = np.eye(n + 1, dtype=complex)
    Q[0, 0] = Q[n, n] = 0
    Q[0, n] = Q[n, 0] = 2
    return Q


@pytest.mark.parametrize("iso", [C.dilation_H(0.7 + 0.4j, 3, np.array([[0, 1j], [1, 0]])),
                                 C.inversion_I(0.6, 3), C.conversion_K(1.3, 3)])
def test_isometry_matrices_preserve_the_form(iso):
    M = iso.matrix
    Q = form_matrix(3)
    assert np.allclose(M.conj().T @ Q @ M, Q)


@pytest.mark.parametrize("iso", [C.dilation_H(0.7 + 0.4j, 2, np.array([[np.exp(0.3j)]])),
                                 C.inversion_I(0.6), C.conversion_K(1.3)])
def test_isometries_pull_back_metric(iso):
    g = C.chyp_metric(2)
    h = np.array([0.7, 0.3, 0.2, -0.5])
    pb = C.pullback_metric(g, iso.on_horo)
    assert np.allclose(pb.at(h), g.at(h), atol=1e-12)


def test_non_isometry_control_fails():
    g = C.chyp_metric(2)
    h = np.array([0.7, 0.3, 0.2, -0.5])
    pb = C.pullback_metric(g, lambda x: x * 1.1)
    assert np.abs(pb.at(h) - g.at(h)).max() > 1e-2


def test_dilation_scales_height():
    mu = 0.8 - 0.3j
    H = C.dilation_H(mu, 2)
    h = np.array([0.7, 0.3, 0.2, -0.5])
    assert np.isclose(H.on_horo(h)[0], abs(mu) ** 2 * h[0])


def test_inversions_are_involutions_swapping_half_balls():
    lam = 0.6
    for iso in (C.inversion_I(lam), C.conversion_K(lam)):
        for _ in range(10):
            h = random_horo(2)
            assert np.allclose(iso.on_horo(iso.on_horo(h)), h, atol=1e-12)
        h = np.array([0.05, 0.1, 0.2, 0.1])
        assert C.region_classify(h, C.Region("BPlus", (lam,)))
        assert C.region_classify(iso.on_horo(h), C.Region("BMinus", (lam,)))


def test_composition_and_inverse():
    A = C.dilation_H(0.5 + 0.5j, 2)
    B = C.inversion_I(0.8)
    h = random_horo(2)
    AB = A.compose(B)
    assert np.allclose(AB.on_horo(h), A.on_horo(B.on_horo(h)))
    assert np.allclose(AB.inverse().on_horo(AB.on_horo(h)), h)


def test_region_validation():
    with pytest.raises(ValueError):
        C.Region("Annulus", (0.5, 0.25))
    with pytest.raises(ValueError):
        C.Region("BPlus", (-1.0,))
    with pytest.raises(ValueError):
        C.Region("Nowhere", (1.0,))
    r = C.Region("Annulus", (0.25, 0.5))
    assert C.Region.from_dict(r.to_dict()) == r


def test_kahler_potential_and_fefferman():
    gs = C.chyp_metric_siegel(2)
    Jst = C.J_std(2)
    for _ in range(5):
        s = np.asarray(C.horo_to_siegel(random_horo(2)))
        G = C.kahler_metric_from_potential(lambda x: -1.0 * J.log(C.height_siegel(x)), Jst, s)
        assert np.allclose(G, gs.at(s), atol=1e-12)
        assert abs(C.fefferman_residual(C.height_siegel, s)) < 1e-12
    s = np.array([0.1, 0.2, 1.0, 0.0])
    assert abs(C.fefferman_residual(lambda x: 2.0 * C.height_siegel(x), s)) > 1e-3


def test_potential_must_be_plurisubharmonic():
    s = np.array([0.1, 0.2, 1.0, 0.3])
    with pytest.raises(ValueError):
        C.kahler_metric_from_potential(lambda x: J.log(C.height_siegel(x)), C.J_std(2), s)


def test_contact_frame_spans_kernel():
    q = np.array([0.3, 0.5, -0.7])
    F = C.contact_frame(q)
    eta = C.contact_form_eta0(q)
    assert np.allclose(eta @ F, 0.0)
    assert np.isclose(F[:, 0] @ C.d_eta0(3) @ F[:, 1], 1.0)


@pytest.mark.parametrize("make", [C.normal_form_cr, C.generic_cr])
def test_cr_structures_are_pseudoconvex(make):
    cr = make(3, 0.3)
    for _ in range(5):
        q = RNG.normal(size=5)
        Jq = np.asarray(cr(q))
        assert np.allclose(Jq @ Jq, -np.eye(4))
        cr.check(q)
    assert np.allclose(cr(np.zeros(5)), C.J0_matrix(3))


def test_bad_cr_structure_rejected():
    bad = C.CRStructure(lambda q: np.eye(2), 2)
    with pytest.raises(ValueError):
        bad.check(np.zeros(3))


def test_varpi_shape():
    eps = 0.1
    xs = np.linspace(0.5, 2.0, 400)
    vals = np.array([float(C.varpi(x, eps)) for x in xs])
    assert np.all(np.diff(vals * 1.0) <= 1e-15)
    assert np.allclose(vals[xs <= 0.9], 1.0)
    assert np.allclose(vals[xs >= 1.1], 1.0 / xs[xs >= 1.1])
    for edge in (0.9, 1.1):
        assert abs(float(C.varpi(edge - 1e-9)) - float(C.varpi(edge + 1e-9))) < 1e-8


def test_hat_f_invariance_and_limits():
    I1 = C.inversion_I(1.0)
    for _ in range(20):
        h = random_horo(2)
        assert np.isclose(C.hat_f(I1.on_horo(h)), C.hat_f(h), rtol=1e-12)
        x = float(C.zn_modulus2(h))
        assert np.isclose(C.hat_f_array(h[0], x), C.hat_f(h))
    near = np.array([0.01, 0.05, 0.3, 0.2])
    assert float(C.zn_modulus2(near)) < 1 / 1.1
    assert np.isclose(C.hat_f(near), near[0])
    far = np.array([1.0, 3.0, 1.0, 0.0])
    assert np.isclose(C.hat_f(far), far[0] / float(C.zn_modulus2(far)))
