import itertools

import numpy as np
import pytest

from achforge import jet as J
from achforge.models import flat_metric, product_h2h2, real_hyperbolic, round_sphere, scaled_metric
from achforge.tensor import (
    MetricField,
    Sym2Field,
    christoffel,
    covariant_derivative,
    curvature,
    gram_schmidt,
    operator_from_tensor,
    ring_action,
    rough_laplacian,
    sectional_curvature,
    self_dual_basis,
    tensor_from_operator,
    weyl_split_4d,
)

P = np.array([0.1, 0.2, -0.3, 0.4])


def warped(x):
    """A generic non-symmetric test metric (numpy or jets)."""
    a = 1.0 + 0.3 * x[0] * x[0] + 0.1 * x[1]
    b = 2.0 + 0.2 * J.sin(x[2]) if isinstance(x, J.Jet) else 2.0 + 0.2 * np.sin(x[2])
    c = 0.1 * x[0] * x[3]
    z = x[0] * 0.0
    rows = [[a, c, z, z], [c, b, z, 0.05 * x[1]], [z, z, 1.0 + 0.2 * x[3] * x[3] + z, z],
            [z, 0.05 * x[1], z, 1.5 + 0.1 * x[0] + z]]
    if isinstance(x, J.Jet):
        return J.stack([J.stack([r if isinstance(r, J.Jet) else r + z for r in row]) for row in rows])
    return np.array(rows, dtype=float)


def fd_christoffel(gfun, p, h=1e-5):
    d = p.size
    dg = np.zeros((d, d, d))
    for k in range(d):
        e = np.zeros(d)
        e[k] = h
        dg[k] = (gfun(p + e) - gfun(p - e)) / (2 * h)
    ginv = np.linalg.inv(gfun(p))
    # Gamma^k_ij = 1/2 g^kl (d_i g_jl + d_j g_il - d_l g_ij)
    return 0.5 * np.einsum("kl,ijl->kij", ginv,
                           dg.transpose(0, 1, 2) + dg.transpose(1, 0, 2) - np.einsum("lij->ijl", dg))


def fd_riemann_up(gfun, p, h=1e-4):
    d = p.size
    G = fd_christoffel(gfun, p)
    dG = np.zeros((d, d, d, d))
    for i in range(d):
        e = np.zeros(d)
        e[i] = h
        dG[i] = (fd_christoffel(gfun, p + e) - fd_christoffel(gfun, p - e)) / (2 * h)
    # R^l_ijk = d_i G^l_jk - d_j G^l_ik + G^l_im G^m_jk - G^l_jm G^m_ik
    return (np.einsum("iljk->lijk", dG) - np.einsum("jlik->lijk", dG)
            + np.einsum("lim,mjk->lijk", G, G) - np.einsum("ljm,mik->lijk", G, G))


def test_christoffel_matches_finite_differences():
    g = MetricField(warped, 4)
    assert np.allclose(christoffel(g, P), fd_christoffel(warped, P), atol=1e-8)


def test_riemann_matches_finite_differences():
    g = MetricField(warped, 4)
    pk = curvature(g, P)
    assert np.allclose(pk.riemann_up, fd_riemann_up(warped, P), atol=1e-5)


def test_riemann_symmetries():
    pk = curvature(MetricField(warped, 4), P)
    R = pk.riemann
    assert np.allclose(R, -R.transpose(1, 0, 2, 3), atol=1e-12)
    assert np.allclose(R, -R.transpose(0, 1, 3, 2), atol=1e-12)
    assert np.allclose(R, R.transpose(2, 3, 0, 1), atol=1e-12)
    bianchi = R + R.transpose(1, 2, 0, 3) + R.transpose(2, 0, 1, 3)
    assert np.abs(bianchi).max() < 1e-12


@pytest.mark.parametrize("g,K", [(round_sphere(), 1.0), (real_hyperbolic(), -1.0)])
def test_space_forms(g, K):
    pk = curvature(g, P)
    G = pk.metric
    expected = K * (np.einsum("il,jk->ijkl", G, G) - np.einsum("ik,jl->ijkl", G, G))
    assert np.allclose(pk.riemann, expected, atol=1e-10)
    assert np.allclose(pk.ricci, 3 * K * G, atol=1e-10)
    assert np.isclose(pk.scalar, 12 * K)
    assert np.allclose(operator_from_tensor(pk.riemann_frame()), K * np.eye(6), atol=1e-10)
    assert np.abs(pk.weyl_plus).max() < 1e-10 and np.abs(pk.weyl_minus).max() < 1e-10
    rng = np.random.default_rng(0)
    X, Y = rng.normal(size=4), rng.normal(size=4)
    assert np.isclose(sectional_curvature(pk, X, Y), K)


def test_flat_metric_has_zero_curvature():
    pk = curvature(flat_metric(), P)
    assert np.abs(pk.riemann).max() == 0.0
    assert pk.scalar == 0.0


def test_scaling_metric_scales_curvature():
    g = round_sphere()
    pk1 = curvature(g, P)
    pk2 = curvature(scaled_metric(g, 2.0), P)
    assert np.allclose(pk2.ricci, pk1.ricci)
    assert np.isclose(pk2.scalar, pk1.scalar / 2.0)


def test_ring_action_on_metric_is_ricci():
    pk = curvature(MetricField(warped, 4), P)
    assert np.allclose(ring_action(pk, pk.metric), pk.ricci, atol=1e-12)


def test_ring_action_brute_force():
    pk = curvature(MetricField(warped, 4), P)
    rng = np.random.default_rng(1)
    h = rng.normal(size=(4, 4))
    h = h + h.T
    gi = pk.metric_inv
    R = pk.riemann  # R_ijkl with R(X, Y, Y, X) the sectional numerator
    brute = np.zeros((4, 4))
    for b, c, a, d, p_, q in itertools.product(range(4), repeat=6):
        brute[b, c] += R[a, b, c, d] * gi[a, p_] * gi[d, q] * h[p_, q]
    assert np.allclose(ring_action(pk, h), brute, atol=1e-10)


def test_operator_tensor_roundtrip():
    rng = np.random.default_rng(2)
    A = rng.normal(size=(6, 6))
    A = A + A.T
    assert np.allclose(operator_from_tensor(tensor_from_operator(A, 4)), A)


def hodge_star_matrix():
    pairs = list(itertools.combinations(range(4), 2))
    M = np.zeros((6, 6))
    for r, (a, b) in enumerate(pairs):
        c, d = [i for i in range(4) if i not in (a, b)]
        perm = [a, b, c, d]
        sign = np.linalg.det(np.eye(4)[perm])
        M[pairs.index((c, d)), r] = sign
    return M


def test_self_dual_basis_diagonalizes_hodge_star():
    star = hodge_star_matrix()
    sd, asd = self_dual_basis(1)
    assert np.allclose(sd @ sd.T, np.eye(3))
    assert np.allclose(asd @ asd.T, np.eye(3))
    assert np.allclose(star @ sd.T, sd.T)
    assert np.allclose(star @ asd.T, -asd.T)
    sd2, asd2 = self_dual_basis(-1)
    assert np.allclose(sd2, asd) and np.allclose(asd2, sd)


def test_weyl_split_on_product_of_hyperbolic_planes():
    pk = curvature(product_h2h2(), np.array([0.0, 1.0, 0.5, 2.0]))
    wp, wm = weyl_split_4d(pk, 1)
    assert np.allclose(wp, wp.T) and np.allclose(wm, wm.T)
    assert abs(np.trace(wp)) < 1e-12 and abs(np.trace(wm)) < 1e-12
    assert np.linalg.norm(wp) > 0.1 and np.linalg.norm(wm) > 0.1
    assert np.allclose(np.sort(np.linalg.eigvalsh(wp)), np.sort(np.linalg.eigvalsh(wm)))


def test_metric_is_parallel():
    g = MetricField(warped, 4)
    assert np.abs(covariant_derivative(g, g, P)).max() < 1e-12


def test_rough_laplacian_of_conformal_field():
    g = round_sphere()

    def phi(x):
        return 1.0 + x[0] * x[1] + 0.5 * x[2] * x[2] * x[3]

    h = Sym2Field(lambda x: g(x) * phi(x), 4)
    lap = rough_laplacian(h, g, P)
    pk = curvature(g, P)
    # scalar Laplacian of phi by finite differences of the coordinate formula
    eps = 1e-4

    def grad_term(q):
        G = g.at(q)
        detg = np.sqrt(np.linalg.det(G))
        x = J.seed(q, 1)
        return detg * np.linalg.inv(G) @ phi(x).derivative_tensor(1)

    div = 0.0
    for i in range(4):
        e = np.zeros(4)
        e[i] = eps
        div += (grad_term(P + e)[i] - grad_term(P - e)[i]) / (2 * eps)
    lap_phi = -div / np.sqrt(np.linalg.det(pk.metric))
    assert np.allclose(lap, lap_phi * pk.metric, atol=1e-6)


def test_gram_schmidt_orthonormalizes():
    rng = np.random.default_rng(3)
    A = rng.normal(size=(4, 4))
    G = A @ A.T + 4 * np.eye(4)
    E = gram_schmidt(G)
    assert np.allclose(E.T @ G @ E, np.eye(4))


def test_degenerate_metric_rejected():
    g = MetricField(lambda x: np.diag([1.0, 1.0, 1.0, 0.0]) + x[0] * 0.0, 4)
    with pytest.raises(ValueError):
        curvature(g, P)


def test_sectional_curvature_rejects_parallel_vectors():
    pk = curvature(round_sphere(), P)
    X = np.array([1.0, 0.0, 0.0, 0.0])
    with pytest.raises(ValueError):
        sectional_curvature(pk, X, 2 * X)
