import logging

import numpy as np
import pytest

from achforge import chyp as C
from achforge import jet as J
from achforge import einstein as E
from achforge import models as M
from achforge.tensor import MetricField, Sym2Field, curvature, ring_action

P0 = np.array([0.7, 0.2, 0.3, -0.1])


@pytest.fixture
def hdot():
    return M.random_polynomial_sym2(np.random.default_rng(1), 4, 0.5)


def test_einstein_residual_small_on_model_and_large_on_sphere():
    _, r = E.einstein_residual(C.chyp_metric(2), 2, P0)
    assert r < 1e-10
    _, r = E.einstein_residual(M.round_sphere(), 2, np.array([0.1, 0.2, 0.3, 0.4]))
    assert r > 1.0


def test_phi_vanishes_at_the_reference_metric():
    g = C.chyp_metric(2)
    assert np.abs(E.gauged_operator_Phi(g, g, P0)).max() < 1e-10


def test_linearization_matches_finite_difference(hdot):
    g = C.chyp_metric(2)
    L = E.linearized_L(g, hdot, P0)
    base = E.gauged_operator_Phi(g, g, P0)
    errs = []
    for t in (1e-3, 1e-4):
        gt = MetricField(lambda x, t=t: g(x) + hdot(x) * t, 4)
        errs.append(np.abs((E.gauged_operator_Phi(g, gt, P0) - base) / t - L).max())
    assert errs[1] < 1e-3 * max(1.0, np.abs(L).max())
    assert errs[1] < 0.2 * errs[0]


def test_linearization_on_flat_constant_tensor():
    g = M.flat_metric()
    A = np.random.default_rng(2).normal(size=(4, 4))
    A = A + A.T
    h = Sym2Field(lambda x: A + x[0] * 0.0, 4)
    assert np.allclose(E.linearized_L(g, h, np.zeros(4)), 1.5 * A)


def test_linearization_of_metric_direction():
    g = C.chyp_metric(2)
    pk = curvature(g, P0)
    assert np.allclose(E.linearized_L(g, g, P0), -ring_action(pk, pk.metric), atol=1e-10)


def test_linearization_preserves_hermitian_splitting(hdot):
    g = C.chyp_metric_siegel(2)
    Js = C.J_std(2)

    def anti(x):
        A = hdot(x)
        return (A - J.einsum("ai,ij,jb->ab", Js.T, A, Js)) * 0.5

    p = np.array([0.2, 0.1, 1.3, 0.4])
    Lh = E.linearized_L(g, Sym2Field(anti, 4), p)
    herm = 0.5 * (Lh + Js.T @ Lh @ Js)
    assert np.abs(herm).max() < 1e-10 * np.abs(Lh).max()


WEITZENBOCK_CASES = [
    ("chyp", lambda: C.chyp_metric(2), P0),
    ("sphere", M.round_sphere, np.array([0.2, 0.1, -0.3, 0.4])),
    ("real hyperbolic", M.real_hyperbolic, np.array([0.2, 0.1, -0.3, 0.4])),
    ("H2xH2", M.product_h2h2, np.array([0.2, 1.1, -0.3, 0.8])),
]


@pytest.mark.parametrize("name,make,p", WEITZENBOCK_CASES)
@pytest.mark.parametrize("orientation", [1, -1])
def test_weitzenbock_identity(name, make, p, orientation, hdot):
    g = make()
    h0 = E.trace_free_part(hdot, g)
    assert E.weitzenbock_residual(g, h0, p, orientation) < 1e-8


def test_weitzenbock_control_without_wminus(hdot):
    g = M.product_h2h2()
    h0 = E.trace_free_part(hdot, g)
    p = np.array([0.2, 1.1, -0.3, 0.8])
    assert E.weitzenbock_residual(g, h0, p, 1, drop_wminus=True) > 1e-3


def test_weitzenbock_zero_tensor():
    g = C.chyp_metric(2)
    zero = Sym2Field(lambda x: np.zeros((4, 4)) + x[0] * 0.0, 4)
    t = E.weitzenbock_terms(g, zero, P0)
    assert t.residual == 0.0 and np.abs(t.lhs).max() == 0.0


def test_weitzenbock_rejects_non_einstein_and_wrong_dimension(hdot):
    warped = MetricField(lambda x: np.eye(4) * (1.0 + 0.3 * x[0] * x[0]) + x[1] * 0.0, 4)
    with pytest.raises(ValueError, match="not Einstein"):
        E.weitzenbock_terms(warped, hdot, np.array([0.5, 0.1, 0.2, 0.3]))
    with pytest.raises(ValueError, match="4-dimensional"):
        E.weitzenbock_terms(C.chyp_metric(3), hdot, np.ones(6))


def test_weitzenbock_warns_when_projecting(hdot, caplog):
    with caplog.at_level(logging.WARNING, logger="achforge.einstein"):
        E.weitzenbock_terms(C.chyp_metric(2), hdot, P0)
    assert "trace-free" in caplog.text


def test_trace_equation():
    g = C.chyp_metric(2)

    def phi(x):
        return 1.0 + 0.3 * x[0] * x[1] + 0.2 * x[2] * x[2] * x[3]

    a, b = E.trace_equation(g, phi, P0)
    assert np.isclose(a, b, rtol=1e-9)


def test_wplus_alpha_ratio():
    g = C.chyp_metric(2)
    s = curvature(g, P0).scalar
    rng = np.random.default_rng(3)
    for _ in range(5):
        ratio, spread = E.wplus_action_alpha(g, rng.normal(size=3), P0)
        assert np.isclose(ratio, s / 6.0, atol=1e-8)
        assert spread < 1e-8
    assert E.wplus_action_alpha(g, np.zeros(3), P0) == (0.0, 0.0)


def test_wplus_alpha_rejects_wrong_spectrum():
    with pytest.raises(ValueError):
        E.wplus_action_alpha(M.round_sphere(), np.ones(3), np.array([0.2, 0.1, -0.3, 0.4]))


def test_psi_basis_is_orthogonal_and_trace_free():
    Op, Om, S = E.psi_basis(1)
    flat = S.reshape(9, 16)
    gram = flat @ flat.T
    assert np.allclose(gram, gram[0, 0] * np.eye(9))
    assert np.allclose(np.einsum("abuu->ab", S), 0.0)
    assert np.allclose(S, S.transpose(0, 1, 3, 2))


def test_decay_fit_recovers_power_law():
    x = 2.0 ** -np.arange(3, 9)
    fit = E.decay_fit(np.column_stack([x, 3.0 * x ** 0.5]))
    assert np.isclose(fit.slope, 0.5) and np.isclose(fit.r2, 1.0)
    lo, hi = fit.band()
    assert lo <= 0.5 <= hi


def test_decay_fit_rejects_bad_input():
    with pytest.raises(ValueError):
        E.decay_fit([(1.0, 1.0), (2.0, 2.0), (3.0, 3.0)])
    with pytest.raises(ValueError):
        E.decay_fit([(1.0, 1.0), (2.0, 0.0), (3.0, 3.0), (4.0, 1.0)])


def test_l2_far_slope_is_exponent():
    v = E.l2_weight_integrability(1.0, 0.5, 2, shells=6)
    assert np.isclose(v.far_slope, 1.0 + 0.5 - 2.0, atol=0.02)
    assert v.convergent


@pytest.mark.parametrize("n,delta,dprime", [(2, 0.5, 0.25), (2, 1.5, 1.4), (2, 1.0, 0.5),
                                            (2, 1.2, 0.8), (2, 1.9, 0.05), (3, 2.0, 1.0)])
def test_l2_truth_table(n, delta, dprime):
    v = E.l2_weight_integrability(delta, dprime, n, shells=6)
    assert v.convergent == (delta + dprime < n)


def test_l2_rejects_bad_weights():
    with pytest.raises(ValueError):
        E.l2_weight_integrability(0.5, 0.7)
    with pytest.raises(ValueError):
        E.l2_weight_integrability(0.5, 0.0)
