import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from achforge import jet as J


def fd_grad(f, p, h=1e-6):
    p = np.asarray(p, dtype=float)
    out = []
    for i in range(p.size):
        e = np.zeros_like(p)
        e[i] = h
        out.append((f(p + e) - f(p - e)) / (2 * h))
    return np.array(out)


def fd_hess(f, p, h=1e-4):
    return fd_grad(lambda q: fd_grad(f, q, h), p, h)


def sample_fn(x):
    return J.exp(x[0] * x[1]) * J.sin(x[2]) + J.log(1.0 + x[0] * x[0]) / (2.0 + J.cos(x[1]))


def sample_fn_np(x):
    return np.exp(x[0] * x[1]) * np.sin(x[2]) + np.log(1.0 + x[0] ** 2) / (2.0 + np.cos(x[1]))


def test_value_and_gradient_match_finite_differences():
    p = np.array([0.3, -0.7, 1.1])
    f = sample_fn(J.seed(p, 1))
    assert np.isclose(f.value, sample_fn_np(p))
    assert np.allclose(f.derivative_tensor(1), fd_grad(sample_fn_np, p), atol=1e-8)


def test_second_and_third_derivatives():
    p = np.array([0.2, 0.4, -0.5])
    f = sample_fn(J.seed(p, 3))
    H = f.derivative_tensor(2)
    assert np.allclose(H, H.T)
    assert np.allclose(H, fd_hess(sample_fn_np, p), atol=1e-5)
    T = f.derivative_tensor(3)
    fd3 = fd_grad(lambda q: sample_fn(J.seed(q, 2)).derivative_tensor(2), p, 1e-5)
    assert np.allclose(T, fd3, atol=1e-5)
    assert np.allclose(T, T.transpose(1, 0, 2))
    assert np.allclose(T, T.transpose(0, 2, 1))


def test_power_sqrt_arctan_division():
    p = np.array([0.8, 1.7])

    def f(x):
        return J.power(x[0], 2.5) * J.sqrt(x[1]) + J.arctan(x[0] / x[1])

    def fn(x):
        return x[0] ** 2.5 * np.sqrt(x[1]) + np.arctan(x[0] / x[1])

    out = f(J.seed(p, 2))
    assert np.isclose(out.value, fn(p))
    assert np.allclose(out.derivative_tensor(1), fd_grad(fn, p), atol=1e-8)
    assert np.allclose(out.derivative_tensor(2), fd_hess(fn, p), atol=1e-5)


def test_complex_jets():
    p = np.array([0.3, 0.9])

    def f(x):
        z = x[0] + 1j * x[1]
        return J.real(z * z * z) + J.imag(J.conj(z) * z * z) + J.absolute2(z)

    def fn(x):
        z = x[0] + 1j * x[1]
        return (z ** 3).real + (np.conj(z) * z * z).imag + abs(z) ** 2

    out = f(J.seed(p, 2))
    assert np.isclose(out.value, fn(p))
    assert np.allclose(out.derivative_tensor(1), fd_grad(fn, p), atol=1e-8)


def test_matrix_inverse_and_einsum():
    p = np.array([0.1, 0.2])

    def M(x):
        return J.stack([J.stack([2.0 + x[0], x[1]]), J.stack([x[1], 3.0 + x[0] * x[1]])])

    def Mn(x):
        return np.array([[2.0 + x[0], x[1]], [x[1], 3.0 + x[0] * x[1]]])

    Minv = J.inv(M(J.seed(p, 2)))
    assert np.allclose(Minv.value, np.linalg.inv(Mn(p)))
    dfd = fd_grad(lambda q: np.linalg.inv(Mn(q)), p)
    assert np.allclose(Minv.derivative_tensor(1), dfd, atol=1e-8)
    tr = J.einsum("ij,ji->", M(J.seed(p, 1)), Minv.lower())
    assert np.allclose(tr.value, 2.0)
    assert np.allclose(tr.derivative_tensor(1), 0.0, atol=1e-12)


def test_ndarray_operands_defer_to_jets():
    x = J.seed(np.array([0.5, 0.25]), 1)
    out = np.eye(2) * x[0] + np.ones(2)[:, None] * x[1]
    assert isinstance(out, J.Jet)
    assert out.shape == (2, 2)


def test_derivative_order_guard():
    f = J.seed(np.array([1.0]), 1)
    with pytest.raises(ValueError):
        f.derivative_tensor(2)


@settings(max_examples=30, deadline=None)
@given(st.floats(-2, 2), st.floats(-2, 2), st.floats(-2, 2), st.floats(-2, 2))
def test_product_rule_property(a, b, c, d):
    p = np.array([a, b])
    x = J.seed(p, 2)
    f = J.sin(x[0]) + c * x[1]
    g = J.exp(0.3 * x[0]) * x[1] + d
    prod = f * g
    grad = f.derivative_tensor(1) * g.value + f.value * g.derivative_tensor(1)
    assert np.allclose(prod.derivative_tensor(1), grad, atol=1e-12)
