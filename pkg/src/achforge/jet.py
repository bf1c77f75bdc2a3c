"""Nested forward-mode dual numbers over numpy arrays.

A :class:`Jet` of order ``K`` in ``d`` variables stores the Taylor data of a
tensor-valued function up to ``K`` derivatives.  The storage is a single array
of shape ``(d+1,)*K + tensor_shape``.  Each leading axis is one nesting level
of a dual number: index 0 holds the "value part" of that level and index
``i+1`` holds the part multiplying the infinitesimal ``eps_i``.  Every level is
seeded with the identity, so after seeding the entry
``data[i1, ..., iK]`` (with zeros meaning "no derivative") is the mixed
partial derivative in the listed variables.

The representation is redundant (a second derivative is stored twice, once per
ordering) but it keeps every operation a short recursion over numpy calls,
which is all we need for curvature computations with ``d <= 8`` and ``K <= 3``.
"""

from __future__ import annotations

import math
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "Jet",
    "seed",
    "is_jet",
    "value",
    "as_data",
    "exp",
    "log",
    "sqrt",
    "power",
    "sin",
    "cos",
    "arctan",
    "conj",
    "real",
    "imag",
    "absolute2",
    "taylor",
    "einsum",
    "matmul",
    "inv",
    "stack",
    "zeros_like_jet",
]


def _bilinear(x: np.ndarray, y: np.ndarray, k: int, op: Callable) -> np.ndarray:
    """Product rule applied recursively over ``k`` leading dual axes.

    ``op`` must be bilinear and must broadcast over any extra leading axes
    of its operands (e.g. ``np.multiply`` or an ``einsum`` with ``...``).
    """
    if k == 0:
        return op(x, y)
    x0, y0 = x[0], y[0]
    head = _bilinear(x0, y0, k - 1, op)
    # The "i" axis of the outermost level is parked right after the remaining
    # dual axes so that it behaves as a batch axis for the inner recursion.
    xt = np.moveaxis(x[1:], 0, k - 1)
    yt = np.moveaxis(y[1:], 0, k - 1)
    x0e = np.expand_dims(x0, k - 1)
    y0e = np.expand_dims(y0, k - 1)
    tail = _bilinear(x0e, yt, k - 1, op) + _bilinear(xt, y0e, k - 1, op)
    tail = np.moveaxis(tail, k - 1, 0)
    head = np.broadcast_to(head, tail.shape[1:])
    return np.concatenate([head[None], tail], axis=0)


class Jet:
    """Truncated Taylor data of a tensor-valued function.

    Parameters
    ----------
    data:
        Array of shape ``(d+1,)*order + shape``.
    order:
        Number of nested dual levels (the number of derivatives carried).
    """

    __slots__ = ("data", "order")
    # Make ``ndarray <op> Jet`` defer to the Jet's reflected operators.
    __array_ufunc__ = None

    def __init__(self, data, order: int):
        self.data = np.asarray(data)
        self.order = int(order)
        if self.order < 0 or self.data.ndim < self.order:
            raise ValueError("jet data has fewer axes than its order")

    # ------------------------------------------------------------------ basics
    @property
    def nvars(self) -> int:
        if self.order == 0:
            return 0
        return self.data.shape[0] - 1

    @property
    def shape(self) -> tuple:
        return self.data.shape[self.order:]

    @property
    def ndim(self) -> int:
        return len(self.shape)

    @property
    def dtype(self):
        return self.data.dtype

    @property
    def value(self) -> np.ndarray:
        """Plain function value."""
        return self.data[(0,) * self.order]

    def __repr__(self) -> str:
        return f"Jet(order={self.order}, nvars={self.nvars}, shape={self.shape})"

    def lower(self, m: int = 1) -> "Jet":
        """Drop ``m`` derivative levels."""
        if m > self.order:
            raise ValueError("cannot lower a jet below order 0")
        return Jet(self.data[(0,) * m], self.order - m)

    def d(self, i: int) -> "Jet":
        """Jet of the partial derivative along variable ``i`` (one order less)."""
        if self.order == 0:
            raise ValueError("order-0 jet carries no derivatives")
        return Jet(self.data[i + 1], self.order - 1)

    def grad(self) -> "Jet":
        """Jet of all first partials; the derivative index is prepended."""
        if self.order == 0:
            raise ValueError("order-0 jet carries no derivatives")
        return Jet(np.moveaxis(self.data[1:], 0, self.order - 1), self.order - 1)

    def partial(self, *idx: int) -> np.ndarray:
        """Mixed partial derivative value, e.g. ``partial(0, 2)`` = d0 d2 f."""
        if len(idx) > self.order:
            raise ValueError("requested derivative exceeds jet order")
        key = tuple(i + 1 for i in idx) + (0,) * (self.order - len(idx))
        return self.data[key]

    def derivative_tensor(self, k: int) -> np.ndarray:
        """All ``k``-th partials as an array of shape ``(d,)*k + shape``."""
        if k > self.order:
            raise ValueError("requested derivative exceeds jet order")
        key = (slice(1, None),) * k + (0,) * (self.order - k)
        return self.data[key]

    # ------------------------------------------------------------- structural
    def _expand(self, ndim: int) -> np.ndarray:
        pad = ndim - self.ndim
        if pad <= 0:
            return self.data
        new = self.data.shape[: self.order] + (1,) * pad + self.shape
        return self.data.reshape(new)

    def __getitem__(self, idx) -> "Jet":
        if not isinstance(idx, tuple):
            idx = (idx,)
        return Jet(self.data[(slice(None),) * self.order + idx], self.order)

    def transpose(self, *axes) -> "Jet":
        if len(axes) == 1 and isinstance(axes[0], (tuple, list)):
            axes = tuple(axes[0])
        if not axes:
            axes = tuple(reversed(range(self.ndim)))
        k = self.order
        perm = list(range(k)) + [k + a for a in axes]
        return Jet(self.data.transpose(perm), k)

    @property
    def T(self) -> "Jet":
        return self.transpose()

    def reshape(self, *shape) -> "Jet":
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return Jet(self.data.reshape(self.data.shape[: self.order] + tuple(shape)), self.order)

    def sum(self, axis=None) -> "Jet":
        k = self.order
        if axis is None:
            axis = tuple(range(self.ndim))
        if isinstance(axis, int):
            axis = (axis,)
        axis = tuple(k + (a % self.ndim) for a in axis)
        return Jet(self.data.sum(axis=axis), k)

    def trace(self, axis1: int = 0, axis2: int = 1) -> "Jet":
        k = self.order
        return Jet(np.trace(self.data, axis1=k + axis1, axis2=k + axis2), k)

    def copy(self) -> "Jet":
        return Jet(self.data.copy(), self.order)

    # ------------------------------------------------------------- arithmetic
    def _coerce(self, other):
        """Return (self_data, other_data, is_jet) broadcast-aligned."""
        if isinstance(other, Jet):
            if other.order != self.order:
                raise ValueError(f"jet order mismatch: {self.order} vs {other.order}")
            nd = max(self.ndim, other.ndim)
            return self._expand(nd), other._expand(nd), True
        other = np.asarray(other)
        nd = max(self.ndim, other.ndim)
        return self._expand(nd), other, False

    def _add_const(self, a: np.ndarray, c: np.ndarray, sign: float = 1.0) -> "Jet":
        out_shape = np.broadcast_shapes(a.shape[self.order:], c.shape)
        dtype = np.result_type(a.dtype, c.dtype)
        out = np.zeros(a.shape[: self.order] + out_shape, dtype=dtype)
        out[...] = a
        out[(0,) * self.order] += sign * c
        return Jet(out, self.order)

    def __add__(self, other) -> "Jet":
        a, b, both = self._coerce(other)
        if both:
            return Jet(a + b, self.order)
        return self._add_const(a, b)

    __radd__ = __add__

    def __neg__(self) -> "Jet":
        return Jet(-self.data, self.order)

    def __pos__(self) -> "Jet":
        return self

    def __sub__(self, other) -> "Jet":
        a, b, both = self._coerce(other)
        if both:
            return Jet(a - b, self.order)
        return self._add_const(a, b, -1.0)

    def __rsub__(self, other) -> "Jet":
        return (-self) + other

    def __mul__(self, other) -> "Jet":
        a, b, both = self._coerce(other)
        if both:
            return Jet(_bilinear(a, b, self.order, np.multiply), self.order)
        return Jet(a * b, self.order)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "Jet":
        if isinstance(other, Jet):
            return self * power(other, -1)
        a, b, _ = self._coerce(other)
        return Jet(a / b, self.order)

    def __rtruediv__(self, other) -> "Jet":
        return power(self, -1) * other

    def __pow__(self, p) -> "Jet":
        if isinstance(p, Jet):
            return exp(log(self) * p)
        if isinstance(p, (int, np.integer)) and p >= 0:
            if p == 0:
                return self * 0 + 1
            out = self
            for _ in range(p - 1):
                out = out * self
            return out
        return power(self, p)

    def __matmul__(self, other):
        return matmul(self, other)

    def __rmatmul__(self, other):
        return matmul(other, self)

    def conj(self) -> "Jet":
        return Jet(np.conj(self.data), self.order)

    @property
    def real(self) -> "Jet":
        return Jet(self.data.real, self.order)

    @property
    def imag(self) -> "Jet":
        return Jet(self.data.imag, self.order)


# ----------------------------------------------------------------- helpers
def is_jet(x) -> bool:
    return isinstance(x, Jet)


def value(x):
    """Plain value of a jet or array."""
    return x.value if isinstance(x, Jet) else np.asarray(x)


def as_data(x):
    return x.data if isinstance(x, Jet) else np.asarray(x)


def seed(point, order: int, dtype=float) -> Jet:
    """Identity-seeded jet for the coordinates of ``point``.

    The result has tensor shape ``(d,)`` and carries derivatives up to
    ``order`` with respect to each coordinate.
    """
    p = np.asarray(point, dtype=dtype)
    if p.ndim != 1:
        raise ValueError("seed expects a 1-d coordinate vector")
    d = p.shape[0]
    data = np.zeros((d + 1,) * order + (d,), dtype=dtype)
    data[(0,) * order] = p
    for level in range(order):
        for i in range(d):
            key = [0] * order
            key[level] = i + 1
            data[tuple(key) + (i,)] = 1.0
    return Jet(data, order)


def zeros_like_jet(template: Jet, shape=(), dtype=None) -> Jet:
    dt = template.dtype if dtype is None else dtype
    return Jet(np.zeros(template.data.shape[: template.order] + tuple(shape), dtype=dt), template.order)


def taylor(x: Jet, derivs: Sequence[np.ndarray]) -> Jet:
    """Compose a scalar function with Taylor coefficients ``derivs`` at x.value.

    ``derivs[k]`` is the k-th derivative of the outer function evaluated at the
    value of ``x``.  Missing high orders are treated as zero.
    """
    K = x.order
    a = x.value
    h = x - a
    coeffs = [np.asarray(derivs[k]) / math.factorial(k) if k < len(derivs) else None
              for k in range(K + 1)]
    out = None
    for k in range(K, -1, -1):
        c = coeffs[k]
        if out is None:
            if c is None:
                continue
            out = zeros_like_jet(x, np.shape(c), np.result_type(x.dtype, c)) + c
            continue
        out = out * h
        if c is not None:
            out = out + c
    if out is None:
        out = zeros_like_jet(x, a.shape)
    return out


def exp(x):
    if not isinstance(x, Jet):
        return np.exp(x)
    e = np.exp(x.value)
    return taylor(x, [e] * (x.order + 1))


def log(x):
    if not isinstance(x, Jet):
        return np.log(x)
    a = x.value
    ds = [np.log(a)]
    for k in range(1, x.order + 1):
        ds.append(((-1) ** (k - 1)) * math.factorial(k - 1) / a**k)
    return taylor(x, ds)


def power(x, p: float):
    if not isinstance(x, Jet):
        return np.power(x, p)
    a = x.value
    ds = []
    coef = 1.0
    for k in range(x.order + 1):
        ds.append(coef * a ** (p - k))
        coef *= (p - k)
    return taylor(x, ds)


def sqrt(x):
    if not isinstance(x, Jet):
        return np.sqrt(x)
    return power(x, 0.5)


def sin(x):
    if not isinstance(x, Jet):
        return np.sin(x)
    a = x.value
    cyc = [np.sin(a), np.cos(a), -np.sin(a), -np.cos(a)]
    return taylor(x, [cyc[k % 4] for k in range(x.order + 1)])


def cos(x):
    if not isinstance(x, Jet):
        return np.cos(x)
    a = x.value
    cyc = [np.cos(a), -np.sin(a), -np.cos(a), np.sin(a)]
    return taylor(x, [cyc[k % 4] for k in range(x.order + 1)])


def arctan(x):
    if not isinstance(x, Jet):
        return np.arctan(x)
    if x.order == 0:
        return Jet(np.arctan(x.data), 0)
    # Value part recurses one level down; the derivative part is x' / (1 + x^2).
    low = x.lower()
    head = arctan(low).data
    tail = (x.grad() * power(1.0 + low * low, -1)).data
    return Jet(np.concatenate([head[None], np.moveaxis(tail, x.order - 1, 0)], axis=0), x.order)


def conj(x):
    return x.conj() if isinstance(x, Jet) else np.conj(x)


def real(x):
    return x.real if isinstance(x, Jet) else np.real(x)


def imag(x):
    return x.imag if isinstance(x, Jet) else np.imag(x)


def absolute2(x):
    """``|x|^2`` for real or complex entries (elementwise)."""
    if isinstance(x, Jet):
        if np.iscomplexobj(x.data):
            return (x * x.conj()).real
        return x * x
    return np.abs(x) ** 2


def _ellipsize(subscripts: str) -> str:
    ins, out = subscripts.split("->")
    ins = ",".join("..." + s for s in ins.split(","))
    return ins + "->..." + out


def einsum(subscripts: str, *operands):
    """Einstein summation for any mix of jets and arrays.

    ``subscripts`` must be explicit (contain ``->``) and must not use ellipses.
    Jets must share the same order.  Several jet operands are contracted
    pairwise from left to right.
    """
    if "->" not in subscripts or "..." in subscripts:
        raise ValueError("einsum subscripts must be explicit and ellipsis-free")
    ins, out = subscripts.split("->")
    terms = ins.split(",")
    if len(terms) != len(operands):
        raise ValueError("operand count does not match subscripts")
    njets = sum(isinstance(op, Jet) for op in operands)
    if njets == 0:
        return np.einsum(subscripts, *operands)
    if njets == 1:
        order = next(op.order for op in operands if isinstance(op, Jet))
        full = ",".join(("..." + t) if isinstance(op, Jet) else t
                        for t, op in zip(terms, operands))
        return Jet(np.einsum(full + "->..." + out, *[as_data(o) for o in operands]), order)
    acc_t, acc = terms[0], operands[0]
    for pos in range(1, len(terms)):
        t, op = terms[pos], operands[pos]
        needed = set("".join(terms[pos + 1:]) + out)
        joined = acc_t + t
        new_t = "".join(dict.fromkeys(c for c in joined if c in needed))
        sub = f"{acc_t},{t}->{new_t}"
        if isinstance(acc, Jet) and isinstance(op, Jet):
            acc = _jet_pair(sub, acc, op)
        else:
            acc = einsum(sub, acc, op)
        acc_t = new_t
    if acc_t != out:
        acc = einsum(f"{acc_t}->{out}", acc)
    return acc


def _jet_pair(subscripts: str, a: Jet, b: Jet) -> Jet:
    if a.order != b.order:
        raise ValueError("jet order mismatch in einsum")
    full = _ellipsize(subscripts)
    return Jet(_bilinear(a.data, b.data, a.order, lambda x, y: np.einsum(full, x, y)), a.order)


def matmul(a, b):
    """Matrix product over the last two tensor axes (2-d tensors only)."""
    if not isinstance(a, Jet) and not isinstance(b, Jet):
        return np.asarray(a) @ np.asarray(b)
    nda = a.ndim if isinstance(a, Jet) else np.ndim(a)
    ndb = b.ndim if isinstance(b, Jet) else np.ndim(b)
    ta = "ij" if nda == 2 else "j"
    tb = "jk" if ndb == 2 else "j"
    out = (ta[:-1] if nda == 2 else "") + (tb[1:] if ndb == 2 else "")
    return einsum(f"{ta},{tb}->{out}", a, b)


def inv(a):
    """Matrix inverse via the Neumann series around the value."""
    if not isinstance(a, Jet):
        return np.linalg.inv(a)
    a0inv = np.linalg.inv(a.value)
    h = a - a.value
    n = -1.0 * matmul(a0inv, h)
    out = zeros_like_jet(a, a0inv.shape, np.result_type(a.dtype, a0inv.dtype)) + a0inv
    for _ in range(a.order):
        out = matmul(n, out) + a0inv
    return out


def stack(items: Sequence, axis: int = 0):
    """Stack jets and constants along a new tensor axis."""
    jets = [it for it in items if isinstance(it, Jet)]
    if not jets:
        return np.stack([np.asarray(it) for it in items], axis=axis)
    tmpl = jets[0]
    k = tmpl.order
    shapes = [it.shape if isinstance(it, Jet) else np.shape(it) for it in items]
    common = np.broadcast_shapes(*shapes)
    dtype = np.result_type(*[as_data(it).dtype for it in items])
    lead = tmpl.data.shape[:k]
    datas = []
    for it in items:
        if isinstance(it, Jet):
            if it.order != k:
                raise ValueError("jet order mismatch in stack")
            d = np.broadcast_to(it._expand(len(common)), lead + common)
        else:
            d = np.zeros(lead + common, dtype=dtype)
            d[(0,) * k] = np.broadcast_to(np.asarray(it), common)
        datas.append(d)
    ax = axis if axis >= 0 else len(common) + 1 + axis
    return Jet(np.stack(datas, axis=k + ax), k)
