"""Curvature of a metric given only as a Python function.

Jets carry exact derivatives through ordinary numpy expressions, so the
Christoffel symbols and the Riemann tensor come out without finite
differences.  The round 4-sphere serves as the example.
"""

import numpy as np

from achforge import jet as J
from achforge.models import round_sphere
from achforge.tensor import curvature, sectional_curvature

# A jet seeded at a point: f(x) evaluated on it returns value and derivatives.
x = J.seed(np.array([0.3, -0.2]), 2)
f = J.sin(x[0]) * x[1] * x[1]
print("f      =", f.value)
print("grad f =", f.derivative_tensor(1))
print("hess f =\n", f.derivative_tensor(2))

g = round_sphere(4)
p = np.array([0.1, 0.2, -0.3, 0.4])
pk = curvature(g, p)
print("scalar curvature (expect 12):", pk.scalar)
print("Ricci - 3 g (expect 0):", np.abs(pk.ricci - 3 * pk.metric).max())
rng = np.random.default_rng(0)
X, Y = rng.normal(size=4), rng.normal(size=4)
print("sectional curvature of a random plane (expect 1):", sectional_curvature(pk, X, Y))
print("|W+|, |W-| (expect 0):", np.abs(pk.weyl_plus).max(), np.abs(pk.weyl_minus).max())
