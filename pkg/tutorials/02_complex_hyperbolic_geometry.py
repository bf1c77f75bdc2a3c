"""Complex hyperbolic space in horospherical coordinates.

Checks the Einstein equation, the holomorphic pinching of sectional
curvature and the behaviour of the model isometries.
"""

import numpy as np

from achforge import chyp as C
from achforge.tensor import curvature, sectional_curvature

n = 2
g = C.chyp_metric(n)
h = np.array([0.7, 0.3, 0.2, -0.5])  # (u, v, x, y)
pk = curvature(g, h)
print("Ric + (n+1)/2 g:", np.abs(pk.ricci + 1.5 * pk.metric).max())

# Pinching in the Siegel chart, where the complex structure is constant.
gs = C.chyp_metric_siegel(n)
s = np.asarray(C.horo_to_siegel(h))
pks = curvature(gs, s)
Js = C.J_std(n)
rng = np.random.default_rng(1)
X = rng.normal(size=4)
print("complex line:", sectional_curvature(pks, X, Js @ X))
ks = [sectional_curvature(pks, rng.normal(size=4), rng.normal(size=4)) for _ in range(200)]
print("random planes lie in [%.4f, %.4f]" % (min(ks), max(ks)))

# Isometries: dilation, inversion, conversion.
for iso in (C.dilation_H(0.6 + 0.2j, n), C.inversion_I(0.5, n), C.conversion_K(0.5, n)):
    pb = C.pullback_metric(g, iso.on_horo)
    print(f"{iso.name:>12}: pullback deviation {np.abs(pb.at(h) - g.at(h)).max():.2e}")

I = C.inversion_I(0.5, n)
inner = np.array([0.01, 0.02, 0.1, 0.05])
print("point in B+:", C.region_classify(inner, C.Region("BPlus", (0.5,))),
      "image in B-:", C.region_classify(I.on_horo(inner), C.Region("BMinus", (0.5,))))

# -ln u is a Kahler potential and u solves the Fefferman equation.
G = C.kahler_metric_from_potential(lambda x: -1.0 * C.J.log(C.height_siegel(x)), Js, s)
print("potential metric vs Siegel metric:", np.abs(G - gs.at(s)).max())
print("Fefferman residual:", C.fefferman_residual(C.height_siegel, s))
