"""The gauged Einstein operator and its linearization, then the Weitzenbock check."""

import numpy as np

from achforge import chyp as C
from achforge import einstein as E
from achforge.models import random_polynomial_sym2
from achforge.tensor import MetricField

g = C.chyp_metric(2)
p = np.array([0.7, 0.2, 0.3, -0.1])
hdot = random_polynomial_sym2(np.random.default_rng(1), 4, 0.5)

print("Phi at the reference metric:", np.abs(E.gauged_operator_Phi(g, g, p)).max())
L = E.linearized_L(g, hdot, p)
base = E.gauged_operator_Phi(g, g, p)
for t in (1e-2, 1e-3, 1e-4):
    gt = MetricField(lambda x, t=t: g(x) + hdot(x) * t, 4)
    err = np.abs((E.gauged_operator_Phi(g, gt, p) - base) / t - L).max()
    print(f"difference quotient vs L at t={t:g}: {err:.2e}")

h0 = E.trace_free_part(hdot, g)
print("Weitzenbock residual:", E.weitzenbock_residual(g, h0, p))
ratio, spread = E.wplus_action_alpha(g, [0.3, -1.0, 0.5], p)
print("W+ ratio on Lambda+ (x) Lambda- (expect s/6 = -1):", ratio)

for delta, dprime in [(1.0, 0.5), (1.5, 1.4)]:
    v = E.l2_weight_integrability(delta, dprime, n=2)
    print(f"delta={delta}, delta'={dprime}: {v.verdict}, far slope {v.far_slope:.3f}")
