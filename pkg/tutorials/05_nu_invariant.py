"""The characteristic-number integrand and its integral over a collar."""

import numpy as np

from achforge import chyp as C
from achforge.models import round_sphere
from achforge.nu import TransitionShell, integrate_region, nu_integrand, surgery_bookkeeping

g = C.chyp_metric(2)
s = nu_integrand(g, np.array([0.7, 0.3, 0.2, -0.5]))
print(f"|W+|^2 = {s.wplus2:.4f}, |W-|^2 = {s.wminus2:.2e}, integrand = {s.value:.2e}")
print("on the unit sphere (expect 3/(4 pi^2)):", nu_integrand(round_sphere(), np.zeros(4)).value,
      3 / (4 * np.pi ** 2))

shell = TransitionShell(0.25, 1.0, u_min=0.1)
vol = integrate_region(g, shell, 1024, seed=0, integrand=lambda p: 1.0)
nu = integrate_region(g, shell, 256, seed=0)
print(f"collar volume {vol.value:.3f} +- {vol.error:.3f}")
print(f"collar integral of the integrand {nu.value:.2e} +- {nu.error:.2e}")

for k in (1, 2, 3):
    print(f"{k} handle(s):", surgery_bookkeeping(k).to_dict())
