"""Pregluing a perturbed CR structure onto the model and measuring rates.

The boundary structure is the model one inside |z_n| < tau0 and the given
perturbation outside tau1.  Shrinking tau1 should bring the glued metric
closer to the model at the rate of the weight sqrt(u).
"""

import numpy as np

from achforge import chyp as C
from achforge import preglue as P
from achforge.einstein import decay_fit, einstein_residual
from achforge.sampling import sample_shell
from achforge.tensor import norm2

n = 2
J1 = C.normal_form_cr(n, 0.1)
kappa = P.default_kappa(n, 1.0)
g0 = C.chyp_metric(n)
rows = []
for k in range(3, 8):
    t1 = 2.0 ** -k
    tau = (t1 / 2, t1)
    g = P.GluedMetric(J1, tau, kappa)
    dev, wres = 0.0, 0.0
    for h in sample_shell(tau[0], tau[1], 32, seed=0, n=n):
        G, G0 = g.at(h), g0.at(h)
        dev = max(dev, np.sqrt(norm2(G - G0, np.linalg.inv(G0))))
        wres = max(wres, einstein_residual(g, n, h)[1] / np.sqrt(h[0]))
    rows.append((t1, dev, wres))
    print(f"tau1 = {t1:.5f}  sup deviation {dev:.3e}  sup weighted Einstein residual {wres:.3f}")

fit = decay_fit([(t, d) for t, d, _ in rows])
print(f"fitted slope of the deviation: {fit.slope:.3f} (r^2 = {fit.r2:.4f})")

# The 1-handle: two boundary points joined by an inversion of an annulus.
cfg = P.klein_assemble(P.GluingParams.from_scales(0.1, 0.4), n, "sharp")
r = cfg.params.lam[0][1] * (1 - 1e-9)
h = np.array([0.3 * r, 0.0, np.sqrt(4 * 0.7 * r), 0.0])
print("weight across the seam:", float(P.weight_sharp(cfg, h, "p0")[0]), float(P.weight_sharp(cfg, h, "far")[0]))
