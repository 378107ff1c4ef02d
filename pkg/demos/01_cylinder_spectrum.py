"""Steklov spectrum of a flat cylinder and of a warped one.

For h = 1 on [0, L] every fiber eigenvalue lambda contributes the pair
sqrt(lambda) tanh(sqrt(lambda) L / 2) and sqrt(lambda) coth(sqrt(lambda) L / 2),
and lambda = 0 contributes 0 and 2 / L.  We check the solver against that
and then bend the metric with a bump in the middle.
"""
import math

import numpy as np

from warpsteklov import FiberSpectrum, Interval, constant, ramp, steklov_spectrum

base = Interval(1.0)
fiber = FiberSpectrum.sphere(2)

flat = steklov_spectrum(base, constant(base), fiber, K=10, mesh=2048)
print("flat cylinder [0, 1] x S^2")
print(f"{'k':>3} {'sigma_k':>12} {'j':>3} {'l':>3}  closed form")
for k, e in flat.labelled():
    lam = e.lambda_j
    if lam == 0:
        exact = 0.0 if e.l == 0 else 2.0
    else:
        s = math.sqrt(lam)
        exact = s * math.tanh(s / 2) if e.l == 0 else s / math.tanh(s / 2)
    print(f"{k:3d} {e.sigma:12.8f} {e.j:3d} {e.l:3d}  {exact:.8f}")

# a warping that is 1 on the boundary and 3 in the middle
bent = steklov_spectrum(base, ramp(base, 3.0), fiber, K=10, mesh=2048)
print("\nramp to 3 in the middle: sigma_1 rises but stays below the n = 2 ceiling "
      "lambda_1 |Omega| / |boundary| = 1")
print(np.round(bent.values()[:6], 6))
