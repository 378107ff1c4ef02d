"""Surfaces of revolution over an interval are conformal to flat cylinders.

For d = n = 1 the change of variable t = int ds / h turns [0, L] x_h S^1 into
[0, t(L)] x S^1, and the Steklov spectrum does not change since h = 1 at both
ends.  The two columns below should agree.
"""
from warpsteklov import FiberSpectrum, conformal_check, piecewise_linear

h = piecewise_linear([0.0, 0.4, 1.1, 2.0], [1.0, 2.5, 0.6, 1.0])
res = conformal_check(2.0, h, FiberSpectrum.circle(1.0), K=6, mesh_N=4096)
print(f"t(L) = {res['t_L']:.6f}")
for w, f in zip(res["warped"], res["flat"]):
    print(f"{w:12.8f} {f:12.8f}")
print(f"max relative difference {res['max_rel_err']:.2e}")
