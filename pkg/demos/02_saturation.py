"""Saturating the n = 2 ceiling.

With a two-dimensional fiber, sigma_1 of a warped product whose warping is 1
on the boundary stays below lambda_1 |Omega| / |boundary|.  The family h_delta
(1 on the boundary, C away from a collar of width delta^2) climbs towards it.
"""
from warpsteklov import FiberSpectrum, Interval, saturation_sweep

base = Interval(1.0)
fiber = FiberSpectrum.sphere(2)
res = saturation_sweep(base, fiber, 1, C_list=[8.0, 32.0],
                       delta_list=[0.5, 0.3, 0.1, 0.03, 0.01], mesh_N=1024)

print(f"{'C':>5} {'delta':>7} {'sigma_1':>10} {'C^2 sigma_1(M_C)':>17} {'/ceiling':>9}")
for r in res.rows:
    print(f"{r['C']:5.0f} {r['delta']:7.3f} {r['sigma_k']:10.6f} "
          f"{r['Cn_sigma_k_MC']:17.6f} {r['ratio_to_ceiling']:9.5f}")
print("checks:", res.checks)
