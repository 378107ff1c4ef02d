"""Unbounded sigma_1 under an L^p budget when p < n - 2.

On the unit disk with an S^4 fiber we squeeze a fixed L^1 budget of h into
a thinner and thinner collar near the boundary.  sigma_1 roughly doubles at
each halving of eps, far past the two-dimensional ceiling.
"""
from warpsteklov import Ball, FiberSpectrum, blowup_sweep

base = Ball(2, 1.0)
res = blowup_sweep(base, FiberSpectrum.sphere(4), p=1.0, budget=50.0,
                   eps_list=[2.0 ** -e for e in range(4, 9)], mesh_N=1024)
print(f"{'eps':>9} {'peak':>9} {'int h':>8} {'sigma_1':>11} {'growth':>7}")
for r in res.rows:
    print(f"{r['eps']:9.5f} {r['peak']:9.1f} {r['p_integral']:8.3f} "
          f"{r['sigma_1']:11.3f} {r['growth']:7.3f}")
print(f"n = 2 ceiling for comparison: {res.rows[0]['n2_ceiling']:.3f}")
print("checks:", res.checks)
