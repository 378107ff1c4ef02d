"""Evaluate the upper bounds on one warped product and print the reports.

Every report carries both sides, the margin and a mesh tolerance from a
coarse/fine comparison.  The one-dimensional interval bounds are only
recorded, never asserted.
"""
from warpsteklov import (Ball, FiberSpectrum, Interval, bound_basic, bound_const_chain,
                         bound_interval, bound_lp, constant, improved_bound, make_hdelta)

base = Ball(2, 1.0)
fiber = FiberSpectrum.sphere(3)
h = make_hdelta(base, 4.0, 0.3)

reports = [bound_basic(base, h, fiber, 1, 1024),
           *bound_const_chain(base, h, fiber, 1, 4.0, 1024),
           bound_lp(base, h, fiber, 1, 2.0, 1024),
           improved_bound(base, h, fiber, 1, 0.5, mesh_N=1024)]
for r in reports:
    print(r)

print("\ninterval base, h = 1, S^2 fiber (observational):")
I = Interval(1.0)
for r in bound_interval(constant(I), FiberSpectrum.sphere(2), 1, 2.0, 1.0):
    print(r)
