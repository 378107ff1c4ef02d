"""Steklov eigenvalues of warped products ``base x_h fiber``.

The spectrum separates into one-dimensional auxiliary problems, one per
fiber eigenvalue (and boundary harmonic on a ball), solved with P1 finite
elements and a Dirichlet-to-Neumann reduction.
"""
from .bounds import (HypothesisError, bound_basic, bound_const_chain, bound_interval, bound_lp,
                     const_asymptotics, helmholtz_slope, improved_bound, stability_report)
from .families import (blowup_sweep, conformal_check, make_hdelta, make_heps,
                       saturation_sweep)
from .geometry import (Ball, FiberSpectrum, Interval, WarpingFunction, boundary_area,
                       boundary_harmonics, collar_bump, constant, fiber_eigenvalues,
                       load_warping, lp_norm, piecewise_linear, ramp, volume,
                       weighted_volume_integral)
from .reports import BoundReport
from .spectrum import SteklovSpectrum, check_kcompk0, sigma_k, steklov_spectrum
from .sturm import AuxProblem, assemble, aux_spectrum, dtn_eigenvalues, rayleigh_quotient

__version__ = "0.1.0"
