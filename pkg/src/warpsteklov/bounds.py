"""Closed-form upper bounds for sigma_k(M_h) and their verdicts.

Every evaluator returns :class:`BoundReport` objects comparing a computed
eigenvalue (``lhs``) with a bound (``rhs``).  Verdict tolerances come from a
two-mesh Richardson estimate of the discretisation error of ``lhs``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .geometry import (Ball, BaseDomain, FiberSpectrum, Interval, WarpingFunction,
                       boundary_area, boundary_integral, constant, gauss_points, integral_over,
                       lp_norm, unit_ball_volume, volume, weighted_volume_integral)
from .reports import BoundReport
from .spectrum import sigma_k, steklov_spectrum
from .sturm import DEFAULT_MESH, Mesh, build_mesh, coarsen, mode_sigma


class HypothesisError(ValueError):
    """Inputs outside the hypotheses of the inequality being evaluated."""


def _require_trace_one(base, h, what):
    if not h.is_normalised(base, tol=1e-10):
        raise HypothesisError(f"{what} requires h = 1 on the boundary, got trace {h.trace(base)}")


def ceiling(base: BaseDomain, lam_k: float) -> float:
    """lambda_k |Omega| / |boundary|, the n = 2 supremum."""
    return lam_k * volume(base) / boundary_area(base)


def richardson_tol(fine: float, coarse: float, floor: float = 1e-8) -> float:
    # P1 eigenvalue error is O(mesh^2): fine-mesh error ~ (coarse - fine) / 3
    return max(floor, 5.0 * abs(coarse - fine) / 3.0)


def sigma_with_tol(base: BaseDomain, h: WarpingFunction, fiber: FiberSpectrum, k: int,
                   mesh: Mesh = DEFAULT_MESH) -> tuple[float, float]:
    """sigma_k(M_h) and its verdict tolerance."""
    if np.ndim(mesh) == 0:
        mesh = build_mesh(base, h, int(mesh))
    fine = sigma_k(steklov_spectrum(base, h, fiber, max(k, 1), mesh), k)
    coarse = sigma_k(steklov_spectrum(base, h, fiber, max(k, 1), coarsen(mesh, base)), k)
    return fine, richardson_tol(fine, coarse)


def basic_rhs(base: BaseDomain, h: WarpingFunction, n: int, lam_k: float) -> float:
    return lam_k * weighted_volume_integral(base, h, n - 2) / boundary_integral(base, h, n)


def bound_basic(base: BaseDomain, h: WarpingFunction, fiber: FiberSpectrum, k: int,
                mesh: Mesh = DEFAULT_MESH) -> BoundReport:
    """sigma_k(M_h) < lambda_k int h^(n-2) / int_boundary h^n."""
    if k < 0:
        raise ValueError("k must be >= 0")
    lam_k = fiber.lambda_k(k)
    rhs = basic_rhs(base, h, fiber.dim_n, lam_k)
    if k == 0:
        return BoundReport("basic", 0, 0.0, rhs, strict=False, note="k = 0: both sides vanish")
    lhs, tol = sigma_with_tol(base, h, fiber, k, mesh)
    return BoundReport("basic", k, lhs, rhs, strict=True, tol=tol, extra={"lambda_k": lam_k})


def _check_bounded_by(base, h, C):
    xs = np.linspace(0.0, base.extent, 4097)
    hmax = max(float(h(xs).max()), float(h.values.max()) if h.is_piecewise_linear else 0.0)
    if hmax > C * (1 + 1e-12):
        raise HypothesisError(f"requires h <= C; max h = {hmax:.6g} > C = {C}")


def bound_const_chain(base: BaseDomain, h: WarpingFunction, fiber: FiberSpectrum, k: int,
                      C: float, mesh: Mesh = DEFAULT_MESH) -> tuple[BoundReport, BoundReport]:
    """sigma_k(M_h) < C^n sigma_k(M_C) < C^(n-2) lambda_k |Omega|/|boundary|."""
    if C < 1:
        raise HypothesisError("requires C >= 1")
    if k < 1:
        raise ValueError("k must be >= 1")
    _require_trace_one(base, h, "the constant-comparison chain")
    _check_bounded_by(base, h, C)
    n = fiber.dim_n
    lam_k = fiber.lambda_k(k)
    if np.ndim(mesh) == 0:
        mesh = build_mesh(base, h, int(mesh))
    lhs, tol = sigma_with_tol(base, h, fiber, k, mesh)
    hC = constant(base, C)
    sC, tolC = sigma_with_tol(base, hC, fiber, k, mesh)
    mid = C ** n * sC
    top = C ** (n - 2) * ceiling(base, lam_k)
    degenerate = float(np.max(np.abs(h.values - C))) < 1e-12 and (
        h.is_piecewise_linear or h.preset == "constant")
    note = "h = C everywhere: the strict inequality degenerates to equality" if degenerate else ""
    r1 = BoundReport("const_chain_left", k, lhs, mid, strict=True, tol=max(tol, C ** n * tolC),
                     observational=degenerate, note=note,
                     extra={"C": C, "sigma_k_MC": sC})
    r2 = BoundReport("const_chain_right", k, mid, top, strict=True, tol=C ** n * tolC,
                     observational=degenerate and C == 1, note=note if C == 1 else "",
                     extra={"C": C, "sigma_k_MC": sC})
    return r1, r2


def const_asymptotics(base: BaseDomain, fiber: FiberSpectrum, k: int, C_list: Sequence[float],
                      mesh: Mesh = DEFAULT_MESH) -> list[dict]:
    """Table of C^2 sigma_k(M_C) against its large-C limit lambda_k |Omega|/|boundary|."""
    C_list = [float(c) for c in C_list]
    if any(b <= a for a, b in zip(C_list, C_list[1:])):
        raise ValueError("C list must be increasing")
    lam_k = fiber.lambda_k(k)
    target = ceiling(base, lam_k)
    rows = []
    prev = None
    for C in C_list:
        s = 0.0 if k == 0 else sigma_k(steklov_spectrum(base, constant(base, C), fiber, k, mesh), k)
        scaled = C * C * s
        dev = abs(scaled - target)
        rows.append({"C": C, "sigma_k": s, "C2_sigma_k": scaled, "limit": target,
                     "deviation": dev,
                     "ratio": dev / prev if prev not in (None, 0.0) else float("nan")})
        prev = dev
    return rows


def bound_lp(base: BaseDomain, h: WarpingFunction, fiber: FiberSpectrum, k: int, p: float,
             mesh: Mesh = DEFAULT_MESH) -> BoundReport:
    """sigma_k < lambda_k |Omega|^((p-(n-2))/p) ||h||_p^(n-2) / |boundary| for n-2 <= p."""
    n = fiber.dim_n
    if n < 3:
        raise HypothesisError("the L^p bound requires n >= 3")
    if p < n - 2:
        raise HypothesisError(f"the L^p bound requires p >= n - 2 = {n - 2}, got p = {p}")
    _require_trace_one(base, h, "the L^p bound")
    lam_k = fiber.lambda_k(k)
    rhs = (lam_k * volume(base) ** ((p - (n - 2)) / p) / boundary_area(base)
           * lp_norm(base, h, p) ** (n - 2))
    lhs, tol = sigma_with_tol(base, h, fiber, k, mesh)
    return BoundReport("lp", k, lhs, rhs, strict=True, tol=tol, extra={"p": p})


def bound_interval(h: WarpingFunction, fiber: FiberSpectrum, k: int, p: float, L: float,
                   mesh: Mesh = DEFAULT_MESH) -> list[BoundReport]:
    """One-dimensional base bounds; always observational.

    ``sigma_k <= 3^(n-2)/4 ||h||_p^(n-2) L^((p-(n-2))/p) lambda_k`` and, for
    ``k = 1``, ``sigma_1 <= 4 3^n ||h||_p^n / L^((n+p)/p)``.
    """
    base = Interval(L)
    n = fiber.dim_n
    if n < 2:
        raise HypothesisError("requires n >= 2")
    if p < 1:
        raise HypothesisError("requires p >= 1")
    _require_trace_one(base, h, "the interval bounds")
    lam_k = fiber.lambda_k(k)
    norm = lp_norm(base, h, p)
    lhs, tol = sigma_with_tol(base, h, fiber, k, mesh)
    out = [BoundReport("interval_k", k, lhs,
                       3 ** (n - 2) / 4 * norm ** (n - 2) * L ** ((p - (n - 2)) / p) * lam_k,
                       strict=False, tol=tol, observational=True, extra={"p": p, "norm": norm})]
    if k == 1:
        out.append(BoundReport("interval_k1", 1, lhs, 4 * 3 ** n * norm ** n / L ** ((n + p) / p),
                               strict=False, tol=tol, observational=True,
                               extra={"p": p, "norm": norm}))
    return out


# ---------------------------------------------------------------------------
# Stability and the improved trial function

@dataclass(frozen=True)
class StabilityReport:
    k: int
    deficit: float
    q: float
    r: float
    lhs: float
    rhs: float
    tol: float

    @property
    def verdict(self) -> bool:
        return self.lhs >= self.rhs - self.tol

    @property
    def trivial(self) -> bool:
        return self.rhs < 0

    def to_dict(self) -> dict:
        return {"name": "stability", "k": self.k, "deficit": self.deficit, "q": self.q,
                "r": self.r, "lhs": self.lhs, "rhs": self.rhs, "tol": self.tol,
                "trivial": self.trivial, "verdict": "pass" if self.verdict else "fail"}


def _ball_range(base, q, r):
    """Coordinate range of B(q, r) and its volume."""
    if isinstance(base, Interval):
        lo, hi = q - r, q + r
        if lo < -1e-12 or hi > base.L + 1e-12:
            raise HypothesisError(f"B({q}, {r}) is not contained in [0, {base.L}]")
        return max(lo, 0.0), min(hi, base.L), 2 * r
    if abs(q) > 0:
        raise HypothesisError("radial warping on a ball: only balls centred at the origin")
    if r > base.R + 1e-12:
        raise HypothesisError(f"B(0, {r}) is not contained in the base")
    return 0.0, min(r, base.R), unit_ball_volume(base.d) * r ** base.d


def stability_report(base: BaseDomain, h: WarpingFunction, fiber: FiberSpectrum, k: int,
                     q: float, r: float, mesh: Mesh = DEFAULT_MESH) -> StabilityReport:
    """Lower bound on int_{B(q,r)} h^2 forced by a small deficit (n = 2)."""
    if fiber.dim_n != 2:
        raise HypothesisError("the stability estimate requires n = 2")
    _require_trace_one(base, h, "the stability estimate")
    lo, hi, vol_r = _ball_range(base, q, r)
    vol_half = _ball_range(base, q, r / 2)[2]
    lam_k = fiber.lambda_k(k)
    s, tol = sigma_with_tol(base, h, fiber, k, mesh)
    deficit = ceiling(base, lam_k) - s
    if deficit <= tol:
        raise HypothesisError(f"deficit {deficit:.3g} is below the mesh tolerance {tol:.3g}")
    lhs = integral_over(base, lambda x: h(x) ** 2, lo, hi, breaks=h.breakpoints(),
                        npts=gauss_points(2, 3), min_elements=512)
    rhs = (lam_k * r * r / (4 * deficit) * vol_half / boundary_area(base)
           - lam_k * r * r * vol_r)
    # the quadrature of lhs is exact for piecewise-linear h aligned with its knots
    return StabilityReport(k, deficit, q, r, lhs, rhs, tol=1e-9 * max(1.0, abs(lhs)))


def tent_profile(base: BaseDomain, D) -> tuple[np.ndarray, np.ndarray]:
    """Distance to the boundary of D, as piecewise-linear samples."""
    if isinstance(base, Interval):
        a, b = D
        if not 0 <= a < b <= base.L:
            raise HypothesisError(f"D = [{a}, {b}] must lie in [0, {base.L}]")
        return np.array([a, 0.5 * (a + b), b]), np.array([0.0, 0.5 * (b - a), 0.0])
    rho = float(D)
    if not 0 < rho <= base.R:
        raise HypothesisError(f"D = B(0, {rho}) must lie in the base")
    return np.array([0.0, rho]), np.array([rho, 0.0])


def improved_bound(base: BaseDomain, h: WarpingFunction, fiber: FiberSpectrum, k: int, D,
                   f: Optional[tuple] = None, mesh: Optional[Mesh] = None,
                   mesh_N: int = DEFAULT_MESH) -> BoundReport:
    """Bound from the trial function ``1 - t0 f`` with f supported in D.

    ``D`` is a subinterval ``(a, b)`` of an interval base, or a radius for a
    ball base (D centred at the origin).  ``f`` is a piecewise-linear profile
    ``(knots, values)``; the default is the distance to the boundary of D.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if f is None:
        fk, fv = tent_profile(base, D)
    else:
        fk, fv = (np.asarray(v, dtype=float) for v in f)
    if np.any(fv < 0):
        raise HypothesisError("trial profile must be nonnegative")
    lo, hi = (D if isinstance(base, Interval) else (0.0, float(D)))
    if fk[0] < lo - 1e-12 or fk[-1] > hi + 1e-12:
        raise HypothesisError("trial profile must be supported in D")
    inner = (fk > lo) & (fk < hi)
    if isinstance(base, Interval) and (fv[0] != 0 or fv[-1] != 0):
        raise HypothesisError("trial profile must vanish on the boundary of D")
    if isinstance(base, Ball) and fv[-1] != 0:
        raise HypothesisError("trial profile must vanish on the boundary of D")
    if np.any(fv[inner] <= 0):
        raise HypothesisError("trial profile must be positive inside D")

    n = fiber.dim_n
    lam_k = fiber.lambda_k(k)
    if mesh is None:
        mesh = build_mesh(base, h, mesh_N, extra=fk)
    slopes = np.diff(fv) / np.diff(fk)
    fval = lambda x: np.interp(x, fk, fv)
    fder = lambda x: slopes[np.clip(np.searchsorted(fk, x) - 1, 0, len(slopes) - 1)]
    breaks = np.concatenate([fk, h.breakpoints()])
    npts = gauss_points(n, 4)
    I1 = integral_over(base, lambda x: fval(x) * h(x) ** (n - 2), lo, hi, breaks, npts)
    I2 = integral_over(base, lambda x: fder(x) ** 2 * h(x) ** n
                       + lam_k * fval(x) ** 2 * h(x) ** (n - 2), lo, hi, breaks, npts)
    plain = basic_rhs(base, h, n, lam_k)
    if I2 == 0:
        correction, t0 = 0.0, 0.0
    else:
        t0 = lam_k * I1 / I2
        correction = lam_k ** 2 * I1 ** 2 / I2 / boundary_integral(base, h, n)
    rhs = plain - correction
    lhs, tol = sigma_with_tol(base, h, fiber, k, mesh)
    return BoundReport("improved", k, lhs, rhs, strict=False, tol=tol,
                       extra={"t0": t0, "basic_rhs": plain, "correction": correction})


def helmholtz_slope(base: BaseDomain, mesh: Mesh = DEFAULT_MESH,
                    eps: Optional[float] = None) -> float:
    """d/dmu of the lowest Steklov-Helmholtz eigenvalue at mu = 0.

    Quadratic through mu in {eps, 2 eps, 4 eps}, differentiated at 0.
    """
    if eps is None:
        eps = 1e-3 / base.extent ** 2
    h1 = constant(base, 1.0)
    mus = np.array([eps, 2 * eps, 4 * eps])
    sig = np.array([mode_sigma(base, h1, 2, mu, 0, mesh) for mu in mus])
    # Lagrange basis derivatives at 0
    w = np.array([-(mus[1] + mus[2]) / ((mus[0] - mus[1]) * (mus[0] - mus[2])),
                  -(mus[0] + mus[2]) / ((mus[1] - mus[0]) * (mus[1] - mus[2])),
                  -(mus[0] + mus[1]) / ((mus[2] - mus[0]) * (mus[2] - mus[1]))])
    return float(w @ sig)
