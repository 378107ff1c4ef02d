"""Extremal warping families and the sweeps built on them.

* ``hdelta``: 1 on the boundary, C at distance >= delta^2 from it, linear in
  between.  As delta -> 0 these saturate ``sigma_k(M_h) <= C^n sigma_k(M_C)``.
* ``heps``: a tall plateau on the collar at distance [eps, 2 eps] from the
  boundary of a ball, sized so that its p-integral is half a fixed budget.
  For p < n - 2 the first eigenvalue blows up as eps -> 0.
* conformal check for circle fibers over an interval.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .bounds import HypothesisError, ceiling
from .geometry import (Ball, BaseDomain, FiberSpectrum, Interval, WarpingFunction,
                       boundary_area, constant, integral_over, piecewise_linear,
                       weighted_volume_integral)
from .spectrum import sigma_k, steklov_spectrum
from .sturm import DEFAULT_MESH, build_mesh


class InfeasibleBudgetError(ValueError):
    pass


@dataclass(frozen=True)
class FamilySpec:
    kind: str
    base: BaseDomain
    params: dict = field(default_factory=dict)

    def build(self) -> WarpingFunction:
        if self.kind == "hdelta":
            return make_hdelta(self.base, **self.params)
        if self.kind == "heps":
            return make_heps(self.base, **self.params)
        if self.kind == "constant":
            return constant(self.base, **self.params)
        raise ValueError(f"unknown family {self.kind!r}")


def make_hdelta(base: BaseDomain, C: float, delta: float) -> WarpingFunction:
    if C < 1:
        raise HypothesisError("h_delta needs C >= 1")
    w = delta * delta
    if not 0 < w < base.inradius:
        raise HypothesisError(f"collar width delta^2 = {w:.3g} must lie in (0, {base.inradius})")
    if isinstance(base, Interval):
        knots = [0.0, w, base.L - w, base.L]
        values = [1.0, C, C, 1.0]
    else:
        knots = [0.0, base.R - w, base.R]
        values = [C, C, 1.0]
    return piecewise_linear(knots, values, family="hdelta", C=float(C), delta=float(delta))


def heps_peak(base: BaseDomain, p: float, budget: float, eps: float) -> float:
    return (budget / (2 * eps * boundary_area(base))) ** (1.0 / p)


def make_heps(base: BaseDomain, p: float, budget: float, eps: float, floor: float = 1.0,
              decay_samples: int = 64) -> WarpingFunction:
    """Collar plateau of height (budget / (2 eps |boundary|))^(1/p).

    Profile in the distance s to the boundary: linear from 1 to the peak on
    [0, eps], the peak on [eps, 2 eps], exponential decay back to 1 on
    [2 eps, 3 eps], then 1.
    """
    if not isinstance(base, Ball):
        raise HypothesisError("h_eps is built on a ball (connected boundary)")
    if p < 1:
        raise HypothesisError("requires p >= 1")
    if not 0 < 3 * eps < base.R:
        raise HypothesisError(f"eps = {eps} too large for radius {base.R}")
    P = heps_peak(base, p, budget, eps)
    if P < max(floor, 1.0):
        raise InfeasibleBudgetError(f"peak {P:.4g} is below the floor {floor}")
    s_decay = np.linspace(2 * eps, 3 * eps, decay_samples + 1)
    h_decay = P * np.exp(-math.log(P) * (s_decay - 2 * eps) / eps)
    s = np.concatenate([[0.0, eps], s_decay, [base.R]])
    v = np.concatenate([[1.0, P], h_decay, [1.0]])
    v[-2] = 1.0
    r = base.R - s[::-1]
    total = weighted_volume_integral(base, piecewise_linear(r, v[::-1]), p)
    if total > budget:
        raise InfeasibleBudgetError(f"int h^p = {total:.6g} exceeds the budget {budget}")
    return piecewise_linear(r, v[::-1], family="heps", p=float(p), budget=float(budget),
                            eps=float(eps), peak=P, floor=float(floor), p_integral=total)


def collar_integral(base: Ball, h: WarpingFunction, p: float, eps: float) -> float:
    """Integral of h^p over the collar at distance [eps, 2 eps] from the boundary."""
    return integral_over(base, lambda x: h(x) ** p, base.R - 2 * eps, base.R - eps,
                         breaks=h.breakpoints())


@dataclass
class SweepResult:
    rows: list
    checks: dict

    @property
    def ok(self) -> bool:
        return all(self.checks.values())


def _saturation_member(base, fiber, k, C, delta, mesh_N, per_piece):
    h = make_hdelta(base, C, delta)
    mesh = build_mesh(base, h, mesh_N, per_piece=per_piece)
    s = sigma_k(steklov_spectrum(base, h, fiber, k, mesh), k)
    sC = sigma_k(steklov_spectrum(base, constant(base, C), fiber, k, mesh), k)
    return s, sC


def saturation_sweep(base: BaseDomain, fiber: FiberSpectrum, k: int, C_list: Sequence[float],
                     delta_list: Sequence[float], mesh_N: int = DEFAULT_MESH,
                     per_piece: int = 64, tol: float = 1e-9, map_fn=map) -> SweepResult:
    """sigma_k(M_{h_delta}) for every (C, delta); n = 2.

    ``delta_list`` is ordered from wide to narrow collars.  ``map_fn`` runs
    the members (e.g. ``executor.map``); results are consumed in order.
    """
    if fiber.dim_n != 2:
        raise HypothesisError("the saturation sweep requires n = 2")
    for C in C_list:
        for delta in delta_list:
            make_hdelta(base, C, delta)  # reject bad members before any solve
    lam_k = fiber.lambda_k(k)
    top = ceiling(base, lam_k)
    grid = [(C, d) for C in C_list for d in delta_list]
    results = list(map_fn(lambda cd: _saturation_member(base, fiber, k, cd[0], cd[1],
                                                        mesh_N, per_piece), grid))
    rows = []
    monotone, below = True, True
    prev = {}
    for (C, delta), (s, sC) in zip(grid, results):
        rows.append({"C": C, "delta": delta, "sigma_k": s, "Cn_sigma_k_MC": C ** 2 * sC,
                     "ceiling": top, "ratio_to_ceiling": s / top})
        monotone &= s >= prev.get(C, -math.inf) - tol
        below &= s < top
        prev[C] = s
    return SweepResult(rows, {"monotone_in_delta": bool(monotone),
                              "strictly_below_ceiling": bool(below)})


def _blowup_member(base, fiber, p, budget, eps, mesh_N, per_piece):
    h = make_heps(base, p, budget, eps)
    mesh = build_mesh(base, h, mesh_N, per_piece=per_piece)
    return h.params, sigma_k(steklov_spectrum(base, h, fiber, 1, mesh), 1)


def default_eps_list(base: BaseDomain) -> list[float]:
    return [2.0 ** -e * base.inradius for e in range(3, 10)]


def blowup_sweep(base: BaseDomain, fiber: FiberSpectrum, p: float, budget: float,
                 eps_list: Optional[Sequence[float]] = None, mesh_N: int = DEFAULT_MESH,
                 per_piece: int = 64, min_growth: float = 1.5, map_fn=map) -> SweepResult:
    """sigma_1(M_{h_eps}) along decreasing eps under a fixed L^p budget."""
    n = fiber.dim_n
    if p < 1:
        raise HypothesisError("requires p >= 1")
    if n < 3:
        raise HypothesisError("the blow-up sweep requires n >= 3")
    if not p < n - 2:
        raise HypothesisError(f"the blow-up sweep requires p < n - 2 = {n - 2}")
    if not isinstance(base, Ball):
        raise HypothesisError("the blow-up sweep requires a ball base (connected boundary)")
    if eps_list is None:
        eps_list = default_eps_list(base)
    top = ceiling(base, fiber.lambda_k(1))
    results = list(map_fn(lambda e: _blowup_member(base, fiber, p, budget, e, mesh_N,
                                                   per_piece), eps_list))
    rows = []
    prev = None
    in_budget, growing = True, True
    for eps, (params, s) in zip(eps_list, results):
        total = params["p_integral"]
        ratio = s / prev if prev else float("nan")
        rows.append({"eps": eps, "peak": params["peak"], "p_integral": total,
                     "sigma_1": s, "growth": ratio, "n2_ceiling": top})
        in_budget &= total <= budget
        if prev is not None:
            growing &= ratio >= min_growth
        prev = s
    return SweepResult(rows, {"within_budget": bool(in_budget),
                              "growth_per_halving": bool(growing)})


def conformal_length(h: WarpingFunction, L: float) -> float:
    """t(L) = int_0^L ds / h(s)."""
    if h.is_piecewise_linear:
        x, v = h.knots, h.values
        dx = np.diff(x)
        dv = np.diff(v)
        same = np.abs(dv) <= 1e-14 * v[:-1]
        safe = np.where(same, 1.0, dv)
        pieces = np.where(same, dx / v[:-1], dx * np.log(v[1:] / v[:-1]) / safe)
        return float(pieces.sum())
    return weighted_volume_integral(Interval(L), h, -1)


def conformal_check(L: float, h: WarpingFunction, fiber: FiberSpectrum, K: int = 6,
                    mesh_N: int = 4096, rtol: float = 1e-4) -> dict:
    """Compare the spectra of [0, L] x_h S^1 and the flat cylinder [0, t(L)] x S^1."""
    if fiber.kind != "circle":
        raise HypothesisError("the conformal check needs a circle fiber")
    base = Interval(L)
    if not h.is_normalised(base, tol=1e-10):
        raise HypothesisError("the conformal check needs h(0) = h(L) = 1")
    T = conformal_length(h, L)
    flat = Interval(T)
    warped = steklov_spectrum(base, h, fiber, K - 1, mesh_N).values()[:K]
    cyl = steklov_spectrum(flat, constant(flat, 1.0), fiber, K - 1, mesh_N).values()[:K]
    scale = np.maximum(np.abs(cyl), 1e-300)
    err = np.where(cyl == 0, np.abs(warped), np.abs(warped - cyl) / scale)
    return {"L": L, "t_L": T, "warped": warped, "flat": cyl, "max_rel_err": float(err.max()),
            "verdict": bool(err.max() <= rtol)}
