"""Acceptance suite: one test per criterion, each printing a pass/fail line.

Run on its own with ``pytest tests/test_acceptance.py -v -s``.
"""
import math
import time

import numpy as np
import pytest

from warpsteklov.bounds import (bound_basic, bound_const_chain, bound_interval, ceiling,
                                const_asymptotics, helmholtz_slope, improved_bound,
                                stability_report)
from warpsteklov.families import blowup_sweep, conformal_check, make_hdelta, saturation_sweep
from warpsteklov.geometry import (Ball, FiberSpectrum, Interval, boundary_area, collar_bump,
                                  constant, fiber_eigenvalues, integral_over, piecewise_linear,
                                  volume)
from warpsteklov.spectrum import sigma_k, steklov_spectrum
from warpsteklov.sturm import (AuxProblem, assemble, aux_spectrum, build_mesh, dtn_eigenvalues,
                               mode_sigma, rayleigh_quotient)

I1 = Interval(1.0)
B21 = Ball(2, 1.0)
S1 = FiberSpectrum.circle(1.0)
S2 = FiberSpectrum.sphere(2)
S3 = FiberSpectrum.sphere(3)


@pytest.fixture
def verdict(capsys):
    """Assert a criterion and its runtime, printing one line either way."""
    t0 = time.perf_counter()

    def check(number, ok, detail, limit):
        elapsed = time.perf_counter() - t0
        passed = bool(ok) and elapsed < limit
        with capsys.disabled():
            print(f"\ncriterion {number:2d}: {'PASS' if passed else 'FAIL'}  "
                  f"{detail}  ({elapsed:.2f} s, limit {limit} s)")
        assert ok, detail
        assert elapsed < limit, f"runtime {elapsed:.1f} s exceeds {limit} s"
    return check


def random_pl(rng, base, pieces=(2, 6), lo=0.3, hi=4.0):
    """Random piecewise-linear warping with trace 1."""
    m = int(rng.integers(*pieces))
    inner = np.sort(rng.uniform(0.02, 0.98, m)) * base.extent
    x = np.r_[0.0, inner, base.extent]
    v = rng.uniform(lo, hi, len(x))
    if isinstance(base, Interval):
        v[0] = v[-1] = 1.0
    else:
        v[-1] = 1.0
    return piecewise_linear(x, v)


def cylinder_spectrum(fiber, L, count):
    """Closed-form Steklov spectrum of [0, L] x fiber, flat metric."""
    vals = []
    for lam, mult in fiber_eigenvalues(fiber, 40):
        if lam == 0:
            vals += [0.0] * mult + [2.0 / L] * mult
        else:
            s = math.sqrt(lam)
            t = math.tanh(s * L / 2)
            vals += [s * t] * mult + [s / t] * mult
    return np.sort(vals)[:count]


def test_criterion_01_cylinder(verdict):
    worst = 0.0
    for fiber in (S1, S2):
        got = steklov_spectrum(I1, constant(I1), fiber, 9, 2048).values()[:10]
        want = cylinder_spectrum(fiber, 1.0, 10)
        assert got[0] == 0.0 and want[0] == 0.0
        worst = max(worst, float(np.max(np.abs(got[1:] - want[1:]) / want[1:])))
    verdict(1, worst <= 1e-5, f"max rel err {worst:.2e} <= 1e-5", 2)


def test_criterion_02_disk(verdict):
    sp = aux_spectrum(B21, constant(B21), 2, 0.0, l_max=9, mesh=2048)
    want = np.array([0, 1, 1, 2, 2, 3, 3, 4, 4], float)
    err = float(np.max(np.abs(sp.values - want)))
    verdict(2, err <= 1e-5, f"max abs err {err:.2e} <= 1e-5", 2)


def test_criterion_03_helmholtz_slope(verdict):
    errs = []
    for base in (I1, B21):
        target = volume(base) / boundary_area(base)
        errs.append(abs(helmholtz_slope(base, 2048) / target - 1))
    worst = max(errs)
    verdict(3, worst <= 1e-3, f"slope rel err {worst:.2e} <= 1e-3", 5)


def test_criterion_04_basic_bound(verdict):
    rng = np.random.default_rng(2024)
    fibers = {n: FiberSpectrum.sphere(n) for n in (2, 3, 4)}
    worst, failures = math.inf, 0
    for i in range(200):
        base = I1 if i % 2 == 0 else B21
        h = random_pl(rng, base)
        n = int(rng.integers(2, 5))
        k = int(rng.integers(1, 6))
        r = bound_basic(base, h, fibers[n], k, 512)
        failures += not (r.margin > r.tol)
        worst = min(worst, r.margin - r.tol)
    verdict(4, failures == 0, f"{failures}/200 failures, min margin - tol {worst:.3g}", 120)


def test_criterion_05_const_chain(verdict):
    # 9 members on each base, plus C = 16 on both: 20 members
    members = [(base, fib, C, d) for base, fib in ((I1, S2), (B21, S3))
               for C in (2.0, 4.0, 8.0) for d in (0.3, 0.1, 0.03)]
    members += [(I1, S2, 16.0, 0.1), (B21, S3, 16.0, 0.1)]
    assert len(members) == 20
    worst, bad = math.inf, 0
    for base, fib, C, d in members:
        h = make_hdelta(base, C, d)
        for r in bound_const_chain(base, h, fib, 1, C, build_mesh(base, h, 512)):
            bad += not (r.margin > r.tol)
            worst = min(worst, r.margin)
    verdict(5, bad == 0, f"{bad} failing inequalities, min margin {worst:.3g}", 60)


def test_criterion_06_const_asymptotics(verdict):
    rows = const_asymptotics(I1, S2, 1, [4, 8, 16, 32], 2048)
    devs = [r["deviation"] for r in rows]
    ratios = [b / a for a, b in zip(devs, devs[1:])]
    ok = (all(b < a for a, b in zip(devs, devs[1:]))
          and all(0.2 <= q <= 0.3 for q in ratios)
          and abs(rows[-1]["C2_sigma_k"] - 1.0) <= 5e-4)
    verdict(6, ok, f"ratios {np.round(ratios, 4).tolist()}, C=32 value "
            f"{rows[-1]['C2_sigma_k']:.6f}", 30)


# wide collars first: once delta^2 <= r the ball B(q, r) sits on the plateau
# and int h^2 stays at C^2 |B|, so monotonicity is checked as nondecreasing
DELTAS = [0.7, 0.6, 0.5, 0.3, 0.1, 0.03, 0.01, 0.003]


def test_criterion_07_saturation(verdict):
    res = saturation_sweep(I1, S2, 1, [32.0], DELTAS, 1024)
    top = ceiling(I1, S2.lambda_k(1))
    s = [r["sigma_k"] for r in res.rows]
    ok = res.ok and s[-1] >= 0.95 * top and all(v < top for v in s)
    verdict(7, ok, f"sigma_1 from {s[0]:.5f} to {s[-1]:.6f}, ceiling {top}", 120)


def test_criterion_08_blowup(verdict):
    eps = [2.0 ** -e for e in range(4, 9)]
    res = blowup_sweep(B21, FiberSpectrum.sphere(4), 1.0, 50.0, eps, 1024)
    growth = [r["growth"] for r in res.rows[1:]]
    last = res.rows[-1]
    ok = res.ok and min(growth) >= 1.5 and last["sigma_1"] > 10 * last["n2_ceiling"]
    verdict(8, ok, f"growth {np.round(growth, 3).tolist()}, final sigma_1 "
            f"{last['sigma_1']:.4g} vs ceiling {last['n2_ceiling']:.4g}", 180)


def test_criterion_09_stability(verdict):
    q, r = 0.5 * I1.L, 0.5 * I1.inradius
    reps = [stability_report(I1, make_hdelta(I1, 32.0, d), S2, 1, q, r, 1024) for d in DELTAS]
    base_val = integral_over(I1, lambda x: np.ones_like(x), q - r, q + r)
    masses = [x.lhs for x in reps]
    ok = (all(x.verdict for x in reps)
          and all(b >= a * (1 - 1e-12) for a, b in zip(masses, masses[1:]))
          and masses[-1] > 100 * base_val)
    verdict(9, ok, f"int h^2 from {masses[0]:.4g} to {masses[-1]:.4g}, "
            f"{sum(x.trivial for x in reps)} members with negative rhs "
            f"(h = 1 gives {base_val:.4g})", 120)


def test_criterion_10_improved_dominance(verdict):
    rng = np.random.default_rng(11)
    bad, worst = 0, math.inf
    for i in range(50):
        base = I1 if i % 2 == 0 else B21
        h = random_pl(rng, base, lo=0.5, hi=3.0)
        fib = FiberSpectrum.sphere(int(rng.integers(2, 5)))
        k = int(rng.integers(1, 4))
        if isinstance(base, Interval):
            a = rng.uniform(0.0, 0.9)
            D = (float(a), float(rng.uniform(a + 0.05, 1.0)))
        else:
            D = float(rng.uniform(0.2, 1.0))
        rep = improved_bound(base, h, fib, k, D, mesh_N=512)
        gaps = (rep.rhs - rep.lhs + rep.tol, rep.extra["basic_rhs"] - rep.rhs)
        bad += min(gaps) < 0
        worst = min(worst, *gaps)
    verdict(10, bad == 0, f"{bad}/50 outside the bracket, min gap {worst:.3g}", 60)


def test_criterion_11_conformal(verdict):
    rng = np.random.default_rng(5)
    worst = 0.0
    for _ in range(10):
        L = float(rng.uniform(0.5, 3.0))
        h = random_pl(rng, Interval(L), lo=0.4, hi=3.0)
        res = conformal_check(L, h, S1, K=6, mesh_N=4096)
        worst = max(worst, res["max_rel_err"])
    verdict(11, worst <= 1e-4, f"max rel err {worst:.2e} <= 1e-4", 60)


def test_criterion_12_minmax(verdict):
    rng = np.random.default_rng(3)
    h = piecewise_linear([0, 0.25, 0.6, 1.0], [1.0, 2.5, 0.7, 1.0])
    mesh = build_mesh(I1, h, 256)
    n, lam = 3, 4.0
    sig0 = dtn_eigenvalues(assemble(AuxProblem(I1, h, n, lam, 0.0, mesh)))[0]
    rq_ok = True
    for _ in range(100):
        trial = rng.normal(size=len(mesh))
        rq_ok &= rayleigh_quotient(trial, I1, h, n, lam, mesh) >= sig0 * (1 - 1e-12)
    grid = np.linspace(0.0, 40.0, 20)
    vals = np.array([aux_spectrum(I1, h, n, g, mesh=mesh).values for g in grid])
    hb = piecewise_linear([0, 0.4, 1.0], [2.0, 1.5, 1.0])
    ball = np.array([aux_spectrum(B21, hb, n, g, l_max=3, mesh=256).values for g in grid])
    mono = bool(np.all(np.diff(vals, axis=0) >= -1e-12)
                and np.all(np.diff(ball, axis=0) >= -1e-12))
    conv = True
    for base in (I1, B21):
        hb = collar_bump(base, 0.4, 2.5)
        s = [mode_sigma(base, hb, 3, 5.0, 0, N) for N in (64, 128, 256)]
        conv &= abs(s[0] - s[1]) <= 4.5 * abs(s[1] - s[2])
    verdict(12, rq_ok and mono and conv,
            f"Rayleigh {bool(rq_ok)}, monotone {mono}, convergence {bool(conv)}", 60)


def test_criterion_13_interval_observational(verdict):
    rng = np.random.default_rng(13)
    rows = []
    for _ in range(50):
        L = float(rng.uniform(0.5, 3.0))
        h = random_pl(rng, Interval(L), lo=0.5, hi=3.0)
        n = int(rng.integers(2, 5))
        p = float(rng.uniform(max(1.0, n - 2), 6.0))
        k = int(rng.integers(1, 4))
        for rep in bound_interval(h, FiberSpectrum.sphere(n), k, p, L, 256):
            assert rep.observational and not rep.asserted
            assert math.isfinite(rep.lhs) and math.isfinite(rep.rhs)
            rows.append(rep.to_dict())
    holds = sum(r["verdict"] == "pass" for r in rows)
    verdict(13, len(rows) >= 50, f"{len(rows)} reports recorded, inequality held in "
            f"{holds} (observational)", 60)
