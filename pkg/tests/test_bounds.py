import math

import numpy as np
import pytest
from scipy.optimize import brentq

from warpsteklov.bounds import (HypothesisError, basic_rhs, bound_basic, bound_const_chain,
                                bound_interval, bound_lp, ceiling, const_asymptotics,
                                helmholtz_slope, improved_bound, stability_report)
from warpsteklov.families import make_hdelta
from warpsteklov.geometry import (Ball, FiberSpectrum, Interval, constant, lp_norm,
                                  piecewise_linear, ramp)
from warpsteklov.sturm import mode_sigma

S2 = FiberSpectrum.sphere(2)
S3 = FiberSpectrum.sphere(3)
CYL = math.sqrt(2) * math.tanh(math.sqrt(2) / 2)


def test_basic_cylinder():
    I = Interval(1.0)
    r = bound_basic(I, constant(I), S2, 1, 2048)
    assert r.rhs == pytest.approx(1.0)
    assert r.lhs == pytest.approx(CYL, rel=1e-6)
    assert r.strict and r.verdict and r.margin > r.tol


def test_basic_k0_trivial():
    I = Interval(1.0)
    r = bound_basic(I, ramp(I, 2.0), S2, 0)
    assert r.lhs == 0.0 and r.verdict


@pytest.mark.parametrize("base", [Interval(1.0), Interval(3.0), Ball(2, 1.0), Ball(3, 2.0)])
def test_basic_rhs_n2_is_interior_invariant(base):
    lam_k = S2.lambda_k(3)
    for h in (constant(base), ramp(base, 4.0), ramp(base, 0.3)):
        assert basic_rhs(base, h, 2, lam_k) == pytest.approx(ceiling(base, lam_k), rel=1e-12)


def test_const_chain_on_hdelta():
    I = Interval(1.0)
    h = make_hdelta(I, 4.0, 0.3)
    left, right = bound_const_chain(I, h, S3, 1, 4.0, 1024)
    assert left.verdict and right.verdict
    assert left.margin > left.tol and right.margin > right.tol
    # rhs of the right inequality: C^(n-2) lambda_k |Omega| / |boundary| = 4 * 3 / 2
    assert right.rhs == pytest.approx(4 * S3.lambda_k(1) / 2)


def test_const_chain_degenerate_is_observational():
    I = Interval(1.0)
    left, right = bound_const_chain(I, constant(I), S2, 1, 1.0, 512)
    assert left.observational and right.observational
    assert "equality" in left.note


def test_const_chain_requires_h_below_C():
    I = Interval(1.0)
    with pytest.raises(HypothesisError):
        bound_const_chain(I, ramp(I, 5.0), S2, 1, 4.0)
    with pytest.raises(HypothesisError):
        bound_const_chain(I, constant(I, 2.0), S2, 1, 4.0)  # trace is not 1


def test_const_asymptotics_interval():
    I = Interval(1.0)
    rows = const_asymptotics(I, S2, 1, [4, 8, 16, 32], 2048)
    devs = [r["deviation"] for r in rows]
    assert all(b < a for a, b in zip(devs, devs[1:]))
    for r in rows[1:]:
        assert 0.2 <= r["ratio"] <= 0.3
    # closed form: C^2 (sqrt 2 / C) tanh(sqrt 2 / (2 C))
    want = 32 * math.sqrt(2) * math.tanh(math.sqrt(2) / 64)
    assert rows[-1]["C2_sigma_k"] == pytest.approx(want, rel=1e-6)
    assert abs(rows[-1]["deviation"] - 1.6e-4) < 1e-5
    assert const_asymptotics(I, S2, 0, [2, 4])[0]["C2_sigma_k"] == 0.0


@pytest.mark.parametrize("base", [Interval(1.0), Ball(2, 1.0)])
def test_radial_mode_below_constant_trial(base):
    lam_k = S3.lambda_k(2)
    for C in (2.0, 8.0, 30.0):
        s = mode_sigma(base, constant(base, C), 3, lam_k, 0, 512)
        assert s <= lam_k * ceiling(base, 1.0) / C ** 2


def test_lp_reduces_to_basic_at_p_n_minus_2():
    I = Interval(1.0)
    h = ramp(I, 2.5)
    lp = bound_lp(I, h, S3, 2, 1.0, 512)
    basic = bound_basic(I, h, S3, 2, 512)
    assert lp.rhs == pytest.approx(basic.rhs, rel=1e-10)
    assert lp.verdict and lp.margin > lp.tol


def test_lp_examples():
    I = Interval(1.0)
    assert bound_lp(I, constant(I), S3, 1, 3.0, 256).rhs == pytest.approx(S3.lambda_k(1) / 2)
    # h with ||h||_2 = 2, n = 3, p = 2: rhs = lambda_k * 2 / 2
    # tune a symmetric plateau so the L^2 norm is exactly 2
    x = np.array([0.0, 0.1, 0.9, 1.0])
    v = lambda c: piecewise_linear(x, [1.0, c, c, 1.0])
    c = brentq(lambda c: lp_norm(I, v(c), 2) - 2.0, 1.0, 5.0, xtol=1e-14)
    r = bound_lp(I, v(c), S3, 1, 2.0, 256)
    assert r.rhs == pytest.approx(S3.lambda_k(1), rel=1e-10)


def test_lp_hypotheses():
    I = Interval(1.0)
    with pytest.raises(HypothesisError, match="requires n >= 3"):
        bound_lp(I, constant(I), S2, 1, 2.0)
    with pytest.raises(HypothesisError):
        bound_lp(I, constant(I), FiberSpectrum.sphere(5), 1, 2.0)


def test_interval_bounds_observational():
    I = Interval(1.0)
    reps = bound_interval(constant(I), S2, 1, 2.0, 1.0, 2048)
    assert [r.name for r in reps] == ["interval_k", "interval_k1"]
    assert all(r.observational and not r.asserted for r in reps)
    # n = 2, h = 1: rhs = L lambda_k / 4 = 0.5 < 0.861
    assert reps[0].rhs == pytest.approx(0.5)
    assert reps[0].lhs == pytest.approx(CYL, rel=1e-6)
    assert not reps[0].verdict
    assert len(bound_interval(constant(I), S2, 2, 2.0, 1.0, 256)) == 1


def test_interval_bound_grows_like_norm_power():
    I = Interval(1.0)
    n, p = 4, 2.0
    fib = FiberSpectrum.sphere(n)
    r2 = bound_interval(make_hdelta(I, 2.0, 0.2), fib, 1, p, 1.0, 256)[0]
    r8 = bound_interval(make_hdelta(I, 8.0, 0.2), fib, 1, p, 1.0, 256)[0]
    assert r8.rhs / r2.rhs == pytest.approx(
        (r8.extra["norm"] / r2.extra["norm"]) ** (n - 2), rel=1e-12)
    assert 4 ** (n - 2) * 0.8 < r8.rhs / r2.rhs < 4 ** (n - 2) * 1.01


def test_stability_cylinder():
    I = Interval(1.0)
    r = stability_report(I, constant(I), S2, 1, 0.5, 0.25, 2048)
    assert r.lhs == pytest.approx(0.5, rel=1e-12)
    delta = 1 - CYL
    want = 2 * 0.0625 / (4 * delta) * 0.25 / 2 - 2 * 0.0625 * 0.5
    assert r.rhs == pytest.approx(want, rel=1e-5)
    assert r.trivial and r.verdict


def test_stability_hypotheses():
    I = Interval(1.0)
    with pytest.raises(HypothesisError):
        stability_report(I, constant(I), S3, 1, 0.5, 0.25)
    with pytest.raises(HypothesisError):
        stability_report(I, constant(I), S2, 1, 0.1, 0.25)  # ball leaves the base


def test_improved_cylinder_and_dominance():
    I = Interval(1.0)
    r = improved_bound(I, constant(I), S2, 1, (0.25, 0.75), mesh_N=2048)
    assert r.rhs < 1.0
    assert r.extra["basic_rhs"] == pytest.approx(1.0)
    assert r.lhs == pytest.approx(CYL, rel=1e-6)
    assert r.lhs <= r.rhs


def test_improved_shrinking_support_recovers_basic():
    # the correction is invariant under scaling f; it vanishes as D shrinks
    I = Interval(1.0)
    h = ramp(I, 2.0)
    corr = []
    for w in (0.2, 0.02, 0.002):
        r = improved_bound(I, h, S3, 1, (0.5 - w, 0.5 + w), mesh_N=256)
        corr.append(r.extra["basic_rhs"] - r.rhs)
    assert all(c > 0 for c in corr)
    assert corr[1] < 0.01 * corr[0] and corr[2] < 0.01 * corr[1]


def test_improved_rejects_bad_profiles():
    I = Interval(1.0)
    with pytest.raises(HypothesisError):
        improved_bound(I, constant(I), S2, 1, (0.2, 0.6), f=([0.1, 0.4, 0.6], [0, 1, 0]))
    with pytest.raises(HypothesisError):
        improved_bound(I, constant(I), S2, 1, (0.2, 0.6), f=([0.2, 0.4, 0.6], [0, -1, 0]))


def test_improved_on_ball():
    B = Ball(2, 1.0)
    h = ramp(B, 2.0)
    r = improved_bound(B, h, S2, 2, 0.6, mesh_N=512)
    assert r.lhs <= r.rhs + r.tol <= r.extra["basic_rhs"] + r.tol


@pytest.mark.parametrize("base", [Interval(1.0), Ball(2, 1.0)])
def test_helmholtz_slope(base):
    assert helmholtz_slope(base, 2048) == pytest.approx(0.5, rel=1e-3)
    assert mode_sigma(base, constant(base), 2, 0.0, 0, 256) == 0.0
