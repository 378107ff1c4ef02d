"""Bases, fibers and warping functions.

Bases are either an interval ``[0, L]`` or a Euclidean ball of radius ``R``
in dimension ``d >= 2``.  Warping functions depend on a single coordinate:
``t`` in ``[0, L]`` for intervals and the radius ``r`` in ``[0, R]`` for
balls (radial warping).  Integrals of powers of ``h`` are computed with
per-element Gauss-Legendre quadrature.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np


class GeometryError(ValueError):
    pass


def unit_ball_volume(d: int) -> float:
    """Volume of the Euclidean unit ball in R^d."""
    return math.pi ** (d / 2) / math.gamma(d / 2 + 1)


def sphere_harmonic_multiplicity(ell: int, n: int) -> int:
    """Dimension of the degree-``ell`` harmonic space on the unit sphere S^n."""
    if ell < 0:
        return 0
    lower = math.comb(ell + n - 2, n) if ell >= 2 else 0
    return math.comb(ell + n, n) - lower


# ---------------------------------------------------------------------------
# Bases

@dataclass(frozen=True)
class Interval:
    L: float = 1.0

    def __post_init__(self):
        if not self.L > 0:
            raise GeometryError(f"interval length must be positive, got {self.L}")

    dim = 1

    @property
    def extent(self) -> float:
        return float(self.L)

    @property
    def inradius(self) -> float:
        return 0.5 * self.L

    def distance_to_boundary(self, t):
        t = np.asarray(t, dtype=float)
        return np.minimum(t, self.L - t)


@dataclass(frozen=True)
class Ball:
    d: int = 2
    R: float = 1.0

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 2:
            raise GeometryError(f"ball dimension must be an integer >= 2, got {self.d}")
        if not self.R > 0:
            raise GeometryError(f"ball radius must be positive, got {self.R}")

    @property
    def dim(self) -> int:
        return self.d

    @property
    def extent(self) -> float:
        return float(self.R)

    @property
    def inradius(self) -> float:
        return float(self.R)

    @property
    def sphere_area(self) -> float:
        """Area of the unit sphere S^{d-1}."""
        return self.d * unit_ball_volume(self.d)

    def distance_to_boundary(self, r):
        return self.R - np.asarray(r, dtype=float)


BaseDomain = Interval | Ball


def volume(base: BaseDomain) -> float:
    if isinstance(base, Interval):
        return float(base.L)
    return unit_ball_volume(base.d) * base.R ** base.d


def boundary_area(base: BaseDomain) -> float:
    # counting measure on the two endpoints of an interval
    if isinstance(base, Interval):
        return 2.0
    return base.d * unit_ball_volume(base.d) * base.R ** (base.d - 1)


def radial_weight(base: BaseDomain, x):
    """Jacobian of the volume element in the 1D base coordinate."""
    x = np.asarray(x, dtype=float)
    if isinstance(base, Interval):
        return np.ones_like(x)
    return base.sphere_area * x ** (base.d - 1)


def boundary_harmonics(base: BaseDomain, count: int) -> list[tuple[float, int]]:
    """Laplace eigenvalues of the boundary with multiplicities.

    For a ball these are the ``count`` distinct eigenvalues of S^{d-1}(R).
    An interval has a two-point boundary: a single mode is returned whose
    multiplicity records the two boundary degrees of freedom.
    """
    if count < 1:
        raise GeometryError("count must be >= 1")
    if isinstance(base, Interval):
        return [(0.0, 2)]
    d, R = base.d, base.R
    return [(m * (m + d - 2) / R ** 2, sphere_harmonic_multiplicity(m, d - 1))
            for m in range(count)]


# ---------------------------------------------------------------------------
# Fibers

FIBER_KINDS = ("circle", "sphere", "torus", "explicit")


@dataclass(frozen=True)
class FiberSpectrum:
    """Closed fiber described through its Laplace spectrum.

    ``kind`` is one of ``circle`` (``radius``), ``sphere`` (unit S^n),
    ``torus`` (flat torus with side ``lengths``) or ``explicit`` (a finite
    list of ``(lambda, multiplicity)`` pairs).
    """
    dim_n: int
    kind: str
    radius: float = 1.0
    lengths: tuple = ()
    explicit: tuple = ()

    def __post_init__(self):
        if self.kind not in FIBER_KINDS:
            raise GeometryError(f"unknown fiber kind {self.kind!r}")
        if int(self.dim_n) != self.dim_n or self.dim_n < 1:
            raise GeometryError("fiber dimension must be a positive integer")
        if self.kind == "circle" and self.dim_n != 1:
            raise GeometryError("a circle fiber has dimension 1")
        if self.kind == "torus" and len(self.lengths) != self.dim_n:
            raise GeometryError("torus needs one length per dimension")
        if self.kind == "explicit":
            vals = [float(v) for v, _ in self.explicit]
            mults = [int(m) for _, m in self.explicit]
            if not vals or vals[0] != 0.0 or mults[0] != 1:
                raise GeometryError("explicit spectrum must start with (0, 1)")
            if any(b <= a for a, b in zip(vals, vals[1:])):
                raise GeometryError("explicit eigenvalues must be strictly increasing")
            if any(m < 1 for m in mults):
                raise GeometryError("multiplicities must be positive")

    @classmethod
    def circle(cls, radius: float = 1.0) -> "FiberSpectrum":
        return cls(dim_n=1, kind="circle", radius=float(radius))

    @classmethod
    def sphere(cls, n: int) -> "FiberSpectrum":
        return cls(dim_n=int(n), kind="sphere")

    @classmethod
    def torus(cls, lengths: Sequence[float]) -> "FiberSpectrum":
        lengths = tuple(float(x) for x in lengths)
        return cls(dim_n=len(lengths), kind="torus", lengths=lengths)

    @classmethod
    def from_list(cls, n: int, pairs) -> "FiberSpectrum":
        pairs = tuple((float(v), int(m)) for v, m in pairs)
        return cls(dim_n=int(n), kind="explicit", explicit=pairs)

    @property
    def is_finite(self) -> bool:
        return self.kind == "explicit"

    def lambda_k(self, k: int) -> float:
        """k-th fiber eigenvalue counted with multiplicity (lambda_0 = 0)."""
        count = 0
        J = 8
        while True:
            pairs = fiber_eigenvalues(self, J)
            for lam, mult in pairs:
                count += mult
                if count > k:
                    return lam
            if self.is_finite or len(pairs) < J:
                raise GeometryError(f"fiber spectrum has fewer than {k + 1} eigenvalues")
            count = 0
            J *= 2


def _torus_eigenvalues(lengths, J):
    lengths = np.asarray(lengths, dtype=float)
    bound = (2 * np.pi / lengths.min()) ** 2 * max(J, 2)
    while True:
        ranges = [np.arange(-int(L * math.sqrt(bound) / (2 * np.pi)),
                            int(L * math.sqrt(bound) / (2 * np.pi)) + 1) for L in lengths]
        grids = np.meshgrid(*ranges, indexing="ij")
        vals = sum((2 * np.pi * g / L) ** 2 for g, L in zip(grids, lengths)).ravel()
        vals = vals[vals <= bound]
        keys, counts = np.unique(np.round(vals, 10), return_counts=True)
        if len(keys) >= J:
            return [(float(v), int(c)) for v, c in zip(keys[:J], counts[:J])]
        bound *= 2


def fiber_eigenvalues(fiber: FiberSpectrum, count: int) -> list[tuple[float, int]]:
    """First ``count`` distinct eigenvalues of the fiber with multiplicities."""
    if count < 1:
        raise GeometryError("count must be >= 1")
    if fiber.kind == "circle":
        return [(0.0, 1)] + [((m / fiber.radius) ** 2, 2) for m in range(1, count)]
    if fiber.kind == "sphere":
        n = fiber.dim_n
        return [(float(l * (l + n - 1)), sphere_harmonic_multiplicity(l, n))
                for l in range(count)]
    if fiber.kind == "torus":
        return _torus_eigenvalues(fiber.lengths, count)
    if fiber.kind == "explicit":
        return list(fiber.explicit[:count])
    raise GeometryError(f"unknown fiber kind {fiber.kind!r}")


# ---------------------------------------------------------------------------
# Warping functions

PRESETS = ("constant", "ramp", "collar_bump", "custom")


@dataclass(frozen=True, eq=False)
class WarpingFunction:
    """Positive function of the base coordinate.

    Stored as piecewise-linear samples ``values`` at increasing ``knots``.
    Closed-form presets carry an ``exact`` evaluator which takes precedence
    over linear interpolation.
    """
    knots: np.ndarray
    values: np.ndarray
    preset: str = "custom"
    exact: Optional[Callable] = field(default=None, repr=False)
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        knots = np.asarray(self.knots, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if knots.ndim != 1 or knots.shape != values.shape or len(knots) < 2:
            raise GeometryError("warping samples need matching 1D knots/values (>= 2 points)")
        if np.any(np.diff(knots) <= 0):
            raise GeometryError("warping knots must be strictly increasing")
        if np.any(~np.isfinite(values)) or np.any(values <= 0):
            raise GeometryError("warping function must be positive")
        if self.preset not in PRESETS:
            raise GeometryError(f"unknown preset {self.preset!r}")
        knots.flags.writeable = False
        values.flags.writeable = False
        object.__setattr__(self, "knots", knots)
        object.__setattr__(self, "values", values)

    def __call__(self, x):
        if self.exact is not None:
            return np.asarray(self.exact(np.asarray(x, dtype=float)), dtype=float)
        return np.interp(x, self.knots, self.values)

    @property
    def is_piecewise_linear(self) -> bool:
        return self.exact is None

    def breakpoints(self) -> np.ndarray:
        """Coordinates where the integrand may lose smoothness."""
        if self.exact is None:
            return self.knots
        return self.params.get("breaks", self.knots[[0, -1]])

    def check_domain(self, base: BaseDomain, atol: float = 1e-12):
        span = atol * max(1, base.extent)
        if abs(self.knots[0]) > atol or abs(self.knots[-1] - base.extent) > span:
            raise GeometryError(
                f"warping knots span [{self.knots[0]}, {self.knots[-1]}], "
                f"base coordinate spans [0, {base.extent}]")

    def trace(self, base: BaseDomain) -> np.ndarray:
        """Boundary values: (h(0), h(L)) for intervals, (h(R),) for balls."""
        if isinstance(base, Interval):
            return self(np.array([0.0, base.L]))
        return self(np.array([base.R]))

    def is_normalised(self, base: BaseDomain, tol: float = 1e-12) -> bool:
        return bool(np.all(np.abs(self.trace(base) - 1.0) <= tol))

    def max(self) -> float:
        if self.exact is None:
            return float(self.values.max())
        x = np.linspace(self.knots[0], self.knots[-1], 4097)
        return float(max(self(x).max(), self.values.max()))

    def resample(self, n_samples: int) -> "WarpingFunction":
        """Piecewise-linear copy on a uniform grid of ``n_samples`` points."""
        x = np.linspace(self.knots[0], self.knots[-1], n_samples)
        return WarpingFunction(x, self(x), preset="custom", params={"source": self.preset})


def constant(base: BaseDomain, C: float = 1.0) -> WarpingFunction:
    if not C > 0:
        raise GeometryError("constant warping must be positive")
    C = float(C)
    return WarpingFunction(np.array([0.0, base.extent]), np.array([C, C]), preset="constant",
                           exact=lambda x: np.full(np.shape(x), C), params={"C": C})


def ramp(base: BaseDomain, peak: float) -> WarpingFunction:
    """Equal to 1 on the boundary, linear in the distance to it, ``peak`` at the centre."""
    if isinstance(base, Interval):
        knots = np.array([0.0, 0.5 * base.L, base.L])
        values = np.array([1.0, peak, 1.0])
    else:
        knots = np.array([0.0, base.R])
        values = np.array([peak, 1.0])
    h = WarpingFunction(knots, values, preset="ramp", params={"peak": float(peak)})
    return h


def collar_bump(base: BaseDomain, width: float, height: float) -> WarpingFunction:
    """Smooth bump ``1 + (height - 1) sin^2(pi s / width)`` in the collar ``s < width``."""
    if not 0 < width <= base.inradius:
        raise GeometryError("collar width must lie in (0, inradius]")
    if not height > 0:
        raise GeometryError("height must be positive")

    def evaluate(x):
        s = base.distance_to_boundary(x)
        bump = np.where(s < width, np.sin(np.pi * np.clip(s, 0, width) / width) ** 2, 0.0)
        return 1.0 + (height - 1.0) * bump

    ext = base.extent
    if isinstance(base, Interval):
        breaks = np.unique([0.0, width, ext - width, ext])
    else:
        breaks = np.unique([0.0, ext - width, ext])
    knots = np.linspace(0.0, ext, 65)
    return WarpingFunction(knots, evaluate(knots), preset="collar_bump", exact=evaluate,
                           params={"width": width, "height": height, "breaks": breaks})


def piecewise_linear(knots, values, **params) -> WarpingFunction:
    return WarpingFunction(np.asarray(knots, float), np.asarray(values, float), preset="custom",
                           params=params)


def load_warping(path, base: Optional[BaseDomain] = None) -> WarpingFunction:
    """Read a two-column text file ``coordinate value``."""
    data = np.loadtxt(path, ndmin=2)
    if data.shape[1] != 2:
        raise GeometryError(f"{path}: expected two columns, found {data.shape[1]}")
    h = piecewise_linear(data[:, 0], data[:, 1])
    if base is not None:
        h.check_domain(base)
    return h


def save_warping(path, h: WarpingFunction):
    np.savetxt(path, np.column_stack([h.knots, h.values]), fmt="%.17g")


# ---------------------------------------------------------------------------
# Quadrature

def gauss_points(s: float, extra: int = 0) -> int:
    return max(4, math.ceil((abs(s) + 3 + extra) / 2))


def integration_nodes(base: BaseDomain, h: Optional[WarpingFunction] = None,
                      min_elements: int = 256, extra=()) -> np.ndarray:
    """Partition of the base coordinate aligned with the kinks of ``h``."""
    parts = [np.linspace(0.0, base.extent, min_elements + 1)]
    if h is not None:
        parts.append(h.breakpoints())
    parts.extend(np.atleast_1d(np.asarray(e, dtype=float)) for e in extra)
    x = np.unique(np.concatenate(parts))
    x = x[(x >= 0) & (x <= base.extent)]
    keep = np.concatenate([[True], np.diff(x) > 1e-14 * base.extent])
    return x[keep]


def integrate(base: BaseDomain, f: Callable, nodes: np.ndarray, npts: int) -> float:
    """Integral of f over the base (with its volume element) on a partition."""
    xg, wg = np.polynomial.legendre.leggauss(npts)
    a, b = nodes[:-1, None], nodes[1:, None]
    x = 0.5 * (b - a) * xg + 0.5 * (a + b)
    w = 0.5 * (b - a) * wg
    return float(np.sum(w * f(x) * radial_weight(base, x)))


def weighted_volume_integral(base: BaseDomain, h: WarpingFunction, s: float,
                             min_elements: int = 256) -> float:
    """Integral of h**s over the base."""
    nodes = integration_nodes(base, h, min_elements)
    if s < 0:
        samples = np.concatenate([np.linspace(0, base.extent, 4 * len(nodes)), nodes])
        hmin = float(np.min(h(samples)))
        try:
            ok = hmin > 0 and math.isfinite(hmin ** s * volume(base))
        except OverflowError:
            ok = False
        if not ok:
            raise GeometryError(f"h**{s} overflows: min h = {hmin}")
    extra = base.d - 1 if isinstance(base, Ball) else 0
    return integrate(base, lambda x: h(x) ** s, nodes, gauss_points(s, extra))


def boundary_integral(base: BaseDomain, h: WarpingFunction, s: float) -> float:
    """Integral of h**s over the boundary."""
    tr = h.trace(base) ** s
    if isinstance(base, Interval):
        return float(tr.sum())
    return float(tr[0] * boundary_area(base))


def integral_over(base: BaseDomain, f: Callable, lo: float, hi: float,
                  breaks=(), npts: int = 6, min_elements: int = 256) -> float:
    """Integral of f over the part of the base with coordinate in [lo, hi]."""
    if not 0 <= lo < hi <= base.extent + 1e-12:
        raise GeometryError(f"range [{lo}, {hi}] outside the base coordinate")
    x = np.unique(np.concatenate([np.linspace(lo, hi, min_elements + 1),
                                  np.asarray(breaks, dtype=float)]))
    x = x[(x >= lo) & (x <= hi)]
    return integrate(base, f, x, npts)


def lp_norm(base: BaseDomain, h: WarpingFunction, p: float, min_elements: int = 256) -> float:
    if p < 1:
        raise GeometryError(f"L^p norm needs p >= 1, got {p}")
    return weighted_volume_integral(base, h, p, min_elements) ** (1.0 / p)
