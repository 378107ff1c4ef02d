"""Auxiliary Steklov problem on the base, one fiber eigenvalue at a time.

For a fiber eigenvalue ``lam`` the separated problem reads

    -div(h^n grad a) + lam h^(n-2) a = 0   in the base,
    h^n d_nu a = sigma h^n a                on the boundary,

with Rayleigh quotient
``(int |a'|^2 h^n + lam a^2 h^(n-2)) / (int_boundary a^2 h^n)``.
On a ball with radial ``h`` the problem splits further over spherical
harmonics of the boundary; a mode with boundary eigenvalue ``mu`` adds
``mu R^2 a^2 h^n / r^2`` to the energy density.

Discretisation: P1 elements on a 1D mesh, interior elimination by a banded
Cholesky factorisation, and a 1x1 or 2x2 boundary pencil.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np
from scipy import linalg

from .geometry import (Ball, BaseDomain, Interval, WarpingFunction, boundary_harmonics,
                       gauss_points)

DEFAULT_MESH = 1024

Mesh = Union[int, np.ndarray]


class SolverError(RuntimeError):
    """Failure of an auxiliary solve; carries the (lam, mu, mesh) triple."""

    def __init__(self, message, lam=None, mu=None, mesh=None):
        self.lam, self.mu, self.mesh = lam, mu, mesh
        super().__init__(f"{message} (lam={lam}, mu={mu}, mesh={mesh})")


class IndefiniteInteriorError(SolverError):
    pass


# ---------------------------------------------------------------------------
# Meshes

def uniform_nodes(base: BaseDomain, N: int) -> np.ndarray:
    return np.linspace(0.0, base.extent, int(N) + 1)


def _graded_piece(t0, t1, h0, h1, ratio_step, min_elements):
    """Nodes on [t0, t1] for linear h, geometric in h where h is steep."""
    lo, hi = min(h0, h1), max(h0, h1)
    m = max(min_elements, 1)
    if hi / lo > 1 + ratio_step:
        m = max(m, math.ceil(math.log(hi / lo) / math.log1p(ratio_step)))
        hv = np.geomspace(h0, h1, m + 1)
        return t0 + (hv - h0) / (h1 - h0) * (t1 - t0)
    return np.linspace(t0, t1, m + 1)


def build_mesh(base: BaseDomain, h: WarpingFunction, N: int = DEFAULT_MESH,
               per_piece: int = 0, ratio_step: float = 0.05, max_knots=None,
               extra=()) -> np.ndarray:
    """Uniform mesh of N elements merged with the kinks of a piecewise-linear h.

    Pieces of h that vary by more than a factor ``1 + ratio_step`` are graded
    so that h changes geometrically between nodes; every piece receives at
    least ``per_piece`` elements.
    """
    parts = [uniform_nodes(base, N)]
    if max_knots is None:
        max_knots = 4 * N
    if h.is_piecewise_linear and len(h.knots) <= max_knots:
        k, v = h.knots, h.values
        for i in range(len(k) - 1):
            parts.append(_graded_piece(k[i], k[i + 1], v[i], v[i + 1], ratio_step, per_piece))
    else:
        parts.append(np.asarray(h.breakpoints(), dtype=float))
    parts.append(np.asarray(extra, dtype=float).ravel())
    x = np.unique(np.concatenate(parts))
    x = x[(x >= 0) & (x <= base.extent)]
    keep = np.concatenate([[True], np.diff(x) > 1e-13 * base.extent])
    x = x[keep]
    x[0], x[-1] = 0.0, base.extent
    return x


def resolve_mesh(base: BaseDomain, mesh: Mesh) -> np.ndarray:
    if np.ndim(mesh) == 0:
        N = int(mesh)
        if N < 1:
            raise ValueError("mesh needs at least one element")
        return uniform_nodes(base, N)
    x = np.asarray(mesh, dtype=float)
    if x.ndim != 1 or len(x) < 2 or np.any(np.diff(x) <= 0):
        raise ValueError("mesh nodes must be strictly increasing")
    if abs(x[0]) > 1e-12 or abs(x[-1] - base.extent) > 1e-12 * base.extent:
        raise ValueError("mesh nodes must span the base coordinate")
    return x


def mesh_label(mesh: Mesh):
    return int(mesh) if np.ndim(mesh) == 0 else f"{len(mesh) - 1} elements"


def coarsen(mesh: Mesh, base: BaseDomain) -> Mesh:
    """Every other node of a mesh (for two-mesh error estimates)."""
    if np.ndim(mesh) == 0:
        return max(1, int(mesh) // 2)
    x = np.asarray(mesh)
    y = x[::2]
    if y[-1] != x[-1]:
        y = np.append(y, x[-1])
    return y


# ---------------------------------------------------------------------------
# Assembly

@dataclass(frozen=True)
class AuxProblem:
    base: BaseDomain
    h: WarpingFunction
    n: int
    lam: float
    mu: float = 0.0
    mesh: Mesh = DEFAULT_MESH

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError(f"lam must be >= 0, got {self.lam}")
        if self.mu < 0:
            raise ValueError(f"mu must be >= 0, got {self.mu}")
        if isinstance(self.base, Interval) and self.mu != 0:
            raise ValueError("interval bases carry no boundary harmonics (mu must be 0)")
        if self.n < 1:
            raise ValueError("fiber dimension must be >= 1")


@dataclass(frozen=True, eq=False)
class DiscreteForms:
    """Tridiagonal energy form ``A`` and diagonal boundary form ``B``.

    Only the active degrees of freedom are stored: for ball modes with
    ``mu > 0`` the node ``r = 0`` is constrained to zero and dropped.
    """
    nodes: np.ndarray
    diag: np.ndarray
    off: np.ndarray
    bdiag: np.ndarray
    boundary: np.ndarray
    lam: float
    mu: float
    mesh: object = field(default=None)
    rowsum: np.ndarray = None  # A @ ones, assembled without cancellation

    @property
    def size(self) -> int:
        return len(self.diag)

    @property
    def interior(self) -> np.ndarray:
        return np.setdiff1d(np.arange(self.size), self.boundary)

    def dense_A(self) -> np.ndarray:
        return np.diag(self.diag) + np.diag(self.off, 1) + np.diag(self.off, -1)

    def dense_B(self) -> np.ndarray:
        return np.diag(self.bdiag)

    def energy(self, a) -> float:
        a = np.asarray(a, dtype=float)
        return float(np.dot(self.diag, a * a) + 2 * np.dot(self.off, a[:-1] * a[1:]))

    def boundary_mass(self, a) -> float:
        a = np.asarray(a, dtype=float)
        return float(np.dot(self.bdiag, a * a))


def _coefficients(problem: AuxProblem, x):
    """Volume weight, gradient and zeroth-order coefficients at points x."""
    base, n = problem.base, problem.n
    hx = problem.h(x)
    if np.any(~np.isfinite(hx)) or np.any(hx <= 0):
        raise SolverError("non-positive warping function at a quadrature node",
                          problem.lam, problem.mu, mesh_label(problem.mesh))
    grad = hx ** n
    zero = problem.lam * hx ** (n - 2)
    if isinstance(base, Interval):
        return np.ones_like(x), grad, zero
    w = base.sphere_area * x ** (base.d - 1)
    if problem.mu > 0:
        # unit-sphere eigenvalue m(m+d-2) = mu R^2
        zero = zero + problem.mu * base.R ** 2 * grad / x ** 2
    return w, grad, zero


def assemble(problem: AuxProblem) -> DiscreteForms:
    base = problem.base
    x = resolve_mesh(base, problem.mesh)
    npts = gauss_points(problem.n, 2 + (base.d - 1 if isinstance(base, Ball) else 0))
    xg, wg = np.polynomial.legendre.leggauss(npts)
    a, b = x[:-1, None], x[1:, None]
    dx = b - a
    xq = 0.5 * dx * xg + 0.5 * (a + b)
    wq = 0.5 * dx * wg
    w, cg, c0 = _coefficients(problem, xq)
    wq = wq * w
    phi_l = (b - xq) / dx
    phi_r = (xq - a) / dx
    kg = np.sum(wq * cg, axis=1) / dx[:, 0] ** 2
    k_ll = kg + np.sum(wq * c0 * phi_l * phi_l, axis=1)
    k_rr = kg + np.sum(wq * c0 * phi_r * phi_r, axis=1)
    k_lr = -kg + np.sum(wq * c0 * phi_l * phi_r, axis=1)
    # row sums of A carry only the zeroth-order part (stiffness rows sum to 0);
    # assembling them separately keeps S 1 free of cancellation
    rowsum = np.zeros(len(x))
    rowsum[:-1] += np.sum(wq * c0 * phi_l, axis=1)
    rowsum[1:] += np.sum(wq * c0 * phi_r, axis=1)

    diag = np.zeros(len(x))
    diag[:-1] += k_ll
    diag[1:] += k_rr
    off = k_lr.copy()
    bdiag = np.zeros(len(x))
    hb = problem.h(np.array([0.0, base.extent])) ** problem.n
    if isinstance(base, Interval):
        bdiag[0], bdiag[-1] = hb[0], hb[1]
        boundary = np.array([0, len(x) - 1])
    else:
        bdiag[-1] = hb[1] * base.R ** (base.d - 1) * base.sphere_area
        boundary = np.array([len(x) - 1])

    if isinstance(base, Ball) and problem.mu > 0:
        rowsum[1] -= off[0]
        diag, off, bdiag, rowsum = diag[1:], off[1:], bdiag[1:], rowsum[1:]
        boundary = boundary - 1
    return DiscreteForms(nodes=x, diag=diag, off=off, bdiag=bdiag, boundary=boundary,
                         lam=problem.lam, mu=problem.mu, mesh=mesh_label(problem.mesh),
                         rowsum=rowsum)


def dump_tridiagonal(forms: DiscreteForms, path):
    """Write the energy form as three columns (sub, diag, super)."""
    sub = np.concatenate([[0.0], forms.off])
    sup = np.concatenate([forms.off, [0.0]])
    np.savetxt(path, np.column_stack([sub, forms.diag, sup]), fmt="%.17g",
               header="sub diag super")


# ---------------------------------------------------------------------------
# Dirichlet-to-Neumann reduction

def _schur(forms: DiscreteForms):
    """Boundary Schur complement S and the harmonic-extension operator.

    S is rebuilt from its coupling ``g = -S[0, 1]`` and row sums ``p = S 1``.
    Both are sums of nonnegative terms, whereas forming ``A_bb - A_bi A_ii^-1
    A_ib`` directly cancels O(1/mesh) entries down to O(sigma).
    """
    m = forms.size
    bnd = forms.boundary
    nb = len(bnd)
    r = forms.rowsum if forms.rowsum is not None else forms.dense_A().sum(axis=1)
    # interior block is contiguous: [lo, hi)
    lo, hi = (1 if nb == 2 else 0), m - 1
    ext = np.zeros((hi - lo, nb))
    p = r[bnd].astype(float)
    g = -forms.off[0] if (nb == 2 and m == 2) else 0.0
    if hi > lo:
        rhs = np.zeros((hi - lo, nb + 1))
        if nb == 2:
            rhs[0, 0] = forms.off[0]
        rhs[-1, nb - 1] = forms.off[hi - 1]
        rhs[:, nb] = -r[lo:hi]
        ab = np.vstack([np.concatenate([[0.0], forms.off[lo:hi - 1]]), forms.diag[lo:hi]])
        try:
            cb = linalg.cholesky_banded(ab, lower=False)
        except linalg.LinAlgError as exc:
            raise IndefiniteInteriorError("interior block is not positive definite",
                                          forms.lam, forms.mu, forms.mesh) from exc
        sol = linalg.cho_solve_banded((cb, False), rhs)
        ext = -sol[:, :nb]
        y = sol[:, nb]  # interior part of the harmonic extension of the constant, minus 1
        if nb == 2:
            p[0] += forms.off[0] * y[0]
            p[1] += forms.off[hi - 1] * y[-1]
            g = forms.off[0] * sol[0, 1]
        else:
            p[0] += forms.off[hi - 1] * y[-1]
    p = np.maximum(p, 0.0)
    if nb == 1:
        S = p.reshape(1, 1)
    else:
        S = np.array([[g + p[0], -g], [-g, g + p[1]]])
    return S, ext, lo, hi, g, p


def _pencil_2x2(g, p, b):
    """Eigenpairs of S q = sigma diag(b) q with S = [[g + p0, -g], [-g, g + p1]]."""
    sb = np.sqrt(b)
    a11 = (g + p[0]) / b[0]
    a22 = (g + p[1]) / b[1]
    a12 = -g / (sb[0] * sb[1])
    mid = 0.5 * (a11 + a22)
    rad = math.hypot(0.5 * (a11 - a22), a12)
    big = mid + rad
    # small eigenvalue from the determinant g (p0 + p1) + p0 p1: no cancellation
    det = (g * (p[0] + p[1]) + p[0] * p[1]) / (b[0] * b[1])
    small = det / big if big > 0 else 0.0
    vals = np.array([small, big])
    vecs = np.zeros((2, 2))
    for i, s in enumerate(vals):
        v = np.array([a12, s - a11])
        alt = np.array([s - a22, a12])
        if np.linalg.norm(alt) > np.linalg.norm(v):
            v = alt
        if np.linalg.norm(v) == 0:
            v = np.eye(2)[i]
        vecs[:, i] = v / np.linalg.norm(v) / sb
    return vals, vecs


def dtn_eigenpairs(forms: DiscreteForms):
    """Boundary eigenvalues and the harmonic extensions of their eigenvectors.

    Returns ``(sigma, vectors)`` with one column of ``vectors`` (over the
    active degrees of freedom) per eigenvalue, normalised in the boundary
    form.
    """
    S, ext, lo, hi, g, p = _schur(forms)
    b = forms.bdiag[forms.boundary]
    if np.any(b <= 0):
        raise SolverError("singular boundary form", forms.lam, forms.mu, forms.mesh)
    singular = forms.lam == 0 and forms.mu == 0
    nb = len(b)
    if nb == 1:
        vals = np.array([0.0 if singular else S[0, 0] / b[0]])
        q = np.array([[1.0 / math.sqrt(b[0])]])
    elif singular:
        # constants span the kernel; the other eigenvector is B-orthogonal to them
        other = S[0, 0] / b[0] + S[1, 1] / b[1]
        vals = np.array([0.0, other])
        q0 = np.ones(2) / math.sqrt(b.sum())
        q1 = np.array([1.0 / b[0], -1.0 / b[1]])
        q1 = q1 / math.sqrt(np.dot(b, q1 * q1))
        q = np.column_stack([q0, q1])
    else:
        vals, q = _pencil_2x2(g, p, b)
    vecs = np.zeros((forms.size, nb))
    vecs[forms.boundary, :] = q
    if hi > lo:
        vecs[lo:hi, :] = ext @ q
    order = np.argsort(vals, kind="stable")
    return vals[order], vecs[:, order]


def dtn_eigenvalues(forms: DiscreteForms) -> np.ndarray:
    return dtn_eigenpairs(forms)[0]


# ---------------------------------------------------------------------------
# Spectra

@dataclass(frozen=True, eq=False)
class AuxSpectrum:
    """Sorted auxiliary eigenvalues for one fiber eigenvalue ``lam``.

    ``labels`` holds the endpoint-pair index (interval) or the harmonic
    degree ``m`` (ball) of each value.
    """
    lam: float
    values: np.ndarray
    labels: np.ndarray

    def __len__(self):
        return len(self.values)


def mode_sigma(base: BaseDomain, h: WarpingFunction, n: int, lam: float, m: int = 0,
               mesh: Mesh = DEFAULT_MESH) -> float:
    """Single auxiliary eigenvalue: endpoint index ``m`` or ball harmonic degree ``m``."""
    if isinstance(base, Interval):
        return float(dtn_eigenvalues(assemble(AuxProblem(base, h, n, lam, 0.0, mesh)))[m])
    mu = m * (m + base.d - 2) / base.R ** 2
    return float(dtn_eigenvalues(assemble(AuxProblem(base, h, n, lam, mu, mesh)))[0])


def aux_spectrum(base: BaseDomain, h: WarpingFunction, n: int, lam: float, l_max: int = 2,
                 mesh: Mesh = DEFAULT_MESH) -> AuxSpectrum:
    """The ``l_max`` smallest auxiliary eigenvalues (both of them on an interval)."""
    if l_max < 1:
        raise ValueError("l_max must be >= 1")
    if isinstance(base, Interval):
        vals = dtn_eigenvalues(assemble(AuxProblem(base, h, n, lam, 0.0, mesh)))
        return AuxSpectrum(lam, vals, np.arange(2))
    values, labels = [], []
    m = 0
    # sigma is increasing in the harmonic degree, so stop once l_max values are in
    while len(values) < l_max:
        mu, mult = boundary_harmonics(base, m + 1)[m]
        s = dtn_eigenvalues(assemble(AuxProblem(base, h, n, lam, mu, mesh)))[0]
        values.extend([s] * mult)
        labels.extend([m] * mult)
        m += 1
    return AuxSpectrum(lam, np.array(values[:l_max]), np.array(labels[:l_max]))


def rayleigh_quotient(a: Union[Callable, np.ndarray], base: BaseDomain, h: WarpingFunction,
                      n: int, lam: float, mesh: Mesh = DEFAULT_MESH, mu: float = 0.0) -> float:
    """Rayleigh quotient of a P1 trial function given by its nodal values.

    ``a`` is either a callable evaluated at the mesh nodes or an array of
    nodal values (over the active degrees of freedom).
    """
    forms = assemble(AuxProblem(base, h, n, lam, mu, mesh))
    if callable(a):
        x = forms.nodes[-forms.size:]
        vals = np.asarray(a(x), dtype=float) * np.ones_like(x)
    else:
        vals = np.asarray(a, dtype=float)
        if len(vals) != forms.size:
            raise ValueError(f"trial function has {len(vals)} values, mesh has {forms.size} DOFs")
    den = forms.boundary_mass(vals)
    if den <= 0:
        raise ValueError("trial function vanishes on the boundary; Rayleigh quotient undefined")
    return forms.energy(vals) / den
