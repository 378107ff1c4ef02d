"""Steklov spectrum of a warped product from its auxiliary spectra.

The spectrum of ``base x_h fiber`` is the multiset of auxiliary eigenvalues
``sigma_{lambda_j, l}(h)`` over all fiber eigenvalues ``lambda_j`` and all
auxiliary indices ``l``, each counted with the fiber multiplicity of
``lambda_j``.  Both indices are monotone (``sigma`` is nondecreasing in
``lambda`` and sorted in ``l``), so the smallest values are found by a
best-first walk over the ``(j, l)`` grid.
"""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import (Ball, BaseDomain, FiberSpectrum, Interval, WarpingFunction,
                       boundary_harmonics, fiber_eigenvalues)
from .reports import BoundReport, write_csv
from .sturm import (DEFAULT_MESH, AuxProblem, Mesh, assemble, build_mesh, dtn_eigenvalues,
                    mode_sigma)

J_MAX = 64
L_MAX = 64


class SpectrumError(RuntimeError):
    pass


class UncertifiedError(SpectrumError):
    pass


@dataclass(frozen=True)
class SpectrumEntry:
    sigma: float
    j: int
    l: int
    lambda_j: float
    multiplicity: int


class _AuxTable:
    """Lazily computed auxiliary eigenvalues sigma(j, l)."""

    def __init__(self, base, h, n, lambdas, mesh):
        self.base, self.h, self.n, self.mesh = base, h, n, mesh
        self.lambdas = lambdas
        self.rows: dict[int, list[float]] = {}
        self._next_mode: dict[int, int] = {}
        self.solves = 0

    def n_aux(self):
        return 2 if isinstance(self.base, Interval) else None

    def __call__(self, j: int, l: int) -> float:
        row = self.rows.setdefault(j, [])
        lam = self.lambdas[j]
        if isinstance(self.base, Interval):
            if not row:
                forms = assemble(AuxProblem(self.base, self.h, self.n, lam, 0.0, self.mesh))
                row.extend(dtn_eigenvalues(forms))
                self.solves += 1
            return row[l]
        while len(row) <= l:
            m = self._next_mode.get(j, 0)
            mu, mult = boundary_harmonics(self.base, m + 1)[m]
            s = mode_sigma(self.base, self.h, self.n, lam, m, self.mesh)
            self.solves += 1
            row.extend([s] * mult)
            self._next_mode[j] = m + 1
        return row[l]


@dataclass(frozen=True, eq=False)
class SteklovSpectrum:
    """Sorted labelled Steklov eigenvalues.

    Each entry is one auxiliary eigenvalue ``(j, l)`` with the fiber
    multiplicity of ``lambda_j``; ``values()`` expands multiplicities.
    """
    entries: tuple
    K: int
    certified: bool
    base: BaseDomain = None
    h: WarpingFunction = None
    fiber: FiberSpectrum = None
    mesh: Mesh = DEFAULT_MESH
    solves: int = 0

    def values(self) -> np.ndarray:
        return np.repeat([e.sigma for e in self.entries],
                         [e.multiplicity for e in self.entries])

    def labelled(self):
        """One (k, entry) pair per eigenvalue counted with multiplicity."""
        k = 0
        for e in self.entries:
            for _ in range(e.multiplicity):
                yield k, e
                k += 1

    def rows(self):
        return [[k, e.sigma, e.j, e.l, e.lambda_j, e.multiplicity]
                for k, e in self.labelled()]

    def to_csv(self, path):
        write_csv(path, ["k", "sigma", "j", "l", "lambda_j", "multiplicity"], self.rows())


def steklov_spectrum(base: BaseDomain, h: WarpingFunction, fiber: FiberSpectrum, K: int,
                     mesh: Mesh = DEFAULT_MESH, tol: float = 1e-8, j_max: int = J_MAX,
                     l_max: int = L_MAX) -> SteklovSpectrum:
    """First ``K + 1`` Steklov eigenvalues (with multiplicity) of ``base x_h fiber``.

    The walk stops once the smallest unexplored candidate exceeds sigma_K by
    more than ``tol``.  An integer ``mesh`` is refined to the kinks of a
    piecewise-linear ``h`` (see :func:`build_mesh`).  If the index budgets
    ``j_max``/``l_max`` cut off a region that could still contain values below
    that threshold an :class:`UncertifiedError` is raised.
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    if np.ndim(mesh) == 0:
        mesh = build_mesh(base, h, int(mesh))
    pairs = fiber_eigenvalues(fiber, j_max)
    lambdas = [lam for lam, _ in pairs]
    mults = [m for _, m in pairs]
    more_fiber = not fiber.is_finite and len(pairs) == j_max
    table = _AuxTable(base, h, fiber.dim_n, lambdas, mesh)
    n_aux = table.n_aux()

    heap = [(table(0, 0), 0, 0)]
    seen = {(0, 0)}
    entries = []
    count = 0
    cutoff_floor = math.inf  # smallest value at which the budget truncated the walk
    while heap:
        s, j, l = heap[0]
        if count >= K + 1 and s > entries_sigma_k(entries, K) + tol:
            break
        heapq.heappop(heap)
        entries.append(SpectrumEntry(float(s), j, l, lambdas[j], mults[j]))
        count += mults[j]
        for jj, ll in ((j + 1, l), (j, l + 1)):
            if (jj, ll) in seen:
                continue
            if jj >= len(lambdas):
                if more_fiber:
                    cutoff_floor = min(cutoff_floor, s)
                continue
            if n_aux is not None and ll >= n_aux:
                continue
            if ll >= l_max:
                cutoff_floor = min(cutoff_floor, s)
                continue
            seen.add((jj, ll))
            heapq.heappush(heap, (table(jj, ll), jj, ll))

    if count < K + 1:
        raise UncertifiedError(f"spectrum exhausted after {count} values; cannot reach k={K}")
    sigma_K = entries_sigma_k(entries, K)
    if cutoff_floor <= sigma_K + tol:
        raise UncertifiedError(
            f"index budget (j_max={j_max}, l_max={l_max}) reached below sigma_{K}={sigma_K:.6g}")
    return SteklovSpectrum(tuple(entries), K, True, base, h, fiber, mesh, table.solves)


def entries_sigma_k(entries, k: int) -> float:
    count = 0
    for e in entries:
        count += e.multiplicity
        if count > k:
            return e.sigma
    raise IndexError(k)


def sigma_k(spec: SteklovSpectrum, k: int) -> float:
    """k-th Steklov eigenvalue counted with multiplicity."""
    if not spec.certified:
        raise UncertifiedError("spectrum is not certified")
    if k < 0 or k > spec.K:
        raise IndexError(f"k={k} outside the certified range 0..{spec.K}")
    return entries_sigma_k(spec.entries, k)


def sigma_label(spec: SteklovSpectrum, k: int) -> SpectrumEntry:
    for kk, e in spec.labelled():
        if kk == k:
            return e
    raise IndexError(k)


def brute_force_spectrum(base: BaseDomain, h: WarpingFunction, fiber: FiberSpectrum,
                         J: int, modes: int = 8, mesh: Mesh = DEFAULT_MESH) -> np.ndarray:
    """All auxiliary values for j < J (and ``modes`` harmonics on a ball), globally sorted."""
    vals = []
    for lam, mult in fiber_eigenvalues(fiber, J):
        if isinstance(base, Interval):
            forms = assemble(AuxProblem(base, h, fiber.dim_n, lam, 0.0, mesh))
            for s in dtn_eigenvalues(forms):
                vals.extend([s] * mult)
        else:
            for m, (mu, hm) in enumerate(boundary_harmonics(base, modes)):
                s = mode_sigma(base, h, fiber.dim_n, lam, m, mesh)
                vals.extend([s] * (mult * hm))
    return np.sort(np.array(vals))


def check_kcompk0(spec: SteklovSpectrum, k: int, h: WarpingFunction = None,
                  fiber: FiberSpectrum = None, tol: float = 1e-8) -> BoundReport:
    """sigma_k(M_h) <= sigma_{lambda_k, 0}(h), lambda_k counted with multiplicity."""
    h = spec.h if h is None else h
    fiber = spec.fiber if fiber is None else fiber
    lhs = sigma_k(spec, k)
    lam_k = fiber.lambda_k(k)
    rhs = mode_sigma(spec.base, h, fiber.dim_n, lam_k, 0, spec.mesh)
    return BoundReport("kcompk0", k, lhs, rhs, strict=False, tol=tol,
                       extra={"lambda_k": lam_k})
