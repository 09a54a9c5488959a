"""Discrete 1D Schroedinger operators and their lowest eigenvalues.

Operators are second-order central differences on the interior nodes of a
uniform grid (Dirichlet at +-S), optionally with a positive or negative
rank-one term c <g, .> g. Eigenvalues come from Sturm-sequence bisection.
The rank-one term enters the count through the inertia identity

    neg(A + c w w^T) = neg(A) - [1 + c w^T A^{-1} w < 0]     (c > 0)
    neg(A + c w w^T) = neg(A) + [1 + c w^T A^{-1} w < 0]     (c < 0)

with w^T A^{-1} w accumulated in the same LDL^T sweep that yields neg(A).
Eigenvectors are recovered by inverse iteration with a Sherman-Morrison
solve.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from numba import njit
from scipy.linalg import solve_banded

from .params import FsParams
from .profile import RadialFunction, RadialGrid, default_grid, u_eval, u_power_integral

__all__ = [
    "EigenSolveError",
    "TridiagonalOperator",
    "EigenPair",
    "KernelReport",
    "build_pt_operator",
    "hessian_mode_operator",
    "lowest_eigenvalues",
    "extrapolated_eigenvalues",
    "extrapolated_eigenvectors",
    "harmonic_multiplicity",
    "kernel_dimension_report",
]

KERNEL_RTOL = 1e-5


class EigenSolveError(RuntimeError):
    pass


@njit(cache=True)
def _count_below(diag, off, w, c, x):
    """Number of eigenvalues of tridiag(diag, off) + c w w^T strictly below x."""
    n = diag.shape[0]
    neg = 0
    dprev = 1.0
    yprev = 0.0
    s = 0.0
    tiny = 1e-300
    for i in range(n):
        if i == 0:
            di = diag[0] - x
            yi = w[0]
        else:
            lmul = off[i - 1] / dprev
            di = diag[i] - x - lmul * off[i - 1]
            yi = w[i] - lmul * yprev
        if di == 0.0:
            di = -tiny
        if di < 0.0:
            neg += 1
        s += yi * yi / di
        dprev = di
        yprev = yi
    if c != 0.0:
        if 1.0 + c * s < 0.0:
            if c > 0.0:
                neg -= 1
            else:
                neg += 1
    return neg


@njit(cache=True)
def _bisect(diag, off, w, c, k, lo, hi, tol):
    """k-th smallest eigenvalue (k = 0, 1, ...) by bisection on [lo, hi]."""
    for _ in range(400):
        mid = 0.5 * (lo + hi)
        if hi - lo <= tol * max(1.0, abs(mid)):
            break
        if _count_below(diag, off, w, c, mid) > k:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


@dataclass(frozen=True, eq=False)
class TridiagonalOperator:
    """Symmetric operator on the interior nodes of a uniform grid.

    ``diagonal`` and ``offdiagonal`` act on interior values; ``rank_one`` is
    an optional pair (g, c) standing for c <g, .> g in the grid's L^2
    weights (g sampled on the full grid).
    """

    grid: RadialGrid
    diagonal: np.ndarray
    offdiagonal: np.ndarray
    rank_one: tuple[np.ndarray, float] | None = None

    @property
    def size(self) -> int:
        return self.diagonal.shape[0]

    def _rank_one_interior(self):
        """(w, c) such that the matrix term equals c w w^T on interior values."""
        if self.rank_one is None:
            return np.zeros(self.size), 0.0
        g, coeff = self.rank_one
        w = np.asarray(g, dtype=float)[1:-1] * math.sqrt(self.grid.h)
        return w, float(coeff)

    def apply(self, values: np.ndarray) -> np.ndarray:
        """Action on a full-grid vector; boundary values are ignored and returned as 0."""
        v = np.asarray(values, dtype=float)[1:-1]
        out = self.diagonal * v
        out[:-1] += self.offdiagonal * v[1:]
        out[1:] += self.offdiagonal * v[:-1]
        w, c = self._rank_one_interior()
        if c:
            out += c * w * np.dot(w, v)
        full = np.zeros(self.grid.N)
        full[1:-1] = out
        return full

    def row_norm(self) -> float:
        """Max absolute row sum (infinity norm = 1-norm for symmetric matrices)."""
        rows = np.abs(self.diagonal).copy()
        rows[:-1] += np.abs(self.offdiagonal)
        rows[1:] += np.abs(self.offdiagonal)
        w, c = self._rank_one_interior()
        if c:
            rows += abs(c) * np.abs(w) * np.sum(np.abs(w))
        return float(np.max(rows))

    def count_below(self, x: float) -> int:
        w, c = self._rank_one_interior()
        return int(_count_below(self.diagonal, self.offdiagonal, w, c, float(x)))

    def _bounds(self) -> tuple[float, float]:
        rad = np.zeros(self.size)
        rad[:-1] += np.abs(self.offdiagonal)
        rad[1:] += np.abs(self.offdiagonal)
        lo = float(np.min(self.diagonal - rad))
        hi = float(np.max(self.diagonal + rad))
        w, c = self._rank_one_interior()
        shift = c * float(np.dot(w, w))
        return lo + min(0.0, shift), hi + max(0.0, shift)

    def solve_shifted(self, sigma: float, rhs: np.ndarray) -> np.ndarray:
        """Solve (T - sigma) x = rhs on interior values."""
        n = self.size
        ab = np.zeros((3, n))
        ab[0, 1:] = self.offdiagonal
        ab[1] = self.diagonal - sigma
        ab[2, :-1] = self.offdiagonal
        w, c = self._rank_one_interior()
        if not c:
            return solve_banded((1, 1), ab, rhs, check_finite=False)
        both = solve_banded((1, 1), ab, np.column_stack([rhs, w]), check_finite=False)
        x, z = both[:, 0], both[:, 1]
        return x - (c * np.dot(w, x) / (1.0 + c * np.dot(w, z))) * z


@dataclass(frozen=True, eq=False)
class EigenPair:
    value: float
    vector: RadialFunction
    residual: float


@dataclass(frozen=True)
class KernelReport:
    threshold: float
    counts: dict
    multiplicities: dict
    eigenvalues: dict

    @property
    def total(self) -> int:
        return sum(self.counts[l] * self.multiplicities[l] for l in self.counts)


def _require_uniform(grid: RadialGrid) -> None:
    if not np.allclose(np.diff(grid.nodes), grid.h, rtol=1e-9, atol=0.0):
        raise ValueError("operator assembly needs a uniform grid")


def _schroedinger(grid: RadialGrid, potential: np.ndarray, rank_one=None) -> TridiagonalOperator:
    _require_uniform(grid)
    h2 = grid.h**2
    diag = 2.0 / h2 + np.asarray(potential, dtype=float)[1:-1]
    off = np.full(grid.N - 3, -1.0 / h2)
    return TridiagonalOperator(grid, diag, off, rank_one)


def build_pt_operator(p: FsParams, grid: RadialGrid) -> TridiagonalOperator:
    """-d^2/ds^2 - (q-1) u^{q-2}."""
    u = u_eval(p, grid.nodes)
    return _schroedinger(grid, -(p.q - 1) * u ** (p.q - 2))


def hessian_mode_operator(p: FsParams, l: int, grid: RadialGrid) -> TridiagonalOperator:
    """Radial part of the Hessian on spherical-harmonic degree l.

    For l = 0 the projection term (q-2) ||u||_q^{-q} |u^{q-1}><u^{q-1}| is
    added with one-dimensional norms; on the cylinder both the projector and
    ||u||_q^q pick up the same factor |S^{d-1}|, which cancels.
    """
    if l < 0:
        raise ValueError("l must be non-negative")
    u = u_eval(p, grid.nodes)
    potential = l * (l + p.d - 2) + p.Lambda - (p.q - 1) * u ** (p.q - 2)
    rank_one = None
    if l == 0:
        rank_one = (u ** (p.q - 1), (p.q - 2) / u_power_integral(p, p.q))
    return _schroedinger(grid, potential, rank_one)


def _fix_sign(v: np.ndarray) -> np.ndarray:
    big = np.flatnonzero(np.abs(v) > 1e-3 * np.max(np.abs(v)))
    return -v if big.size and v[big[0]] < 0 else v


def lowest_eigenvalues(
    T: TridiagonalOperator, k: int, tol: float = 1e-10, vectors: bool = True
) -> list[EigenPair]:
    """The k smallest eigenpairs, sorted ascending.

    Vectors are unit in the grid-weighted L^2 norm and checked against
    ||Tv - lambda v|| <= tol (|lambda| + ||T||).
    """
    if not 1 <= k <= 10:
        raise ValueError("k must be between 1 and 10")
    w, c = T._rank_one_interior()
    lo, hi = T._bounds()
    values = [float(_bisect(T.diagonal, T.offdiagonal, w, c, j, lo, hi, 1e-15)) for j in range(k)]
    if not vectors:
        empty = RadialFunction(T.grid, np.zeros(T.grid.N))
        return [EigenPair(v, empty, math.nan) for v in values]

    scale = T.row_norm()
    h = T.grid.h
    rng = np.random.default_rng(12345)
    pairs = []
    for j, lam in enumerate(values):
        # tiny offset keeps the shifted matrix away from exact singularity
        sigma = lam - 1e-13 * max(1.0, abs(lam))
        x = rng.standard_normal(T.size)
        for _ in range(4):
            x = T.solve_shifted(sigma, x)
            x /= math.sqrt(h * np.dot(x, x))
        full = np.zeros(T.grid.N)
        full[1:-1] = _fix_sign(x)
        resid_vec = T.apply(full) - lam * full
        resid = math.sqrt(T.grid.integrate(resid_vec**2))
        if not resid <= tol * (abs(lam) + scale):
            raise EigenSolveError(f"eigenpair {j} did not converge (residual {resid:.3e})")
        pairs.append(EigenPair(lam, RadialFunction(T.grid, full), resid))
    return pairs


def extrapolated_eigenvalues(
    build: Callable[[RadialGrid], TridiagonalOperator], grid: RadialGrid, k: int
) -> np.ndarray:
    """Richardson combination (4 lam_{h/2} - lam_h)/3 of the k lowest eigenvalues.

    The central-difference error is c h^2 + O(h^4), so this removes the
    leading term.
    """
    coarse = lowest_eigenvalues(build(grid), k, vectors=False)
    fine = lowest_eigenvalues(build(grid.refined()), k, vectors=False)
    return np.array([(4 * f.value - c.value) / 3 for c, f in zip(coarse, fine)])


def extrapolated_eigenvectors(
    build: Callable[[RadialGrid], TridiagonalOperator], grid: RadialGrid, k: int
) -> list[RadialFunction]:
    """Richardson-combined eigenvectors on ``grid``, renormalized to unit L^2 norm."""
    coarse = lowest_eigenvalues(build(grid), k)
    fine = lowest_eigenvalues(build(grid.refined()), k)
    out = []
    for c, f in zip(coarse, fine):
        fv = f.vector.values[::2]
        if np.dot(fv, c.vector.values) < 0:
            fv = -fv
        v = (4 * fv - c.vector.values) / 3
        v /= math.sqrt(grid.integrate(v**2))
        out.append(RadialFunction(grid, v))
    return out


def harmonic_multiplicity(d: int, l: int) -> int:
    """Dimension of spherical harmonics of degree l on S^{d-1}."""
    if l == 0:
        return 1
    if d == 2:
        return 2
    return math.comb(l + d - 1, d - 1) - math.comb(l + d - 3, d - 1)


def kernel_dimension_report(
    p: FsParams,
    l_max: int = 4,
    threshold: float | None = None,
    grid: RadialGrid | None = None,
) -> KernelReport:
    """Count near-zero eigenvalues of each mode operator, l = 0..l_max."""
    if not 0 <= l_max <= 6:
        raise ValueError("l_max must be in 0..6")
    if int(p.d) != p.d:
        raise ValueError("kernel counts need integer d")
    grid = grid or default_grid(p)
    thr = KERNEL_RTOL * p.Lambda if threshold is None else threshold
    counts, mults, eigs = {}, {}, {}
    for l in range(l_max + 1):
        k = 4
        while True:
            vals = extrapolated_eigenvalues(lambda g: hessian_mode_operator(p, l, g), grid, k)
            if vals[-1] > thr or k == 10:
                break
            k += 2
        counts[l] = int(np.sum(np.abs(vals) < thr))
        mults[l] = harmonic_multiplicity(int(p.d), l)
        eigs[l] = [float(v) for v in vals]
    return KernelReport(thr, counts, mults, eigs)
