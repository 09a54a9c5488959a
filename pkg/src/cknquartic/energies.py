"""Quartic-order energies, the sharp constant J(q, d) and the certificates for J > 0.

All energies carry the common factor

    c_E = beta^{3q-4}/alpha * |S^{d-1}|/d^2 * Gamma(g) sqrt(pi) / Gamma(g + 1/2),   g = (3q-4)/(q-2),

so that E0, E2 and the mu^4 coefficient B of the explicit quartic term are
c_E/4 times rational functions of (q, d) (and the P-series for E2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .params import FsParams, critical_exponent
from .profile import RadialGrid, default_grid, u_eval, u_power_integral
from .series import p_eval
from .specfun import digamma, ln_gamma, sphere_moment, trigamma
from .spectrum import EigenSolveError, extrapolated_eigenvalues, hessian_mode_operator

__all__ = [
    "EnergyReport",
    "Degree0Solution",
    "SeriesSum",
    "E2Discrete",
    "ConvexityReport",
    "Case2Report",
    "GapReport",
    "energy_prefactor",
    "quartic_prefactor",
    "normalization_prefactor",
    "degree0_solution",
    "g0_eval",
    "f0_eval",
    "degree0_residual",
    "e0_closed_form",
    "e0_quadrature",
    "p_series_sum",
    "e2_series",
    "e2_discrete",
    "b_term",
    "b_term_oracle",
    "j_constant",
    "j_tilde",
    "j_from_energies",
    "energy_report",
    "convexity_factors",
    "convexity_certificate",
    "case2_bound",
    "convexity_gap_check",
]

_INT_CUTOFF = 60.0


def energy_prefactor(p: FsParams) -> float:
    g = (3 * p.q - 4) / (p.q - 2)
    log_ratio = ln_gamma(g) - ln_gamma(g + 0.5)
    return (
        p.beta ** (3 * p.q - 4) / p.alpha * p.sphere_area / p.d**2
        * math.sqrt(math.pi) * math.exp(log_ratio)
    )


def quartic_prefactor(p: FsParams) -> float:
    """Factor multiplying J(q, d) in the mu^4 expansion of the deficit."""
    q = p.q
    return energy_prefactor(p) * q * (5 * q - 6) * (q - 1) / (2 * (3 * q - 2))


def normalization_prefactor(p: FsParams) -> float:
    """Factor in mu^{-4} lambda^{-2} = factor * ||u_n||^2 / dist^4 (to leading order)."""
    q = p.q
    g = (2 * q - 2) / (q - 2)
    log_ratio = ln_gamma(g) - ln_gamma(g + 0.5)
    return (
        p.beta ** (3 * q - 4) / p.alpha * p.sphere_area / p.d**2
        * math.sqrt(math.pi) * math.exp(log_ratio) * 2 * q * (q - 1) ** 2 / (3 * q - 2)
    )


# ---------------------------------------------------------------- degree 0

@dataclass(frozen=True)
class Degree0Solution:
    """g0 = K u^{q-1} + L u, with L making g0 orthogonal to u^{q-1}."""

    K: float
    L: float
    c3: float


def degree0_solution(p: FsParams) -> Degree0Solution:
    q = p.q
    K = p.M * q / (2 * (q - 2) * (q - 1))
    L = -2 * q / (3 * q - 2) * p.beta ** (q - 2) * K
    # h0 g0 - f0 is this multiple of u^{q-1}
    c3 = -q * (q - 2) * p.Lambda * K - (q - 2) * L
    return Degree0Solution(K, L, c3)


def g0_eval(p: FsParams, s, sol: Degree0Solution | None = None):
    sol = sol or degree0_solution(p)
    u = u_eval(p, s)
    return sol.K * u ** (p.q - 1) + sol.L * u


def f0_eval(p: FsParams, s):
    return p.M * u_eval(p, s) ** (2 * p.q - 3)


def degree0_residual(p: FsParams, grid: RadialGrid | None = None) -> float:
    """Sup of (-g0'' + (Lambda - (q-1)u^{q-2}) g0 - f0 - c3 u^{q-1}) relative to sup f0.

    The second derivative is a central difference on the grid, so the result
    is O(h^2).
    """
    grid = grid or default_grid(p)
    sol = degree0_solution(p)
    s, h = grid.nodes, grid.h
    u = u_eval(p, s)
    g = g0_eval(p, s, sol)
    lap = (g[:-2] - 2 * g[1:-1] + g[2:]) / h**2
    inner = slice(1, -1)
    res = -lap + (p.Lambda - (p.q - 1) * u[inner] ** (p.q - 2)) * g[inner] - f0_eval(p, s[inner]) \
        - sol.c3 * u[inner] ** (p.q - 1)
    return float(np.max(np.abs(res)) / np.max(np.abs(f0_eval(p, s))))


def e0_closed_form(p: FsParams) -> float:
    q = p.q
    return -energy_prefactor(p) / 4 * q * (q - 2) ** 3 / (4 * (3 * q - 2))


def _half_line(fn, scale: float) -> float:
    val, _ = integrate.quad(fn, 0.0, _INT_CUTOFF / scale, epsabs=0.0, epsrel=1e-13, limit=400)
    return 2.0 * val


def e0_quadrature(p: FsParams) -> float:
    """-int f0 g0 ds by adaptive quadrature."""
    sol = degree0_solution(p)
    return -_half_line(lambda s: f0_eval(p, s) * g0_eval(p, s, sol), p.alpha)


# ---------------------------------------------------------------- degree 2

@dataclass(frozen=True)
class SeriesSum:
    """sum_{k>=0} (P(k - xi) - P(k)), split into the summed part and the tail estimate."""

    value: float
    partial: float
    tail: float
    terms: int


def p_series_sum(p: FsParams, tol: float = 1e-13, block: int = 4096, k_limit: int = 10**7) -> SeriesSum:
    """Partial sum until the current term is below tol * partial and k >= 50.

    The remainder after index K is estimated by xi P(K + 1/2 - xi/2), the
    midpoint version of sum_{k>K} int_0^xi -P'(k - t) dt.
    """
    if not 0 < tol <= 1e-6:
        raise ValueError("tol must lie in (0, 1e-6]")
    xi = p.xi
    total = 0.0
    start = 0
    while start < k_limit:
        k = np.arange(start, start + block, dtype=float)
        terms = p_eval(p, k - xi) - p_eval(p, k)
        csum = total + np.cumsum(terms)
        done = np.flatnonzero((terms < tol * np.abs(csum)) & (k >= 50))
        if done.size:
            j = done[0]
            K = start + j
            partial = float(csum[j])
            tail = xi * p_eval(p, K + 0.5 - xi / 2)
            return SeriesSum(partial + tail, partial, float(tail), K + 1)
        total = float(csum[-1])
        start += block
    raise RuntimeError(f"P-series did not converge by k = {k_limit}")


def e2_from_sum(p: FsParams, series_sum: float) -> float:
    q, d = p.q, p.d
    return -energy_prefactor(p) / 4 * q * (q - 1) * (q - 2) * (d - 1) / ((d + 2) * p_eval(p, -1.0)) * series_sum


def e2_series(p: FsParams, tol: float = 1e-13) -> tuple[float, SeriesSum]:
    ss = p_series_sum(p, tol)
    return e2_from_sum(p, ss.value), ss


@dataclass(frozen=True, eq=False)
class E2Discrete:
    value: float
    solution: np.ndarray
    residual: float
    grid: RadialGrid


def f2_samples(p: FsParams, s) -> np.ndarray:
    return p.M * math.sqrt(2 * (p.d - 1) / (p.d + 2)) * u_eval(p, s) ** (2 * p.q - 3)


def e2_discrete(p: FsParams, grid: RadialGrid | None = None) -> E2Discrete:
    """-<f2, h2^{-1} f2> with h2 discretized by central differences."""
    grid = grid or default_grid(p)
    T = hessian_mode_operator(p, 2, grid)
    if T.count_below(0.0) > 0:
        raise EigenSolveError("degree-2 operator is not positive definite")
    f = f2_samples(p, grid.nodes)
    g = np.zeros(grid.N)
    g[1:-1] = T.solve_shifted(0.0, f[1:-1])
    res = T.apply(g)[1:-1] - f[1:-1]
    rel = float(np.linalg.norm(res) / np.linalg.norm(f[1:-1]))
    return E2Discrete(-grid.integrate(f * g), g, rel, grid)


# ---------------------------------------------------------------- quartic term

def b_term(p: FsParams) -> float:
    """Coefficient of mu^4 in the explicit quartic term."""
    q, d = p.q, p.d
    bracket = q * (5 * q - 6) / (2 * (3 * q - 2)) - d * (q - 3) / (d + 2)
    return energy_prefactor(p) / 4 * (q - 1) * (q - 2) * bracket


def b_term_oracle(p: FsParams) -> float:
    """Same coefficient assembled from its defining cylinder integrals."""
    q, d = p.q, p.d
    lq_q = p.sphere_area * u_power_integral(p, q)
    pair = u_power_integral(p, 2 * q - 2) * sphere_moment(2, d)
    quartic = u_power_integral(p, 3 * q - 4) * sphere_moment(4, d)
    return (q - 1) * (q - 2) / 4 * ((q - 1) / lq_q * pair**2 - (q - 3) / 3 * quartic)


# ---------------------------------------------------------------- constants

def _j_bracket(p: FsParams, ratio: float) -> float:
    q, d = p.q, p.d
    return (3 * q - 4) / (4 * (q - 1)) - (q - 3) * d / (q * (d + 2)) - (d - 1) / (d + 2) * ratio


def j_constant(p: FsParams, series_sum: float | None = None) -> float:
    if series_sum is None:
        series_sum = p_series_sum(p).value
    q = p.q
    return (q - 2) * (3 * q - 2) / (2 * (5 * q - 6)) * _j_bracket(p, series_sum / p_eval(p, -1.0))


def j_tilde(p: FsParams, series_sum: float | None = None) -> float:
    if series_sum is None:
        series_sum = p_series_sum(p).value
    q, d = p.q, p.d
    return (
        (3 * q - 4) * (d + 2) / (4 * (q - 1) * (d - 1))
        - (q - 3) * d / (q * (d - 1))
        - series_sum / p_eval(p, -1.0)
    )


def j_from_energies(p: FsParams, series_sum: float | None = None) -> float:
    if series_sum is None:
        series_sum = p_series_sum(p).value
    total = e0_closed_form(p) + e2_from_sum(p, series_sum) + b_term(p)
    return total / quartic_prefactor(p)


@dataclass(frozen=True)
class EnergyReport:
    E0: float
    E2_series: float
    E2_discrete: float | None
    B_term_unit: float
    J: float
    J_tilde: float
    series_sum: float
    tail_estimate: float


def energy_report(p: FsParams, discrete: bool = False) -> EnergyReport:
    e2, ss = e2_series(p)
    e2d = e2_discrete(p).value if discrete else None
    return EnergyReport(
        E0=e0_closed_form(p), E2_series=e2, E2_discrete=e2d, B_term_unit=b_term(p),
        J=j_constant(p, ss.value), J_tilde=j_tilde(p, ss.value),
        series_sum=ss.value, tail_estimate=ss.tail,
    )


# ---------------------------------------------------------------- certificates

def convexity_factors(p: FsParams) -> list[tuple[float, float]]:
    """Shift pairs (e1, e2) of the factors T(x) = Gamma(x+e1)/Gamma(x+e2) whose product is P."""
    fa, fb = p.frak_a, p.frak_b
    return [(1.5, fb - fa + 1), (2 * fb - 1, fb + fa + 1), (2 * fb, 2 * fb + 0.5)]


@dataclass(frozen=True)
class ConvexityReport:
    valid: bool
    ordering_ok: bool
    min_second_derivative: float
    first_failure: float | None
    samples: int
    x_max: float


def convexity_certificate(p: FsParams, x_max: float = 50.0, samples: int = 2001) -> ConvexityReport:
    """Factor-wise sign test T > 0, T' < 0, T'' > 0 and the resulting P''.

    T' = T (psi(x+e1) - psi(x+e2)),
    T'' = T ((psi(x+e1) - psi(x+e2))^2 + psi1(x+e1) - psi1(x+e2)).
    Beyond x_max the signs persist whenever e1 < e2, since digamma increases
    and trigamma decreases; this is the ordering condition.
    """
    if x_max < 10:
        raise ValueError("x_max must be at least 10")
    x = np.linspace(-1.0, x_max, samples)
    pairs = convexity_factors(p)
    ordering_ok = all(1.5 <= e1 < e2 for e1, e2 in pairs)
    T, T1, T2 = [], [], []
    ok = np.ones_like(x, dtype=bool)
    for e1, e2 in pairs:
        t = np.exp(ln_gamma(x + e1) - ln_gamma(x + e2))
        dpsi = digamma(x + e1) - digamma(x + e2)
        dpsi1 = trigamma(x + e1) - trigamma(x + e2)
        t1 = t * dpsi
        t2 = t * (dpsi**2 + dpsi1)
        ok &= (t > 0) & (t1 < 0) & (t2 > 0)
        T.append(t)
        T1.append(t1)
        T2.append(t2)
    (a, b, c), (a1, b1, c1), (a2, b2, c2) = T, T1, T2
    second = a2 * b * c + a * b2 * c + a * b * c2 + 2 * (a1 * b1 * c + a1 * b * c1 + a * b1 * c1)
    bad = np.flatnonzero(~ok)
    return ConvexityReport(
        valid=bool(ordering_ok and ok.all()),
        ordering_ok=ordering_ok,
        min_second_derivative=float(np.min(second)),
        first_failure=float(x[bad[0]]) if bad.size else None,
        samples=samples,
        x_max=x_max,
    )


def case2_lhs(q: float, d: float) -> float:
    """Lower bound for the reduced constant from ||h2^{-1}|| <= 1/(d+1)."""
    return (
        (3 * q - 4) * (d + 2) / (4 * (q - 1) * (d - 1))
        - (q - 3) * d / (q * (d - 1))
        - 8 * (q - 1) * (3 * q - 4) * (d - 1) / ((q + 2) * (7 * q - 10) * (d + 1))
    )


@dataclass(frozen=True)
class Case2Report:
    lhs: float
    positive: bool
    min_eigenvalue: float | None
    eigenvalue_ok: bool | None
    f2_norm_sq: float
    e2_bound_ok: bool


def case2_bound(p: FsParams, check_spectrum: bool = True) -> Case2Report:
    q, d = p.q, p.d
    lhs = case2_lhs(q, d)
    f2_sq = p.M**2 * 2 * (d - 1) / (d + 2) * u_power_integral(p, 4 * q - 6)
    lam_min = eig_ok = None
    if check_spectrum:
        # the bound is attained, so the O(h^2) grid error must be removed
        build = lambda g: hessian_mode_operator(p, 2, g)
        lam_min = float(extrapolated_eigenvalues(build, default_grid(p), 1)[0])
        eig_ok = lam_min >= d + 1 - 1e-4
    e2, _ = e2_series(p)
    return Case2Report(
        lhs=lhs, positive=lhs > 0, min_eigenvalue=lam_min, eigenvalue_ok=eig_ok,
        f2_norm_sq=f2_sq, e2_bound_ok=-e2 <= f2_sq / (d + 1) * (1 + 1e-12),
    )


@dataclass(frozen=True)
class GapReport:
    applicable: bool
    chord_lhs: float
    chord_rhs: float
    chord_ok: bool
    xi: float
    xi_bound: float
    xi_ok: bool
    numerator: float
    numerator_ok: bool
    roots: tuple[float, ...]


def convexity_range(q: float, d: float) -> bool:
    """Parameter range where P is known to be convex on [-1, oo)."""
    if d > 2:
        return 2 < q < critical_exponent(d)
    return q > 2.8


def convexity_gap_check(p: FsParams) -> GapReport:
    """Chord inequality from convexity and the bound xi < bracket < 1 it combines with."""
    q, d, xi = p.q, p.d, p.xi
    applicable = convexity_range(q, d)
    ss = p_series_sum(p).value
    p_m1 = p_eval(p, -1.0)
    chord_lhs = ss / (-xi)
    chord_rhs = -p_m1
    bracket = (3 * q - 4) * (d + 2) / (4 * (q - 1) * (d - 1)) - (q - 3) * d / (q * (d - 1))
    numer = 5 * (d - 2) * q**2 - 4 * (4 * d - 3) * q + 12 * d
    if d > 2:
        roots = tuple(sorted(np.roots([5 * (d - 2), -4 * (4 * d - 3), 12 * d]).real))
    else:
        roots = (1.2,)
    return GapReport(
        applicable=applicable,
        chord_lhs=chord_lhs, chord_rhs=chord_rhs, chord_ok=chord_lhs > chord_rhs,
        xi=xi, xi_bound=bracket, xi_ok=xi < bracket,
        numerator=numer, numerator_ok=numer < 0, roots=roots,
    )
