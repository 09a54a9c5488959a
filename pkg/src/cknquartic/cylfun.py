"""Zonal three-mode functions on the cylinder R x S^{d-1} and the deficit functional.

A :class:`ModeFunction` stores radial profiles a_0, a_1, a_2 and represents

    phi(s, omega) = a_0(s) Y_0 + a_1(s) Y_1(omega_d) + a_2(s) Y_2(omega_d)

with L^2(S^{d-1})-normalized zonal harmonics

    Y_0 = |S|^{-1/2},  Y_1 = sqrt(d/|S|) t,  Y_2 = sqrt(d^2(d+2)/(2(d-1)|S|)) (t^2 - 1/d),

t = omega_d. The H^1 norm is mode-diagonal. The L^q norm uses Gauss-Jacobi
quadrature in t against (1-t^2)^{(d-3)/2}. Radial derivatives and shifts
are spectral (FFT): all profiles used here are smooth and negligible at
the grid ends.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import optimize, signal, special

from .energies import degree0_solution, e2_discrete, g0_eval, quartic_prefactor
from .params import FsParams
from .profile import RadialGrid, default_grid, du_eval, u_eval, u_power_integral
from .series import build_series, g2_profile
from .specfun import sphere_area

log = logging.getLogger(__name__)

__all__ = [
    "ModeFunction",
    "ProjectionResult",
    "ModeExtraction",
    "QuarticResult",
    "angular_rule",
    "harmonic_values",
    "radial_derivative",
    "radial_shift",
    "h1_inner",
    "h1_norm_sq",
    "h1_norm_sq_direct",
    "lq_norm",
    "lq_norm_q",
    "deficit",
    "manifold_element",
    "zero_mode",
    "project_to_manifold",
    "brute_force_distance",
    "extract_nontrivial_mode",
    "hessian_form",
    "build_extremal_sequence",
    "quartic_ratio",
    "extrapolate_quartic",
    "secondary_nondegeneracy",
]

ANGULAR_NODES = 64
MODES = (0, 1, 2)


@lru_cache(maxsize=32)
def angular_rule(d: int, n: int = ANGULAR_NODES) -> tuple[np.ndarray, np.ndarray]:
    """Nodes t and weights w with sum w f(t) = int_{S^{d-1}} f(omega_d)."""
    expo = (d - 3) / 2
    t, w = special.roots_jacobi(n, expo, expo)
    w = w * sphere_area(d - 1)
    t.flags.writeable = False
    w.flags.writeable = False
    return t, w


def harmonic_constants(d: float) -> tuple[float, float, float]:
    area = sphere_area(d)
    return (
        1 / math.sqrt(area),
        math.sqrt(d / area),
        math.sqrt(d * d * (d + 2) / (2 * (d - 1) * area)),
    )


def harmonic_values(d: float, t) -> np.ndarray:
    """Rows Y_0(t), Y_1(t), Y_2(t)."""
    t = np.asarray(t, dtype=float)
    c0, c1, c2 = harmonic_constants(d)
    return np.stack([np.full_like(t, c0), c1 * t, c2 * (t * t - 1 / d)])


def harmonic_slopes(d: float, t) -> np.ndarray:
    """Rows dY_l/dt."""
    t = np.asarray(t, dtype=float)
    _, c1, c2 = harmonic_constants(d)
    return np.stack([np.zeros_like(t), np.full_like(t, c1), 2 * c2 * t])


def _wavenumbers(grid: RadialGrid) -> np.ndarray:
    return 2 * np.pi * np.fft.rfftfreq(grid.N, d=grid.h)


def radial_derivative(grid: RadialGrid, values: np.ndarray) -> np.ndarray:
    k = _wavenumbers(grid)
    return np.fft.irfft(1j * k * np.fft.rfft(values), n=grid.N)


def radial_shift(grid: RadialGrid, values: np.ndarray, t: float) -> np.ndarray:
    """Samples of a(s + t) by spectral interpolation."""
    k = _wavenumbers(grid)
    return np.fft.irfft(np.exp(1j * k * t) * np.fft.rfft(values), n=grid.N)


@dataclass(frozen=True, eq=False)
class ModeFunction:
    p: FsParams
    grid: RadialGrid
    profiles: dict = field(default_factory=dict)

    def __post_init__(self):
        if int(self.p.d) != self.p.d:
            raise ValueError("cylinder functions need integer d")
        clean = {}
        for l in MODES:
            v = self.profiles.get(l)
            v = np.zeros(self.grid.N) if v is None else np.asarray(v, dtype=float)
            if v.shape != (self.grid.N,):
                raise ValueError(f"profile {l} does not match the grid")
            clean[l] = v
        unknown = set(self.profiles) - set(MODES)
        if unknown:
            raise ValueError(f"unsupported modes {sorted(unknown)}")
        object.__setattr__(self, "profiles", clean)

    @property
    def d(self) -> int:
        return int(self.p.d)

    def __add__(self, other: "ModeFunction") -> "ModeFunction":
        return ModeFunction(self.p, self.grid, {l: self.profiles[l] + other.profiles[l] for l in MODES})

    def __sub__(self, other: "ModeFunction") -> "ModeFunction":
        return self + (-1.0) * other

    def __mul__(self, c: float) -> "ModeFunction":
        return ModeFunction(self.p, self.grid, {l: c * self.profiles[l] for l in MODES})

    __rmul__ = __mul__

    def evaluate(self, t) -> np.ndarray:
        """phi(s_i, t_j) as an (N, len(t)) array."""
        Y = harmonic_values(self.d, t)
        return sum(np.outer(self.profiles[l], Y[l]) for l in MODES)

    def shifted(self, t: float) -> "ModeFunction":
        """phi(. + t)."""
        return ModeFunction(
            self.p, self.grid, {l: radial_shift(self.grid, self.profiles[l], t) for l in MODES}
        )


def _mode_weight(p: FsParams, l: int) -> float:
    return l * (l + p.d - 2) + p.Lambda


def h1_inner(phi: ModeFunction, psi: ModeFunction) -> float:
    g = phi.grid
    total = 0.0
    for l in MODES:
        a, b = phi.profiles[l], psi.profiles[l]
        if not (a.any() and b.any()):
            continue
        da, db = radial_derivative(g, a), radial_derivative(g, b)
        total += g.integrate(da * db + _mode_weight(phi.p, l) * a * b)
    return total


def h1_norm_sq(phi: ModeFunction) -> float:
    return h1_inner(phi, phi)


def h1_norm_sq_direct(phi: ModeFunction) -> float:
    """Full-gradient quadrature |d_s phi|^2 + (1-t^2)|d_t phi|^2 + Lambda phi^2 on the (s, t) grid."""
    t, w = angular_rule(phi.d)
    Y, dY = harmonic_values(phi.d, t), harmonic_slopes(phi.d, t)
    g = phi.grid
    val = sum(np.outer(phi.profiles[l], Y[l]) for l in MODES)
    ds = sum(np.outer(radial_derivative(g, phi.profiles[l]), Y[l]) for l in MODES)
    dt = sum(np.outer(phi.profiles[l], dY[l]) for l in MODES)
    dens = ds**2 + (1 - t * t) * dt**2 + phi.p.Lambda * val**2
    return float(g.weights @ dens @ w)


def lq_norm_q(phi: ModeFunction, q: float | None = None) -> float:
    """int_C |phi|^q."""
    q = phi.p.q if q is None else q
    t, w = angular_rule(phi.d)
    vals = np.abs(phi.evaluate(t)) ** q
    return float(phi.grid.weights @ vals @ w)


def lq_norm(phi: ModeFunction) -> float:
    return lq_norm_q(phi) ** (1 / phi.p.q)


def deficit(phi: ModeFunction) -> float:
    """||phi||^2 - C_ab ||phi||_q^2."""
    return h1_norm_sq(phi) - phi.p.C_ab * lq_norm_q(phi) ** (2 / phi.p.q)


def manifold_element(p: FsParams, grid: RadialGrid, lam: float = 1.0, t: float = 0.0) -> ModeFunction:
    """lam u(. - t) as a mode-0 function."""
    a0 = lam * math.sqrt(p.sphere_area) * u_eval(p, grid.nodes - t)
    return ModeFunction(p, grid, {0: a0})


def zero_mode(p: FsParams, grid: RadialGrid) -> ModeFunction:
    """u^{q/2} omega_d (the unnormalized non-trivial zero mode)."""
    a1 = math.sqrt(p.sphere_area / p.d) * u_eval(p, grid.nodes) ** (p.q / 2)
    return ModeFunction(p, grid, {1: a1})


# ---------------------------------------------------------------- projections

@dataclass(frozen=True, eq=False)
class ProjectionResult:
    lam: float
    shift: float
    remainder: ModeFunction
    distance: float


def _u_norm_sq(p: FsParams) -> float:
    # ||u||^2 = |S| int u^q by the profile equation
    return p.sphere_area * u_power_integral(p, p.q)


def _pairing(phi: ModeFunction, t: float) -> float:
    """<u(. - t), phi> in H^1, via the profile equation: |S|^{1/2} int u(s-t)^{q-1} a_0."""
    p = phi.p
    w = u_eval(p, phi.grid.nodes - t) ** (p.q - 1)
    return math.sqrt(p.sphere_area) * phi.grid.integrate(w * phi.profiles[0])


def _pairing_slope(phi: ModeFunction, t: float) -> float:
    """d/dt of :func:`_pairing`."""
    p = phi.p
    s = phi.grid.nodes - t
    w = (p.q - 1) * u_eval(p, s) ** (p.q - 2) * du_eval(p, s)
    return -math.sqrt(p.sphere_area) * phi.grid.integrate(w * phi.profiles[0])


def _refine_shift(phi: ModeFunction, lo: float, hi: float) -> float:
    """Stationary point of the pairing in [lo, hi]: root of the slope when bracketed."""
    f_lo, f_hi = _pairing_slope(phi, lo), _pairing_slope(phi, hi)
    if f_lo * f_hi < 0:
        return optimize.brentq(lambda t: _pairing_slope(phi, t), lo, hi, xtol=1e-14, rtol=1e-15)
    res = optimize.minimize_scalar(
        lambda t: -abs(_pairing(phi, t)), bounds=(lo, hi), method="bounded",
        options={"xatol": 1e-11},
    )
    return float(res.x)


def _coarse_pairing(phi: ModeFunction) -> tuple[np.ndarray, np.ndarray]:
    """Pairing at every shift t = j h, |t| <= S/2, by FFT correlation."""
    p, g = phi.p, phi.grid
    w = u_eval(p, g.nodes) ** (p.q - 1)
    corr = signal.correlate(phi.profiles[0], w, mode="same", method="fft") * g.h
    shifts = g.nodes.copy()
    keep = np.abs(shifts) <= g.S / 2
    return shifts[keep], math.sqrt(p.sphere_area) * corr[keep]


def project_to_manifold(phi: ModeFunction, starts: int = 3) -> ProjectionResult:
    """Closest point lam u(. - t) in H^1.

    Maximizes |<u(. - t), phi>| over t: coarse FFT scan, then a root solve
    of the t-derivative around each of the ``starts`` best local maxima.
    """
    p, g = phi.p, phi.grid
    shifts, coarse = _coarse_pairing(phi)
    mag = np.abs(coarse)
    if mag.max() <= 1e-300:
        return ProjectionResult(0.0, 0.0, phi, math.sqrt(max(h1_norm_sq(phi), 0.0)))
    peaks, _ = signal.find_peaks(np.concatenate([[-1.0], mag, [-1.0]]))
    peaks = peaks - 1
    order = peaks[np.argsort(-mag[peaks], kind="stable")][:starts]

    best_t, best_val = None, -1.0
    for i in sorted(order):
        lo, hi = shifts[max(i - 1, 0)], shifts[min(i + 1, len(shifts) - 1)]
        t_star = _refine_shift(phi, lo, hi)
        val = abs(_pairing(phi, t_star))
        if val > best_val * (1 + 1e-12):
            best_t, best_val = t_star, val
    c = _pairing(phi, best_t)
    lam = c / _u_norm_sq(p)
    moved = phi.shifted(best_t)
    resid = moved - manifold_element(p, g, lam)
    dist = math.sqrt(max(h1_norm_sq(resid), 0.0))
    remainder = (1.0 / lam) * resid if lam != 0 else resid
    return ProjectionResult(lam, best_t, remainder, dist)


def brute_force_distance(
    phi: ModeFunction, lam_range=(0.0, 3.0), t_range=(-3.0, 3.0), n: int = 201
) -> tuple[float, float, float]:
    """min over an n x n (lam, t) grid of ||phi - lam u(. - t)||; returns (distance, lam, t)."""
    p = phi.p
    lams = np.linspace(*lam_range, n)
    ts = np.linspace(*t_range, n)
    pair = np.array([h1_inner(phi, manifold_element(p, phi.grid, 1.0, t)) for t in ts])
    nphi = h1_norm_sq(phi)
    nu = _u_norm_sq(p)
    d2 = nphi - 2 * np.outer(lams, pair) + np.outer(lams**2, np.full(n, nu))
    i, j = np.unravel_index(np.argmin(d2), d2.shape)
    return math.sqrt(max(d2[i, j], 0.0)), float(lams[i]), float(ts[j])


@dataclass(frozen=True, eq=False)
class ModeExtraction:
    """r = mu (u^{q/2} omega_d + R), possibly after the reflection omega_d -> -omega_d.

    ``mu`` is measured against the unnormalized zero mode u^{q/2} omega_d;
    ``normalization`` = ||u^{q/2} omega_d|| / ||u^{q/2} Y_1|| converts it to
    the coefficient of the normalized mode.
    """

    mu: float
    R: ModeFunction
    reflected: bool
    normalization: float


def extract_nontrivial_mode(r: ModeFunction) -> ModeExtraction:
    p, g = r.p, r.grid
    z = zero_mode(p, g)
    zz = h1_norm_sq(z)
    coeff = h1_inner(r, z) / zz
    reflected = coeff < 0
    if reflected:
        prof = dict(r.profiles)
        prof[1] = -prof[1]
        r = ModeFunction(p, g, prof)
    mu = abs(coeff)
    if mu == 0:
        R = ModeFunction(p, g)
    else:
        R = (1.0 / mu) * (r - mu * z)
    return ModeExtraction(mu, R, reflected, math.sqrt(p.sphere_area / p.d))


def hessian_form(phi: ModeFunction) -> float:
    """Second variation of the deficit at u in direction phi."""
    p, g = phi.p, phi.grid
    u = u_eval(p, g.nodes)
    quad = sum(g.integrate(u ** (p.q - 2) * phi.profiles[l] ** 2) for l in MODES)
    lin = math.sqrt(p.sphere_area) * g.integrate(u ** (p.q - 1) * phi.profiles[0])
    lq_q = p.sphere_area * u_power_integral(p, p.q)
    return 2 * (h1_norm_sq(phi) - (p.q - 1) * quad + (p.q - 2) / lq_q * lin**2)


# ---------------------------------------------------------------- quartic experiment

@lru_cache(maxsize=16)
def _correction_profiles(p: FsParams, grid: RadialGrid, source: str) -> tuple[np.ndarray, np.ndarray]:
    g0 = g0_eval(p, grid.nodes, degree0_solution(p))
    if source == "series":
        g2 = g2_profile(build_series(p), grid)
    elif source == "discrete":
        g2 = e2_discrete(p, grid).solution
    else:
        raise ValueError("source must be 'series' or 'discrete'")
    g0.flags.writeable = False
    g2.flags.writeable = False
    return g0, g2


def build_extremal_sequence(
    p: FsParams,
    mu: float,
    grid: RadialGrid | None = None,
    g2_source: str = "series",
    g2_scale: float = 1.0,
) -> ModeFunction:
    """||u||_q^{-1} (u + mu (u^{q/2} omega_d + mu (g0 Y_0 + g2 Y_2)))."""
    if not 0 < mu <= 0.2:
        raise ValueError("mu must lie in (0, 0.2]")
    grid = grid or default_grid(p)
    g0, g2 = _correction_profiles(p, grid, g2_source)
    u = u_eval(p, grid.nodes)
    scale = (p.sphere_area * u_power_integral(p, p.q)) ** (-1 / p.q)
    prof = {
        0: scale * (math.sqrt(p.sphere_area) * u + mu**2 * g0),
        1: scale * mu * math.sqrt(p.sphere_area / p.d) * u ** (p.q / 2),
        2: scale * mu**2 * g2_scale * g2,
    }
    return ModeFunction(p, grid, prof)


@dataclass(frozen=True)
class QuarticResult:
    mu: float
    ratio: float
    deficit: float
    distance: float
    norm_sq: float
    reliable: bool


def quartic_ratio(p: FsParams, mu: float, grid: RadialGrid | None = None, **kw) -> QuarticResult:
    """||u_mu||^2 F(u_mu) / dist(u_mu, M)^4 for the explicit sequence."""
    phi = build_extremal_sequence(p, mu, grid, **kw)
    F = deficit(phi)
    proj = project_to_manifold(phi)
    nrm = h1_norm_sq(phi)
    # deficit resolution is ~1e-13 ||phi||^2; keep three orders of margin
    reliable = proj.distance**4 > 1e3 * 1e-13 * nrm and F > 1e3 * 1e-13 * nrm
    if not reliable:
        log.warning("quartic ratio at mu=%g is below the quadrature noise floor", mu)
    return QuarticResult(mu, nrm * F / proj.distance**4, F, proj.distance, nrm, reliable)


def extrapolate_quartic(q: float, mus, ratios) -> float:
    """Fit ratio = J + c1 mu^{min(q-2, 1)} + c2 mu^2 through three points and return J."""
    mus = np.asarray(mus, dtype=float)
    e = min(q - 2, 1.0)
    if abs(e - 2) < 1e-12:
        raise ValueError("degenerate fit exponent")
    A = np.column_stack([np.ones_like(mus), mus**e, mus**2])
    coef = np.linalg.solve(A, np.asarray(ratios, dtype=float))
    return float(coef[0])


@dataclass(frozen=True)
class SecondaryResult:
    fourth_derivative: float
    coefficient: float
    target: float
    rel_error: float
    step: float


def secondary_nondegeneracy(p: FsParams, step: float = 0.02, grid: RadialGrid | None = None) -> SecondaryResult:
    """Fourth eps-derivative of F(u + eps (g + eps phi*)) by a 5-point stencil.

    g = u^{q/2} omega_d and phi* = g0 Y_0 + g2 Y_2. The fourth-order
    Taylor coefficient (derivative / 24) is compared with the quartic
    prefactor times J.
    """
    from .energies import j_constant

    grid = grid or default_grid(p)
    g0, g2 = _correction_profiles(p, grid, "series")
    u = manifold_element(p, grid)
    g = zero_mode(p, grid)
    star = ModeFunction(p, grid, {0: g0, 2: g2})

    def F(eps: float) -> float:
        return deficit(u + eps * (g + eps * star))

    h = step
    vals = [F(k * h) for k in (-2, -1, 0, 1, 2)]
    d4 = (vals[0] - 4 * vals[1] + 6 * vals[2] - 4 * vals[3] + vals[4]) / h**4
    target = quartic_prefactor(p) * j_constant(p)
    coeff = d4 / 24
    return SecondaryResult(d4, coeff, target, abs(coeff / target - 1), h)
