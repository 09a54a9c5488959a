"""Power-series solution of the degree-2 radial equation at mu = 0.

With x = cosh(alpha s)^{-2} the solution of

    (-d^2/ds^2 + 2d + Lambda - (q-1) u^{q-2}) g = f2,   f2 = M sqrt(2(d-1)/(d+2)) u^{2q-3}

that is even and decays reads

    g = tau u^{(q-2) frak_a} sum_k A_k x^k - eta f2 sum_k B_k x^k,

where A_k, B_k follow a two-term recursion with factor G0 and tau is fixed
so that the even extension has zero slope at s = 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .params import FsParams
from .profile import RadialGrid, log_cosh, u_eval
from .specfun import ln_gamma

__all__ = [
    "SeriesSolution",
    "PFunction",
    "g0_factor",
    "g_factor",
    "build_series",
    "g2_eval",
    "g2_profile",
    "f2_eval",
    "boundary_derivative",
    "boundary_derivative_terms",
    "g2_ode_residual",
    "p_eval",
    "tail_power_sum",
]

DEFAULT_KMAX = 100_000
# Direct summation stops once the remaining tail is below this fraction.
_SUM_RTOL = 1e-13


def g0_factor(p: FsParams, k):
    """Ratio A_k / A_{k-1} in factored form."""
    k = np.asarray(k, dtype=float)
    fa, fb = p.frak_a, p.frak_b
    if np.any(k == 0) or np.any(k == -2 * fa):
        raise ValueError("G0 has a pole at k = 0 and k = -2 frak_a")
    out = (k + fa + fb - 2) * (k + fa - fb + 0.5) / (k * (k + 2 * fa))
    return float(out) if out.ndim == 0 else out


def g_factor(p: FsParams, k):
    """Unfactored recursion ratio, as it comes out of matching powers of x."""
    k = np.asarray(k, dtype=float)
    q, fa = p.q, p.frak_a
    num = (k + fa - 1) * (2 * (k + fa) - 1) * (q - 2) ** 2 - (q - 1) * q
    out = num / (2 * k * (k + 2 * fa) * (q - 2) ** 2)
    return float(out) if out.ndim == 0 else out


def _accumulate(ratios: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Running products 1, r_1, r_1 r_2, ... kept as (sign, log|.|)."""
    logs = np.concatenate([[0.0], np.cumsum(np.log(np.abs(ratios)))])
    signs = np.concatenate([[1.0], np.cumprod(np.sign(ratios))])
    return signs, logs


@dataclass(frozen=True, eq=False)
class SeriesSolution:
    p: FsParams
    A: np.ndarray
    B: np.ndarray
    eta: float
    tau: float
    K_max: int
    A_limit: float
    B_limit: float
    sign_pattern: dict = field(default_factory=dict)

    @property
    def A_tail_estimate(self) -> float:
        return float(self.K_max**1.5 * self.A[-1])

    @property
    def B_tail_estimate(self) -> float:
        return float(self.K_max**1.5 * self.B[-1])


@dataclass(frozen=True)
class PFunction:
    p: FsParams


def build_series(p: FsParams, K_max: int = DEFAULT_KMAX) -> SeriesSolution:
    if K_max < 100:
        raise ValueError("K_max must be at least 100")
    fa, fb, xi = p.frak_a, p.frak_b, p.xi
    k = np.arange(1, K_max + 1, dtype=float)
    sa, la = _accumulate(g0_factor(p, k))
    sb, lb = _accumulate(g0_factor(p, k + xi))
    if np.max(np.abs(la)) > 700 or np.max(np.abs(lb)) > 700:
        raise OverflowError("series coefficients leave double range")
    A = sa * np.exp(la)
    B = sb * np.exp(lb)

    eta = 1 / (4 * p.alpha**2 * (fb**2 - fa**2))
    c2 = math.sqrt(2 * (p.d - 1) / (p.d + 2))
    log_gam = (
        ln_gamma(fa + fb - 1) + ln_gamma(fa - fb + 1.5) + ln_gamma(fa + fb + 1)
        + ln_gamma(xi + 1) - ln_gamma(2 * fb - 1) - ln_gamma(2 * fa + 1)
    )
    tau = c2 * p.M * eta * p.beta ** (xi * (p.q - 2)) * 2 / math.sqrt(math.pi) * math.exp(log_gam)

    A_limit = math.exp(ln_gamma(2 * fa + 1) - ln_gamma(fa + fb - 1) - ln_gamma(1.5 - xi))
    B_limit = math.exp(ln_gamma(1 + xi) + ln_gamma(1 + fa + fb) - ln_gamma(2 * fb - 1) - ln_gamma(1.5))
    pattern = {
        "A_negative": [int(j) for j in np.flatnonzero(A < 0)[:20]],
        "B_negative": [int(j) for j in np.flatnonzero(B < 0)[:20]],
    }
    A.flags.writeable = False
    B.flags.writeable = False
    return SeriesSolution(p, A, B, eta, tau, K_max, A_limit, B_limit, pattern)


def tail_power_sum(K: int, x):
    """Approximate sum_{k>K} k^{-3/2} x^k for x in (0, 1].

    Replaces the sum by the integral from K + 1/2, which for zeta = -ln x
    equals 2 a^{-1/2} e^{-zeta a} - 2 sqrt(pi zeta) erfc(sqrt(zeta a)).
    """
    x = np.asarray(x, dtype=float)
    a = K + 0.5
    zeta = -np.log(x)
    out = 2 / np.sqrt(a) * np.exp(-zeta * a) - 2 * np.sqrt(np.pi * zeta) * special.erfc(np.sqrt(zeta * a))
    return out


def _power_series(coeffs: np.ndarray, x: np.ndarray) -> np.ndarray:
    """sum_k c_k x^k for x in [0, 1], with a k^{-3/2} tail past the last coefficient."""
    K = coeffs.shape[0] - 1
    out = np.empty_like(x)
    with np.errstate(divide="ignore"):
        lx = np.log(x)
    # terms needed so that x^K / (1 - x) < rtol
    need = np.full(x.shape, np.inf)
    inside = x < 1
    need[inside] = np.log(_SUM_RTOL * (1 - x[inside])) / lx[inside]
    need = np.where(x == 0, 1, need)
    capped = need > K
    direct = ~capped
    if np.any(direct):
        sizes = np.maximum(64, 2 ** np.ceil(np.log2(np.maximum(need[direct], 1)))).astype(int)
        idx = np.flatnonzero(direct)
        for size in np.unique(sizes):
            sel = idx[sizes == size]
            out[sel] = np.polynomial.polynomial.polyval(x[sel], coeffs[: min(size, K) + 1])
    if np.any(capped):
        sel = np.flatnonzero(capped)
        const = coeffs[-1] * K**1.5
        for i in sel:
            out[i] = np.polynomial.polynomial.polyval(x[i], coeffs) + const * tail_power_sum(K, x[i])
    return out


def f2_eval(p: FsParams, s):
    """Degree-2 source M sqrt(2(d-1)/(d+2)) u^{2q-3}."""
    return p.M * math.sqrt(2 * (p.d - 1) / (p.d + 2)) * u_eval(p, s) ** (2 * p.q - 3)


def _g2_abs(sol: SeriesSolution, s: np.ndarray) -> np.ndarray:
    p = sol.p
    lc = log_cosh(p.alpha * np.abs(s))
    x = np.exp(-2 * lc)
    hom = sol.tau * p.beta ** ((p.q - 2) * p.frak_a) * np.exp(-2 * p.frak_a * lc)
    return hom * _power_series(sol.A, x) - sol.eta * f2_eval(p, s) * _power_series(sol.B, x)


def g2_eval(sol: SeriesSolution, s):
    """g2 at s > 0 (use evenness for negative arguments)."""
    arr = np.atleast_1d(np.asarray(s, dtype=float))
    if np.any(~(arr > 0)):
        raise ValueError("g2_eval needs s > 0")
    out = _g2_abs(sol, arr)
    return float(out[0]) if np.ndim(s) == 0 else out


def g2_profile(sol: SeriesSolution, grid: RadialGrid) -> np.ndarray:
    """Even extension of g2 sampled on every grid node, s = 0 included."""
    s = np.abs(grid.nodes)
    uniq, inv = np.unique(s, return_inverse=True)
    return _g2_abs(sol, uniq)[inv]


def boundary_derivative(sol: SeriesSolution, tau: float | None = None) -> float:
    """lim_{s -> 0+} g2'(s) from the Abelian limit of both series.

    Returns the sum of the homogeneous and the source contribution; with
    the default tau the two cancel.
    """
    p = sol.p
    tau = sol.tau if tau is None else tau
    c2 = math.sqrt(2 * (p.d - 1) / (p.d + 2))
    hom = -2 * p.alpha * tau * p.beta ** ((p.q - 2) * p.frak_a) * math.sqrt(math.pi) * sol.A_limit
    src = 2 * p.alpha * sol.eta * p.M * p.beta ** (2 * p.q - 3) * c2 * math.sqrt(math.pi) * sol.B_limit
    return hom + src


def boundary_derivative_terms(sol: SeriesSolution) -> tuple[float, float]:
    """(homogeneous, source) parts of :func:`boundary_derivative`."""
    src = boundary_derivative(sol, tau=0.0)
    return boundary_derivative(sol) - src, src


def g2_ode_residual(sol: SeriesSolution, h: float = 1e-3, n: int = 400) -> float:
    """Sup-relative finite-difference residual of the degree-2 equation on alpha s in [0.2, 10]."""
    p = sol.p
    s = np.linspace(0.2, 10.0, n) / p.alpha
    g = _g2_abs(sol, s)
    lap = (_g2_abs(sol, s + h) - 2 * g + _g2_abs(sol, s - h)) / h**2
    pot = 2 * p.d + p.Lambda - (p.q - 1) * u_eval(p, s) ** (p.q - 2)
    f2 = f2_eval(p, s)
    res = -lap + pot * g - f2
    return float(np.max(np.abs(res)) / np.max(np.abs(f2)))


def p_eval(pf: PFunction | FsParams, x):
    """P(x) = G(x+3/2)G(x+2b-1)G(x+2b) / (G(x+b-a+1)G(x+b+a+1)G(x+2b+1/2)), G = Gamma."""
    p = pf.p if isinstance(pf, PFunction) else pf
    x = np.asarray(x, dtype=float)
    fa, fb = p.frak_a, p.frak_b
    num = (x + 1.5, x + 2 * fb - 1, x + 2 * fb)
    den = (x + fb - fa + 1, x + fb + fa + 1, x + 2 * fb + 0.5)
    for arg in num + den:
        if np.any(arg <= 0):
            raise ValueError("P evaluated outside the positive Gamma domain")
    logp = sum(special.gammaln(t) for t in num) - sum(special.gammaln(t) for t in den)
    out = np.exp(logp)
    return float(out) if out.ndim == 0 else out
