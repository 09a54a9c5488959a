"""The cylinder optimizer u = beta cosh(alpha s)^{-2/(q-2)} and quantities built from it."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .params import FsParams
from .specfun import cosh_moment

__all__ = [
    "RadialGrid",
    "RadialFunction",
    "ElResiduals",
    "log_cosh",
    "default_grid",
    "u_eval",
    "du_eval",
    "u_profile",
    "el_residuals",
    "u_power_integral",
    "du_square_integral",
    "cylinder_q_norm",
    "c_ab",
    "cylinder_h1_norm_sq",
]

DEFAULT_N = 8001


@dataclass(frozen=True, eq=False)
class RadialGrid:
    """Uniform symmetric grid on [-S, S] with trapezoidal weights."""

    S: float
    N: int
    nodes: np.ndarray
    weights: np.ndarray

    @classmethod
    def uniform(cls, S: float, N: int) -> "RadialGrid":
        if N < 3 or not S > 0:
            raise ValueError(f"degenerate grid (S={S}, N={N})")
        h = 2 * S / (N - 1)
        # offsets from the centre are exact, so the node set is exactly symmetric
        nodes = (np.arange(N) - (N - 1) / 2) * h
        weights = np.full(N, h)
        weights[[0, -1]] = h / 2
        nodes.flags.writeable = False
        weights.flags.writeable = False
        return cls(float(S), int(N), nodes, weights)

    @property
    def h(self) -> float:
        return 2 * self.S / (self.N - 1)

    def refined(self) -> "RadialGrid":
        """Same interval, half the spacing."""
        return RadialGrid.uniform(self.S, 2 * self.N - 1)

    def integrate(self, values) -> float:
        return float(np.dot(self.weights, values))


@dataclass(frozen=True, eq=False)
class RadialFunction:
    grid: RadialGrid
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (self.grid.N,):
            raise ValueError("values do not match the grid")
        if not np.all(np.isfinite(vals)):
            raise ValueError("non-finite profile values")
        object.__setattr__(self, "values", vals)

    def l2_norm(self) -> float:
        return math.sqrt(self.grid.integrate(self.values**2))


@dataclass(frozen=True)
class ElResiduals:
    """Sup-norm finite-difference residuals of the three profile equations.

    ``*_const`` is the residual divided by h^2.
    """

    h: float
    el: float
    el_derivative: float
    el_power: float

    @property
    def el_const(self) -> float:
        return self.el / self.h**2

    @property
    def el_derivative_const(self) -> float:
        return self.el_derivative / self.h**2

    @property
    def el_power_const(self) -> float:
        return self.el_power / self.h**2


def log_cosh(x):
    """log cosh(x) without overflow."""
    ax = np.abs(np.asarray(x, dtype=float))
    return ax + np.log1p(np.exp(-2 * ax)) - math.log(2.0)


def default_grid(p: FsParams, N: int = DEFAULT_N) -> RadialGrid:
    S = max(40 / p.alpha, 40 * (p.q - 2) / (2 * p.alpha))
    return RadialGrid.uniform(S, N)


def u_eval(p: FsParams, s):
    out = p.beta * np.exp(-(2 / (p.q - 2)) * log_cosh(p.alpha * np.asarray(s, dtype=float)))
    return float(out) if np.ndim(out) == 0 else out


def du_eval(p: FsParams, s):
    """Exact derivative u'(s) = -2 alpha/(q-2) tanh(alpha s) u(s)."""
    s = np.asarray(s, dtype=float)
    out = -2 * p.alpha / (p.q - 2) * np.tanh(p.alpha * s) * u_eval(p, s)
    return float(out) if np.ndim(out) == 0 else out


def u_profile(p: FsParams, grid: RadialGrid) -> RadialFunction:
    return RadialFunction(grid, u_eval(p, grid.nodes))


def _second_difference(v: np.ndarray, h: float) -> np.ndarray:
    return (v[:-2] - 2 * v[1:-1] + v[2:]) / (h * h)


def el_residuals(p: FsParams, grid: RadialGrid) -> ElResiduals:
    """Residuals of the profile equation, its s-derivative and the u^{q/2} equation."""
    h = grid.h
    if h * h * p.alpha**2 * p.beta**p.q >= 1:
        raise ValueError("grid too coarse for a meaningful residual")
    s = grid.nodes
    q, lam = p.q, p.Lambda
    u = u_eval(p, s)
    pot = (q - 1) * u ** (q - 2)
    inner = slice(1, -1)

    res_el = -_second_difference(u, h) + lam * u[inner] - u[inner] ** (q - 1)
    du = du_eval(p, s)
    res_du = -_second_difference(du, h) + (lam - pot[inner]) * du[inner]
    w = u ** (q / 2)
    res_w = -_second_difference(w, h) + (q * q * lam / 4 - pot[inner]) * w[inner]
    return ElResiduals(
        h=h,
        el=float(np.max(np.abs(res_el))),
        el_derivative=float(np.max(np.abs(res_du))),
        el_power=float(np.max(np.abs(res_w))),
    )


def u_power_integral(p: FsParams, power: float) -> float:
    """int_R u^power ds in closed form."""
    if not power > 0:
        raise ValueError("power must be positive")
    return p.beta**power / p.alpha * cosh_moment(0, 2 * power / (p.q - 2))


def du_square_integral(p: FsParams) -> float:
    """int_R (u')^2 ds in closed form."""
    return p.beta**2 * 4 * p.alpha / (p.q - 2) ** 2 * cosh_moment(2, 4 / (p.q - 2) + 2)


def cylinder_q_norm(p: FsParams) -> float:
    """||u||_{L^q(C)}^q."""
    return p.sphere_area * u_power_integral(p, p.q)


def c_ab(p: FsParams) -> float:
    return cylinder_q_norm(p) ** ((p.q - 2) / p.q)


def cylinder_h1_norm_sq(p: FsParams) -> float:
    """||u||^2 on the cylinder, Lambda ||u||_2^2 + ||u'||_2^2 times |S^{d-1}|."""
    return p.sphere_area * (p.Lambda * u_power_integral(p, 2) + du_square_integral(p))
