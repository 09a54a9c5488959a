"""Random smooth three-mode test functions."""

import math

import numpy as np

from cknquartic.cylfun import ModeFunction, h1_norm_sq, manifold_element


def random_profile(p, grid, rng, bumps=3):
    """Sum of sech^2 bumps with random heights, centres and widths."""
    s = grid.nodes
    out = np.zeros(grid.N)
    for _ in range(bumps):
        c = rng.standard_normal()
        m = rng.uniform(-5, 5) / p.alpha
        w = rng.uniform(0.5, 3.0) / p.alpha
        out += c / np.cosh((s - m) / w) ** 2
    return out


def random_mode_function(p, grid, rng, normalize=True):
    phi = ModeFunction(p, grid, {l: random_profile(p, grid, rng) for l in (0, 1, 2)})
    if normalize:
        phi = (1 / math.sqrt(h1_norm_sq(phi))) * phi
    return phi


def near_manifold(p, grid, rng, noise=0.3):
    """lam u(. - t) plus a random perturbation, with (lam, t) well inside [0, 3] x [-3, 3]."""
    lam = rng.uniform(0.5, 2.5)
    t = rng.uniform(-2.0, 2.0)
    base = manifold_element(p, grid, lam, t)
    pert = random_mode_function(p, grid, rng, normalize=False)
    scale = noise * math.sqrt(h1_norm_sq(base) / h1_norm_sq(pert))
    return base + scale * pert
