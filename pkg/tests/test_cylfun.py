import math

import numpy as np
import pytest

from cknquartic.cylfun import (
    ModeFunction,
    angular_rule,
    brute_force_distance,
    build_extremal_sequence,
    deficit,
    extract_nontrivial_mode,
    extrapolate_quartic,
    h1_inner,
    h1_norm_sq,
    h1_norm_sq_direct,
    harmonic_slopes,
    harmonic_values,
    hessian_form,
    lq_norm,
    lq_norm_q,
    manifold_element,
    project_to_manifold,
    quartic_ratio,
    radial_derivative,
    radial_shift,
    zero_mode,
)
from cknquartic.energies import j_constant
from cknquartic.params import fs_params
from cknquartic.profile import (
    cylinder_h1_norm_sq,
    default_grid,
    du_eval,
    u_eval,
    u_power_integral,
)
from cknquartic.specfun import sphere_moment
from helpers import random_mode_function

DIMS = [2, 3, 4, 6]


@pytest.fixture(scope="module")
def grid43(p43):
    return default_grid(p43)


@pytest.fixture(scope="module")
def u43(p43, grid43):
    return manifold_element(p43, grid43)


@pytest.mark.parametrize("d", DIMS)
def test_angular_rule_moments(d):
    t, w = angular_rule(d)
    for n in range(0, 12):
        assert np.dot(w, t**n) == pytest.approx(sphere_moment(n, d), rel=1e-13, abs=1e-13)


@pytest.mark.parametrize("d", DIMS)
def test_harmonics_orthonormal(d):
    t, w = angular_rule(d)
    Y = harmonic_values(d, t)
    assert np.allclose(Y @ np.diag(w) @ Y.T, np.eye(3), atol=1e-13)
    h = 1e-6
    fd = (harmonic_values(d, t + h) - harmonic_values(d, t - h)) / (2 * h)
    assert np.allclose(harmonic_slopes(d, t), fd, atol=1e-8)


def test_spectral_derivative_and_shift(p43, grid43):
    u = u_eval(p43, grid43.nodes)
    assert np.allclose(radial_derivative(grid43, u), du_eval(p43, grid43.nodes), atol=1e-11)
    assert np.allclose(radial_shift(grid43, u, 0.37), u_eval(p43, grid43.nodes + 0.37), atol=1e-11)


def test_mode_function_validation(p43, grid43):
    with pytest.raises(ValueError):
        ModeFunction(fs_params(4.0, 3.5), grid43)
    with pytest.raises(ValueError):
        ModeFunction(p43, grid43, {0: np.zeros(5)})
    with pytest.raises(ValueError):
        ModeFunction(p43, grid43, {3: np.zeros(grid43.N)})
    phi = ModeFunction(p43, grid43, {1: np.ones(grid43.N)})
    assert not phi.profiles[0].any() and not phi.profiles[2].any()


def test_evaluate_reproduces_modes(p43, grid43):
    rng = np.random.default_rng(0)
    phi = random_mode_function(p43, grid43, rng)
    t = np.array([-0.9, 0.0, 0.4])
    Y = harmonic_values(3, t)
    want = sum(np.outer(phi.profiles[l], Y[l]) for l in range(3))
    assert np.allclose(phi.evaluate(t), want)


def test_h1_norm_of_optimizer(p43, u43):
    assert h1_norm_sq(u43) == pytest.approx(cylinder_h1_norm_sq(p43), rel=1e-10)
    assert h1_norm_sq(u43) == pytest.approx(p43.C_ab * lq_norm(u43) ** 2, rel=1e-10)


def test_h1_norm_of_zero_mode(p43, grid43):
    z = zero_mode(p43, grid43)
    # normalized Y_1 version: ||u^{q/2} Y_1||^2 = (q-1) int u^{2q-2}
    y1 = (1 / math.sqrt(p43.sphere_area / p43.d)) * z
    assert h1_norm_sq(y1) == pytest.approx((p43.q - 1) * u_power_integral(p43, 2 * p43.q - 2), rel=1e-10)


@pytest.mark.parametrize("d", [2, 3, 5])
def test_h1_mode_diagonal_matches_full_gradient(d):
    p = fs_params(3.0 if d > 2 else 4.0, d)
    g = default_grid(p)
    rng = np.random.default_rng(d)
    for _ in range(3):
        phi = random_mode_function(p, g, rng)
        assert h1_norm_sq_direct(phi) == pytest.approx(h1_norm_sq(phi), rel=1e-8)


def test_h1_additive_across_modes(p43, grid43):
    rng = np.random.default_rng(1)
    phi = random_mode_function(p43, grid43, rng)
    parts = [ModeFunction(p43, grid43, {l: phi.profiles[l]}) for l in range(3)]
    assert h1_norm_sq(phi) == pytest.approx(sum(h1_norm_sq(x) for x in parts), rel=1e-13)
    assert h1_inner(parts[0], parts[2]) == 0.0


def test_lq_norm(p43, grid43, u43):
    assert lq_norm_q(u43) == pytest.approx(p43.sphere_area * u_power_integral(p43, 4), rel=1e-8)
    assert lq_norm(2.0 * u43) == pytest.approx(2 * lq_norm(u43), rel=1e-13)
    z = zero_mode(p43, grid43)
    y1 = (1 / math.sqrt(p43.sphere_area / p43.d)) * z
    base = lq_norm_q(u43)
    dev = [lq_norm_q(u43 + eps * y1) - base for eps in (1e-3, 5e-4)]
    assert dev[0] / dev[1] == pytest.approx(4.0, rel=1e-2)


def test_deficit_vanishes_on_manifold(p43, grid43, u43):
    n = h1_norm_sq(u43)
    assert abs(deficit(u43)) < 1e-8 * n
    m = manifold_element(p43, grid43, 2.5, 1.3)
    assert abs(deficit(m)) < 1e-8 * h1_norm_sq(m)


def test_deficit_quartic_along_zero_mode(p43, grid43, u43):
    z = zero_mode(p43, grid43)
    vals = {mu: deficit(u43 + mu * z) for mu in (0.1, 0.05)}
    assert all(v > 0 for v in vals.values())
    assert vals[0.1] / vals[0.05] == pytest.approx(16, rel=0.1)


def test_deficit_nonnegative_on_random_functions(p43, grid43):
    rng = np.random.default_rng(11)
    for _ in range(40):
        phi = random_mode_function(p43, grid43, rng)
        assert deficit(phi) >= -1e-8


def test_projection_of_manifold_element(p43, grid43):
    res = project_to_manifold(manifold_element(p43, grid43, 3.0, 0.7))
    assert res.lam == pytest.approx(3.0, rel=1e-10)
    assert res.shift == pytest.approx(0.7, abs=1e-8)
    assert res.distance < 1e-6


def test_projection_along_translation(p43, grid43, u43):
    delta = 1e-3
    du = ModeFunction(p43, grid43, {0: math.sqrt(p43.sphere_area) * du_eval(p43, grid43.nodes)})
    res = project_to_manifold(u43 + delta * du)
    # u + delta u' = u(. + delta) + O(delta^2): the best shift is t = -delta
    assert res.shift == pytest.approx(-delta, rel=1e-2)
    assert res.distance <= delta * math.sqrt(h1_norm_sq(du))
    assert res.distance < 1e-2 * delta * math.sqrt(h1_norm_sq(du))


def test_projection_along_zero_mode(p43, grid43, u43):
    z = zero_mode(p43, grid43)
    y1 = (1 / math.sqrt(p43.sphere_area / p43.d)) * z
    res = project_to_manifold(u43 + 0.05 * y1)
    assert abs(res.shift) < 1e-8
    assert res.lam == pytest.approx(1.0, abs=1e-10)
    assert res.distance**2 == pytest.approx(0.05**2 * h1_norm_sq(y1), rel=1e-8)


def test_projection_remainder_orthogonal(p43, grid43, u43):
    rng = np.random.default_rng(5)
    phi = 1.4 * u43.shifted(0.3) + 0.2 * random_mode_function(p43, grid43, rng)
    res = project_to_manifold(phi)
    r = res.remainder
    du = ModeFunction(p43, grid43, {0: math.sqrt(p43.sphere_area) * du_eval(p43, grid43.nodes)})
    nr = math.sqrt(h1_norm_sq(r))
    assert abs(h1_inner(r, u43)) < 1e-8 * nr * math.sqrt(h1_norm_sq(u43))
    assert abs(h1_inner(r, du)) < 1e-8 * nr * math.sqrt(h1_norm_sq(du))
    d2 = h1_norm_sq(phi) - h1_inner(u43.shifted(-res.shift), phi) ** 2 / h1_norm_sq(u43)
    assert res.distance**2 == pytest.approx(d2, rel=1e-8)


def test_projection_degenerate(p43, grid43):
    z = zero_mode(p43, grid43)
    res = project_to_manifold(z)
    assert res.lam == 0.0 and res.shift == 0.0
    assert res.distance == pytest.approx(math.sqrt(h1_norm_sq(z)))


def test_projection_against_brute_force(p43, grid43, u43):
    rng = np.random.default_rng(8)
    phi = 1.7 * u43.shifted(-0.9) + 0.1 * random_mode_function(p43, grid43, rng)
    res = project_to_manifold(phi)
    dist, lam, t = brute_force_distance(phi)
    assert res.distance <= dist + 1e-12
    assert abs(lam - res.lam) <= 0.015 and abs(t - res.shift) <= 0.03


def test_extraction(p43, grid43, u43):
    z = zero_mode(p43, grid43)
    pure = extract_nontrivial_mode(0.02 * z)
    assert pure.mu == pytest.approx(0.02, rel=1e-12)
    assert h1_norm_sq(pure.R) < 1e-20
    assert pure.normalization == pytest.approx(math.sqrt(p43.sphere_area / 3))
    flipped = extract_nontrivial_mode(-0.02 * z)
    assert flipped.reflected and flipped.mu == pytest.approx(0.02, rel=1e-12)
    rng = np.random.default_rng(4)
    phi = random_mode_function(p43, grid43, rng)
    even = ModeFunction(p43, grid43, {0: phi.profiles[0], 2: phi.profiles[2]})
    assert extract_nontrivial_mode(even).mu == 0.0
    ext = extract_nontrivial_mode(phi)
    lhs = ext.mu**2 * h1_norm_sq(ext.R) + ext.mu**2 * h1_norm_sq(z)
    assert lhs == pytest.approx(h1_norm_sq(phi), rel=1e-12)
    assert abs(h1_inner(ext.R, z)) < 1e-8 * math.sqrt(h1_norm_sq(ext.R) * h1_norm_sq(z))


def test_hessian_form(p43, grid43, u43):
    du = ModeFunction(p43, grid43, {0: math.sqrt(p43.sphere_area) * du_eval(p43, grid43.nodes)})
    z = zero_mode(p43, grid43)
    for phi in (u43, du, z):
        assert abs(hessian_form(phi)) < 1e-6 * h1_norm_sq(phi)
    w2 = ModeFunction(p43, grid43, {2: u_eval(p43, grid43.nodes) ** 2})
    assert hessian_form(w2) > 0
    rng = np.random.default_rng(9)
    kernel = [u43, du, z]
    ratios = []
    for _ in range(5):
        phi = random_mode_function(p43, grid43, rng)
        for k in kernel:
            phi = phi - (h1_inner(phi, k) / h1_norm_sq(k)) * k
        ratios.append(hessian_form(phi) / h1_norm_sq(phi))
    assert min(ratios) > 0.01


def test_extremal_sequence(p43, grid43):
    with pytest.raises(ValueError):
        build_extremal_sequence(p43, 0.3)
    with pytest.raises(ValueError):
        build_extremal_sequence(p43, 0.0)
    norms = [lq_norm(build_extremal_sequence(p43, mu, grid43)) for mu in (0.04, 0.02, 0.01)]
    errs = np.abs(np.array(norms) - 1)
    assert np.all(np.diff(errs) < 0) and errs[-1] < 1e-3
    m2 = [h1_norm_sq(ModeFunction(p43, grid43, {2: build_extremal_sequence(p43, mu, grid43).profiles[2]}))
          for mu in (0.1, 0.05)]
    assert m2[0] / m2[1] == pytest.approx(16, rel=1e-12)


def test_extrapolation_fit():
    mus = [0.1, 0.05, 0.025]
    ratios = [0.3 + 2 * m + 5 * m * m for m in mus]
    assert extrapolate_quartic(4.0, mus, ratios) == pytest.approx(0.3, rel=1e-12)
    ratios = [0.3 + 2 * m**0.5 + 5 * m * m for m in mus]
    assert extrapolate_quartic(2.5, mus, ratios) == pytest.approx(0.3, rel=1e-10)


def test_wrong_mode2_profile_raises_the_limit(p43):
    mus = (0.1, 0.05, 0.025)
    J = j_constant(p43)
    base = extrapolate_quartic(4.0, mus, [quartic_ratio(p43, m).ratio for m in mus])
    off = extrapolate_quartic(4.0, mus, [quartic_ratio(p43, m, g2_scale=1.5).ratio for m in mus])
    assert base == pytest.approx(J, rel=0.02)
    assert off > base * 1.01


def test_quartic_with_discrete_mode2(p43):
    r_series = quartic_ratio(p43, 0.05)
    r_disc = quartic_ratio(p43, 0.05, g2_source="discrete")
    assert r_series.reliable and r_disc.reliable
    assert r_disc.ratio == pytest.approx(r_series.ratio, rel=1e-4)
