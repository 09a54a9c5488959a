import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from cknquartic import energies as en
from cknquartic.params import critical_exponent, fs_params
from cknquartic.profile import RadialGrid, du_eval, u_eval
from cknquartic.series import build_series, g2_profile, p_eval

# frozen after agreement of the closed form, the series/discrete cross-check
# and the energy recomposition
J_4_3 = 0.12973697692796185
E0_4_3 = -0.98827966689580

BRUTE_POINTS = [(4.0, 3), (2.4, 2), (3.0, 5)]


@st.composite
def fs_points(draw):
    d = draw(st.sampled_from([2, 3, 4, 5, 6]))
    top = 10.0 if d == 2 else critical_exponent(d) - 0.01
    return fs_params(2.05 + draw(st.floats(0.0, 1.0)) * (top - 2.05), d)


def _half_quad(fn, p, epsabs=0.0):
    val, _ = integrate.quad(fn, 0.0, 60 / p.alpha, epsabs=epsabs, epsrel=1e-13, limit=400)
    return 2 * val


def test_e0_pieces(p43):
    q = p43.q
    assert q * (q - 2) ** 3 / (4 * (3 * q - 2)) == pytest.approx(4 / 5)
    assert math.gamma(4) * math.sqrt(math.pi) / math.gamma(4.5) == pytest.approx(32 / 35)
    assert en.e0_closed_form(p43) == pytest.approx(E0_4_3, rel=1e-12)
    assert en.e0_closed_form(p43) == pytest.approx(-0.988, abs=5e-4)


@pytest.mark.parametrize("q,d", [(4.0, 3), (2.4, 2), (3.0, 5), (5.5, 3), (2.2, 6)])
def test_e0_against_quadrature(q, d):
    p = fs_params(q, d)
    assert en.e0_quadrature(p) == pytest.approx(en.e0_closed_form(p), rel=1e-9)


@pytest.mark.parametrize("q,d", [(4.0, 3), (2.4, 2)])
def test_degree0_solution_constraints(q, d):
    p = fs_params(q, d)
    sol = en.degree0_solution(p)
    g0 = lambda s: en.g0_eval(p, s, sol)
    scale = _half_quad(lambda s: abs(u_eval(p, s) ** (q - 1) * sol.K * u_eval(p, s) ** (q - 1)), p)
    # the pairing is zero, so only an absolute target makes sense
    pair = _half_quad(lambda s: u_eval(p, s) ** (q - 1) * g0(s), p, epsabs=1e-12 * scale)
    assert abs(pair) < 1e-10 * scale
    s = np.linspace(0, 8, 401) / p.alpha
    f = lambda s: u_eval(p, s) ** (q - 2) * du_eval(p, s) * g0(s)
    assert np.allclose(f(s), -f(-s), rtol=1e-14, atol=0)


def test_degree0_residual_second_order(p43):
    S = 20 / p43.alpha
    r1 = en.degree0_residual(p43, RadialGrid.uniform(S, 1001))
    r2 = en.degree0_residual(p43, RadialGrid.uniform(S, 2001))
    assert 3.6 < r1 / r2 < 4.4
    assert en.degree0_residual(p43) < 1e-4


def test_series_terms_positive_and_cubic(p43):
    k = np.geomspace(100, 1e4, 30)
    terms = p_eval(p43, k - p43.xi) - p_eval(p43, k)
    assert np.all(terms > 0)
    slope = np.polyfit(np.log(k), np.log(terms), 1)[0]
    assert slope == pytest.approx(-3, abs=0.05)
    small = np.arange(0, 200.0)
    assert np.all(p_eval(p43, small - p43.xi) - p_eval(p43, small) > 0)


@pytest.mark.parametrize("q,d", BRUTE_POINTS)
def test_series_sum_against_brute_force(q, d):
    p = fs_params(q, d)
    ss = en.p_series_sum(p)
    total = 0.0
    for start in range(0, 10**7, 10**6):
        k = np.arange(start, start + 10**6, dtype=float)
        total += np.sum(p_eval(p, k - p.xi) - p_eval(p, k))
    # what is left after 10^7 terms is below 1e-14 of the sum
    assert ss.value == pytest.approx(total, rel=1e-11)
    assert ss.value > 0 and ss.tail > 0
    assert ss.tail < 1e-8 * ss.value


def test_series_sum_rejects_bad_tol(p43):
    with pytest.raises(ValueError):
        en.p_series_sum(p43, tol=1e-3)
    with pytest.raises(RuntimeError):
        en.p_series_sum(p43, tol=1e-300, k_limit=4096)


@pytest.mark.parametrize("q,d", [(4.0, 3), (2.4, 2), (3.0, 4), (2.4, 5)])
def test_e2_series_against_discrete(q, d):
    p = fs_params(q, d)
    e2, _ = en.e2_series(p)
    disc = en.e2_discrete(p)
    assert e2 < 0 and disc.value < 0
    assert disc.value == pytest.approx(e2, rel=1e-4)
    assert disc.residual < 1e-12
    g2 = g2_profile(build_series(p), disc.grid)
    err = math.sqrt(disc.grid.integrate((g2 - disc.solution) ** 2) / disc.grid.integrate(g2**2))
    assert err < 1e-4


def test_e2_discrete_second_order(p43):
    e2, _ = en.e2_series(p43)
    g = RadialGrid.uniform(40 / p43.alpha, 2001)
    e_coarse = en.e2_discrete(p43, g).value - e2
    e_fine = en.e2_discrete(p43, g.refined()).value - e2
    assert 3.5 < e_coarse / e_fine < 4.5


def test_b_term(p43):
    q, d = p43.q, p43.d
    bracket = q * (5 * q - 6) / (2 * (3 * q - 2)) - d * (q - 3) / (d + 2)
    assert bracket == pytest.approx(2.2)
    assert en.b_term(p43) > 0
    p3 = fs_params(3.0, 5)
    c = en.energy_prefactor(p3) / 4 * 2 * 1 * 3 * 9 / (2 * 7)
    assert en.b_term(p3) == pytest.approx(c, rel=1e-14)


@given(fs_points())
def test_b_term_against_integrals(p):
    assert en.b_term_oracle(p) == pytest.approx(en.b_term(p), rel=1e-9)


def test_j_at_4_3(p43):
    J = en.j_constant(p43)
    assert J == pytest.approx(J_4_3, rel=1e-12)
    assert en.j_from_energies(p43) == pytest.approx(J, rel=1e-8)
    assert en.j_tilde(p43) > 0
    assert -en.e0_closed_form(p43) > 0 and -en.e2_series(p43)[0] > 0 and en.b_term(p43) > 0
    q = p43.q
    e0_share = (q * (q - 2) ** 3 / (4 * (3 * q - 2))) / (q * (5 * q - 6) * (q - 1) / (2 * (3 * q - 2)))
    assert e0_share == pytest.approx(2 / 21)
    assert -en.e0_closed_form(p43) == pytest.approx(e0_share / 4 * en.quartic_prefactor(p43), rel=1e-12)


@given(fs_points())
def test_recomposition_and_signs(p):
    ss = en.p_series_sum(p).value
    J = en.j_constant(p, ss)
    assert en.j_from_energies(p, ss) == pytest.approx(J, rel=1e-8)
    assert np.sign(en.j_tilde(p, ss)) == np.sign(J)
    assert en.quartic_prefactor(p) == pytest.approx(en.normalization_prefactor(p), rel=1e-12)


@pytest.mark.parametrize("d", [2, 3, 4, 5, 6])
def test_j_positive_on_coarse_grid(d):
    qs = np.arange(2.2, min(critical_exponent(d), 8.0) - 1e-9, 0.4)
    for q in qs:
        assert en.j_constant(fs_params(q, d)) > 0


def test_j_vanishes_at_critical_exponent():
    vals = [en.j_constant(fs_params(q, 3)) for q in (5.9, 5.99, 5.999)]
    assert all(v > 0 for v in vals)
    assert vals[0] > vals[1] > vals[2]
    assert vals[2] < 1e-3 * J_4_3 * 10


def test_energy_report(p43):
    rep = en.energy_report(p43, discrete=True)
    assert rep.J == pytest.approx(J_4_3, rel=1e-12)
    assert rep.E2_discrete == pytest.approx(rep.E2_series, rel=1e-4)
    assert rep.E0 < 0 and rep.E2_series < 0 and rep.B_term_unit > 0
    assert 0 < rep.tail_estimate < 1e-8 * rep.series_sum


def test_convexity_in_convexity_range(p43):
    rep = en.convexity_certificate(p43)
    assert rep.valid and rep.ordering_ok and rep.first_failure is None
    assert rep.min_second_derivative > 0
    for e1, e2 in en.convexity_factors(p43):
        assert 1.5 <= e1 < e2


def test_convexity_second_derivative_matches_finite_differences(p43):
    x = np.linspace(-1, 20, 8)
    h = 1e-3
    fd = (p_eval(p43, x + h) - 2 * p_eval(p43, x) + p_eval(p43, x - h)) / h**2
    rep = en.convexity_certificate(p43, x_max=20, samples=8)
    assert rep.min_second_derivative == pytest.approx(fd.min(), rel=1e-5)


def test_convexity_exploratory_point():
    rep = en.convexity_certificate(fs_params(2.1, 2))
    assert not rep.ordering_ok and not rep.valid
    assert rep.first_failure is not None
    with pytest.raises(ValueError):
        en.convexity_certificate(fs_params(2.1, 2), x_max=5)


def test_case2_lhs():
    assert en.case2_lhs(2.8, 2) >= 2 + 1 / 7 - 0.5
    assert en.case2_lhs(2.1, 2) > 0
    for q in (2.05, 2.3, 2.8):
        direct = (3 * q - 4) / (q - 1) - 2 * (q - 3) / q - 8 / 3 * (q - 1) * (3 * q - 4) / ((q + 2) * (7 * q - 10))
        assert en.case2_lhs(q, 2) == pytest.approx(direct, rel=1e-14)
    assert en.case2_lhs(57.0, 2) > 0 > en.case2_lhs(58.0, 2)


def test_case2_operator_bound():
    rep = en.case2_bound(fs_params(2.5, 2))
    assert rep.positive and rep.eigenvalue_ok
    assert rep.min_eigenvalue >= 3 - 1e-4
    assert rep.e2_bound_ok


def test_gap_check():
    rep = en.convexity_gap_check(fs_params(4.0, 3))
    assert rep.applicable
    assert rep.roots == pytest.approx((1.2, 6.0))
    assert rep.chord_ok and rep.xi_ok and rep.numerator_ok
    assert rep.chord_lhs > rep.chord_rhs and rep.xi < rep.xi_bound
    d2 = en.convexity_gap_check(fs_params(3.5, 2))
    assert d2.numerator == pytest.approx(-20 * 3.5 + 24)
    assert not en.convexity_gap_check(fs_params(2.5, 2)).applicable
