import math
import time

import numpy as np
import pytest
from scipy import integrate

from randmap.exact import enumerate_all
from randmap.limits import (ConvergenceError, OutOfTableRange, build_limit_tables, constant_I,
                            laplace_p, limit_constants, mu_cdf, mu_moment, mu_pdf, nu_limit_cdf,
                            purdom_williams_kappa, ratio_constants, solve_dde)
from randmap.special import EULER_GAMMA, exp_integral_e1

C_HALF = math.exp(-EULER_GAMMA / 2) / math.sqrt(math.pi)
GOLOMB_DICKMAN = 0.62432998854355087


@pytest.fixture(scope="module")
def table():
    return solve_dde()


@pytest.fixture(scope="module")
def table_theta1():
    return solve_dde(theta=1.0)


def test_p_at_one(table):
    # e^{-gamma/2}/sqrt(pi) = 0.42275064081676459 (mpmath, 30 digits)
    assert abs(table.p(1.0) - 0.42275064081676459) < 1e-6
    assert table.p(1.0) == pytest.approx(C_HALF, rel=1e-15)


def test_closed_form_on_unit_interval(table):
    x = np.linspace(1e-4, 1.0, 500)
    assert np.allclose(table.p(x), C_HALF / np.sqrt(x), rtol=1e-14, atol=0)


def test_second_interval_closed_form(table):
    # on (1, 2]: sqrt(x) p(x) = C (1 - arccosh(sqrt(x)))
    x = np.linspace(1.0001, 2.0, 400)
    exact = C_HALF * (1.0 - np.arccosh(np.sqrt(x))) / np.sqrt(x)
    assert np.max(np.abs(table.p(x) - exact)) < 1e-12
    # the stored nodes themselves
    u = table.u
    nodes = 1.0 + u[1:] ** 2
    assert np.max(np.abs(table.rows[1, 1:] - C_HALF * (1 - np.arccosh(np.sqrt(nodes)))
                         / np.sqrt(nodes))) < 1e-12


def test_theta_one_is_dickman(table_theta1):
    e = math.exp(-EULER_GAMMA)
    x = np.linspace(1.0, 2.0, 101)
    assert np.max(np.abs(table_theta1.p(x) - e * (1.0 - np.log(x)))) < 1e-12
    # rho(3) = 1 - log 2 - int_2^3 (1 - log(t - 1))/t dt, mpmath at 30 digits
    assert abs(table_theta1.p(3.0) - e * 0.048608388291131567) < 1e-13


def test_density_mass(table):
    assert abs(table.integrate(np.ones_like) - 1.0) < 1e-6


def test_density_nonnegative_and_tail(table):
    assert np.all(table.values >= 0)
    assert table.rows[-1, -1] < 1e-20
    assert table.p(50.0) < 1e-20


def test_grid_is_increasing(table):
    g = table.grid
    assert g[0] > 0 and g[-1] == 50.0
    assert np.all(np.diff(g) > 0)
    assert g.size == table.values.size


@pytest.mark.parametrize("s", [0.5, 1.0, 2.0, 5.0])
def test_laplace_transform(table, s):
    numeric = table.integrate(lambda x: np.exp(-s * x))
    closed = math.exp(-EULER_GAMMA / 2) * math.exp(-0.5 * exp_integral_e1(s)) / math.sqrt(s)
    assert abs(numeric - closed) < 1e-6
    assert closed == pytest.approx(laplace_p(s), rel=1e-15)


def test_f_integrates_to_one(table):
    assert abs(mu_moment(table, 0.0) - 1.0) < 1e-6


def test_f_mass_by_direct_quadrature(table):
    # independent route through mu_pdf: x = 1 - v^2 absorbs the x -> 1 singularity
    lo = 1.0 / (table.x_max + 1)
    vmax = math.sqrt(1.0 - lo)
    val, _ = integrate.quad(lambda v: 2 * v * mu_pdf(table, 1.0 - v * v), 0.0, vmax,
                            limit=400, epsabs=1e-12)
    assert abs(val - 1.0) < 1e-8


def test_mean_mu(table):
    assert abs(mu_moment(table, 1.0) - 0.7578230112) < 1e-5


def test_mu_cdf_properties(table):
    x = np.linspace(1.0 / table.x_max, 1.0, 1000)
    F = mu_cdf(table, x)
    assert np.all(np.diff(F) >= 0)
    assert F[0] >= 0 and abs(F[-1] - 1.0) < 1e-14


def test_mu_cdf_derivative_is_pdf(table):
    h = 1e-5
    for x in (0.2, 0.45, 0.6, 0.9):
        fd = (mu_cdf(table, x + h) - mu_cdf(table, x - h)) / (2 * h)
        assert fd == pytest.approx(mu_pdf(table, x), rel=1e-7)


def test_mu_out_of_range(table):
    with pytest.raises(OutOfTableRange):
        mu_cdf(table, 0.01)
    with pytest.raises(OutOfTableRange):
        mu_pdf(table, 0.005)
    with pytest.raises(OutOfTableRange):
        mu_cdf(table, 1.5)
    with pytest.raises(OutOfTableRange):
        table.p(60.0)


def test_H_limits(table):
    assert nu_limit_cdf(table, 0.0) == 0.0
    assert nu_limit_cdf(table, 200.0) > 1 - 1e-12
    y = np.linspace(0, 30, 301)
    H = nu_limit_cdf(table, y)
    assert np.all(np.diff(H) >= 0) and np.all((H >= 0) & (H <= 1))


def test_H_against_direct_quadrature(table):
    # H(y) = int f(x) G(y/x) dx through mu_pdf, x = 1 - v^2
    from randmap.special import chi2_1_cdf
    lo = 1.0 / (table.x_max + 1)
    for y in (0.1, 0.5, 1.0, 3.0):
        val, _ = integrate.quad(
            lambda v: 2 * v * mu_pdf(table, 1 - v * v) * chi2_1_cdf(y / (1 - v * v)),
            0.0, math.sqrt(1 - lo), limit=400, epsabs=1e-12)
        assert abs(nu_limit_cdf(table, y) - val) < 1e-8


def test_mean_of_limit_law_from_H(table):
    # E sqrt(chi2 * mu) = int_0^inf (1 - H(t^2)) dt
    val, _ = integrate.quad(lambda t: 1.0 - nu_limit_cdf(table, t * t), 0.0, 9.0,
                            limit=200, epsabs=1e-10)
    assert abs(val - 0.6884050874956) < 1e-4
    assert abs(val - constant_I()) < 1e-7


def test_constant_I():
    t0 = time.perf_counter()
    I = constant_I()
    assert time.perf_counter() - t0 < 1.0
    assert abs(I - 0.6884050874956) < 1e-9


def test_I_matches_dde_route(table):
    dde = math.sqrt(2 / math.pi) * mu_moment(table, 0.5)
    assert abs(dde - constant_I()) < 1e-9


def test_var_limit(table):
    var = mu_moment(table, 1.0) - constant_I() ** 2
    assert abs(var - 0.2839) < 5e-5


def test_step_halving_stability():
    a, b = solve_dde(step=2e-4), solve_dde(step=1e-4)
    assert abs(a.integrate(np.ones_like) - b.integrate(np.ones_like)) < 1e-7
    assert abs(mu_moment(a, 1.0) - mu_moment(b, 1.0)) < 1e-7
    assert abs(nu_limit_cdf(a, 1.0) - nu_limit_cdf(b, 1.0)) < 1e-7


def test_golomb_dickman_cross_check(table_theta1):
    assert abs(mu_moment(table_theta1, 1.0) - GOLOMB_DICKMAN) < 1e-9
    assert abs(table_theta1.integrate(np.ones_like) - 1.0) < 1e-9


def test_general_theta_mass():
    t = solve_dde(theta=0.3, step=2e-4, x_max=30)
    assert abs(t.integrate(np.ones_like) - 1.0) < 1e-6
    assert abs(mu_moment(t, 0.0) - 1.0) < 1e-6


def test_solver_argument_checks():
    with pytest.raises(ValueError):
        solve_dde(theta=0.0)
    with pytest.raises(ValueError):
        solve_dde(theta=1.5)
    with pytest.raises(ValueError):
        solve_dde(x_max=1.5)
    with pytest.raises(ValueError):
        solve_dde(step=1e-2)


def test_non_convergence_is_reported():
    with pytest.raises(ConvergenceError):
        solve_dde(step=1e-3, tol=0.0)


def test_purdom_williams_values():
    assert purdom_williams_kappa(1) == pytest.approx(0.8881984, abs=1e-12)
    assert purdom_williams_kappa(25) == pytest.approx(4.02563, abs=1e-5)


def test_purdom_williams_vs_enumeration():
    exact = float(enumerate_all(4).E_kappa)
    assert abs(exact - purdom_williams_kappa(4)) < 0.15
    # n = 1 gap is recorded, not asserted against a tolerance
    assert float(enumerate_all(1).E_kappa) == 1.0


def test_ratio_constants():
    r = ratio_constants(constant_I())
    assert abs(r["ratio_cond"] - 0.5493) < 1e-4
    assert abs(r["ratio_conl"] - 0.6243) < 1e-4
    assert abs(r["richest_diff"] - 0.075) < 1e-3


def test_limit_constants_block(table):
    c = limit_constants(table)
    assert set(c) == {"I", "mean_mu", "var_limit", "ratio_cond", "ratio_conl", "richest_diff"}
    assert c["var_limit"] == c["mean_mu"] - c["I"] ** 2


def test_limit_tables_shape():
    lt = build_limit_tables(step=5e-4)
    assert lt.F_grid.shape == lt.x_grid.shape == lt.f_grid.shape == lt.p_grid.shape
    assert np.all(np.diff(lt.F_grid) >= 0) and np.all(np.diff(lt.H_grid) >= 0)
    assert lt.H_grid[0] == 0.0
    assert float(lt.nu_cdf(1.0)) == pytest.approx(float(nu_limit_cdf(lt.density, 1.0)))
