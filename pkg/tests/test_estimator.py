"""Kernel functionals: time-integrated norms, Green function, moduli, decay scans."""

import math

import numpy as np
import pytest
import scipy.integrate as si
import scipy.special as sp
from hypothesis import given, settings, strategies as st

from coneheat.cone_kernel import ConeGeometry, ConePoint, DerivOp, cone_distance, euclidean_kernel
from coneheat.errors import DomainError, PreconditionError
from coneheat.estimator import (
    decay_exponent_scan,
    e_decay_grid_v,
    e_decay_grid_z,
    e_decay_scan,
    e_decay_stability,
    far_field_gradient_check,
    far_field_log_max_gradient,
    fit_exponent,
    g_sum_exponent_scan,
    g_weighted,
    grad_dt_op,
    grad_op,
    green_function,
    holder_exponent_scan,
    holder_modulus,
    make_report,
    time_integral_norm,
    weighted_alpha_integral,
)

DT = DerivOp("d_t")


# --- exponent fitting --------------------------------------------------------------

def test_fit_exact_power_law():
    x = np.geomspace(0.1, 10, 7)
    fit = fit_exponent(x, 3.0 * x ** -2.5)
    assert fit.slope == pytest.approx(-2.5, abs=1e-12)
    assert fit.r2 == pytest.approx(1.0)
    assert make_report(fit, -2.5, 0.05).passed
    assert not make_report(fit, -2.0, 0.05).passed
    assert make_report(fit, -2.6, 0.05, "at_least").passed


def test_fit_needs_four_points():
    with pytest.raises(DomainError):
        fit_exponent([1, 2, 3], [1, 2, 3])


def test_poor_fit_fails_r2_gate():
    x = np.geomspace(0.1, 10, 8)
    y = x ** -2 * np.array([1, 9, 1, 9, 1, 9, 1, 9])
    rep = make_report(fit_exponent(x, y), -2.0, 0.5)
    assert rep.fitted.r2 < 0.98 and not rep.passed


# --- time-integrated norms -----------------------------------------------------------

def test_vertex_time_derivative_norm():
    # |d_t H(0, y, t)| = (1/2pi) |1/(4t^3) - 1/t^2| e^{-1/4t} for beta = 1/2, |y| = 1
    f = lambda t: abs(1 / (4 * t ** 3) - 1 / t ** 2) * math.exp(-1 / (4 * t)) / (2 * math.pi)
    oracle = si.quad(f, 0, 0.25, epsabs=1e-14)[0] + si.quad(f, 0.25, np.inf, epsabs=1e-14)[0]
    val, err = time_integral_norm(ConeGeometry(0.5), DT, ConePoint(0.0), ConePoint(1.0, 0.7))
    assert val == pytest.approx(oracle, rel=1e-9)
    assert val == pytest.approx(0.468398652194548, rel=1e-10)


@pytest.mark.parametrize("d", [0.5, 1.0, 3.0])
def test_euclidean_time_derivative_norm(d):
    # d_t H changes sign once, at t = d^2/4, so the norm is 2 H(d, d^2/4)
    geom = ConeGeometry(1.0)
    x, y = ConePoint(1.0), ConePoint(1.0 + d)
    val, _ = time_integral_norm(geom, DT, x, y)
    assert val == pytest.approx(2 * euclidean_kernel(0, d, d * d / 4), rel=1e-9)
    assert val == pytest.approx(2 / (math.pi * d * d * math.e), rel=1e-9)


@pytest.mark.parametrize("op", [DT, DerivOp("d_r_dtheta_over_r"), grad_dt_op(0)], ids=["dt", "mixed", "grad_dt"])
def test_time_integral_scaling(op):
    geom = ConeGeometry(0.7)
    x, y = ConePoint(0.4, 0.2), ConePoint(1.1, -1.0)
    lam = 2.0
    a = time_integral_norm(geom, op, x.scaled(lam), y.scaled(lam))[0]
    b = time_integral_norm(geom, op, x, y)[0]
    assert a == pytest.approx(b * lam ** -op.order, rel=1e-7)


def test_time_integral_rotation_invariant():
    geom = ConeGeometry(0.7)
    x, y = ConePoint(0.4, 0.2), ConePoint(1.1, -1.0)
    xr, yr = ConePoint(0.4, 1.2), ConePoint(1.1, 0.0)
    assert time_integral_norm(geom, DT, x, y)[0] == pytest.approx(time_integral_norm(geom, DT, xr, yr)[0], rel=1e-9)


def test_time_integral_tangential_translation():
    geom = ConeGeometry(0.7, 2)
    x, y = ConePoint(0.4, 0.2, (0.0, 0.0)), ConePoint(1.1, -1.0, (0.3, -0.2))
    xs, ys = ConePoint(0.4, 0.2, (1.0, 2.0)), ConePoint(1.1, -1.0, (1.3, 1.8))
    assert time_integral_norm(geom, DT, x, y)[0] == pytest.approx(time_integral_norm(geom, DT, xs, ys)[0], rel=1e-9)


def test_time_integral_rejects_coincident():
    with pytest.raises(DomainError):
        time_integral_norm(ConeGeometry(0.7), DT, ConePoint(1.0), ConePoint(1.0))


def test_order_four_precondition():
    with pytest.raises(PreconditionError):
        time_integral_norm(ConeGeometry(0.7), DerivOp("d_t_dt"), ConePoint(1.0), ConePoint(2.0))


def test_gradient_of_time_derivative_allowed():
    val, err = time_integral_norm(ConeGeometry(0.7), DerivOp("d_t_dr"), ConePoint(1.0), ConePoint(2.0))
    assert math.isfinite(val) and val > 0


def test_beta_one_decay_control():
    rep = decay_exponent_scan(ConeGeometry(1.0), DT, (1.0, 0.3), np.geomspace(0.1, 10, 5))
    assert rep.fitted.slope == pytest.approx(-2.0, abs=1e-6)
    assert rep.passed


def test_decay_scan_validates_radii():
    with pytest.raises(DomainError):
        decay_exponent_scan(ConeGeometry(0.7), DT, (1.0, 0.0), [1, 2, 3, 4, 5])


# --- Green function -------------------------------------------------------------------

def test_green_function_r4():
    geom = ConeGeometry(1.0, 2)
    val, _ = green_function(geom, ConePoint(1.0, 0.0, (0.0, 0.0)), ConePoint(1.0, 0.0, (1.0, 0.0)))
    assert val == pytest.approx(1 / (4 * math.pi ** 2), rel=1e-9)
    assert val == pytest.approx(0.0253303, rel=1e-5)


def test_green_function_m0_rejected():
    with pytest.raises(DomainError):
        green_function(ConeGeometry(0.6), ConePoint(1.0), ConePoint(2.0))


@settings(max_examples=20, deadline=None)
@given(st.floats(0.1, 2.0), st.floats(-3, 3), st.floats(-1, 1), st.floats(0.1, 2.0), st.floats(-3, 3), st.floats(-1, 1))
def test_green_function_symmetric(r1, t1, s1, r2, t2, s2):
    geom = ConeGeometry(0.6, 2)
    x, y = ConePoint(r1, t1, (s1, 0.0)), ConePoint(r2, t2, (s2, 0.5))
    a, ea = green_function(geom, x, y)
    b, eb = green_function(geom, y, x)
    assert abs(a - b) <= 1e-9 * a + ea + eb


def test_green_function_decay_exponent():
    geom = ConeGeometry(0.6, 2)
    x0, y0 = ConePoint(0.5, 0.0, (0.0, 0.0)), ConePoint(1.0, 1.0, (0.3, 0.0))
    lams = np.geomspace(0.3, 10, 6)
    d = [cone_distance(geom, x0.scaled(l), y0.scaled(l)) for l in lams]
    g = [green_function(geom, x0.scaled(l), y0.scaled(l))[0] for l in lams]
    fit = fit_exponent(d, g)
    assert abs(fit.slope + 2) <= 0.05 and fit.r2 >= 0.98


# --- Hoelder moduli -----------------------------------------------------------------

def test_holder_modulus_identical_points():
    geom = ConeGeometry(0.8)
    u = ConePoint(0.05, 0.3)
    assert holder_modulus(geom, DerivOp("d_r_dtheta_over_r"), ConePoint(1.0), u, u) == (0.0, 0.0)


def test_holder_modulus_window():
    geom = ConeGeometry(0.8)
    op = DerivOp("d_r_dtheta_over_r")
    with pytest.raises(DomainError):
        holder_modulus(geom, op, ConePoint(1.5), ConePoint(0.05), ConePoint(0.06))
    with pytest.raises(DomainError):
        holder_modulus(geom, op, ConePoint(1.0), ConePoint(0.2), ConePoint(0.06))


def test_holder_scan_rho_one_branch():
    geom = ConeGeometry(0.5)
    scan = holder_exponent_scan(geom, grad_op(0), ConePoint(1.0))
    assert scan.report.fitted.slope >= 0.95
    assert scan.envelope_ok


def test_polar_frame_hessian_component_not_continuous_at_vertex():
    # for 1/beta = 2 the kernel is smooth through the vertex, so a polar-frame
    # Hessian component at two angles differs by O(1) however small delta is
    geom = ConeGeometry(0.5)
    scan = holder_exponent_scan(geom, DerivOp("d_r_dtheta_over_r"), ConePoint(1.0, 0.3))
    assert abs(scan.report.fitted.slope) < 0.05
    assert min(scan.values) > 0.1


def test_holder_scan_gradient_beta_08():
    geom = ConeGeometry(0.8)
    scan = holder_exponent_scan(geom, grad_op(0), ConePoint(1.0))
    assert scan.report.passed and scan.envelope_ok


# --- weighted G functionals ------------------------------------------------------------

def test_g_weighted_vanishes_at_vertex():
    assert g_weighted(0.5, 2.0, 0.0, 0.0, 1.0, 1.0) == (0.0, 0.0)
    assert g_weighted(0.0, 2.0, 0.5, 0.0, 1.0, 1.0) == (0.0, 0.0)


@pytest.mark.parametrize("v, R", [(2.0, 1.0), (2.5, 0.7), (3.0, 2.0)])
def test_g_weighted_gamma_closed_form(v, R):
    oracle = si.quad(lambda t: math.pi * (2 * math.pi * t) ** -v * math.exp(-R * R / (4 * t)), 0, np.inf)[0]
    assert g_weighted(0.0, v, 0.0, 0.0, 0.0, R)[0] == pytest.approx(oracle, rel=1e-8)


@pytest.mark.parametrize("mu, v, h", [(0.0, 2.0, 0.0), (1.5, 2.0, -0.4), (0.25, 1.5, 0.3)])
def test_g_weighted_against_scipy(mu, v, h):
    r, rp, R = 0.6, 0.9, 0.8

    def f(t):
        z = r * rp / (2 * t)
        return math.pi * (2 * math.pi * t) ** -v * z ** h * math.exp(-((r - rp) ** 2 + R * R) / (4 * t)) * sp.ive(mu, z)

    oracle = si.quad(f, 0, 1, epsabs=0, epsrel=1e-12)[0] + si.quad(f, 1, np.inf, epsabs=0, epsrel=1e-12)[0]
    assert g_weighted(mu, v, h, r, rp, R)[0] == pytest.approx(oracle, rel=1e-8)


def test_g_weighted_divergent_regimes():
    with pytest.raises(DomainError):
        g_weighted(0.0, 0.5, 0.0, 0.0, 0.0, 1.0)
    with pytest.raises(DomainError):
        g_weighted(0.0, 2.0, 0.0, 1.0, 1.0, 0.0)


def test_g_sum_exponent():
    rep = g_sum_exponent_scan(0.7, 2.0)
    assert rep.passed
    assert rep.fitted.slope == pytest.approx(-2.0, abs=0.1)


# --- E decay ------------------------------------------------------------------------

@pytest.mark.parametrize("beta", [0.5, 1 / 3])
def test_e_decay_integer_inverse_zero(beta):
    zg = e_decay_grid_z(100.0)
    vg = e_decay_grid_v(beta, 8)
    for n in (0, 1, 2):
        assert e_decay_scan(beta, max(n - 1, 0), n, False, zg, vg)[0] == 0.0


def test_e_decay_vanishes_toward_integer_inverse():
    zg = e_decay_grid_z(100.0, per_decade=5)
    sup_51 = e_decay_scan(0.51, 0, 0, False, zg, e_decay_grid_v(0.51, 8))[0]
    sup_50 = e_decay_scan(0.5, 0, 0, False, zg, e_decay_grid_v(0.5, 8))[0]
    assert sup_51 > 0 and sup_50 == 0.0


def test_e_decay_stable_under_doubling():
    res = e_decay_stability(0.7, 0, 0, False, z_max=(250.0, 500.0), v_points=12)
    assert math.isfinite(res.sup_large)
    assert res.rel_change < 0.01


def test_e_decay_second_derivative_finite():
    zg = e_decay_grid_z(200.0, per_decade=8)
    sup, where = e_decay_scan(0.7, 1, 2, False, zg, e_decay_grid_v(0.7, 12), form="theorem")
    assert math.isfinite(sup) and sup > 0


def test_e_decay_grid_margin():
    vg = e_decay_grid_v(0.8, 100)
    assert np.all(np.abs(np.abs(vg) - 0.6 * math.pi) >= 1e-3)
    with pytest.raises(DomainError):
        e_decay_scan(0.8, 0, 0, False, [1.0], [0.6 * math.pi])


def test_e_decay_rejects_large_z():
    with pytest.raises(DomainError):
        e_decay_scan(0.7, 0, 0, False, [2000.0], [0.0])


# --- far field ----------------------------------------------------------------------

def test_far_field_rate_m0():
    res = far_field_gradient_check(ConeGeometry(0.7))
    assert res.bound_ok
    drop = res.log_max_grad[0] - res.log_max_grad[1]
    assert drop >= 0.9 * (1 / 5e-5 - 1 / 1e-4)


def test_far_field_beta_one_euclidean():
    # on the plane the largest gradient sits at the closest pair, distance 9/sqrt(s)
    s = 1e-4
    d = 9 / math.sqrt(s)
    # |grad H| = (d / 2t) H with H = exp(-d^2/4t) / (4 pi t), in log form since H underflows
    exact = math.log(d / 2) - d * d / 4 - math.log(4 * math.pi)
    assert far_field_log_max_gradient(ConeGeometry(1.0), s) == pytest.approx(exact, rel=1e-9)


def test_far_field_same_rate_for_m0_and_m2():
    s0, s1 = 1e-4, 5e-5
    d0 = far_field_log_max_gradient(ConeGeometry(0.7), s0) - far_field_log_max_gradient(ConeGeometry(0.7), s1)
    g2 = ConeGeometry(0.7, 2)
    d2 = far_field_log_max_gradient(g2, s0, n_ang=2) - far_field_log_max_gradient(g2, s1, n_ang=2)
    assert d2 == pytest.approx(d0, rel=1e-3)


def test_far_field_range():
    with pytest.raises(DomainError):
        far_field_log_max_gradient(ConeGeometry(0.7), 1e-3)


# --- weighted spatial integral ---------------------------------------------------------

def test_weighted_alpha_euclidean_moment():
    alpha = 0.5
    x = ConePoint(0.5, 0.3)
    val, err = weighted_alpha_integral(ConeGeometry(1.0), None, x, alpha)
    ts = np.linspace(1.0, 2.0, 9)
    sup = lambda d: max(euclidean_kernel(0, d, t) for t in ts)
    oracle = si.quad(lambda d: sup(d) * d ** alpha * 2 * math.pi * d, 0, 40, limit=200, points=[1, 2, 4])[0]
    assert val == pytest.approx(oracle, rel=1e-3)


def test_weighted_alpha_tangential_translation():
    geom = ConeGeometry(0.6, 2)
    kw = dict(n_r=16, n_theta=16, n_rho=8, n_psi=4, n_t=3)
    a = weighted_alpha_integral(geom, DerivOp("d_r"), ConePoint(0.5, 0.3, (0.0, 0.0)), 1.0, **kw)[0]
    b = weighted_alpha_integral(geom, DerivOp("d_r"), ConePoint(0.5, 0.3, (2.0, -1.0)), 1.0, **kw)[0]
    assert a == pytest.approx(b, rel=1e-12)


def test_weighted_alpha_stable_under_enlargement():
    geom = ConeGeometry(0.6)
    x = ConePoint(0.0)
    a = weighted_alpha_integral(geom, DT, x, 1.0, radius=12.0)[0]
    b = weighted_alpha_integral(geom, DT, x, 1.0, radius=20.0, n_r=160)[0]
    assert math.isfinite(a) and a == pytest.approx(b, rel=1e-3)


def test_weighted_alpha_range():
    with pytest.raises(DomainError):
        weighted_alpha_integral(ConeGeometry(0.6), None, ConePoint(0.5), 0.0)
