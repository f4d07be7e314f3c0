"""Adaptive quadrature: closed-form checks, error honesty, structural properties."""

import math

import numpy as np
import pytest
import scipy.special as sp
from hypothesis import given, settings, strategies as st

from coneheat.errors import DomainError
from coneheat.quad import (
    QuadConfig,
    gauss_legendre,
    integrate_damped_oscillatory,
    integrate_finite,
    integrate_semi_infinite,
    integrate_time_kernel,
    kronrod_panels,
)

TIGHT = QuadConfig(abs_tol=1e-12, rel_tol=1e-12)


# --- finite interval ------------------------------------------------------------

def test_sine_over_half_period():
    res = integrate_finite(np.sin, 0.0, math.pi, TIGHT)
    assert res.converged
    assert abs(res.value - 2.0) <= 1e-12


def test_lorentzian_closed_form():
    res = integrate_finite(lambda y: y * y * 2 / (y * y + 0.01), 0.0, 1.0, TIGHT)
    assert res.value == pytest.approx(2 - 0.2 * math.atan(10), abs=1e-12)


def test_empty_interval_is_exact_zero():
    res = integrate_finite(np.cos, 1.5, 1.5)
    assert res.value == 0.0 and res.err_estimate == 0.0 and res.converged


def test_reversed_limits_rejected():
    with pytest.raises(DomainError):
        integrate_finite(np.cos, 1.0, 0.0)


def test_unconverged_is_flagged():
    res = integrate_finite(lambda y: np.sin(1 / y), 1e-6, 1.0, QuadConfig(abs_tol=1e-14, rel_tol=1e-14, max_subdiv=8))
    assert not res.converged


def test_converged_meets_tolerance():
    cfg = QuadConfig(abs_tol=1e-9, rel_tol=1e-9)
    res = integrate_finite(np.exp, 0.0, 3.0, cfg)
    assert res.converged
    assert res.err_estimate <= max(cfg.abs_tol, cfg.rel_tol * abs(res.value))


def test_split_points_handle_kink():
    cfg = TIGHT.with_(split_points=(0.3,))
    res = integrate_finite(lambda y: np.abs(y - 0.3), 0.0, 1.0, cfg)
    assert res.value == pytest.approx(0.045 + 0.245, abs=1e-14)


# --- semi-infinite and time kernels ----------------------------------------------

def test_exponential_tail():
    res = integrate_semi_infinite(lambda y: np.exp(-y), 0.0, 1.0, TIGHT)
    assert abs(res.value - 1.0) <= 1e-10


def test_cosh_integral_against_trapezoid_and_bessel_k():
    # exp(1) K_0(1) is the closed form
    res = integrate_semi_infinite(lambda y: np.exp(1 - np.cosh(y)), 0.0, 1.0, TIGHT)
    y = np.linspace(0.0, 12.0, 1_000_001)
    trap = np.trapezoid(np.exp(1 - np.cosh(y)), y)
    assert res.value == pytest.approx(trap, abs=1e-10)
    assert res.value == pytest.approx(math.e * sp.k0(1.0), abs=1e-12)
    assert res.value == pytest.approx(1.14446, abs=1e-5)


def test_gamma_type_time_integral():
    v = 3
    res = integrate_time_kernel(lambda t: t ** -v * np.exp(-1 / (8 * t)), v, TIGHT, c=1 / 8)
    assert res.value == pytest.approx(64.0, rel=1e-10)


def test_time_kernel_examples():
    res = integrate_time_kernel(lambda t: t ** -2 * np.exp(-1 / (4 * t)), 2, TIGHT, c=0.25)
    assert res.value == pytest.approx(4.0, rel=1e-10)
    m = 2
    p = m / 2 + 2
    res = integrate_time_kernel(lambda t: t ** -p * np.exp(-1 / (4 * t)), p, TIGHT, c=0.25)
    assert res.value == pytest.approx(16.0, rel=1e-10)


def test_time_kernel_symmetric_integrand():
    # int e^{-t - 1/t} dt = 2 K_1(2)
    res = integrate_time_kernel(lambda t: np.exp(-t - 1 / t), 0, TIGHT, c=1.0)
    assert res.value == pytest.approx(2 * sp.k1(2.0), rel=1e-10)


def test_time_kernel_needs_positive_c():
    with pytest.raises(DomainError):
        integrate_time_kernel(lambda t: np.exp(-t), 0, c=0.0)


def test_algebraic_tail_falls_back_to_reciprocal_map():
    res = integrate_semi_infinite(lambda y: 1 / (1 + y) ** 3, 0.0, 1.0, TIGHT)
    assert res.value == pytest.approx(0.5, abs=1e-9)


def test_damped_oscillatory_weber_type():
    # int_0^inf exp(-lam^2 t) J_0(lam)^2 lam dlam = exp(-1/2t) I_0(1/2t) / 2t
    t = 1.0
    res = integrate_damped_oscillatory(lambda l: np.exp(-l * l * t) * sp.j0(l) ** 2 * l, math.pi, t, TIGHT)
    assert res.value == pytest.approx(sp.ive(0, 0.5) / 2, abs=1e-9)


# --- error honesty battery ---------------------------------------------------------

BATTERY = [
    (np.exp, 0, 1, math.e - 1),
    (np.sin, 0, 2, 1 - math.cos(2)),
    (np.cos, 0, 10, math.sin(10)),
    (lambda x: x ** 5, -1, 2, (64 - 1) / 6),
    (np.sqrt, 0, 1, 2 / 3),
    (lambda x: x ** 1.5, 0, 4, 0.4 * 32),
    (lambda x: 1 / (1 + x * x), 0, 1, math.pi / 4),
    (lambda x: 1 / (1 + 25 * x * x), -1, 1, 0.4 * math.atan(5)),
    (np.log, 1e-12, 1, -1 + 1e-12 - 1e-12 * math.log(1e-12)),
    (lambda x: np.exp(-x * x), -3, 3, math.sqrt(math.pi) * math.erf(3)),
    (lambda x: x * np.exp(-x), 0, 5, 1 - 6 * math.exp(-5)),
    (lambda x: 1 / x, 1, 100, math.log(100)),
    (lambda x: np.sin(10 * x), 0, math.pi / 10, 0.2),
    (lambda x: np.cos(x) ** 2, 0, math.pi, math.pi / 2),
    (lambda x: np.abs(x), -1, 2, 2.5),
    (lambda x: np.tanh(x), 0, 2, math.log(math.cosh(2))),
    (lambda x: 1 / np.sqrt(x), 1e-10, 1, 2 - 2e-5),
    (lambda x: np.exp(np.sin(x)), 0, 2 * math.pi, 2 * math.pi * sp.i0(1.0)),
    (lambda x: x * x * np.log(x), 1, 2, 8 / 3 * math.log(2) - 7 / 9),
    (lambda x: 1 / (x * x + 1e-4), -1, 1, 200 * math.atan(100)),
]


@pytest.mark.parametrize("tol", [1e-6, 1e-10])
@pytest.mark.parametrize("case", range(len(BATTERY)))
def test_error_estimate_is_honest(case, tol):
    f, a, b, exact = BATTERY[case]
    res = integrate_finite(f, a, b, QuadConfig(abs_tol=tol, rel_tol=tol))
    true_err = abs(res.value - exact)
    # exact values are themselves rounded doubles
    assert true_err <= 2 * res.err_estimate + 4 * np.finfo(float).eps * abs(exact)


# --- properties -------------------------------------------------------------------

@settings(max_examples=40, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(0.1, 5.0))
def test_linearity(alpha, gamma_, width):
    f = lambda x: np.exp(-x) * np.cos(3 * x)
    g = lambda x: 1 / (1 + x * x)
    rf = integrate_finite(f, 0, width, TIGHT)
    rg = integrate_finite(g, 0, width, TIGHT)
    rh = integrate_finite(lambda x: alpha * f(x) + gamma_ * g(x), 0, width, TIGHT)
    tol = abs(alpha) * rf.err_estimate + abs(gamma_) * rg.err_estimate + rh.err_estimate
    assert abs(rh.value - alpha * rf.value - gamma_ * rg.value) <= tol + 1e-14


@settings(max_examples=40, deadline=None)
@given(st.floats(0.01, 0.99))
def test_subdivision_consistency(frac):
    f = lambda x: np.sqrt(x) * np.sin(5 * x)
    a, b = 0.0, 2.0
    c = a + frac * (b - a)
    whole = integrate_finite(f, a, b, TIGHT)
    left = integrate_finite(f, a, c, TIGHT)
    right = integrate_finite(f, c, b, TIGHT)
    tol = whole.err_estimate + left.err_estimate + right.err_estimate
    assert abs(whole.value - left.value - right.value) <= tol + 1e-14


def test_config_validation():
    with pytest.raises(DomainError):
        QuadConfig(abs_tol=0.0)
    with pytest.raises(DomainError):
        QuadConfig(max_subdiv=0)


def test_gauss_legendre_exact_for_polynomials():
    x, w = gauss_legendre(5, -1.0, 3.0)
    assert np.dot(w, x ** 9) == pytest.approx((3 ** 10 - 1) / 10, rel=1e-13)


def test_kronrod_panels_shapes_and_exactness():
    a = np.array([0.0, 1.0, 2.0])
    b = np.array([1.0, 2.0, 2.0])
    nodes, wk, wg = kronrod_panels(a, b)
    assert nodes.shape == wk.shape == wg.shape == (3, 15)
    assert np.all(wk[2] == 0) and np.all(wg[2] == 0)
    k = (wk * nodes ** 21).sum(axis=1)
    g = (wg * nodes ** 13).sum(axis=1)
    assert k[:2] == pytest.approx([1 / 22, (2 ** 22 - 1) / 22], rel=1e-13)
    assert g[:2] == pytest.approx([1 / 14, (2 ** 14 - 1) / 14], rel=1e-13)
