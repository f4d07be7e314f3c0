"""Convolution solver: closed forms, PDE consistency, representation checks, Schauder ratio."""

import math

import numpy as np
import pytest
import scipy.integrate as si

from coneheat.cone_kernel import ConeGeometry, ConePoint
from coneheat.errors import DomainError, UnsupportedConfigurationError
from coneheat.solver import (
    PolyDisk,
    SourceTerm,
    angular_bump,
    constant_source,
    convolve,
    fd_mixed,
    gaussian_bump,
    holder_bump,
    laplacian_rep,
    pde_residual,
    probe,
    schauder_ratio,
    schauder_stability,
    second_derivative_rep,
    vertex_pairs,
    zero_source,
)

CONE = ConeGeometry(0.8)
PLANE = ConeGeometry(1.0)


def plane_gaussian_u(x_r, t, width=1.0, tau_weight=None):
    """-int_0^t (heat flow of exp(-|y|^2/w^2)) ds on the plane, by scipy quadrature."""
    w2 = width * width

    def flow(s, tau):
        a = w2 + 4 * s
        return w2 / a * math.exp(-x_r * x_r / a) * (1.0 if tau_weight is None else tau_weight(tau))

    return -si.quad(lambda s: flow(s, t - s), 0, t, epsabs=1e-14, epsrel=1e-13)[0]


def test_source_must_vanish_outside_support():
    with pytest.raises(DomainError):
        SourceTerm(lambda r, th, tau: np.exp(-np.broadcast_arrays(r, th, tau)[0]), PolyDisk(10.0))


def test_source_alpha_range():
    with pytest.raises(DomainError):
        SourceTerm(zero_source().f, holder_alpha=1.0)


def test_zero_source_gives_zero():
    assert convolve(CONE, zero_source(), ConePoint(0.7, 0.3), 0.8)[0] == 0.0
    assert second_derivative_rep(CONE, zero_source(), "d_t", ConePoint(0.7, 0.3), 0.8)[0] == 0.0
    assert second_derivative_rep(CONE, zero_source(), "d_r_dtheta_over_r", ConePoint(0.7, 0.3), 0.8)[0] == 0.0


def test_zero_initial_data():
    assert convolve(CONE, gaussian_bump(), ConePoint(0.5), 0.0) == (0.0, 0.0)


@pytest.mark.parametrize("x", [ConePoint(0.0), ConePoint(1.0, 2.0), ConePoint(4.0, -1.0)])
def test_constant_source_short_time(x):
    c, t = 2.5, 0.01
    u, err = convolve(CONE, constant_source(c), x, t)
    assert u == pytest.approx(-c * t, rel=1e-9)


@pytest.mark.parametrize("r", [0.0, 0.3, 1.0, 2.5])
@pytest.mark.parametrize("t", [0.1, 0.7])
def test_plane_gaussian_closed_form(r, t):
    u, err = convolve(PLANE, gaussian_bump(), ConePoint(r, 0.4), t)
    assert u == pytest.approx(plane_gaussian_u(r, t), abs=1e-10)


def test_plane_time_dependent_source():
    base = gaussian_bump()
    src = SourceTerm(lambda r, th, tau: base.f(r, th, tau) * (1 + np.sin(3 * tau)), PolyDisk(10.0))
    u, _ = convolve(PLANE, src, ConePoint(0.6), 0.9)
    assert u == pytest.approx(plane_gaussian_u(0.6, 0.9, tau_weight=lambda tau: 1 + math.sin(3 * tau)), abs=1e-9)


@pytest.mark.parametrize("src", [gaussian_bump(), angular_bump(), holder_bump(0.2)], ids=["gauss", "angular", "holder"])
@pytest.mark.parametrize("x", [ConePoint(0.0), ConePoint(0.5, 1.0), ConePoint(2.0, -2.0)])
def test_maximum_principle_bound(src, x):
    t = 0.6
    rr, th, tau = np.meshgrid(np.linspace(0, 10, 401), np.linspace(-math.pi, math.pi, 65), np.linspace(0, t, 7))
    sup_f = float(np.max(np.abs(src.f(rr, th, tau))))
    u, err = convolve(CONE, src, x, t)
    assert abs(u) <= sup_f * t + err


def test_linearity():
    g, a = gaussian_bump(), angular_bump()
    combo = SourceTerm(lambda r, th, tau: 2.0 * g.f(r, th, tau) - 0.5 * a.f(r, th, tau), knots=(3.0,), holder_alpha=0.5)
    x, t = ConePoint(0.9, 0.7), 0.5
    ug, eg = convolve(CONE, g, x, t)
    ua, ea = convolve(CONE, a, x, t)
    uc, ec = convolve(CONE, combo, x, t)
    assert abs(uc - (2 * ug - 0.5 * ua)) <= ec + 2 * eg + 0.5 * ea + 1e-13


def test_rotation_of_source_rotates_solution():
    a = angular_bump()
    c = 0.9
    rot = SourceTerm(lambda r, th, tau: a.f(r, th - c, tau), knots=(3.0,), holder_alpha=0.9)
    t = 0.4
    u1 = convolve(CONE, a, ConePoint(1.1, 0.2), t)[0]
    u2 = convolve(CONE, rot, ConePoint(1.1, 0.2 + c), t)[0]
    assert u2 == pytest.approx(u1, rel=1e-9)


@pytest.mark.parametrize("x", [ConePoint(0.4, 0.5), ConePoint(1.3, -2.0), ConePoint(2.7, 1.0)])
def test_pde_consistency(x):
    res = pde_residual(CONE, angular_bump(), x, 0.6)
    assert res.passed


@pytest.mark.parametrize("x", [ConePoint(0.3, 0.5), ConePoint(1.3, -2.0)])
def test_mixed_rep_matches_differences(x):
    src = angular_bump()
    rep, erep = second_derivative_rep(CONE, src, "d_r_dtheta_over_r", x, 0.6)
    fd, efd = fd_mixed(CONE, src, x, 0.6)
    assert abs(rep - fd) <= max(1e-4, erep + efd)


def test_plane_laplacian_closed_form():
    # Delta u = d_t u + f, with d_t u = -(heat flow at time t) for a time-independent source
    r, t = 0.8, 0.5
    u_dt = -1 / (1 + 4 * t) * math.exp(-r * r / (1 + 4 * t))
    f = math.exp(-r * r)
    dt, _ = second_derivative_rep(PLANE, gaussian_bump(), "d_t", ConePoint(r), t)
    assert dt == pytest.approx(u_dt, abs=1e-9)
    assert laplacian_rep(PLANE, gaussian_bump(), ConePoint(r), t)[0] == pytest.approx(u_dt + f, abs=1e-9)


def test_plane_radial_source_has_no_mixed_derivative():
    val, err = second_derivative_rep(PLANE, gaussian_bump(), "d_r_dtheta_over_r", ConePoint(0.8, 1.0), 0.5)
    assert abs(val) <= 1e-12


def test_probe_collects_fields():
    p = probe(CONE, angular_bump(), ConePoint(0.9, 0.4), 0.5)
    assert set(p.second_derivs) == {"d_r_dtheta_over_r"}
    assert p.u[0] < 0
    vertex = probe(CONE, angular_bump(), ConePoint(0.0), 0.5)
    assert vertex.second_derivs == {}


def test_m_positive_unsupported():
    with pytest.raises(UnsupportedConfigurationError):
        convolve(ConeGeometry(0.8, 2), gaussian_bump(), ConePoint(1.0, 0.0, (0.0, 0.0)), 0.5)


def test_mixed_op_at_vertex_rejected():
    with pytest.raises(DomainError):
        second_derivative_rep(CONE, gaussian_bump(), "d_r_dtheta_over_r", ConePoint(0.0), 0.5)


def test_unknown_op_rejected():
    with pytest.raises(DomainError):
        second_derivative_rep(CONE, gaussian_bump(), "d_r", ConePoint(1.0), 0.5)


def test_schauder_zero_source():
    rep = schauder_ratio(CONE, zero_source(), vertex_pairs(CONE, 0.1, 0.5))
    assert rep.ratio == 0.0


def test_schauder_ratio_stable_inside_hypothesis():
    st = schauder_stability(CONE, holder_bump(0.2), deltas=(0.2, 0.1, 0.05))
    assert st.in_hypothesis
    assert st.passed


def test_schauder_flags_alpha_outside_hypothesis():
    rep = schauder_ratio(CONE, holder_bump(0.5), vertex_pairs(CONE, 0.1, 0.5))
    assert not rep.in_hypothesis
    assert math.isfinite(rep.ratio) and rep.ratio > 0


def test_holder_seminorm_measured():
    rep = schauder_ratio(CONE, holder_bump(0.2), vertex_pairs(CONE, 0.05, 0.5))
    # |y|^0.2 between the vertex and delta gives a quotient near 1
    assert 0.8 <= rep.f_seminorm <= 1.01
