"""Special functions against scipy/mpmath oracles and structural properties."""

import math

import mpmath
import numpy as np
import pytest
import scipy.special as sp
from hypothesis import given, settings, strategies as st

from coneheat.errors import BesselOverflowError, DomainError
from coneheat.specfun import (
    bessel_i,
    bessel_i_prime,
    bessel_j,
    bessel_tail_bound,
    gamma,
    ive,
    ive_dz,
    jv,
)


# --- gamma -------------------------------------------------------------------

@pytest.mark.parametrize("x, expected", [(1.0, 1.0), (0.5, math.sqrt(math.pi)), (5.0, 24.0)])
def test_gamma_examples(x, expected):
    assert gamma(x) == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize("x", [1e-3, 0.3, 2.7, 17.5, 99.1, 170.0])
def test_gamma_matches_scipy(x):
    assert gamma(x) == pytest.approx(sp.gamma(x), rel=1e-12)


@pytest.mark.parametrize("x", [0.0, -1.0, -0.5])
def test_gamma_nonpositive_raises(x):
    with pytest.raises(DomainError):
        gamma(x)


@given(st.floats(2.0, 160.0), st.floats(1e-3, 5.0))
def test_gamma_monotone_above_two(x, dx):
    assert gamma(x + dx) >= gamma(x)


# --- modified Bessel I ---------------------------------------------------------

def test_bessel_i_examples():
    assert bessel_i(0, 0).value == 1.0
    assert bessel_i(0.5, 1).value == pytest.approx(0.9376748883, rel=1e-10)
    assert bessel_i(2, 0).value == 0.0


@pytest.mark.parametrize("nu", [0.0, 0.3, 1.0, 1.25, 2.5, 7.0, 40.0])
@pytest.mark.parametrize("z", [1e-4, 0.5, 3.0, 14.9, 15.1, 30.0, 120.0, 690.0])
def test_bessel_i_matches_scipy(nu, z):
    assert bessel_i(nu, z).value == pytest.approx(sp.iv(nu, z), rel=1e-10)
    assert ive(nu, z) == pytest.approx(sp.ive(nu, z), rel=1e-10)


def test_scaled_form_finite_for_huge_argument():
    val = bessel_i(1.25, 1e5, scaled=True)
    assert val.scaled and math.isfinite(val.value)
    assert val.value == pytest.approx(sp.ive(1.25, 1e5), rel=1e-10)


def test_unscaled_overflow_points_to_scaled_form():
    with pytest.raises(BesselOverflowError, match="scaled"):
        bessel_i(0.0, 2000.0)


@pytest.mark.parametrize("nu, z", [(-0.1, 1.0), (1.0, -1.0)])
def test_bessel_i_negative_inputs(nu, z):
    with pytest.raises(DomainError):
        bessel_i(nu, z)


@settings(max_examples=60)
@given(st.floats(0.0, 10.0), st.floats(0.01, 50.0), st.floats(0.01, 5.0))
def test_positive_and_increasing(nu, z, dz):
    a = bessel_i(nu, z).value
    b = bessel_i(nu, z + dz).value
    assert 0 < a < b


@settings(max_examples=60)
@given(st.floats(1.0, 10.0), st.floats(0.01, 50.0))
def test_recurrence(nu, z):
    lhs = bessel_i_prime(nu, z) + nu * bessel_i(nu, z).value / z
    rhs = bessel_i(nu - 1, z).value
    assert abs(lhs - rhs) <= 1e-9 * rhs


@pytest.mark.parametrize("z", np.geomspace(0.1, 50, 13))
def test_half_integer_closed_forms(z):
    pref = math.sqrt(2 / (math.pi * z))
    assert bessel_i(0.5, z).value == pytest.approx(pref * math.sinh(z), rel=1e-9)
    assert bessel_j(0.5, z) == pytest.approx(pref * math.sin(z), rel=1e-9, abs=1e-15)


@given(st.floats(1.0, 1e4))
def test_scaled_i0_bounded(z):
    assert bessel_i(0, z, scaled=True).value <= 0.5


@given(st.floats(0.0, 20.0), st.floats(0.0, 800.0))
def test_scaled_bounded_by_one(nu, z):
    assert 0.0 <= bessel_i(nu, z, scaled=True).value <= 1.0


@settings(max_examples=60)
@given(st.floats(1.0, 1.999), st.floats(0.0, 5.0), st.floats(0.0, 5.0))
def test_holder_modulus_of_derivative(nu, a, b):
    z1, z2 = sorted((a, b))
    d = z2 - z1
    lhs = abs(bessel_i_prime(nu, z2) - bessel_i_prime(nu, z1))
    rhs = nu / (2 ** nu * math.gamma(nu + 1)) * d ** (nu - 1) + (1 + nu / 2) * d * bessel_i(nu, z2).value
    assert lhs <= rhs * (1 + 1e-12) + 1e-15


# --- derivative ----------------------------------------------------------------

def test_bessel_i_prime_examples():
    assert bessel_i_prime(1, 0) == pytest.approx(0.5, rel=1e-12)
    assert bessel_i_prime(0, 1) == pytest.approx(0.5651591040, rel=1e-10)
    assert bessel_i_prime(2, 3) <= bessel_i(1, 3).value


@pytest.mark.parametrize("nu, z", [(0.5, 2.0), (1.25, 0.1), (3.0, 9.0), (10.0, 40.0)])
def test_bessel_i_prime_matches_scipy(nu, z):
    assert bessel_i_prime(nu, z) == pytest.approx(sp.ivp(nu, z), rel=1e-10)


@given(st.floats(0.0, 10.0), st.floats(0.01, 100.0))
def test_derivative_corollaries(nu, z):
    # 0 <= I'_nu <= I_{nu-1} for nu >= 1, and I'_nu >= 0 always
    d = bessel_i_prime(nu, z)
    assert d >= 0
    if nu >= 1:
        assert d <= bessel_i(nu - 1, z).value * (1 + 1e-12)


def test_bessel_i_prime_singular_at_zero():
    with pytest.raises(DomainError):
        bessel_i_prime(0.5, 0.0)


@pytest.mark.parametrize("nu", [0.0, 0.7, 1.25, 6.0, 30.0])
@pytest.mark.parametrize("z", [0.01, 1.0, 20.0, 24.9, 25.1, 80.0, 900.0])
def test_ive_dz_matches_mpmath(nu, z):
    with mpmath.workdps(40):
        ref = float(mpmath.diff(lambda s: mpmath.besseli(nu, s) * mpmath.exp(-s), z))
    assert ive_dz(nu, z) == pytest.approx(ref, rel=1e-9, abs=1e-300)


# --- Bessel J --------------------------------------------------------------------

def test_bessel_j_examples():
    assert bessel_j(0, 0) == 1.0
    assert bessel_j(0.5, math.pi / 2) == pytest.approx(2 / math.pi, rel=1e-10)
    assert bessel_j(1, 0) == 0.0


@pytest.mark.parametrize("nu", [0.0, 0.5, 1.25, 3.0, 12.5])
def test_jv_matches_scipy(nu):
    z = np.linspace(0.0, 200.0, 801)
    ref = sp.jv(nu, z)
    got = jv(nu, z)
    assert np.max(np.abs(got - ref)) <= 1e-9 * max(1.0, np.max(np.abs(ref)))


@given(st.floats(0.0, 20.0), st.floats(0.0, 200.0))
def test_jv_bounded(nu, z):
    assert abs(bessel_j(nu, z)) <= 1.0


def test_bessel_j_negative_raises():
    with pytest.raises(DomainError):
        bessel_j(1.0, -2.0)


# --- tail bound ----------------------------------------------------------------

def test_tail_bound_zero_argument():
    assert bessel_tail_bound(1, 0.0, 2.0, 0.0, 0.25, beta=0.8) == 0.0


def test_tail_bound_dominates_direct_sum():
    direct = sum(k ** 2 * sp.iv(k / 0.8, 1.0) for k in range(1, 51))
    assert bessel_tail_bound(1, 0.0, 2.0, 1.0, 0.25, beta=0.8) >= direct


@pytest.mark.parametrize("z", [0.1, 0.5, 1.0])
def test_tail_bound_decreases_with_start_index(z):
    b1 = bessel_tail_bound(1, 0.0, 2.0, z, 0.25, beta=0.8)
    b2 = bessel_tail_bound(2, 0.0, 2.0, z, 0.25, beta=0.8)
    assert b2 <= b1
    direct2 = sum(k ** 2 * sp.iv(k / 0.8, z) for k in range(2, 60))
    assert b2 >= direct2


@given(st.floats(0.0, 20.0), st.floats(0.0, 5.0))
def test_tail_bound_monotone_in_z(z, dz):
    b = bessel_tail_bound(3, 0.5, 1.0, z, 0.1, beta=0.7)
    assert bessel_tail_bound(3, 0.5, 1.0, z + dz, 0.1, beta=0.7) >= b


def test_tail_bound_exponent_condition():
    with pytest.raises(DomainError):
        bessel_tail_bound(1, 2.0, 0.0, 1.0, 0.25, beta=0.8)
