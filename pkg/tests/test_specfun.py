import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ampcap.exceptions import DomainError
from ampcap.specfun import (bessel_i_scaled, bessel_order, bessel_ratio, bessel_ratio_over_x,
                            log_bessel_i_scaled, log_bessel_norm, log_gamma)

HALF_ORDERS = st.sampled_from([k / 2 for k in range(-1, 21)])


def mp_ive(nu, x):
    return float(mp.besseli(nu, x) * mp.exp(-x))


@pytest.mark.parametrize("x, expected", [(1.0, 0.0), (0.5, 0.5723649429247001), (5.0, math.log(24.0))])
def test_log_gamma_values(x, expected):
    assert log_gamma(x) == pytest.approx(expected, abs=1e-12)


@pytest.mark.parametrize("bad", [0.0, -1.0, math.inf, math.nan])
def test_log_gamma_rejects(bad):
    with pytest.raises(DomainError):
        log_gamma(bad)


@given(st.floats(0.5, 200.0))
def test_log_gamma_functional_equation(x):
    assert log_gamma(x + 1) == pytest.approx(log_gamma(x) + math.log(x), abs=1e-12 * max(1.0, abs(log_gamma(x))))


def test_bessel_order_from_dimension():
    assert [bessel_order(n) for n in (1, 2, 3, 4)] == [-0.5, 0.0, 0.5, 1.0]
    with pytest.raises(DomainError):
        bessel_order(0)


def test_bessel_i_scaled_examples():
    assert bessel_i_scaled(0.0, 0.0) == 1.0
    assert bessel_i_scaled(1.5, 0.0) == 0.0
    # closed form sqrt(2 / (pi x)) sinh(x) e^{-x}
    assert bessel_i_scaled(0.5, 2.0) == pytest.approx(math.sqrt(1 / math.pi) * math.sinh(2) * math.exp(-2), abs=1e-12)
    assert bessel_i_scaled(0.5, 2.0) == pytest.approx(0.27700, abs=1e-4)
    assert bessel_i_scaled(0.0, 100.0) == pytest.approx(0.03994, abs=5e-4)


def test_bessel_i_scaled_rejects_negative():
    with pytest.raises(DomainError):
        bessel_i_scaled(0.0, -1.0)
    with pytest.raises(DomainError):
        bessel_i_scaled(-1.0, 1.0)


def test_minus_half_order_closed_form():
    x = np.array([0.1, 1.0, 10.0, 300.0])
    expected = np.sqrt(2 / (np.pi * x)) * np.cosh(x) * np.exp(-x)
    assert np.allclose(bessel_i_scaled(-0.5, x), expected, rtol=1e-12)


@pytest.mark.parametrize("nu", [-0.5, 0.0, 0.5, 1.0, 4.5, 9.0, 49.0, 499.0])
@pytest.mark.parametrize("x", [1e-8, 0.3, 2.0, 17.0, 150.0, 3e3, 1e6])
def test_bessel_i_scaled_against_mpmath(nu, x):
    with mp.workdps(40):
        ref = mp.log(mp.besseli(nu, x)) - x
    assert log_bessel_i_scaled(nu, x) == pytest.approx(float(ref), abs=1e-10 * max(1.0, abs(float(ref))))


@pytest.mark.parametrize("nu", [0.0, 0.5, 9.0, 99.0, 999.0])
def test_log_bessel_norm_large_order_against_mpmath(nu):
    x = np.array([0.5, nu + 1, 3 * nu + 10, 1e4])
    with mp.workdps(40):
        ref = [float(mp.log(mp.gamma(nu + 1) * mp.power(2, nu) * mp.besseli(nu, xi) / mp.power(xi, nu))) for xi in x]
    assert np.allclose(log_bessel_norm(nu, x), ref, rtol=1e-10, atol=1e-12)


def test_log_bessel_norm_is_zero_and_even_at_origin():
    assert log_bessel_norm(3.0, 0.0) == 0.0
    assert log_bessel_norm(2.5, -1.7) == log_bessel_norm(2.5, 1.7)


@settings(max_examples=60)
@given(nu=st.sampled_from([k / 2 for k in range(4, 21)]), x=st.floats(0.1, 100.0))
def test_recurrence_scaled(nu, x):
    # I_nu = I_{nu-2} - (2 (nu - 1) / x) I_{nu-1}; the e^{-x} factor cancels
    lhs = bessel_i_scaled(nu, x)
    rhs = bessel_i_scaled(nu - 2, x) - 2 * (nu - 1) / x * bessel_i_scaled(nu - 1, x)
    assert lhs == pytest.approx(rhs, rel=1e-8, abs=1e-300)


@given(nu=HALF_ORDERS, x=st.floats(1e-3, 500.0), dx=st.floats(1e-3, 10.0))
def test_normalized_bessel_increasing(nu, x, dx):
    # I_nu(x) / x**nu is strictly increasing, so is its normalized log
    assert log_bessel_norm(nu, x + dx) > log_bessel_norm(nu, x)


def test_bessel_ratio_limits():
    assert bessel_ratio_over_x(1.0, 0.0) == pytest.approx(0.25)
    assert bessel_ratio(0.0, 2.0) == pytest.approx(mp_ive(1, 2.0) / mp_ive(0, 2.0), rel=1e-12)
