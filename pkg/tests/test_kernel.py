import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad

from ampcap.exceptions import DomainError, ValidationError
from ampcap.kernel import (BRANCH_EPS, ChannelSpec, kernel_log, log_chi_density, radial_grid,
                           rate_constants)
from ampcap.specfun import bessel_i_scaled, log_gamma


def kernel(n, v, rho):
    return math.exp(kernel_log(n, v, rho))


def radial_integral(func, n, rho):
    """Integral over v in [0, inf) of func, written in r = (n v)**(1/n)."""
    hi = rho + math.sqrt(n) + 40.0
    peak = max(rho, math.sqrt(max(n - 1, 0)))
    val, _ = quad(lambda r: func(r**n / n) * r ** (n - 1), 0.0, hi, points=[peak], limit=400,
                  epsabs=1e-13, epsrel=1e-12)
    return val


# --- examples ---------------------------------------------------------------

def test_kernel_examples():
    assert kernel_log(2, 1.0, 0.0) == pytest.approx(-1.0, abs=1e-14)
    assert kernel_log(2, 0.5, 1.0) == pytest.approx(math.log(0.46576), abs=1e-4)
    assert kernel_log(4, 0.0, 2.0) == pytest.approx(-2.0 - math.log(2.0), abs=1e-14)


def test_kernel_matches_bessel_form():
    # K_2(v, rho) = exp(-v - rho**2 / 2) I_0(rho sqrt(2 v))
    v, rho = 3.0, 2.5
    x = rho * math.sqrt(2 * v)
    direct = math.exp(-v - rho**2 / 2 + x) * bessel_i_scaled(0.0, x)
    assert kernel(2, v, rho) == pytest.approx(direct, rel=1e-12)


def test_kernel_rejects_bad_arguments():
    with pytest.raises(DomainError):
        kernel_log(1, 1.0, 1.0)
    with pytest.raises(DomainError):
        kernel_log(2, -1.0, 1.0)
    with pytest.raises(DomainError):
        kernel_log(3, 1.0, -0.1)


@pytest.mark.parametrize("n", [2, 3, 5, 12])
def test_kernel_continuous_across_branch(n):
    v = 2.0
    r = (n * v) ** (1 / n)
    below = kernel_log(n, v, 0.5 * BRANCH_EPS / r)
    above = kernel_log(n, v, 2.0 * BRANCH_EPS / r)
    assert below == pytest.approx(above, abs=1e-12)
    assert kernel_log(n, v, 0.0) == pytest.approx(above, abs=1e-12)


def test_kernel_is_finite_at_extremes():
    vals = kernel_log(20, np.array([0.0, 1e-300, 1e3, 1e12]), np.array([0.0, 50.0, 1e3, 30.0]))
    assert np.all(np.isfinite(vals))


# --- rate constants -----------------------------------------------------------

def test_rate_constants_examples():
    c2 = rate_constants(2)
    assert c2.alphas == ()
    assert c2.additive_constant == pytest.approx(-1.0, abs=1e-15)
    c3 = rate_constants(3)
    assert sum(math.log(a) for a in c3.alphas) == pytest.approx(math.log(2.0), abs=1e-14)
    assert sum(math.log(a) for a in c3.alphas) == pytest.approx(-log_gamma(1.5) + 0.5 * math.log(math.pi), abs=1e-14)
    with pytest.raises(DomainError):
        rate_constants(1)


@given(st.integers(2, 300))
def test_rate_constants_closed_form(n):
    c = rate_constants(n)
    expected = -log_gamma(n / 2) + (n - 2) / 2 * math.log(math.pi) + (1 - n / 2) * math.log(2 * math.pi) - n / 2
    assert c.additive_constant == pytest.approx(expected, abs=1e-9 * max(1.0, abs(expected)))
    assert all(a > 0 for a in c.alphas)
    assert len(c.alphas) == n - 2


# --- channel spec -------------------------------------------------------------

def test_channel_spec_validation():
    spec = ChannelSpec(4, 30, 10)
    assert not spec.relaxed and spec.peak_amplitude == pytest.approx(math.sqrt(30))
    assert ChannelSpec(2, 5).relaxed
    assert ChannelSpec(2, 5).to_dict() == {"n": 2, "u_p": 5.0, "u_a": "inf"}
    for bad in [(0, 1, 1), (2, -1, 1), (2, 1, -1), (2, math.inf, math.inf), (2, math.nan, 1), (True, 1, 1)]:
        with pytest.raises(ValidationError):
            ChannelSpec(*bad)


# --- identities ---------------------------------------------------------------

@pytest.mark.parametrize("n", [2, 3, 4, 10, 20])
@pytest.mark.parametrize("rho", [0.0, 1.0, 5.0, 10.0])
def test_kernel_normalization(n, rho):
    assert radial_integral(lambda v: kernel(n, v, rho), n, rho) == pytest.approx(1.0, abs=1e-8)


@given(n=st.integers(2, 40), v=st.floats(0.0, 200.0), rho=st.floats(0.0, 30.0))
def test_kernel_symmetry(n, v, rho):
    swapped = kernel_log(n, rho**n / n, (n * v) ** (1 / n))
    assert math.exp(kernel_log(n, v, rho)) == pytest.approx(math.exp(swapped), abs=1e-12)


@pytest.mark.parametrize("n", [2, 3, 4, 7])
@pytest.mark.parametrize("s", [0.0, 0.3, 1.0])
@pytest.mark.parametrize("v", [0.05, 1.0, 6.0])
def test_laplace_identity_in_rho(n, s, v):
    r2 = (n * v) ** (2 / n)
    val, _ = quad(lambda rho: kernel(n, v, rho) * rho ** (n - 1) * math.exp(-s * rho * rho),
                  0.0, math.sqrt(r2) + 40.0, limit=400, epsabs=1e-13, epsrel=1e-12)
    expected = math.exp(-s * r2 / (2 * s + 1)) / (2 * s + 1) ** (n / 2)
    assert val == pytest.approx(expected, abs=1e-6)


@pytest.mark.parametrize("n", [2, 3, 4, 7])
@pytest.mark.parametrize("s", [0.0, 0.3, 1.0])
@pytest.mark.parametrize("rho", [0.0, 1.0, 3.0])
def test_laplace_identity_in_v(n, s, rho):
    val = radial_integral(lambda v: kernel(n, v, rho) * math.exp(-s * (n * v) ** (2 / n)), n, rho)
    expected = math.exp(-s * rho * rho / (2 * s + 1)) / (2 * s + 1) ** (n / 2)
    assert val == pytest.approx(expected, abs=1e-6)


def bessel_i(nu, x):
    return bessel_i_scaled(nu, x) * math.exp(x)


@pytest.mark.parametrize("m", [0.0, 0.5, 1.0, 1.5])
@pytest.mark.parametrize("a", [0.5, 2.0])
@pytest.mark.parametrize("b", [-1.0, 0.0, 1.0])
def test_spherical_bessel_integral_identity(m, a, b):
    def integrand(u):
        c = math.sqrt(1 - u * u)
        return bessel_i(m, a * c) * c**m * math.exp(-b * u)

    lhs, _ = quad(integrand, -1.0, 1.0, epsabs=0, epsrel=1e-13, limit=200)
    z = math.hypot(a, b)
    rhs = math.sqrt(2 * math.pi) * a**m * bessel_i(m + 0.5, z) / z ** (m + 0.5)
    assert lhs == pytest.approx(rhs, rel=1e-6)


# --- radial grid ----------------------------------------------------------------

@pytest.mark.parametrize("n", [1, 2, 5, 30])
def test_chi_density_integrates_to_one(n):
    val, _ = quad(lambda r: math.exp(log_chi_density(n, r)) if r > 0 else 0.0, 0, 60, limit=200)
    assert val == pytest.approx(1.0, abs=1e-10)


@pytest.mark.parametrize("n", [2, 4, 20])
def test_radial_grid_reproduces_kernel_moments(n):
    grid = radial_grid(n, 4.0)
    # E[R**2 | P = 0] = n for the chi distribution
    w = np.exp(grid.log_weights)
    assert w.sum() == pytest.approx(1.0, abs=1e-12)
    assert w @ grid.r**2 == pytest.approx(n, rel=1e-10)
