"""Log-gamma and exponentially scaled modified Bessel functions of real order.

Everything the kernel needs is expressed through the *normalized* log Bessel
function

    B_nu(x) = ln( Gamma(nu+1) 2**nu I_nu(x) / x**nu ),    B_nu(0) = 0,

which is smooth, even in x, and never overflows: it grows like x for large x.
Three evaluation routes cover the whole (nu, x) plane:

* a positive-term power series for x**2 <= nu + 1,
* scipy's exponentially scaled ``ive`` where its result is a normal float,
* the uniform (Debye) asymptotic expansion where ``ive`` underflows, which
  only happens for large orders.
"""

import math

import numpy as np
from scipy import special

from .exceptions import DomainError

_LN2 = math.log(2.0)
_SERIES_TERMS = 32
_IVE_FLOOR = 1e-290


def log_gamma(x):
    """ln Gamma(x) for x > 0 (scalar or array)."""
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)) or np.any(arr <= 0):
        raise DomainError(f"log_gamma requires finite x > 0, got {x!r}")
    out = special.gammaln(arr)
    return float(out) if out.ndim == 0 else out


def bessel_order(n):
    """Bessel order nu = n/2 - 1 attached to channel dimension n >= 1."""
    if int(n) != n or n < 1:
        raise DomainError(f"dimension must be an integer >= 1, got {n!r}")
    return n / 2.0 - 1.0


def _check_order(nu):
    if not math.isfinite(nu) or nu < -0.5:
        raise DomainError(f"Bessel order must be >= -1/2, got {nu!r}")


def _series_log_norm(nu, x):
    # sum_k (x^2/4)^k Gamma(nu+1) / (k! Gamma(nu+k+1)); all terms positive
    q = 0.25 * x * x
    term = np.ones_like(x)
    total = np.ones_like(x)
    for k in range(1, _SERIES_TERMS):
        term = term * q / (k * (nu + k))
        total = total + term
    return np.log(total)


_DEBYE_U = (
    (1.0,),
    (0.0, 3.0 / 24, 0.0, -5.0 / 24),
    (0.0, 0.0, 81.0 / 1152, 0.0, -462.0 / 1152, 0.0, 385.0 / 1152),
    (0.0, 0.0, 0.0, 30375.0 / 414720, 0.0, -369603.0 / 414720, 0.0,
     765765.0 / 414720, 0.0, -425425.0 / 414720),
    (0.0, 0.0, 0.0, 0.0, 4465125.0 / 39813120, 0.0, -94121676.0 / 39813120,
     0.0, 349922430.0 / 39813120, 0.0, -446185740.0 / 39813120, 0.0,
     185910725.0 / 39813120),
)


def _debye_log_norm(nu, x):
    """B_nu(x) from the uniform asymptotic expansion in 1/nu (nu large)."""
    z = x / nu
    s = np.sqrt(1.0 + z * z)
    t = 1.0 / s
    corr = np.zeros_like(x)
    for k, coeffs in enumerate(_DEBYE_U):
        corr = corr + np.polynomial.polynomial.polyval(t, coeffs) / nu**k
    # nu*eta - nu*ln(x) with the ln z pieces cancelled analytically
    log_i_minus = nu * (s - np.log1p(s)) - nu * math.log(nu)
    log_i_minus = log_i_minus - 0.5 * math.log(2 * math.pi * nu) - 0.5 * np.log(s)
    return special.gammaln(nu + 1.0) + nu * _LN2 + log_i_minus + np.log(corr)


def log_bessel_norm(nu, x):
    """Normalized log Bessel function B_nu(x) (see module docstring).

    ``x`` may be an array; ``nu`` is a scalar order >= -1/2.
    """
    _check_order(nu)
    xa = np.abs(np.asarray(x, dtype=float))
    out = np.empty_like(xa)
    small = xa * xa <= nu + 1.0
    if np.any(small):
        out[small] = _series_log_norm(nu, xa[small])
    big = ~small
    if np.any(big):
        xb = xa[big]
        with np.errstate(divide="ignore", under="ignore"):
            v = special.ive(nu, xb)
        ok = np.isfinite(v) & (v > _IVE_FLOOR)
        res = np.empty_like(xb)
        if np.any(ok):
            xo = xb[ok]
            res[ok] = (special.gammaln(nu + 1.0) + nu * _LN2 + np.log(v[ok])
                       + xo - nu * np.log(xo))
        if not np.all(ok):
            res[~ok] = _debye_log_norm(nu, xb[~ok])
        out[big] = res
    return float(out) if out.ndim == 0 else out


def log_bessel_i_scaled(nu, x):
    """ln(e^{-x} I_nu(x)) for x >= 0; -inf at x = 0 when nu > 0."""
    _check_order(nu)
    xa = np.asarray(x, dtype=float)
    if np.any(xa < 0) or np.any(np.isnan(xa)):
        raise DomainError("log_bessel_i_scaled requires x >= 0")
    with np.errstate(divide="ignore", invalid="ignore"):
        out = (log_bessel_norm(nu, xa) - special.gammaln(nu + 1.0) - nu * _LN2
               + nu * np.log(xa) - xa)
    out = np.where(xa == 0, 0.0 if nu == 0 else (-np.inf if nu > 0 else np.inf), out)
    return float(out) if out.ndim == 0 else out


def bessel_i_scaled(nu, x):
    """e^{-x} I_nu(x) for x >= 0 and nu >= -1/2.

    Exact limits at x = 0: 1 for nu = 0, 0 for nu > 0, +inf for nu = -1/2.
    """
    return np.exp(log_bessel_i_scaled(nu, x))


def bessel_ratio_over_x(nu, x):
    """I_{nu+1}(x) / (x I_nu(x)), finite at x = 0 where it equals 1/(2nu+2)."""
    xa = np.asarray(x, dtype=float)
    out = np.exp(log_bessel_norm(nu + 1.0, xa) - log_bessel_norm(nu, xa)) / (2.0 * nu + 2.0)
    return out


def bessel_ratio(nu, x):
    """I_{nu+1}(x) / I_nu(x)."""
    xa = np.asarray(x, dtype=float)
    return xa * bessel_ratio_over_x(nu, xa)
