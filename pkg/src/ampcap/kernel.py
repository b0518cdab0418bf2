"""Conditional output-magnitude kernel and the radial quadrature it is integrated on.

With V = R**n / n and r = (n v)**(1/n) the kernel factors as

    K_n(v, rho) = K_n(v, 0) * exp(g(r, rho)),
    g(r, rho)   = -rho**2 / 2 + B_nu(rho * r),        nu = n/2 - 1,

where K_n(v, 0) = exp(-r**2/2) / (Gamma(n/2) 2**nu) and B_nu is the
normalized log Bessel function from :mod:`ampcap.specfun`.  Integrals over v
are done in r, where r**(n-1) K_n(v, 0) is the chi density with n degrees of
freedom; every expectation therefore becomes a chi-weighted sum over the
nodes of a :class:`RadialGrid`.
"""

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .exceptions import DomainError, ValidationError
from .quadrature import composite_rule
from .specfun import log_bessel_norm, log_gamma

LN_2PI = math.log(2 * math.pi)
# below this Bessel argument the rho*v = 0 branch is used
BRANCH_EPS = 1e-12
# half-width, in noise standard deviations, kept around the bulk of R
RADIAL_MARGIN = 10.0


@dataclass(frozen=True)
class ChannelSpec:
    """Identity n-dimensional AWGN channel with peak and average power bounds."""

    n: int
    u_p: float
    u_a: float = math.inf

    def __post_init__(self):
        if isinstance(self.n, bool) or int(self.n) != self.n or self.n < 1:
            raise ValidationError(f"n must be an integer >= 1, got {self.n!r}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "u_p", float(self.u_p))
        object.__setattr__(self, "u_a", float(self.u_a))
        for name in ("u_p", "u_a"):
            value = getattr(self, name)
            if math.isnan(value) or value < 0:
                raise ValidationError(f"{name} must be non-negative, got {value!r}")
        if math.isinf(self.u_p) and math.isinf(self.u_a):
            raise ValidationError("at least one of u_p, u_a must be finite")

    @property
    def relaxed(self):
        """True when the average constraint cannot bind (u_a >= u_p)."""
        return self.u_a >= self.u_p

    @property
    def peak_amplitude(self):
        return math.sqrt(self.u_p)

    def to_dict(self):
        return {"n": self.n, "u_p": _num(self.u_p), "u_a": _num(self.u_a)}


def _num(x):
    return x if math.isfinite(x) else "inf"


@dataclass(frozen=True)
class RateConstants:
    n: int
    alphas: tuple
    additive_constant: float


def rate_constants(n):
    """alpha_i for i = 1..n-2 and the additive constant of the rate formula."""
    if int(n) != n or n < 2:
        raise DomainError(f"rate_constants needs n >= 2, got {n!r}")
    n = int(n)
    alphas = tuple(
        math.sqrt(math.pi) * math.exp(log_gamma((n - i) / 2) - log_gamma((n - i + 1) / 2))
        for i in range(1, n - 1)
    )
    log_alpha_sum = sum(math.log(a) for a in alphas)
    const = log_alpha_sum + (1 - n / 2) * LN_2PI - n / 2
    return RateConstants(n=n, alphas=alphas, additive_constant=const)


def log_norm_const(n):
    """ln(Gamma(n/2) 2**(n/2-1)), the reciprocal of the rho*v = 0 branch."""
    return log_gamma(n / 2) + (n / 2 - 1) * math.log(2)


def log_kernel_ratio(n, r, rho):
    """g(r, rho) = ln K_n(v, rho) - ln K_n(v, 0); broadcasts over r and rho."""
    r = np.asarray(r, dtype=float)
    rho = np.asarray(rho, dtype=float)
    x = rho * r
    b = log_bessel_norm(n / 2 - 1, x)
    b = np.where(x < BRANCH_EPS, 0.0, b)
    return -0.5 * rho * rho + b


def log_kernel_zero(n, r):
    """ln K_n(v, 0) as a function of r = (n v)**(1/n)."""
    r = np.asarray(r, dtype=float)
    return -0.5 * r * r - log_norm_const(n)


def log_chi_density(n, r):
    """Log density of the chi distribution with n degrees of freedom."""
    r = np.asarray(r, dtype=float)
    with np.errstate(divide="ignore"):
        lr = np.log(r)
    head = (n - 1) * lr if n > 1 else np.zeros_like(r)
    out = head - 0.5 * r * r - (n / 2 - 1) * math.log(2) - log_gamma(n / 2)
    if n > 1:
        out = np.where(r == 0, -np.inf, out)
    return out


def kernel_log(n, v, rho):
    """ln K_n(v, rho) for n >= 2, v >= 0, rho >= 0."""
    if int(n) != n or n < 2:
        raise DomainError("kernel_log needs n >= 2; use the scalar module for n = 1")
    v = np.asarray(v, dtype=float)
    rho = np.asarray(rho, dtype=float)
    if np.any(v < 0) or np.any(rho < 0) or np.any(np.isnan(v)) or np.any(np.isnan(rho)):
        raise DomainError("kernel_log needs v >= 0 and rho >= 0")
    with np.errstate(divide="ignore"):
        r = np.exp(np.log(n * v) / n)
    out = log_kernel_zero(n, r) + log_kernel_ratio(n, r, rho)
    return float(out) if out.ndim == 0 else out


def radial_range(n, rho_max):
    """[r_lo, r_hi] holding all but a negligible tail of R for inputs <= rho_max."""
    perp = math.sqrt(max(n - 1, 0))
    lo = max(0.0, perp - RADIAL_MARGIN)
    hi = math.hypot(rho_max + RADIAL_MARGIN, perp + RADIAL_MARGIN)
    return lo, hi


@dataclass(frozen=True, eq=False)
class RadialGrid:
    """Quadrature nodes in r with chi-density weights folded into ``log_weights``."""

    n: int
    rho_max: float
    r: np.ndarray = field(repr=False)
    log_weights: np.ndarray = field(repr=False)

    @property
    def size(self):
        return self.r.size


@lru_cache(maxsize=256)
def radial_grid(n, rho_max, refine=1):
    """Composite Gauss-Legendre grid for expectations of R given P <= rho_max.

    Panels are at most 2 units wide (about three noise standard deviations)
    before refinement; ``refine`` multiplies the panel count.
    """
    lo, hi = radial_range(n, rho_max)
    panels = max(4, math.ceil((hi - lo) / 2.0)) * int(refine)
    r, w = composite_rule(lo, hi, panels)
    logw = np.log(w) + log_chi_density(n, r)
    r.setflags(write=False)
    logw.setflags(write=False)
    return RadialGrid(n=n, rho_max=float(rho_max), r=r, log_weights=logw)
