"""Capacity bounds: Gaussian upper bound, constant-amplitude rates, MISO and MIMO bound families.

A deterministic channel Y = H X + W with singular values lambda_i is
equivalent to X + W' with noise covariance diag(lambda_i**-2).  Every bound
below is in nats.
"""

import math
import warnings
from dataclasses import asdict, dataclass

import numpy as np
from scipy.optimize import brentq

from .dist import seed_peak_only
from .entropy import rate
from .exceptions import DomainError, NumericalError, ValidationError
from .kernel import ChannelSpec
from .quadrature import integrate
from .scalar import scalar_capacity
from .solver import solve_amplitude
from .specfun import log_gamma

LN_2PIE = math.log(2 * math.pi * math.e)
# singular values below this fraction of the largest count as zero modes
RANK_TOL = 1e-12
EPI_TOL = 1e-13


@dataclass(frozen=True)
class MimoSpec:
    """Channel singular values with the peak and average bounds of the input."""

    singular_values: tuple
    u_p: float
    u_a: float = math.inf

    def __post_init__(self):
        sv = tuple(float(s) for s in np.atleast_1d(self.singular_values))
        if not sv:
            raise ValidationError("a MIMO channel needs at least one singular value")
        if any(not math.isfinite(s) or s <= 0 for s in sv):
            raise ValidationError("singular values must be positive and finite")
        object.__setattr__(self, "singular_values", sv)
        # validates the power bounds the same way as the identity channel
        ChannelSpec(len(sv), self.u_p, self.u_a)
        object.__setattr__(self, "u_p", float(self.u_p))
        object.__setattr__(self, "u_a", float(self.u_a))

    @property
    def n(self):
        return len(self.singular_values)

    @property
    def gains(self):
        """lambda_i**2, the inverse noise variances after whitening."""
        return np.array(self.singular_values) ** 2

    @property
    def log_det_noise(self):
        """ln |Sigma| with Sigma = diag(lambda_i**-2)."""
        return float(-np.log(self.gains).sum())

    @classmethod
    def from_matrix(cls, matrix, u_p, u_a=math.inf):
        """Reduce a channel matrix to its non-zero singular values."""
        sv = np.linalg.svd(np.atleast_2d(np.asarray(matrix, dtype=float)), compute_uv=False)
        keep = sv > RANK_TOL * max(sv.max(), 0.0) if sv.size else sv > 0
        if not np.all(keep):
            warnings.warn(f"dropping {int((~keep).sum())} zero singular value(s)", stacklevel=2)
        return cls(tuple(sv[keep]), u_p, u_a)

    def to_dict(self):
        return {"singular_values": list(self.singular_values), "u_p": _num(self.u_p),
                "u_a": _num(self.u_a)}


def _num(x):
    return x if math.isfinite(x) else "inf"


def _usable_power(u_p, u_a):
    return min(u_p, u_a)


def gaussian_upper(spec):
    """Capacity with the peak bound relaxed to an average bound min(u_p, u_a).

    For the identity channel this is (n/2) ln(1 + min(u_p, u_a)/n); for a
    :class:`MimoSpec` it is the water-filling capacity over the gains.
    """
    power = _usable_power(spec.u_p, spec.u_a)
    if isinstance(spec, MimoSpec):
        return water_filling(spec.gains, power)
    return 0.5 * spec.n * math.log1p(power / spec.n)


def water_filling(gains, power):
    """max sum 0.5 ln(1 + g_i P_i) subject to sum P_i = power."""
    g = np.sort(np.asarray(gains, dtype=float))[::-1]
    if power <= 0:
        return 0.0
    inv = 1.0 / g
    for k in range(g.size, 0, -1):
        level = (power + inv[:k].sum()) / k
        if level > inv[k - 1]:
            return float(0.5 * np.log(level * g[:k]).sum())
    raise NumericalError("water-filling found no active set")


def constant_amplitude_rate(n, u_p):
    """Rate of the input uniform on the sphere of radius sqrt(u_p)."""
    if int(n) != n or n < 2:
        raise DomainError("constant_amplitude_rate needs n >= 2")
    if u_p < 0 or not math.isfinite(u_p):
        raise DomainError("constant_amplitude_rate needs a finite u_p >= 0")
    return rate(seed_peak_only(ChannelSpec(int(n), u_p)))


def constant_amplitude_gap(n, u_p):
    """n * [(n/2) ln(1 + u_p/n) - constant_amplitude_rate(n, u_p)]."""
    return n * (0.5 * n * math.log1p(u_p / n) - constant_amplitude_rate(n, u_p))


def ball_entropy(m, u_p):
    """Largest differential entropy of an m-dimensional vector with norm**2 <= u_p (uniform ball)."""
    if m < 1 or u_p <= 0:
        raise DomainError("ball_entropy needs m >= 1 and u_p > 0")
    return math.log(2.0) + 0.5 * m * math.log(math.pi * u_p) - math.log(m) - log_gamma(m / 2)


def epi_constant_amplitude_lower(n, u_p):
    """EPI lower bound on the constant-amplitude rate, through the first n-1 coordinates."""
    if int(n) != n or n < 2:
        raise DomainError("epi_constant_amplitude_lower needs n >= 2")
    if u_p < 0:
        raise DomainError("epi_constant_amplitude_lower needs u_p >= 0")
    m = n - 1
    if u_p == 0:
        return 0.0
    log_ratio = (2 / m - 1) * math.log(2) + math.log(u_p) - 1.0 - (2 / m) * (math.log(m) + log_gamma(m / 2))
    return 0.5 * m * math.log1p(math.exp(log_ratio))


def miso_capacity(channel_norm, u_p, u_a=math.inf):
    """Capacity of y = h^T x + w with ||h|| = channel_norm, via the matched scalar channel."""
    if channel_norm < 0 or not math.isfinite(channel_norm):
        raise DomainError("channel_norm must be finite and non-negative")
    g = channel_norm**2
    if g == 0:
        return 0.0
    return scalar_capacity(u_p * g, u_a * g).capacity


@dataclass(frozen=True)
class EpiParams:
    """Optimal input amplitude density a rho**(n-1) exp(-lam rho**2 / n**(2/n)) on [0, sqrt(u_p)]."""

    n: int
    u_p: float
    u_a: float
    lam: float
    log_a: float

    @property
    def a(self):
        return math.exp(self.log_a)


def _radial_moments(n, u_p, kappa):
    """(ln Z, E[rho**2]) for the density proportional to rho**(n-1) exp(-kappa rho**2) on [0, sqrt(u_p)]."""
    peak = math.sqrt(u_p)
    # log integrand at its maximum on the interval, subtracted before exponentiating
    rho_star = peak if kappa <= 0 else min(peak, math.sqrt((n - 1) / (2 * kappa)))
    shift = (n - 1) * math.log(rho_star) - kappa * rho_star**2 if rho_star > 0 else 0.0

    def dens(r):
        with np.errstate(divide="ignore"):
            return np.exp((n - 1) * np.log(r) - kappa * r * r - shift)

    z = integrate(dens, 0.0, peak, tol=EPI_TOL)
    m2 = integrate(lambda r: r * r * dens(r), 0.0, peak, tol=EPI_TOL)
    return math.log(z) + shift, m2 / z


def solve_epi_params(n, u_p, u_a=math.inf):
    """(lam, a) of the entropy-maximizing input under the peak and average bounds."""
    if int(n) != n or n < 1:
        raise DomainError("solve_epi_params needs an integer n >= 1")
    if not (u_p > 0 and math.isfinite(u_p)):
        raise DomainError("solve_epi_params needs a finite u_p > 0")
    if u_a <= 0:
        raise DomainError("solve_epi_params needs u_a > 0")
    n = int(n)
    scale = n ** (2 / n)
    if u_a >= n * u_p / (n + 2):
        # uniform over the ball: a = n / u_p**(n/2)
        return EpiParams(n, u_p, u_a, 0.0, math.log(n) - 0.5 * n * math.log(u_p))

    def excess(lam):
        return _radial_moments(n, u_p, lam / scale)[1] - u_a

    hi = 1.0
    for _ in range(200):
        if excess(hi) < 0:
            break
        hi *= 2
    else:
        raise NumericalError("could not bracket the EPI multiplier", detail={"lambda": hi})
    lam = brentq(excess, 0.0, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps)
    log_z, _ = _radial_moments(n, u_p, lam / scale)
    return EpiParams(n, u_p, u_a, lam, -log_z)


def input_entropy(params):
    """h(X) of the entropy-maximizing input described by ``params``."""
    n = params.n
    power = params.lam * params.u_a / n ** (2 / n) if params.lam > 0 else 0.0
    return power + math.log(2.0) + 0.5 * n * math.log(math.pi) - params.log_a - log_gamma(n / 2)


def epi_lower(spec):
    """Vector-EPI lower bound for the channel ``spec`` (identity or :class:`MimoSpec`)."""
    n = spec.n
    log_det = spec.log_det_noise if isinstance(spec, MimoSpec) else 0.0
    if spec.u_p == 0 or spec.u_a == 0:
        return 0.0
    h_x = input_entropy(solve_epi_params(n, spec.u_p, spec.u_a))
    noise = LN_2PIE + log_det / n
    return 0.5 * n * (np.logaddexp(2 * h_x / n, noise) - noise)


def epi_gap(spec):
    """epi_lower - (h(X) - h(W)): how far the EPI bound still is from its large-power limit."""
    n = spec.n
    log_det = spec.log_det_noise if isinstance(spec, MimoSpec) else 0.0
    h_x = input_entropy(solve_epi_params(n, spec.u_p, spec.u_a))
    return epi_lower(spec) - (h_x - 0.5 * (n * LN_2PIE + log_det))


@dataclass(frozen=True)
class BoundSet:
    gaussian_upper: float
    cubic_lower: float
    cubic_upper: float
    modified_cubic_lower: float
    elliptical_lower: float
    elliptical_upper: float
    epi_lower: float

    LOWER = ("cubic_lower", "modified_cubic_lower", "elliptical_lower", "epi_lower")
    UPPER = ("gaussian_upper", "cubic_upper", "elliptical_upper")

    def lowers(self):
        return {k: getattr(self, k) for k in self.LOWER}

    def uppers(self):
        return {k: getattr(self, k) for k in self.UPPER}

    def consistent(self, slack=1e-4):
        return max(self.lowers().values()) <= min(self.uppers().values()) + slack

    def to_dict(self):
        return asdict(self)


def _scalar_sum(gains, u_p, u_a):
    return float(sum(scalar_capacity(g * u_p, g * u_a).capacity for g in gains))


def identity_capacity(n, u_p, u_a=math.inf):
    if u_p == 0 or u_a == 0:
        return 0.0
    return solve_amplitude(ChannelSpec(n, u_p, u_a)).capacity


def mimo_bounds(spec):
    """All bound families for the channel ``spec``."""
    n, g = spec.n, spec.gains
    v = g / g.sum()
    lo_g, hi_g = float(g.min()), float(g.max())
    return BoundSet(
        gaussian_upper=gaussian_upper(spec),
        cubic_lower=_scalar_sum(g, spec.u_p / n, spec.u_a / n),
        cubic_upper=_scalar_sum(g, spec.u_p, spec.u_a),
        modified_cubic_lower=float(sum(scalar_capacity(gi * vi * spec.u_p, gi * vi * spec.u_a).capacity
                                       for gi, vi in zip(g, v))),
        # noise covariance sandwiched between min and max of lambda_i**-2 times I
        elliptical_lower=identity_capacity(n, lo_g * spec.u_p, lo_g * spec.u_a),
        elliptical_upper=identity_capacity(n, hi_g * spec.u_p, hi_g * spec.u_a),
        epi_lower=float(epi_lower(spec)),
    )
