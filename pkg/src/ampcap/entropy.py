"""Output density, output entropy, marginal entropy density, rate and KKT residuals.

All quantities are expressed through the log mixture ratio

    L(r) = ln sum_i p_i exp(g(r, rho_i)),

so that ln f_V(v) = ln K_n(v, 0) + L(r) and, exactly,

    h(V)        = (n + E P**2)/2 + c0 - E_F[L(R)],
    h~(rho)     = (n + rho**2)/2 + c0 - E_rho[L(R)],
    rate        = E P**2 / 2 - E_F[L(R)],

with c0 = ln(Gamma(n/2) 2**(n/2-1)).  The same formulas hold for n = 1,
where V is the magnitude of a scalar output.
"""

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import logsumexp

from .dist import AmplitudeDistribution, RadialDensity
from .exceptions import DomainError, NumericalError
from .kernel import log_kernel_ratio, log_kernel_zero, log_norm_const, radial_grid

REFINE_TOL = 1e-8
MAX_REFINE = 8
KKT_TOL = 1e-5


class MixtureModel:
    """Output law of a finite amplitude mixture tabulated on a radial grid.

    Build-once, read-many: nothing is mutated after ``__init__``.
    """

    def __init__(self, n, points, probs, rho_max, refine=1):
        self.n = int(n)
        self.points = np.asarray(points, dtype=float)
        self.probs = np.asarray(probs, dtype=float)
        self.grid = radial_grid(self.n, float(rho_max), int(refine))
        r = self.grid.r
        g = log_kernel_ratio(self.n, r[None, :], self.points[:, None])
        with np.errstate(divide="ignore"):
            self.log_mix = logsumexp(g + np.log(self.probs)[:, None], axis=0)
        weights = np.exp(self.grid.log_weights[None, :] + g)
        self.mean_log_mix = float(self.probs @ (weights @ self.log_mix))
        self.second_moment = float(self.probs @ self.points**2)
        self.c0 = log_norm_const(self.n)

    @property
    def rho_max(self):
        return self.grid.rho_max

    def entropy(self):
        return (self.n + self.second_moment) / 2 + self.c0 - self.mean_log_mix

    def rate(self):
        return self.second_moment / 2 - self.mean_log_mix

    def expected_log_mix(self, rho):
        """E[L(R) | P = rho] for each rho."""
        rho = np.atleast_1d(np.asarray(rho, dtype=float))
        g = log_kernel_ratio(self.n, self.grid.r[None, :], rho[:, None])
        return np.exp(self.grid.log_weights[None, :] + g) @ self.log_mix

    def marginal(self, rho):
        rho = np.atleast_1d(np.asarray(rho, dtype=float))
        return (self.n + rho**2) / 2 + self.c0 - self.expected_log_mix(rho)


def _components(dist):
    """(n, points, probs, grid reach) of a finite or continuous amplitude law."""
    if isinstance(dist, AmplitudeDistribution):
        reach = max(dist.points)
        if math.isfinite(dist.spec.u_p):
            reach = max(reach, dist.spec.peak_amplitude)
        return dist.n, dist.points, dist.probs, reach
    if isinstance(dist, RadialDensity):
        x, p = dist.discretize()
        return dist.n, tuple(x), tuple(p), float(x.max())
    raise TypeError(f"expected an amplitude distribution, got {type(dist).__name__}")


@lru_cache(maxsize=64)
def _model_at(n, points, probs, reach, refine):
    return MixtureModel(n, points, probs, reach, refine)


@lru_cache(maxsize=64)
def _converged(n, points, probs, reach):
    """Model at the coarsest refinement that agrees with twice its panel count."""
    refine = 1
    prev = _model_at(n, points, probs, reach, refine)
    while refine < MAX_REFINE:
        nxt = _model_at(n, points, probs, reach, 2 * refine)
        if abs(nxt.mean_log_mix - prev.mean_log_mix) < REFINE_TOL:
            return prev
        prev, refine = nxt, 2 * refine
    raise NumericalError(
        "radial quadrature did not converge",
        detail=(_model_at(n, points, probs, reach, refine // 2).entropy(), prev.entropy()),
    )


def output_model(dist, reach=None):
    """Converged :class:`MixtureModel` for ``dist`` covering inputs up to ``reach``."""
    n, points, probs, own = _components(dist)
    return _converged(n, points, probs, float(max(own, reach or 0.0)))


def output_density_log(dist, v):
    """ln f_V(v) for the output V = |Y|**n / n induced by ``dist``."""
    n, points, probs, _ = _components(dist)
    v = np.asarray(v, dtype=float)
    if np.any(v < 0) or np.any(np.isnan(v)):
        raise DomainError("output_density_log needs v >= 0")
    with np.errstate(divide="ignore"):
        r = np.exp(np.log(n * v) / n)
    g = log_kernel_ratio(n, r[..., None], np.asarray(points))
    out = log_kernel_zero(n, r) + logsumexp(g + np.log(probs), axis=-1)
    return float(out) if np.ndim(out) == 0 else out


def output_entropy(dist):
    """Differential entropy h(V) in nats."""
    return output_model(dist).entropy()


def marginal_entropy_density(dist, rho):
    """h~(rho) = -E[ln f_V(V) | P = rho] in nats; ``rho`` may be an array."""
    rho_arr = np.asarray(rho, dtype=float)
    if np.any(rho_arr < 0) or np.any(np.isnan(rho_arr)):
        raise DomainError("marginal_entropy_density needs rho >= 0")
    model = output_model(dist, float(rho_arr.max()) if rho_arr.size else None)
    out = model.marginal(rho_arr.ravel()).reshape(rho_arr.shape)
    return float(out) if out.ndim == 0 else out


def rate(dist):
    """Achievable rate I(X; Y) in nats of the isotropic input with amplitude law ``dist``."""
    return output_model(dist).rate()


@dataclass(frozen=True, eq=False)
class KktReport:
    lam: float
    grid: np.ndarray
    residuals: np.ndarray
    worst_violation: float
    worst_location: float
    mass_point_residuals: np.ndarray
    entropy: float

    def certified(self, tol=KKT_TOL):
        return self.worst_violation <= tol and bool(np.all(self.mass_point_residuals <= tol))

    def to_dict(self):
        return {
            "lambda": self.lam,
            "worst_violation": self.worst_violation,
            "worst_location": self.worst_location,
            "mass_point_residuals": self.mass_point_residuals.tolist(),
            "grid_size": int(self.grid.size),
        }


def kkt_residuals(model, rho, lam, u_a):
    """s(rho) = h~(rho) - h(V) - lam (rho**2 - u_a) for a tabulated model."""
    rho = np.atleast_1d(np.asarray(rho, dtype=float))
    s = model.marginal(rho) - model.entropy()
    if lam != 0:
        s = s - lam * (rho**2 - u_a)
    return s


def kkt_report_from_model(model, lam, spec, grid_size=512):
    if grid_size < 64:
        raise DomainError("kkt grid_size must be at least 64")
    if lam < 0:
        raise DomainError("lambda must be non-negative")
    if lam > 0 and not math.isfinite(spec.u_a):
        raise DomainError("a positive lambda needs a finite average bound")
    peak = spec.peak_amplitude
    grid = np.union1d(np.linspace(0.0, peak, grid_size), model.points)
    res = kkt_residuals(model, grid, lam, spec.u_a)
    at_mass = np.abs(kkt_residuals(model, model.points, lam, spec.u_a))
    k = int(np.argmax(res))
    return KktReport(lam=float(lam), grid=grid, residuals=res, worst_violation=float(res[k]),
                     worst_location=float(grid[k]), mass_point_residuals=at_mass,
                     entropy=model.entropy())


def kkt_report(dist, lam, spec, grid_size=512):
    """KKT residual s(rho) on a uniform grid of [0, sqrt(u_p)] plus the support points."""
    return kkt_report_from_model(output_model(dist, spec.peak_amplitude), lam, spec, grid_size)
