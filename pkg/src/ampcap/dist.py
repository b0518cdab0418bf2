"""Finite amplitude distributions, seed inputs and continuous reference densities."""

import json
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .exceptions import DomainError, ValidationError
from .kernel import ChannelSpec
from .quadrature import composite_rule
from .specfun import log_gamma

MERGE_TOL = 1e-9
PROB_SUM_TOL = 1e-9
SUM_EXACT_TOL = 1e-12
MOMENT_TOL = 1e-9
# slack for points sitting on the peak sphere after floating-point round-off
PEAK_SLACK = 1e-12


@dataclass(frozen=True)
class AmplitudeDistribution:
    """Discrete law of the input amplitude P; build it with :func:`make_distribution`."""

    points: tuple
    probs: tuple
    spec: ChannelSpec

    @property
    def n(self):
        return self.spec.n

    @property
    def size(self):
        return len(self.points)

    def points_array(self):
        return np.array(self.points, dtype=float)

    def probs_array(self):
        return np.array(self.probs, dtype=float)

    def second_moment(self):
        return float(np.dot(self.probs_array(), self.points_array() ** 2))

    def to_dict(self):
        d = {"points": list(self.points), "probs": list(self.probs)}
        d.update(self.spec.to_dict())
        return d

    def to_json(self):
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d):
        spec = ChannelSpec(int(d["n"]), float(d["u_p"]), float(d.get("u_a", math.inf)))
        return make_distribution(d["points"], d["probs"], spec)

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def make_distribution(points, probs, spec):
    """Validate, sort and merge a finite amplitude law for ``spec``.

    Points closer than ``MERGE_TOL`` are merged (probabilities summed, the
    location taken as their probability-weighted mean).  Zero-probability
    entries are dropped.  Probabilities are renormalized after the sum check
    unless they already sum to 1 within ``SUM_EXACT_TOL``.
    """
    x = np.asarray(points, dtype=float).ravel()
    p = np.asarray(probs, dtype=float).ravel()
    if x.size != p.size or x.size == 0:
        raise ValidationError("points and probs must have the same non-zero length")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(p))):
        raise ValidationError("points and probs must be finite")
    if np.any(x < 0):
        raise ValidationError("amplitudes must be non-negative")
    if np.any(p < 0):
        raise ValidationError("probabilities must be non-negative")
    total = p.sum()
    if abs(total - 1.0) > PROB_SUM_TOL:
        raise ValidationError(f"probabilities must sum to 1, got {total!r}")
    peak = spec.peak_amplitude
    if np.any(x > peak * (1 + PEAK_SLACK) + PEAK_SLACK):
        raise ValidationError(f"amplitude {x.max()!r} exceeds the peak amplitude {peak!r}")
    x = np.minimum(x, peak)

    keep = p > 0
    x, p = x[keep], p[keep]
    order = np.argsort(x, kind="stable")
    x, p = x[order], p[order]
    mx, mp = [x[0]], [p[0]]
    for xi, pi in zip(x[1:], p[1:]):
        if xi - mx[-1] <= MERGE_TOL:
            w = mp[-1] + pi
            mx[-1] = (mx[-1] * mp[-1] + xi * pi) / w
            mp[-1] = w
        else:
            mx.append(xi)
            mp.append(pi)
    mp = np.array(mp)
    # leave sums already within the stored tolerance alone so round trips are exact
    if abs(mp.sum() - 1.0) > SUM_EXACT_TOL:
        mp = mp / mp.sum()
    # a weighted mean of points on the sphere can round past it
    mx = np.minimum(np.array(mx), peak)

    if math.isfinite(spec.u_a):
        m2 = float(np.dot(mp, mx * mx))
        if m2 > spec.u_a + MOMENT_TOL:
            raise ValidationError(f"second moment {m2!r} exceeds the average bound {spec.u_a!r}")
    return AmplitudeDistribution(tuple(float(v) for v in mx), tuple(float(v) for v in mp), spec)


def seed_peak_only(spec):
    """All mass on the peak sphere."""
    if not math.isfinite(spec.u_p):
        raise DomainError("seed_peak_only needs a finite peak bound")
    if spec.u_a < spec.u_p:
        raise DomainError("average bound is active; use seed_avg_limited")
    return make_distribution([spec.peak_amplitude], [1.0], spec)


def seed_avg_limited(spec):
    """Two-point law on {0, sqrt(u_p)} whose second moment is exactly u_a."""
    if not (0 < spec.u_a < spec.u_p < math.inf):
        raise DomainError("seed_avg_limited needs 0 < u_a < u_p < inf")
    q = spec.u_a / spec.u_p
    return make_distribution([0.0, spec.peak_amplitude], [1 - q, q], spec)


@dataclass(frozen=True, eq=False)
class RadialDensity:
    """Continuous amplitude density with an effective support [0, upper]."""

    n: int
    log_pdf: Callable = field(repr=False)
    upper: float
    tag: str = ""

    def pdf(self, rho):
        rho = np.asarray(rho, dtype=float)
        return np.exp(self.log_pdf(rho))

    def discretize(self, panels=None):
        """Gauss-Legendre nodes on [0, upper] with density-weighted masses."""
        if panels is None:
            panels = max(8, math.ceil(self.upper))
        x, w = composite_rule(0.0, self.upper, panels)
        mass = w * self.pdf(x)
        keep = mass > 0
        return x[keep], mass[keep] / mass[keep].sum()

    def moment(self, k, panels=None):
        x, w = composite_rule(0.0, self.upper, panels or max(8, math.ceil(self.upper)))
        return float(np.dot(w, self.pdf(x) * x**k))


def rayleigh_reference(n, u_a):
    """Generalized Rayleigh amplitude law of a Gaussian input with E P**2 = u_a."""
    if int(n) != n or n < 2:
        raise DomainError("rayleigh_reference needs n >= 2")
    if not (u_a > 0 and math.isfinite(u_a)):
        raise DomainError("rayleigh_reference needs finite u_a > 0")
    n = int(n)
    scale = u_a / n
    const = (n / 2) * math.log(n) - ((n - 2) / 2) * math.log(2) - (n / 2) * math.log(u_a) - log_gamma(n / 2)

    def log_pdf(rho):
        with np.errstate(divide="ignore"):
            return const + (n - 1) * np.log(rho) - n * rho * rho / (2 * u_a)

    # P**2 * n / u_a is chi-square with n degrees of freedom; stop ~20 sd out
    upper = math.sqrt(scale * (n + 20 * math.sqrt(2 * n) + 60))
    return RadialDensity(n=n, log_pdf=log_pdf, upper=upper, tag=f"rayleigh(n={n}, u_a={u_a})")


def max_entropy_log_pdf(m, bound):
    """Log density maximizing entropy on [0, inf) subject to E[X**m] <= bound."""
    if m <= 0 or bound <= 0:
        raise DomainError("max-entropy density needs m > 0 and bound > 0")
    log_c = math.log(m) - math.log(m * bound) / m - log_gamma(1 / m)

    def log_pdf(x):
        x = np.asarray(x, dtype=float)
        return log_c - x**m / (m * bound)

    return log_pdf


def max_entropy_value(m, bound):
    """Differential entropy of :func:`max_entropy_log_pdf` in nats."""
    if m <= 0 or bound <= 0:
        raise DomainError("max-entropy density needs m > 0 and bound > 0")
    return 1 / m - (math.log(m) - math.log(m * bound) / m - log_gamma(1 / m))
