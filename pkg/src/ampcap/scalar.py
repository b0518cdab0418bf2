"""Scalar Gaussian channel |X| <= sqrt(u_p), E X**2 <= u_a.

The optimal input is symmetric, so only the amplitudes rho_i >= 0 are
optimized; the output density is the reflected mixture

    f_Y(y) = sum_i p_i [phi(y - rho_i) + phi(y + rho_i)] / 2.

Its magnitude |Y| has the n = 1 radial kernel, so the vector solver runs
unchanged with n = 1.  :func:`symmetric_rate` evaluates the same rate
directly in y as an independent check.
"""

import math

import numpy as np
from scipy.special import logsumexp

from .dist import make_distribution
from .exceptions import DomainError
from .kernel import ChannelSpec
from .quadrature import composite_rule
from .solver import solve_amplitude

LN_2PI = math.log(2 * math.pi)
# half-width of the y range beyond the peak, in noise standard deviations
Y_MARGIN = 10.0


def scalar_capacity(u_p, u_a=math.inf, grid_size=512):
    """Capacity C_S(u_p, u_a) in nats with its certified amplitude law."""
    u_p, u_a = float(u_p), float(u_a)
    if not math.isfinite(u_p):
        raise DomainError("scalar_capacity needs a finite peak bound")
    return solve_amplitude(ChannelSpec(1, u_p, u_a), grid_size)


def symmetric_rate(points, probs, panels=None):
    """I(X; Y) in nats for the symmetric input +-points[i] w.p. probs[i] / 2.

    h(Y) is integrated over [-(max rho + 10), max rho + 10] with composite
    Gauss-Legendre panels of width at most one noise standard deviation.
    """
    x = np.asarray(points, dtype=float)
    p = np.asarray(probs, dtype=float)
    if np.any(x < 0) or np.any(p < 0):
        raise DomainError("amplitudes and probabilities must be non-negative")
    reach = float(x.max()) + Y_MARGIN
    panels = panels or max(8, math.ceil(2 * reach))
    y, w = composite_rule(-reach, reach, panels)
    comp = -0.5 * (y[None, :] - x[:, None]) ** 2
    refl = -0.5 * (y[None, :] + x[:, None]) ** 2
    logf = logsumexp(np.logaddexp(comp, refl) + np.log(p / 2)[:, None], axis=0) - 0.5 * LN_2PI
    h_y = -float(w @ (np.exp(logf) * logf))
    return h_y - 0.5 * (1.0 + LN_2PI)


def binary_rate(u_p):
    """Rate of the equiprobable input +-sqrt(u_p)."""
    return symmetric_rate([math.sqrt(u_p)], [1.0])


def as_distribution(points, probs, u_p, u_a=math.inf):
    return make_distribution(points, probs, ChannelSpec(1, u_p, u_a))
