"""Peak-power threshold below which constant-amplitude signaling is optimal.

For the single-sphere input P = sqrt(u_p) the KKT residual is largest at
rho = 0 once the sphere stops being optimal, so the threshold is the root of

    defect(u_p) = h~(0) - h(V),

both evaluated for the single-sphere law.
"""

import math

import numpy as np
from scipy.optimize import brentq

from .entropy import MixtureModel
from .exceptions import DomainError, NumericalError

BRACKET_LO = 1e-3
ROOT_TOL = 1e-4
MAX_EXPAND = 20


def sphere_defect(n, u_p):
    """h~(0) - h(V) for all mass on the sphere of radius sqrt(u_p)."""
    peak = math.sqrt(u_p)
    model = MixtureModel(n, np.array([peak]), np.array([1.0]), peak)
    return float(model.marginal(0.0)[0] - model.entropy())


def peak_threshold(n, lo=BRACKET_LO, hi=None):
    """Largest u_p for which the single-sphere input satisfies the KKT conditions."""
    if isinstance(n, bool) or int(n) != n or n < 2:
        raise DomainError(f"peak_threshold needs an integer n >= 2, got {n!r}")
    n = int(n)
    hi = 20.0 * n if hi is None else float(hi)
    f_lo = sphere_defect(n, lo)
    if f_lo >= 0:
        raise NumericalError("no sign change: the defect is not negative at the lower bracket",
                             detail={"u_p": lo, "defect": f_lo})
    f_hi = sphere_defect(n, hi)
    for _ in range(MAX_EXPAND):
        if f_hi > 0:
            break
        lo, hi = hi, 2 * hi
        f_hi = sphere_defect(n, hi)
    else:
        raise NumericalError("no sign change of the sphere defect on the bracket",
                             detail={"u_p": hi, "defect": f_hi})
    return brentq(lambda u: sphere_defect(n, u), lo, hi, xtol=ROOT_TOL)
