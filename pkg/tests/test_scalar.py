import math

import numpy as np
import pytest

from ampcap.exceptions import DomainError
from ampcap.scalar import as_distribution, binary_rate, scalar_capacity, symmetric_rate


def grid_search_symmetric(u_p, grid=81):
    """Best rate over inputs {0 w.p. 1-q, +-rho w.p. q/2} on a (rho, q) grid."""
    best = 0.0
    for rho in np.linspace(0, math.sqrt(u_p), grid)[1:]:
        for q in np.linspace(0.05, 1.0, 20):
            pts, prb = ([0.0, rho], [1 - q, q]) if q < 1 else ([rho], [1.0])
            best = max(best, symmetric_rate(pts, prb))
    return best


def test_symmetric_rate_limits():
    assert symmetric_rate([0.0], [1.0]) == pytest.approx(0.0, abs=1e-12)
    # +-a with large a carries one bit
    assert binary_rate(400.0) == pytest.approx(math.log(2), abs=1e-9)
    with pytest.raises(DomainError):
        symmetric_rate([-1.0], [1.0])


def test_scalar_zero_power():
    assert scalar_capacity(0.0).capacity == 0.0


def test_scalar_rejects_infinite_peak():
    with pytest.raises(DomainError):
        scalar_capacity(math.inf, 1.0)


@pytest.mark.parametrize("u_p", [0.01, 1.0])
def test_low_peak_binary_optimal(u_p):
    res = scalar_capacity(u_p)
    assert res.dist.points == (pytest.approx(math.sqrt(u_p)),)
    assert res.capacity == pytest.approx(binary_rate(u_p), abs=1e-7)
    assert res.capacity == pytest.approx(grid_search_symmetric(u_p, 21), abs=1e-4)
    assert res.capacity >= grid_search_symmetric(u_p, 21) - 1e-9


def test_small_peak_law():
    assert scalar_capacity(0.01).capacity == pytest.approx(0.005, rel=0.1)


@pytest.mark.parametrize("u_p, u_a", [(4.0, math.inf), (10.0, 3.0), (6.0, 1.0)])
def test_solver_rate_matches_direct_y_quadrature(u_p, u_a):
    res = scalar_capacity(u_p, u_a)
    assert res.capacity == pytest.approx(symmetric_rate(res.dist.points, res.dist.probs), abs=1e-8)
    assert res.kkt.certified(1e-5)
    assert res.capacity <= 0.5 * math.log1p(min(u_p, u_a)) + 1e-9


def test_known_structures():
    res = scalar_capacity(4.0)
    assert res.dist.points == (pytest.approx(0.0), pytest.approx(2.0))
    assert scalar_capacity(10.0, 3.0).dist.size == 3


def test_monotone_in_both_arguments():
    c = [scalar_capacity(u).capacity for u in (1.0, 2.0, 4.0, 6.0)]
    assert np.all(np.diff(c) >= -1e-9)
    c = [scalar_capacity(6.0, ua).capacity for ua in (0.5, 1.0, 3.0, 6.0)]
    assert np.all(np.diff(c) >= -1e-9)


def test_as_distribution():
    d = as_distribution([0.0, 2.0], [0.5, 0.5], 4.0)
    assert d.n == 1 and d.points == (0.0, 2.0)
