import math

import numpy as np
import pytest
from scipy import stats
from scipy.integrate import quad

from ampcap.dist import make_distribution, seed_avg_limited
from ampcap.entropy import output_entropy
from ampcap.exceptions import DomainError
from ampcap.kernel import ChannelSpec
from ampcap.verify import GENERATOR, mc_entropy, mc_report, sample_input_vectors


def point(n, rho, u_p=None):
    return make_distribution([rho], [1.0], ChannelSpec(n, rho * rho if u_p is None else u_p))


# --- input sampling -----------------------------------------------------------------

def test_degenerate_gives_zero_vectors():
    vecs = sample_input_vectors(point(3, 0.0, 1.0), count=50, seed=1)
    assert vecs.shape == (50, 3)
    assert np.all(vecs == 0.0)


def test_single_sphere_norms():
    vecs = sample_input_vectors(point(5, math.sqrt(7.0)), count=1000, seed=2)
    assert np.allclose(np.linalg.norm(vecs, axis=1), math.sqrt(7.0), rtol=0, atol=1e-12)


def test_two_point_fraction_binomial():
    spec = ChannelSpec(3, 4.0, 0.4)
    dist = seed_avg_limited(spec)
    count = 100_000
    norms = np.linalg.norm(sample_input_vectors(dist, count=count, seed=3), axis=1)
    q = 0.4 / 4.0
    frac = np.mean(norms > 1.0)
    assert abs(frac - q) <= 3 * math.sqrt(q * (1 - q) / count)
    assert np.all((norms == 0.0) | np.isclose(norms, 2.0, atol=1e-12))


@pytest.mark.parametrize("n", [2, 3, 6])
def test_directional_uniformity(n):
    count = 40_000
    vecs = sample_input_vectors(point(n, 1.0), count=count, seed=4)
    sigma = math.sqrt(0.25 / count)
    for k in range(n):
        assert abs(np.mean(vecs[:, k] > 0) - 0.5) <= 3 * sigma
    assert np.linalg.norm(vecs.mean(axis=0)) <= 4 / math.sqrt(count)


@pytest.mark.parametrize("n", [3, 4])
def test_first_phase_density(n):
    # psi_1 = angle to the first axis has density proportional to sin**(n-2)
    vecs = sample_input_vectors(point(n, 1.0), count=20_000, seed=5)
    psi = np.arccos(np.clip(vecs[:, 0], -1.0, 1.0))
    norm, _ = quad(lambda t: math.sin(t) ** (n - 2), 0, math.pi)
    cdf = np.vectorize(lambda a: quad(lambda t: math.sin(t) ** (n - 2), 0, a)[0] / norm)
    assert stats.kstest(psi, cdf).pvalue > 1e-3


def test_sampling_rejects_bad_arguments():
    d = point(2, 1.0)
    with pytest.raises(DomainError):
        sample_input_vectors(d, count=0)
    with pytest.raises(DomainError):
        sample_input_vectors(d, n=0)
    with pytest.raises(DomainError):
        sample_input_vectors(d, seed=-1)


def test_sampling_deterministic():
    d = point(3, 2.0)
    assert np.array_equal(sample_input_vectors(d, count=10, seed=9), sample_input_vectors(d, count=10, seed=9))


# --- Monte-Carlo entropy ----------------------------------------------------------------

def test_degenerate_entropy_is_one_nat():
    # V = |W|**2 / 2 is exponential with unit mean for n = 2
    est, err = mc_entropy(point(2, 0.0, 1.0), samples=200_000, seed=0)
    assert abs(est - 1.0) <= 3 * err


@pytest.mark.parametrize("n, rho", [(4, math.sqrt(10.0)), (3, 1.5), (1, 2.0)])
def test_single_point_matches_quadrature(n, rho):
    d = point(n, rho)
    est, err = mc_entropy(d, samples=200_000, seed=1)
    assert abs(est - output_entropy(d)) <= 3 * err


def test_mixture_matches_quadrature():
    spec = ChannelSpec(4, 30.0, 10.0)
    d = make_distribution([0.9, 2.4, math.sqrt(30.0)], [0.3, 0.5, 0.2], spec)
    est, err = mc_entropy(d, samples=200_000, seed=2)
    assert abs(est - output_entropy(d)) <= 3 * err


def test_mc_deterministic_and_job_independent():
    d = point(3, 1.0)
    a = mc_entropy(d, samples=250_000, seed=7)
    assert a == mc_entropy(d, samples=250_000, seed=7)
    assert a == pytest.approx(mc_entropy(d, samples=250_000, seed=7, jobs=2), abs=1e-12)
    assert a != mc_entropy(d, samples=250_000, seed=8)


def test_mc_rejects_small_samples():
    with pytest.raises(DomainError):
        mc_entropy(point(2, 1.0), samples=100)
    with pytest.raises(DomainError):
        mc_entropy(point(2, 1.0), samples=20_000, seed=-3)


def test_mc_report_fields():
    rep = mc_report(point(2, 1.0), samples=10_000, seed=3)
    assert set(rep) == {"estimate", "stderr", "samples", "seed", "generator"}
    assert rep["generator"] == GENERATOR and rep["samples"] == 10_000 and rep["seed"] == 3
