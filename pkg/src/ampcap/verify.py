"""Monte-Carlo cross-checks that do not share the quadrature of the entropy module.

Inputs are drawn as amplitude times a uniform direction, the uniform direction
being a normalized standard Gaussian vector.  The plug-in entropy estimate
averages -ln f_V(V) over simulated outputs V = |X + W|**n / n.
"""

import math
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .entropy import output_density_log
from .exceptions import DomainError

MIN_SAMPLES = 10_000
CHUNK = 100_000
GENERATOR = "numpy.random.PCG64"


def _check_seed(seed):
    if isinstance(seed, bool) or int(seed) != seed or seed < 0:
        raise DomainError(f"seed must be a non-negative integer, got {seed!r}")
    return int(seed)


def sample_amplitudes(dist, count, rng):
    return rng.choice(dist.points_array(), size=count, p=dist.probs_array())


def sample_input_vectors(dist, n=None, count=1, seed=0):
    """``count`` input vectors of dimension ``n`` with norms drawn from ``dist``.

    Returns an array of shape (count, n).  Zero draws of the Gaussian direction
    have probability zero and are not special-cased.
    """
    n = dist.n if n is None else int(n)
    if n < 1:
        raise DomainError("sample_input_vectors needs n >= 1")
    if isinstance(count, bool) or int(count) != count or count < 1:
        raise DomainError("sample_input_vectors needs count >= 1")
    rng = np.random.default_rng(_check_seed(seed))
    amp = sample_amplitudes(dist, int(count), rng)
    g = rng.standard_normal((int(count), n))
    return amp[:, None] * g / np.linalg.norm(g, axis=1, keepdims=True)


def simulate_output(dist, count, rng):
    """Samples of V = |X + W|**n / n.

    Isotropy lets the input be rotated onto the first axis, so |X + W|**2 is
    (P + W_1)**2 plus an independent chi-square with n - 1 degrees of freedom.
    """
    n = dist.n
    amp = sample_amplitudes(dist, count, rng)
    r2 = (amp + rng.standard_normal(count)) ** 2
    if n > 1:
        r2 = r2 + rng.chisquare(n - 1, size=count)
    return np.exp(0.5 * n * np.log(r2) - math.log(n))


def _chunk_stats(args):
    dist, count, seed_seq = args
    rng = np.random.default_rng(seed_seq)
    vals = -output_density_log(dist, simulate_output(dist, count, rng))
    return count, float(vals.sum()), float(((vals - vals.mean()) ** 2).sum()), float(vals.mean())


def mc_entropy(dist, samples=1_000_000, seed=0, jobs=1):
    """Plug-in estimate of h(V) in nats with its standard error.

    Samples are split into chunks with seeds spawned from ``seed``, so the
    estimate does not depend on ``jobs``.
    """
    if isinstance(samples, bool) or int(samples) != samples or samples < MIN_SAMPLES:
        raise DomainError(f"mc_entropy needs at least {MIN_SAMPLES} samples")
    samples = int(samples)
    sizes = [CHUNK] * (samples // CHUNK)
    if samples % CHUNK:
        sizes.append(samples % CHUNK)
    seeds = np.random.SeedSequence(_check_seed(seed)).spawn(len(sizes))
    tasks = [(dist, k, s) for k, s in zip(sizes, seeds)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(_chunk_stats, tasks))
    else:
        parts = [_chunk_stats(t) for t in tasks]
    # pooled mean and variance, combined in chunk order
    total = sum(c for c, *_ in parts)
    mean = sum(s for _, s, _, _ in parts) / total
    ss = sum(m2 + c * (m - mean) ** 2 for c, _, m2, m in parts)
    var = ss / (total - 1)
    return float(mean), math.sqrt(var / total)


def mc_report(dist, samples=1_000_000, seed=0, jobs=1):
    est, err = mc_entropy(dist, samples, seed, jobs)
    return {"estimate": est, "stderr": err, "samples": int(samples), "seed": int(seed),
            "generator": GENERATOR}
