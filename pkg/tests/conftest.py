"""Shared oracle helpers, kept independent of the package's numerics.

Everything here goes through math.erf or plain Python sums so that a bug in
the scipy-based production path cannot cancel out of a test.
"""

import math

import numpy as np
import pytest


def phi(x: float) -> float:
    """Standard normal CDF via math.erf."""
    return 0.5 * (1.0 + math.erf(x / math.sqrt(2.0)))


def upper_tail(x: float) -> float:
    """P(N(0, 1) > x) via math.erfc, accurate far into the tail."""
    return 0.5 * math.erfc(x / math.sqrt(2.0))


def bin_mass(sigma: float, m: int) -> float:
    """P(rint(N(0, sigma^2)) == m), evaluated through the nearer tail."""
    m = abs(m)
    if m == 0:
        return math.erf(0.5 / (sigma * math.sqrt(2.0)))
    return upper_tail((m - 0.5) / sigma) - upper_tail((m + 0.5) / sigma)


def interval_moments_oracle(sigma: float, members) -> tuple[float, float]:
    """Mean and variance of the discretized model restricted to `members`."""
    ps = [bin_mass(sigma, int(m)) for m in members]
    t = math.fsum(ps)
    mu = math.fsum(p * m for p, m in zip(ps, members)) / t
    var = math.fsum(p * m * m for p, m in zip(ps, members)) / t - mu * mu
    return mu, var


def entropy_bits(pmf) -> float:
    return -math.fsum(p * math.log2(p) for p in pmf if p > 0.0)


@pytest.fixture
def rng():
    return np.random.default_rng(0)
