"""Independent reference computations used by several test modules."""

import math

import numpy as np


def log_weighted_density(r, x, sigma, p):
    return math.log(p) - math.log(sigma) - (r - x) ** 2 / (2.0 * sigma * sigma)


def bisect_crossing(x_i, x_j, s_i, s_j, p_i, p_j, iters=200):
    """Crossing of p_i N(x_i, s_i) and p_j N(x_j, s_j) right of x_i, by bisection.

    Requires symbol i to dominate at x_i; the bracket is widened to the
    right until symbol j dominates.
    """

    def h(r):
        return log_weighted_density(r, x_i, s_i, p_i) - log_weighted_density(r, x_j, s_j, p_j)

    lo = x_i
    if h(lo) <= 0:
        raise ValueError("symbol i does not dominate at its own location")
    hi = x_j
    while h(hi) >= 0:
        hi += 2.0 * (x_j - x_i)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if h(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def random_pair(rng):
    while True:
        x_i = rng.uniform(-7, 7)
        x_j = x_i + rng.uniform(0.2, 4.0)
        s_i = rng.uniform(0.05, 1.5)
        s_j = s_i * rng.uniform(1.001, 3.0)
        p_i, p_j = rng.uniform(0.02, 0.5, size=2)
        h0 = log_weighted_density(x_i, x_i, s_i, p_i) - log_weighted_density(x_i, x_j, s_j, p_j)
        inner = (x_j - x_i) ** 2 + 2 * (s_j**2 - s_i**2) * math.log(p_i / p_j * s_j / s_i)
        if h0 > 0 and inner > 0:
            return x_i, x_j, s_i, s_j, p_i, p_j


def random_pmf(rng, order, h_min):
    """Random prior on ``order`` symbols with entropy at least ``h_min`` bits.

    When ``h_min`` reaches ``log2(order)`` only the uniform prior qualifies.
    """
    if h_min >= math.log2(order) - 1e-12:
        return np.full(order, 1.0 / order)
    while True:
        p = rng.dirichlet(np.full(order, rng.uniform(0.5, 5.0)))
        q = p[p > 0]
        if -np.sum(q * np.log2(q)) >= h_min and p.min() > 1e-6:
            return p
