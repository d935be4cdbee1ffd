"""Closed-form symbol error rate and mutual information."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import erfc, erfcx, logsumexp, roots_hermite

from .constellation import entropy

#: Per-symbol error probabilities below this are flushed to zero.
SER_FLOOR = 1e-320

#: Gauss-Hermite nodes per conditioning symbol.
GH_ORDER = 256

_SQRT2 = np.sqrt(2.0)


def q_function(x):
    """Gaussian tail probability ``P(Z > x)``.

    Uses ``erfc`` directly so nothing cancels in ``1 - Phi(x)``.  Past
    ``x = 26`` the scaled form ``erfcx(u) exp(-u^2)`` is evaluated in the
    log domain, which keeps subnormal tails nonzero up to about ``x = 38.5``.
    """
    x = np.asarray(x, dtype=float)
    u = x / _SQRT2
    with np.errstate(divide="ignore", over="ignore", under="ignore"):
        tail = np.exp(np.log(0.5 * erfcx(np.maximum(u, 0.0))) - u * u)
    out = np.where(x > 26.0, tail, 0.5 * erfc(u))
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True, eq=False)
class SerBreakdown:
    """Average SER with the per-symbol conditional error probabilities.

    ``clamped`` is set when some noisy symbol's conditional probability fell
    below :data:`SER_FLOOR` (including underflow to exactly zero) and was
    reported as zero.
    """

    per_symbol: np.ndarray
    average: float
    clamped: bool = False

    def __float__(self):
        return float(self.average)


def ser_from_arrays(points, sigma, probs, thresholds):
    points = np.asarray(points, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    probs = np.asarray(probs, dtype=float)
    r = np.asarray(thresholds, dtype=float)
    lower = np.concatenate(([-np.inf], r))
    upper = np.concatenate((r, [np.inf]))
    with np.errstate(divide="ignore", invalid="ignore"):
        z_low = (points - lower) / sigma
        z_high = (upper - points) / sigma
    # a noiseless symbol strictly inside its region never errs
    z_low = np.where(sigma == 0, np.where(points > lower, np.inf, -np.inf), z_low)
    z_high = np.where(sigma == 0, np.where(upper > points, np.inf, -np.inf), z_high)
    per_symbol = np.minimum(q_function(z_low) + q_function(z_high), 1.0)
    tiny = (sigma > 0) & (per_symbol < SER_FLOOR)
    per_symbol = np.where(tiny, 0.0, per_symbol)
    average = float(np.dot(probs, per_symbol))
    return SerBreakdown(per_symbol, average, bool(tiny.any()))


def analytic_ser(m, t):
    """SER of slicing channel ``m`` with thresholds ``t``."""
    r = t.thresholds if hasattr(t, "thresholds") else t
    return ser_from_arrays(m.points, m.cond_sigma, m.probs, r)


@lru_cache(maxsize=8)
def _hermite(order):
    nodes, weights = roots_hermite(order)
    nodes.setflags(write=False)
    weights = weights / np.sqrt(np.pi)
    weights.setflags(write=False)
    return nodes, weights


def mutual_information_from_arrays(points, sigma, probs, order=GH_ORDER):
    points = np.asarray(points, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    probs = np.asarray(probs, dtype=float)
    h = entropy(probs)
    active = probs > 0
    noisy = active & (sigma > 0)
    if not noisy.any():
        return h
    nodes, weights = _hermite(order)
    # mixture components with zero spread carry no density off their point
    log_w = np.where(noisy, np.log(np.where(active, probs, 1.0)) - np.log(np.where(noisy, sigma, 1.0)), -np.inf)
    equivocation = 0.0
    for i in np.flatnonzero(noisy):
        y = points[i] + _SQRT2 * sigma[i] * nodes
        with np.errstate(divide="ignore"):
            log_joint = log_w - (y[:, None] - points) ** 2 / (2.0 * np.where(noisy, sigma, 1.0) ** 2)
        log_joint = np.where(noisy, log_joint, -np.inf)
        log_post = log_joint[:, i] - logsumexp(log_joint, axis=1)
        equivocation -= probs[i] * np.dot(weights, log_post)
    mi = h - equivocation / np.log(2.0)
    return float(min(max(mi, 0.0), h))


def mutual_information(m, order=GH_ORDER):
    """``I(X; Y)`` in bits, integrated by Gauss-Hermite quadrature.

    Computed as ``H(X) - H(X | Y)`` where the conditional entropy is the
    expected negative log posterior under each conditioning symbol, with
    ``y = x_i + sqrt(2) sigma_i u`` mapping each inner integral onto the
    Hermite weight.
    """
    return mutual_information_from_arrays(m.points, m.cond_sigma, m.probs, order)
