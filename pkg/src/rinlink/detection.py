"""Decision thresholds and symbol detection for the signal-dependent channel.

Four threshold rules are available:

``OPTIMAL``
    Exact MAP crossing between adjacent symbols, priors included.
``UNIFORM_EXACT``
    The same crossing with the priors assumed equal.
``APPROX``
    ``(x_i s_j + x_j s_i) / (s_i + s_j)``, ignoring priors and the log term.
``AWGN``
    Equal-variance MAP crossing, using the mean of the two conditional
    variances of the pair.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .exceptions import (
    EqualVariances,
    NegativeDiscriminant,
    NonMonotoneThresholds,
    ZeroProbability,
)

#: Relative variance gap below which a pair is treated as equal-variance.
EQUAL_VAR_RTOL = 1e-12


class ThresholdRule(str, enum.Enum):
    OPTIMAL = "optimal"
    UNIFORM_EXACT = "uniform-exact"
    APPROX = "approx"
    AWGN = "awgn"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("_", "-")
        aliases = {
            "optimal-exact": cls.OPTIMAL,
            "opt": cls.OPTIMAL,
            "uniform-approx": cls.APPROX,
            "awgn-exact": cls.AWGN,
        }
        if key in aliases:
            return aliases[key]
        try:
            return cls(key)
        except ValueError:
            names = ", ".join(r.value for r in cls)
            raise ValueError(f"unknown threshold rule {value!r} (expected one of {names})") from None

    def __str__(self):
        return self.value


class _ArgmaxMap:
    """Sentinel selecting full argmax MAP detection in the simulator."""

    def __repr__(self):
        return "ARGMAX_MAP"

    def __reduce__(self):
        return "ARGMAX_MAP"


ARGMAX_MAP = _ArgmaxMap()


def _log_ratio(p_i, p_j, sigma_i, sigma_j):
    if p_i <= 0 or p_j <= 0:
        raise ZeroProbability(f"zero prior probability in pair (p_i={p_i!r}, p_j={p_j!r})")
    return math.log(p_i / p_j) + math.log(sigma_j / sigma_i)


def optimal_threshold(x_i, x_j, sigma_i, sigma_j, p_i, p_j):
    """MAP crossing ``p_i N(r; x_i, s_i) = p_j N(r; x_j, s_j)`` of an adjacent pair.

    The root is the ``+`` branch of ``a r^2 + 2 b r + c - d = 0`` with
    ``a = s_j^2 - s_i^2``, ``b = s_i^2 x_j - s_j^2 x_i``,
    ``c = s_j^2 x_i^2 - s_i^2 x_j^2`` and
    ``d = 2 s_i^2 s_j^2 log(p_i s_j / (p_j s_i))``.  It is evaluated in
    whichever algebraically equivalent form avoids cancellation.

    Raises
    ------
    ZeroProbability
        If either prior is zero.
    EqualVariances
        If the variances agree to ``EQUAL_VAR_RTOL``; use :func:`awgn_threshold`.
    NegativeDiscriminant
        If the weighted densities never cross.
    """
    if not x_j > x_i:
        raise ValueError("x_j must exceed x_i")
    if not (sigma_i > 0 and sigma_j > 0):
        raise ValueError("conditional standard deviations must be positive")
    log_term = _log_ratio(p_i, p_j, sigma_i, sigma_j)
    var_i, var_j = sigma_i * sigma_i, sigma_j * sigma_j
    a = var_j - var_i
    if abs(a) <= EQUAL_VAR_RTOL * max(var_i, var_j):
        raise EqualVariances(f"sigma_i={sigma_i!r} and sigma_j={sigma_j!r} are equal")
    gap = x_j - x_i
    inner = gap * gap + 2.0 * a * log_term
    if inner < 0:
        raise NegativeDiscriminant(
            f"no MAP crossing between x_i={x_i!r} and x_j={x_j!r} (discriminant {inner!r})"
        )
    b = var_i * x_j - var_j * x_i
    root = sigma_i * sigma_j * math.sqrt(inner)
    if b > 0:
        # -(c - d) / (b + sqrt(D)): stable when a -> 0
        c_minus_d = var_j * x_i * x_i - var_i * x_j * x_j - 2.0 * var_i * var_j * log_term
        return -c_minus_d / (b + root)
    return (root - b) / a


def uniform_exact_threshold(x_i, x_j, sigma_i, sigma_j):
    return optimal_threshold(x_i, x_j, sigma_i, sigma_j, 0.5, 0.5)


def approx_threshold(x_i, x_j, sigma_i, sigma_j):
    if not (sigma_i > 0 and sigma_j > 0):
        raise ValueError("conditional standard deviations must be positive")
    return (x_i * sigma_j + x_j * sigma_i) / (sigma_i + sigma_j)


def awgn_threshold(x_i, x_j, sigma2, p_i, p_j):
    """Equal-variance MAP threshold; ``sigma2 = 0`` gives the midpoint."""
    if not x_j > x_i:
        raise ValueError("x_j must exceed x_i")
    if sigma2 < 0:
        raise ValueError("sigma2 must be non-negative")
    if p_i <= 0 or p_j <= 0:
        raise ZeroProbability(f"zero prior probability in pair (p_i={p_i!r}, p_j={p_j!r})")
    return sigma2 / (x_j - x_i) * math.log(p_i / p_j) + 0.5 * (x_i + x_j)


def _equal_variance(var_i, var_j):
    return abs(var_j - var_i) <= EQUAL_VAR_RTOL * max(var_i, var_j)


def pair_threshold(points, sigma, probs, i, rule):
    """Threshold between symbols ``i`` and ``i + 1`` under ``rule``."""
    rule = ThresholdRule.parse(rule)
    x_i, x_j = float(points[i]), float(points[i + 1])
    s_i, s_j = float(sigma[i]), float(sigma[i + 1])
    p_i, p_j = float(probs[i]), float(probs[i + 1])
    if rule is ThresholdRule.APPROX:
        if s_i + s_j == 0:
            return 0.5 * (x_i + x_j)
        return (x_i * s_j + x_j * s_i) / (s_i + s_j)
    if rule is ThresholdRule.UNIFORM_EXACT:
        p_i = p_j = 0.5
    var_i, var_j = s_i * s_i, s_j * s_j
    if rule is ThresholdRule.AWGN or _equal_variance(var_i, var_j):
        return awgn_threshold(x_i, x_j, 0.5 * (var_i + var_j), p_i, p_j)
    return optimal_threshold(x_i, x_j, s_i, s_j, p_i, p_j)


@dataclass(frozen=True, eq=False)
class ThresholdSet:
    """Strictly increasing thresholds ``r_0 < ... < r_{M-2}``."""

    thresholds: np.ndarray
    rule: ThresholdRule

    def __post_init__(self):
        r = np.array(self.thresholds, dtype=float).ravel()
        if not np.all(np.isfinite(r)):
            raise NonMonotoneThresholds(f"non-finite threshold in {r.tolist()}")
        bad = np.flatnonzero(np.diff(r) <= 0)
        if bad.size:
            i = int(bad[0])
            raise NonMonotoneThresholds(
                f"thresholds r_{i}={r[i]!r} and r_{i + 1}={r[i + 1]!r} are not increasing; "
                "use argmax MAP detection"
            )
        r.setflags(write=False)
        object.__setattr__(self, "thresholds", r)
        object.__setattr__(self, "rule", ThresholdRule.parse(self.rule))

    def __len__(self):
        return self.thresholds.size

    def __iter__(self):
        return iter(self.thresholds.tolist())

    def __repr__(self):
        return f"ThresholdSet({self.thresholds.tolist()}, rule={self.rule.value!r})"


def thresholds_from_arrays(points, sigma, probs, rule):
    rule = ThresholdRule.parse(rule)
    r = [pair_threshold(points, sigma, probs, i, rule) for i in range(len(points) - 1)]
    return ThresholdSet(np.array(r), rule)


def build_thresholds(m, rule):
    """Thresholds for every adjacent pair of channel ``m``."""
    return thresholds_from_arrays(m.points, m.cond_sigma, m.probs, rule)


def map_equality_residual(r, x_i, x_j, sigma_i, sigma_j, p_i, p_j):
    """Relative mismatch of the two weighted densities at ``r``."""
    lhs = p_i * _normal_pdf(r, x_i, sigma_i)
    rhs = p_j * _normal_pdf(r, x_j, sigma_j)
    scale = max(lhs, rhs)
    if scale == 0:
        # both underflow; compare in the log domain instead
        ll = math.log(p_i) - math.log(sigma_i) - (r - x_i) ** 2 / (2 * sigma_i**2)
        lr = math.log(p_j) - math.log(sigma_j) - (r - x_j) ** 2 / (2 * sigma_j**2)
        return abs(math.expm1(ll - lr)) if ll <= lr else abs(math.expm1(lr - ll))
    return abs(lhs - rhs) / scale


def _normal_pdf(y, mean, sigma):
    z = (y - mean) / sigma
    return math.exp(-0.5 * z * z) / (math.sqrt(2.0 * math.pi) * sigma)


def detect_threshold(y, t):
    """Index of the decision region containing ``y``; ties go right."""
    r = t.thresholds if isinstance(t, ThresholdSet) else np.asarray(t, dtype=float)
    idx = np.searchsorted(r, y, side="right")
    return int(idx) if np.ndim(idx) == 0 else idx


def map_scores(y, points, sigma, probs):
    """Log of ``P(x_i) p(y | x_i)`` up to a constant, shape ``(n, M)``."""
    y = np.asarray(y, dtype=float)[..., None]
    points = np.asarray(points, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    probs = np.asarray(probs, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        log_prior = np.where(probs > 0, np.log(probs), -np.inf)
        scores = log_prior - np.log(sigma) - (y - points) ** 2 / (2.0 * sigma**2)
    if np.any(sigma == 0):
        hit = np.where(y == points, np.inf, -np.inf)
        scores = np.where(sigma == 0, hit, scores)
    scores = np.where(probs > 0, scores, -np.inf)
    return np.nan_to_num(scores, nan=-np.inf)


def detect_map(y, m):
    """Argmax of prior times likelihood; ties go to the lower index."""
    scores = map_scores(y, m.points, m.cond_sigma, m.probs)
    idx = np.argmax(scores, axis=-1)
    return int(idx) if np.ndim(idx) == 0 else idx
