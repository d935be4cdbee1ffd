"""Shaped PAM constellations and the optical bias/scale mapping."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .exceptions import NonPositiveER

#: Deviation of ``sum(probs)`` from one that is silently renormalized.
PROB_SUM_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class Constellation:
    """Ordered PAM amplitudes with their prior probabilities.

    Points are stored pre-bias (bipolar, e.g. ``-3, -1, 1, 3``). Arrays are
    made read-only so instances can be shared freely.
    """

    points: np.ndarray
    probs: np.ndarray = None

    def __post_init__(self):
        points = np.array(self.points, dtype=float).ravel()
        if self.probs is None:
            probs = np.full(points.size, 1.0 / max(points.size, 1))
        else:
            probs = np.array(self.probs, dtype=float).ravel()
        if points.size < 2:
            raise ValueError("a constellation needs at least 2 points")
        if probs.shape != points.shape:
            raise ValueError(
                f"probs has {probs.size} entries but there are {points.size} points"
            )
        if not np.all(np.isfinite(points)):
            raise ValueError("points must be finite")
        if np.any(np.diff(points) <= 0):
            raise ValueError("points must be strictly increasing")
        if not np.all(np.isfinite(probs)) or np.any(probs < 0):
            raise ValueError("probs must be finite and non-negative")
        total = probs.sum()
        if abs(total - 1.0) > PROB_SUM_TOL:
            raise ValueError(f"probs sum to {total!r}, not 1")
        probs = probs / total
        points.setflags(write=False)
        probs.setflags(write=False)
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "probs", probs)

    @classmethod
    def pam(cls, order, probs=None):
        """Equally spaced PAM-``order`` on ``{±1, ±3, ..., ±(order-1)}``."""
        if order < 2:
            raise ValueError("order must be >= 2")
        return cls(np.arange(-(order - 1), order, 2, dtype=float), probs)

    @property
    def order(self):
        return self.points.size

    @property
    def span(self):
        return float(self.points[-1] - self.points[0])

    @property
    def is_uniform(self):
        return bool(np.all(self.probs == self.probs[0]))

    def entropy(self):
        return entropy(self)

    def with_points(self, points):
        return Constellation(points, self.probs)

    def with_probs(self, probs):
        return Constellation(self.points, probs)

    def to_dict(self):
        return {"points": self.points.tolist(), "probs": self.probs.tolist()}

    @classmethod
    def from_dict(cls, doc):
        if "points" not in doc:
            raise KeyError("points")
        return cls(doc["points"], doc.get("probs"))

    def to_json(self, **kwargs):
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))

    def __eq__(self, other):
        if not isinstance(other, Constellation):
            return NotImplemented
        return np.array_equal(self.points, other.points) and np.array_equal(
            self.probs, other.probs
        )

    def __hash__(self):
        return hash((self.points.tobytes(), self.probs.tobytes()))

    def __repr__(self):
        return f"Constellation(points={self.points.tolist()}, probs={self.probs.tolist()})"


@dataclass(frozen=True)
class ImBias:
    """Intensity-modulation bias ``beta`` and conversion factor ``eta`` [W/unit]."""

    beta: float
    eta: float

    @classmethod
    def from_operating_point(cls, constellation, er_db, oma_w):
        return cls(solve_bias(er_db, constellation), solve_eta(oma_w, constellation))


def entropy(c):
    """Entropy of the prior in bits, with ``0 log 0 = 0``."""
    p = np.asarray(c.probs if isinstance(c, Constellation) else c, dtype=float)
    p = p[p > 0]
    return float(-np.sum(p * np.log2(p)))


def solve_bias(er_db, c):
    """Bias making ``(max + beta) / (min + beta)`` equal the extinction ratio.

    ``er_db = inf`` returns ``|min(points)|``.
    """
    if not er_db > 0:
        raise NonPositiveER(f"extinction ratio must be > 0 dB, got {er_db!r}")
    lo, hi = float(c.points[0]), float(c.points[-1])
    if math.isinf(er_db):
        return -lo
    er = 10.0 ** (er_db / 10.0)
    return (hi - er * lo) / (er - 1.0)


def solve_eta(oma_w, c):
    if not oma_w > 0:
        raise ValueError(f"OMA must be positive, got {oma_w!r}")
    return oma_w / c.span


def oma_dbm_to_watts(oma_dbm):
    return 1e-3 * 10.0 ** (oma_dbm / 10.0)
