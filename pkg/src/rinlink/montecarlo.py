"""Seeded Monte Carlo simulation of the equivalent channel.

Every batch draws from its own ``PCG64`` stream derived from
``SeedSequence(seed, spawn_key=(*stream, batch_index))``.  Batches are
reduced in index order and the stopping rule is checked after each one,
so a result depends only on ``(seed, stream, batch)`` and not on how many
workers evaluated the batches.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from joblib import Parallel, delayed

from .detection import (
    ARGMAX_MAP,
    ThresholdRule,
    ThresholdSet,
    build_thresholds,
    map_scores,
)
from .exceptions import ThresholdError
from .link import build_channel
from .metrics import analytic_ser, mutual_information

#: Rows of the per-batch MAP score matrix evaluated at once.
_MAP_CHUNK = 1 << 16


@dataclass(frozen=True)
class McConfig:
    seed: int = 0
    min_errors: int = 100
    max_symbols: int = 10**9
    batch: int = 10**6
    n_jobs: int = 1

    def __post_init__(self):
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        if self.min_errors < 1:
            raise ValueError("min_errors must be >= 1")
        if self.batch < 1:
            raise ValueError("batch must be >= 1")
        if self.max_symbols < self.batch:
            raise ValueError("max_symbols must be >= batch")
        if self.n_jobs < 1:
            raise ValueError("n_jobs must be >= 1")

    def to_dict(self):
        return {
            "seed": self.seed,
            "min_errors": self.min_errors,
            "max_symbols": self.max_symbols,
            "batch": self.batch,
            "n_jobs": self.n_jobs,
        }


@dataclass(frozen=True, eq=False)
class McResult:
    symbols: int
    errors: int
    detector: str
    sent: np.ndarray = field(repr=False)
    symbol_errors: np.ndarray = field(repr=False)

    @property
    def ser(self):
        return self.errors / self.symbols if self.symbols else 0.0

    @property
    def ci95_half_width(self):
        if not self.symbols:
            return math.inf
        p = self.ser
        return 1.96 * math.sqrt(p * (1.0 - p) / self.symbols)

    @property
    def per_symbol_ser(self):
        with np.errstate(invalid="ignore", divide="ignore"):
            return self.symbol_errors / self.sent

    def per_symbol_ci95(self):
        p = self.per_symbol_ser
        with np.errstate(invalid="ignore", divide="ignore"):
            return 1.96 * np.sqrt(p * (1.0 - p) / self.sent)

    def to_dict(self):
        return {
            "symbols": self.symbols,
            "errors": self.errors,
            "ser": self.ser,
            "ci95_half_width": self.ci95_half_width,
            "detector": self.detector,
        }


def _detector_name(detector):
    if detector is ARGMAX_MAP:
        return "map"
    return detector.rule.value


def _decide(y, m, detector):
    if detector is ARGMAX_MAP:
        out = np.empty(y.size, dtype=np.intp)
        for start in range(0, y.size, _MAP_CHUNK):
            stop = start + _MAP_CHUNK
            scores = map_scores(y[start:stop], m.points, m.cond_sigma, m.probs)
            out[start:stop] = np.argmax(scores, axis=1)
        return out
    return np.searchsorted(detector.thresholds, y, side="right")


def draw(m, n, rng):
    """Draw ``n`` channel uses; returns ``(symbol_index, y)``."""
    idx = rng.choice(m.order, size=n, p=m.probs)
    z = rng.standard_normal(n)
    y = m.points[idx] + z * m.cond_sigma[idx]
    return idx, y


def _run_batch(m, detector, seed, stream, index, n):
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(*stream, index))))
    idx, y = draw(m, n, rng)
    wrong = _decide(y, m, detector) != idx
    sent = np.bincount(idx, minlength=m.order)
    errs = np.bincount(idx[wrong], minlength=m.order)
    return sent, errs


def simulate(m, detector, cfg, stream=()):
    """Estimate the SER of ``detector`` on channel ``m``.

    ``detector`` is a :class:`ThresholdSet` or :data:`ARGMAX_MAP`.  Draws
    stop after the first batch that brings the error count to
    ``cfg.min_errors`` or the symbol count to ``cfg.max_symbols``.
    """
    if detector is not ARGMAX_MAP and not isinstance(detector, ThresholdSet):
        raise TypeError("detector must be a ThresholdSet or ARGMAX_MAP")
    sizes = []
    left = cfg.max_symbols
    while left > 0:
        sizes.append(min(cfg.batch, left))
        left -= sizes[-1]

    sent = np.zeros(m.order, dtype=np.int64)
    errs = np.zeros(m.order, dtype=np.int64)
    parallel = Parallel(n_jobs=cfg.n_jobs) if cfg.n_jobs > 1 else None
    k = 0
    done = False
    while k < len(sizes) and not done:
        wave = range(k, min(k + cfg.n_jobs, len(sizes)))
        if parallel is None:
            parts = [_run_batch(m, detector, cfg.seed, stream, i, sizes[i]) for i in wave]
        else:
            parts = parallel(
                delayed(_run_batch)(m, detector, cfg.seed, stream, i, sizes[i]) for i in wave
            )
        for s, e in parts:
            sent += s
            errs += e
            k += 1
            if errs.sum() >= cfg.min_errors:
                done = True
                break
    return McResult(int(sent.sum()), int(errs.sum()), _detector_name(detector), sent, errs)


@dataclass(eq=False)
class SweepResult:
    """One OMA point of a sweep.

    ``analytic`` maps rule name to SER, ``mc`` to :class:`McResult`.
    ``status`` is ``"ok"`` or ``"threshold_error"``; ``errors`` carries the
    messages of failed rules.
    """

    oma_dbm: float
    rules: list
    analytic: dict
    mc: dict
    mi_bits: float
    entropy_bits: float
    status: str = "ok"
    errors: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "oma_dbm": self.oma_dbm,
            "analytic_ser": dict(self.analytic),
            "mc": {k: v.to_dict() for k, v in self.mc.items()},
            "mi_bits": self.mi_bits,
            "entropy_bits": self.entropy_bits,
            "status": self.status,
            "errors": dict(self.errors),
        }


def sweep(params, c, oma_grid, rules, cfg, run_mc=True):
    """Analytic SER, Monte Carlo SER and MI along an OMA grid.

    Threshold failures are recorded per point instead of aborting.  All
    rules at one OMA point share the same random draws.
    """
    if len(oma_grid) == 0:
        raise ValueError("oma_grid must not be empty")
    rules = [ThresholdRule.parse(r) for r in rules]
    out = []
    for k, oma in enumerate(oma_grid):
        m = build_channel(params, c, float(oma))
        analytic, mc, errors = {}, {}, {}
        for rule in rules:
            try:
                t = build_thresholds(m, rule)
            except ThresholdError as exc:
                errors[rule.value] = f"{type(exc).__name__}: {exc}"
                continue
            analytic[rule.value] = analytic_ser(m, t).average
            if run_mc:
                mc[rule.value] = simulate(m, t, cfg, stream=(k,))
        out.append(
            SweepResult(
                oma_dbm=float(oma),
                rules=[r.value for r in rules],
                analytic=analytic,
                mc=mc,
                mi_bits=mutual_information(m),
                entropy_bits=c.entropy(),
                status="threshold_error" if errors else "ok",
                errors=errors,
            )
        )
    return out
