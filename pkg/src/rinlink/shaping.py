"""Geometric and probabilistic constellation shaping.

All three problems are solved with multi-start Nelder-Mead over an
unconstrained reparameterization, so every candidate is feasible by
construction:

* geometric shaping: interior points are ``x_0 + cumsum(gaps)`` with
  ``gaps = d_min + (span - (M-1) d_min) * softmax([z, 0])``, keeping the
  endpoints fixed and consecutive points at least ``d_min`` apart;
* probabilistic shaping: ``p = softmax([z, 0])``, then tempered to
  ``softmax(tau * [z, 0])`` with ``tau`` found by bisection whenever the
  entropy leaves ``[h_min, h_max]``.

Restart 0 always starts at the canonical point (equal spacing or uniform
probabilities), which guarantees the result is never worse than it.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from joblib import Parallel, delayed
from scipy.optimize import minimize
from scipy.special import softmax

from .constellation import Constellation, entropy
from .detection import ThresholdRule, build_thresholds
from .exceptions import SolverFailure, ThresholdError
from .link import build_channel
from .metrics import analytic_ser, mutual_information

MIN_GAP = 1e-3
RESTARTS = 8
MAX_EVALS = 2000
JITTER = 0.5
#: Objective value assigned to candidates whose thresholds cannot be built.
INFEASIBLE = 1e6
_LOG_FLOOR = 1e-320


class Objective(str, enum.Enum):
    MIN_SER = "min-ser"
    MAX_MI = "max-mi"


@dataclass(frozen=True)
class GsProblem:
    base: Constellation
    oma_dbm: float
    rule: ThresholdRule = ThresholdRule.OPTIMAL
    min_gap: float = MIN_GAP

    def __post_init__(self):
        object.__setattr__(self, "rule", ThresholdRule.parse(self.rule))
        if self.min_gap * (self.base.order - 1) >= self.base.span:
            raise ValueError("min_gap too large for the constellation span")

    @property
    def endpoints(self):
        return float(self.base.points[0]), float(self.base.points[-1])


@dataclass(frozen=True)
class PsProblem:
    points: Constellation
    oma_dbm: float
    rule: ThresholdRule = ThresholdRule.OPTIMAL
    h_min: float | None = None
    objective: Objective = Objective.MIN_SER
    h_max: float | None = None

    def __post_init__(self):
        pts = self.points
        if not isinstance(pts, Constellation):
            pts = Constellation(pts)
        object.__setattr__(self, "points", Constellation(pts.points))
        object.__setattr__(self, "rule", ThresholdRule.parse(self.rule))
        object.__setattr__(self, "objective", Objective(self.objective))
        top = math.log2(pts.order)
        if self.objective is Objective.MIN_SER and self.h_min is None:
            raise ValueError("h_min is required for SER minimization")
        if self.h_min is not None and not 0 < self.h_min <= top + 1e-12:
            raise ValueError(f"h_min must lie in (0, log2 M] = (0, {top}]")
        if self.h_max is not None and not 0 < self.h_max <= top + 1e-12:
            raise ValueError(f"h_max must lie in (0, {top}]")
        if self.h_min is not None and self.h_max is not None and self.h_min > self.h_max:
            raise ValueError("h_min exceeds h_max")


@dataclass(eq=False)
class ShapingResult:
    """Optimized constellation plus the provenance needed to audit it."""

    constellation: Constellation
    start: Constellation
    kind: str
    rule: str
    objective: float
    start_objective: float
    evaluations: int
    iterations: int
    best_restart: int
    residuals: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "kind": self.kind,
            "rule": self.rule,
            "constellation": self.constellation.to_dict(),
            "start": self.start.to_dict(),
            "objective": self.objective,
            "start_objective": self.start_objective,
            "evaluations": self.evaluations,
            "iterations": self.iterations,
            "best_restart": self.best_restart,
            "residuals": dict(self.residuals),
        }


def gs_points(z, x0, x_last, order, min_gap=MIN_GAP):
    """Map ``M - 2`` free coordinates onto ordered points with fixed ends."""
    free = (x_last - x0) - (order - 1) * min_gap
    gaps = min_gap + free * softmax(np.append(np.asarray(z, dtype=float), 0.0))
    pts = x0 + np.concatenate(([0.0], np.cumsum(gaps)))
    pts[-1] = x_last
    return pts


def temper(logits, h_min=None, h_max=None, iters=200):
    """``softmax(tau * logits)`` with entropy clipped into ``[h_min, h_max]``.

    Returns ``None`` when the upper bound cannot be met (flat logits).
    """
    logits = np.asarray(logits, dtype=float)
    p = softmax(logits)
    h = entropy(p)
    if h_min is not None and h < h_min:
        lo, hi = 0.0, 1.0  # lo feasible (uniform), hi infeasible
        for _ in range(iters):
            mid = 0.5 * (lo + hi)
            if entropy(softmax(mid * logits)) >= h_min:
                lo = mid
            else:
                hi = mid
            if hi - lo <= 1e-15:
                break
        return softmax(lo * logits)
    if h_max is not None and h > h_max:
        lo, hi = 1.0, 2.0  # lo infeasible, hi to be made feasible
        while entropy(softmax(hi * logits)) > h_max:
            lo, hi = hi, 2.0 * hi
            if hi > 1e12:
                return None
        for _ in range(iters):
            mid = 0.5 * (lo + hi)
            if entropy(softmax(mid * logits)) <= h_max:
                hi = mid
            else:
                lo = mid
            if hi - lo <= 1e-15 * hi:
                break
        return softmax(hi * logits)
    return p


def _ser_value(params, c, oma_dbm, rule):
    m = build_channel(params, c, oma_dbm)
    try:
        t = build_thresholds(m, rule)
    except ThresholdError:
        return None
    return analytic_ser(m, t).average


def _log_ser(params, c, oma_dbm, rule):
    ser = _ser_value(params, c, oma_dbm, rule)
    if ser is None:
        return INFEASIBLE
    return math.log(max(ser, _LOG_FLOOR))


def _nelder_mead(fun, z0, max_evals):
    res = minimize(
        fun,
        z0,
        method="Nelder-Mead",
        options={
            "maxfev": max_evals,
            "xatol": 1e-10,
            "fatol": 1e-12,
            "adaptive": z0.size > 4,
            "initial_simplex": _initial_simplex(z0),
        },
    )
    return res


def _initial_simplex(z0, step=0.25):
    sim = np.tile(z0, (z0.size + 1, 1))
    sim[1:] += step * np.eye(z0.size)
    return sim


def _multistart(fun, dim, restarts, seed, max_evals, n_jobs):
    rng = np.random.default_rng(seed)
    starts = [np.zeros(dim)]
    starts += [rng.normal(0.0, JITTER, dim) for _ in range(max(restarts, 1) - 1)]
    if n_jobs > 1:
        runs = Parallel(n_jobs=n_jobs)(delayed(_nelder_mead)(fun, z, max_evals) for z in starts)
    else:
        runs = [_nelder_mead(fun, z, max_evals) for z in starts]
    best = min(range(len(runs)), key=lambda k: (runs[k].fun, k))
    return runs, best


def optimize_gs(problem, params, restarts=RESTARTS, seed=0, max_evals=MAX_EVALS, n_jobs=1):
    """Interior point locations minimizing analytic SER with fixed endpoints."""
    base = problem.base
    order = base.order
    x0, x_last = problem.endpoints

    def points_of(z):
        return gs_points(z, x0, x_last, order, problem.min_gap)

    def fun(z):
        return _log_ser(params, base.with_points(points_of(z)), problem.oma_dbm, problem.rule)

    start_obj = fun(np.zeros(max(order - 2, 0)))
    if order < 3:
        return _gs_result(base, base, problem, start_obj, start_obj, 1, 0, 0)
    runs, k = _multistart(fun, order - 2, restarts, seed, max_evals, n_jobs)
    best = runs[k]
    if best.fun >= INFEASIBLE:
        raise SolverFailure("no candidate geometry admits monotone thresholds", best=base)
    pts = points_of(best.x)
    obj = float(best.fun)
    if obj > start_obj:
        pts, obj = base.points, start_obj
    return _gs_result(
        base.with_points(pts),
        base,
        problem,
        obj,
        start_obj,
        sum(r.nfev for r in runs),
        sum(r.nit for r in runs),
        k,
    )


def _gs_result(c, start, problem, obj, start_obj, nfev, nit, k):
    x0, x_last = problem.endpoints
    gaps = np.diff(c.points)
    return ShapingResult(
        constellation=c,
        start=start,
        kind="gs",
        rule=problem.rule.value,
        objective=math.exp(obj),
        start_objective=math.exp(start_obj),
        evaluations=nfev,
        iterations=nit,
        best_restart=k,
        residuals={
            "endpoint_low": float(c.points[0] - x0),
            "endpoint_high": float(c.points[-1] - x_last),
            "min_gap_slack": float(gaps.min() - problem.min_gap),
        },
    )


def _ps_common(problem, params, fun, restarts, seed, max_evals, n_jobs, kind, sign):
    order = problem.points.order

    def probs_of(z):
        return temper(np.append(z, 0.0), problem.h_min, problem.h_max)

    start_z = np.zeros(order - 1)
    start_obj = fun(probs_of(start_z))
    if start_obj >= INFEASIBLE:
        start_p = None
    else:
        start_p = probs_of(start_z)

    def wrapped(z):
        p = probs_of(z)
        if p is None:
            return INFEASIBLE
        return fun(p)

    runs, k = _multistart(wrapped, order - 1, restarts, seed, max_evals, n_jobs)
    best = runs[k]
    if best.fun >= INFEASIBLE:
        raise SolverFailure("no feasible distribution found", best=start_p)
    p, obj = probs_of(best.x), float(best.fun)
    if start_p is not None and obj > start_obj:
        p, obj = start_p, start_obj
    c = problem.points.with_probs(p)
    h = entropy(p)
    residuals = {"prob_sum": float(p.sum() - 1.0), "min_prob": float(p.min())}
    if problem.h_min is not None:
        residuals["entropy_slack_low"] = h - problem.h_min
    if problem.h_max is not None:
        residuals["entropy_slack_high"] = problem.h_max - h
    return ShapingResult(
        constellation=c,
        start=problem.points,
        kind=kind,
        rule=problem.rule.value,
        objective=sign(obj),
        start_objective=sign(start_obj) if start_p is not None else math.nan,
        evaluations=sum(r.nfev for r in runs),
        iterations=sum(r.nit for r in runs),
        best_restart=k,
        residuals=residuals,
    )


def optimize_ps_ser(problem, params, restarts=RESTARTS, seed=0, max_evals=MAX_EVALS, n_jobs=1):
    """Prior minimizing analytic SER subject to ``H(X) >= h_min``."""
    if problem.objective is not Objective.MIN_SER:
        raise ValueError("problem objective is not min-ser")
    pts = problem.points

    def fun(p):
        if p is None:
            return INFEASIBLE
        return _log_ser(params, pts.with_probs(p), problem.oma_dbm, problem.rule)

    return _ps_common(problem, params, fun, restarts, seed, max_evals, n_jobs, "ps-ser", math.exp)


def optimize_ps_mi(problem, params, restarts=RESTARTS, seed=0, max_evals=MAX_EVALS, n_jobs=1):
    """Prior maximizing ``I(X; Y)``, optionally within entropy bounds."""
    if problem.objective is not Objective.MAX_MI:
        raise ValueError("problem objective is not max-mi")
    pts = problem.points
    base = build_channel(params, pts, problem.oma_dbm)

    def fun(p):
        if p is None:
            return INFEASIBLE
        return -mutual_information(base.with_constellation(pts.with_probs(p)))

    return _ps_common(problem, params, fun, restarts, seed, max_evals, n_jobs, "ps-mi", lambda v: -v)
