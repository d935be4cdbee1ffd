"""scikit-learn compatible front-ends.

Detectors follow the classifier protocol: samples are received values
``y`` (shape ``(n,)`` or ``(n, 1)``) and labels are symbol indices.  A
detector built around a :class:`~rinlink.link.ChannelModel` needs no
training data; without one, ``fit`` estimates per-class means, standard
deviations and priors from labelled samples and plugs them into the same
threshold rules.

Shapers wrap the optimizers in :mod:`rinlink.shaping` so they can be
cloned and re-parameterized with ``set_params``.
"""

from __future__ import annotations

import numpy as np
from scipy.special import softmax
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .constellation import Constellation
from .detection import ThresholdRule, map_scores, thresholds_from_arrays
from .link import LinkParams, build_channel
from .metrics import mutual_information_from_arrays, ser_from_arrays
from .shaping import (
    GsProblem,
    Objective,
    PsProblem,
    optimize_gs,
    optimize_ps_mi,
    optimize_ps_ser,
)


def check_samples(X):
    """Validate received samples and return them as a 1-D float array."""
    X = check_array(X, ensure_2d=False, dtype=float)
    if X.ndim == 2:
        if X.shape[1] != 1:
            raise ValueError(f"expected a single feature, got shape {X.shape}")
        X = X[:, 0]
    elif X.ndim != 1:
        raise ValueError(f"expected 1-D or (n, 1) samples, got shape {X.shape}")
    return X


class _ChannelDetector(ClassifierMixin, BaseEstimator):
    def _fit_statistics(self, X, y):
        if self.channel is not None:
            m = self.channel
            self.classes_ = np.arange(m.order)
            self.points_ = np.asarray(m.points)
            self.sigma_ = np.asarray(m.cond_sigma)
            self.probs_ = np.asarray(m.probs)
            return
        if X is None or y is None:
            raise ValueError("fit needs labelled samples when no channel is given")
        X = check_samples(X)
        y = np.asarray(y)
        if y.shape != X.shape:
            raise ValueError("X and y have inconsistent lengths")
        self.classes_, inverse, counts = np.unique(y, return_inverse=True, return_counts=True)
        if self.classes_.size < 2:
            raise ValueError("need at least two classes")
        means = np.bincount(inverse, weights=X) / counts
        var = np.bincount(inverse, weights=(X - means[inverse]) ** 2) / counts
        order = np.argsort(means)
        self.classes_ = self.classes_[order]
        self.points_ = means[order]
        self.sigma_ = np.sqrt(var[order])
        self.probs_ = counts[order] / counts.sum()

    def expected_ser(self):
        """Analytic SER of this detector under its own channel statistics."""
        check_is_fitted(self)
        return ser_from_arrays(self.points_, self.sigma_, self.probs_, self._slicing_thresholds()).average

    def mutual_information(self):
        check_is_fitted(self)
        return mutual_information_from_arrays(self.points_, self.sigma_, self.probs_)


class ThresholdDetector(_ChannelDetector):
    """Hard slicer with thresholds from one of the four threshold rules.

    Parameters
    ----------
    channel : ChannelModel or None
        Channel to design for. If None the statistics are learned in ``fit``.
    rule : str
        ``"optimal"``, ``"uniform-exact"``, ``"approx"`` or ``"awgn"``.

    Attributes
    ----------
    thresholds_ : ThresholdSet
    classes_ : ndarray
    """

    def __init__(self, channel=None, rule="optimal"):
        self.channel = channel
        self.rule = rule

    def fit(self, X=None, y=None):
        self._fit_statistics(X, y)
        self.thresholds_ = thresholds_from_arrays(
            self.points_, self.sigma_, self.probs_, ThresholdRule.parse(self.rule)
        )
        return self

    def _slicing_thresholds(self):
        return self.thresholds_.thresholds

    def predict(self, X):
        check_is_fitted(self)
        idx = np.searchsorted(self.thresholds_.thresholds, check_samples(X), side="right")
        return self.classes_[idx]


class MAPDetector(_ChannelDetector):
    """Full argmax MAP detector with posterior probabilities."""

    def __init__(self, channel=None):
        self.channel = channel

    def fit(self, X=None, y=None):
        self._fit_statistics(X, y)
        return self

    def _slicing_thresholds(self):
        return thresholds_from_arrays(self.points_, self.sigma_, self.probs_, "optimal").thresholds

    def decision_function(self, X):
        check_is_fitted(self)
        return map_scores(check_samples(X), self.points_, self.sigma_, self.probs_)

    def predict_proba(self, X):
        return softmax(self.decision_function(X), axis=1)

    def predict(self, X):
        check_is_fitted(self)
        return self.classes_[np.argmax(self.decision_function(X), axis=1)]


class GeometricShaper(BaseEstimator):
    """Fixed-endpoint geometric shaping as an estimator.

    ``fit(constellation)`` optimizes the interior points; the result is in
    ``constellation_`` and ``result_``.
    """

    def __init__(self, params=None, oma_dbm=0.0, rule="optimal", restarts=8, seed=0,
                 min_gap=1e-3, max_evals=2000, n_jobs=1):
        self.params = params
        self.oma_dbm = oma_dbm
        self.rule = rule
        self.restarts = restarts
        self.seed = seed
        self.min_gap = min_gap
        self.max_evals = max_evals
        self.n_jobs = n_jobs

    def fit(self, X, y=None):
        base = X if isinstance(X, Constellation) else Constellation.pam(int(X))
        params = self.params or LinkParams.for_order(base.order)
        problem = GsProblem(base, self.oma_dbm, self.rule, self.min_gap)
        self.result_ = optimize_gs(problem, params, self.restarts, self.seed, self.max_evals, self.n_jobs)
        self.constellation_ = self.result_.constellation
        self.channel_ = build_channel(params, self.constellation_, self.oma_dbm)
        return self

    def transform(self, X=None):
        check_is_fitted(self)
        return self.constellation_.points.copy()


class ProbabilisticShaper(BaseEstimator):
    """Probabilistic shaping for minimum SER or maximum mutual information."""

    def __init__(self, params=None, oma_dbm=0.0, rule="optimal", objective="min-ser",
                 h_min=None, h_max=None, restarts=8, seed=0, max_evals=2000, n_jobs=1):
        self.params = params
        self.oma_dbm = oma_dbm
        self.rule = rule
        self.objective = objective
        self.h_min = h_min
        self.h_max = h_max
        self.restarts = restarts
        self.seed = seed
        self.max_evals = max_evals
        self.n_jobs = n_jobs

    def fit(self, X, y=None):
        base = X if isinstance(X, Constellation) else Constellation.pam(int(X))
        params = self.params or LinkParams.for_order(base.order)
        problem = PsProblem(base, self.oma_dbm, self.rule, self.h_min, Objective(self.objective), self.h_max)
        solver = optimize_ps_ser if problem.objective is Objective.MIN_SER else optimize_ps_mi
        self.result_ = solver(problem, params, self.restarts, self.seed, self.max_evals, self.n_jobs)
        self.constellation_ = self.result_.constellation
        self.channel_ = build_channel(params, self.constellation_, self.oma_dbm)
        return self

    def transform(self, X=None):
        check_is_fitted(self)
        return self.constellation_.probs.copy()
