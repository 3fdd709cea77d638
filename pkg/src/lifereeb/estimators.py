"""scikit-learn style wrappers around Reeb graph construction and scoring.

Inputs ``X`` are an agent's days: a :class:`~lifereeb.trajectory.TrajectorySet`,
a list of :class:`~lifereeb.trajectory.Trajectory`, or an array of shape
``(n_days, m + 1, 2)`` holding ``(lat, lon)`` samples.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .anomaly import iterative_detect
from .events import find_all_events
from .reeb import construct_reeb
from .trajectory import DEFAULT_EPS, ValidationError, as_trajectory_set


def _check_eps(eps):
    if not (isinstance(eps, (int, float)) and eps > 0):
        raise ValidationError(f"eps must be a positive number, got {eps!r}")


class ReebGraphBuilder(BaseEstimator):
    """Fit the Reeb graph of one agent's days.

    Parameters
    ----------
    eps : float, default=0.0005
        Connectivity threshold in degrees.

    Attributes
    ----------
    graph_ : ReebGraph
    events_ : list of EventRecord
    n_days_, m_ : int
    """

    def __init__(self, eps=DEFAULT_EPS):
        self.eps = eps

    def fit(self, X, y=None):
        _check_eps(self.eps)
        ts = as_trajectory_set(X)
        self.events_ = find_all_events(ts, self.eps)
        self.graph_ = construct_reeb(ts, self.eps)
        self.n_days_ = ts.n
        self.m_ = ts.m
        return self

    @property
    def partition_(self):
        check_is_fitted(self, "graph_")
        return self.graph_.bundles


class ReebAnomalyDetector(TransformerMixin, BaseEstimator):
    """Score days by how much they change the Reeb graph of normal days.

    ``fit`` stores the normal days and their graph.  For each test day the
    graph is rebuilt with that day added and compared to the fitted one hour
    by hour; ``transform`` returns the per-hour distances and
    ``score_samples`` their sum (higher means more anomalous).

    Parameters
    ----------
    eps : float, default=0.0005
        Connectivity threshold in degrees.
    accumulate_threshold : float or None, default=None
        When set, test days scoring at or below it join the baseline before
        the following day is scored.
    """

    def __init__(self, eps=DEFAULT_EPS, accumulate_threshold=None):
        self.eps = eps
        self.accumulate_threshold = accumulate_threshold

    def fit(self, X, y=None):
        _check_eps(self.eps)
        self.train_ = as_trajectory_set(X)
        self.graph_ = construct_reeb(self.train_, self.eps)
        self.m_ = self.train_.m
        return self

    def detect(self, X):
        """Full :class:`~lifereeb.anomaly.AnomalyReport` per test day."""
        check_is_fitted(self, "graph_")
        days = as_trajectory_set(X, agent_id=self.train_.agent_id)
        return iterative_detect(self.train_, list(days), self.eps, self.accumulate_threshold)

    def transform(self, X):
        reports = self.detect(X)
        if not reports:
            return np.empty((0, (self.m_ or 0) + 1))
        return np.array([rep.values() for rep in reports])

    def score_samples(self, X):
        return np.array([rep.day_score for rep in self.detect(X)])
