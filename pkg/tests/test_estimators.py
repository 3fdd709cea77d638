import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from lifereeb.estimators import ReebAnomalyDetector, ReebGraphBuilder
from lifereeb.reeb import construct_reeb
from lifereeb.synthgen import generate_case_study
from lifereeb.trajectory import ValidationError

HOME = np.array([34.42, -119.70])


def days(n, m=23, away=None):
    arr = np.tile(HOME, (n, m + 1, 1))
    if away is not None:
        arr[:, away] += 0.01
    return arr


class TestBuilder:
    def test_params_and_clone(self):
        est = ReebGraphBuilder(eps=0.001)
        assert est.get_params() == {"eps": 0.001}
        assert clone(est).eps == 0.001

    def test_fit_matches_function(self):
        X = days(4)
        est = ReebGraphBuilder().fit(X)
        assert est.graph_.nodes == construct_reeb(X).nodes
        assert est.n_days_ == 4 and est.m_ == 23
        assert len(est.events_) == 4 + 6 + 4
        assert len(est.partition_) == 1

    def test_not_fitted(self):
        with pytest.raises(NotFittedError):
            ReebGraphBuilder().partition_

    @pytest.mark.parametrize("eps", [0, -1, "x", None])
    def test_bad_eps(self, eps):
        with pytest.raises(ValidationError):
            ReebGraphBuilder(eps=eps).fit(days(2))

    def test_bad_shape(self):
        with pytest.raises(ValidationError):
            ReebGraphBuilder().fit(np.zeros((2, 24, 3)))


class TestDetector:
    def test_transform_shape(self):
        det = ReebAnomalyDetector().fit(days(5))
        out = det.transform(days(2))
        assert out.shape == (2, 24)
        assert np.all(out == 0)

    def test_scores_rank_anomaly(self):
        det = ReebAnomalyDetector().fit(days(5))
        test = np.concatenate([days(1), days(1, away=slice(9, 12))])
        scores = det.score_samples(test)
        assert scores[0] == 0 and scores[1] > 0
        np.testing.assert_allclose(det.transform(test).sum(axis=1), scores)

    def test_fit_transform_uses_training_days(self):
        out = ReebAnomalyDetector().fit_transform(days(3))
        assert out.shape == (3, 24)

    def test_not_fitted(self):
        with pytest.raises(NotFittedError):
            ReebAnomalyDetector().transform(days(1))

    def test_clone_keeps_threshold(self):
        det = clone(ReebAnomalyDetector(accumulate_threshold=0.5))
        assert det.get_params() == {"eps": 0.0005, "accumulate_threshold": 0.5}

    def test_case_study_scores(self):
        cs = generate_case_study(seed=0)
        det = ReebAnomalyDetector().fit(cs.train)
        scores = dict(zip(cs.tests, det.score_samples(cs.test_set())))
        assert scores["s1"] > scores["s3"] > 0
