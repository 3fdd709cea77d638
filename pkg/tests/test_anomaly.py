import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from lifereeb.anomaly import (
    BOTH_ABSENT,
    BOTH_PRESENT,
    ONE_SIDED,
    iterative_detect,
    reeb_distance,
)
from lifereeb.reeb import ReebGraph, ReebNode, construct_reeb
from lifereeb.trajectory import GpsPoint, Trajectory, TrajectorySet, ValidationError

EPS = 0.0005


def graph(nodes, m=5):
    """ReebGraph from (time, lat, lon) tuples; edges do not enter the distance."""
    ns = tuple(ReebNode(i, t, GpsPoint(lat, lon), frozenset({i})) for i, (t, lat, lon) in enumerate(nodes))
    return ReebGraph(ns, (), m, len(ns), EPS)


class TestHandComputed:
    def test_identity(self):
        g = graph([(0, 0.0, 0.0), (3, 1.0, 1.0)])
        score, hours = reeb_distance(g, g)
        assert score == 0.0
        assert [h.rule for h in hours] == [BOTH_PRESENT, BOTH_ABSENT, BOTH_ABSENT, BOTH_PRESENT, BOTH_ABSENT, BOTH_ABSENT]

    def test_both_present_matches_closest_pairs(self):
        a = graph([(0, 0.0, 0.0), (0, 10.0, 0.0)])
        b = graph([(0, 10.0, 4.0), (0, 3.0, 4.0)])
        score, hours = reeb_distance(a, b)
        # (0,0)-(3,4) = 5 and (10,0)-(10,4) = 4
        assert hours[0].value == 9.0 and score == 9.0

    def test_one_sided_uses_nearest_time(self):
        a = graph([(0, 0.0, 0.0), (4, 0.0, 0.0)])
        b = graph([(0, 0.0, 0.0), (2, 3.0, 4.0), (4, 0.0, 0.0)])
        score, hours = reeb_distance(a, b)
        # node at k=2 is equally far in time from 0 and 4; both lie 5 away
        assert hours[2].rule == ONE_SIDED and hours[2].value == 5.0
        assert score == 5.0

    def test_one_sided_tie_takes_spatially_nearest(self):
        a = graph([(1, 0.0, 3.0), (3, 0.0, 1.0)])
        b = graph([(2, 0.0, 0.0)])
        _, hours = reeb_distance(a, b)
        assert hours[2].value == 1.0

    def test_unmatched_nodes_in_busy_hour(self):
        a = graph([(1, 0.0, 0.0), (1, 0.0, 2.0), (1, 0.0, 7.0)])
        b = graph([(1, 0.0, 0.0)])
        _, hours = reeb_distance(a, b)
        # (0,0) pairs exactly; the other two fall back to b's node at the same time
        assert hours[1].value == 9.0

    def test_empty_other_graph_warns(self):
        a = graph([(0, 0.0, 0.0)])
        with pytest.warns(RuntimeWarning):
            score, hours = reeb_distance(a, graph([]))
        assert score == 0.0 and hours[0].rule == ONE_SIDED

    def test_both_empty(self):
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            score, _ = reeb_distance(graph([]), graph([]))
        assert score == 0.0

    def test_different_m(self):
        with pytest.raises(ValidationError):
            reeb_distance(graph([], m=5), graph([], m=6))


def random_graph(seed, n=None, m=None):
    rng = np.random.default_rng(seed)
    n = n or int(rng.integers(1, 7))
    m = m or int(rng.integers(1, 30))
    maker = oracles.sticky_set if rng.random() < 0.5 else oracles.random_walk_set
    return construct_reeb(maker(rng, n, m, EPS), EPS)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_identity_random(seed):
    assert reeb_distance(*[random_graph(seed)] * 2).day_score == 0.0


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(0, 2**32 - 1))
def test_symmetry_and_non_negative(s1, s2):
    a, b = random_graph(s1, m=20), random_graph(s2, m=20)
    ab, ba = reeb_distance(a, b), reeb_distance(b, a)
    assert ab.day_score == ba.day_score
    assert [h.value for h in ab.hours] == [h.value for h in ba.hours]
    assert all(h.value >= 0 for h in ab.hours)
    assert ab.day_score == math.fsum(h.value for h in ab.hours)


HOME = np.array([34.42, -119.70])


def routine(d, away=(), m=23):
    pts = np.tile(HOME, (m + 1, 1))
    for k in away:
        pts[k] += [0.01, 0.01]
    return Trajectory("a", d, pts)


class TestIterativeDetect:
    def test_normal_day_scores_zero(self):
        train = TrajectorySet("a", tuple(routine(d) for d in range(5)))
        (rep,) = iterative_detect(train, [routine(5)], EPS)
        assert rep.day_score == 0.0 and rep.day_index == 5
        assert len(rep.hour_distances) == 24

    def test_anomalous_day_scores_positive(self):
        train = TrajectorySet("a", tuple(routine(d) for d in range(5)))
        normal, odd = iterative_detect(train, [routine(5), routine(6, range(9, 12))], EPS)
        assert odd.day_score > normal.day_score
        # the split at 9 is far from home; the merge at 12 sits on the baseline home nodes
        assert {h.time for h in odd.hour_distances if h.value > 0} == {9}

    def test_fixed_baseline_independent_of_order(self):
        train = TrajectorySet("a", tuple(routine(d) for d in range(3)))
        tests = [routine(5, [3]), routine(6, [8, 9])]
        fwd = iterative_detect(train, tests, EPS)
        bwd = iterative_detect(train, tests[::-1], EPS)
        assert [r.day_score for r in fwd] == [r.day_score for r in bwd[::-1]]

    def test_accumulate_folds_low_scores(self):
        train = TrajectorySet("a", (routine(0), routine(1)))
        repeat = [routine(5, [4]), routine(6, [4])]
        fixed = iterative_detect(train, repeat, EPS)
        grown = iterative_detect(train, repeat, EPS, accumulate_threshold=math.inf)
        assert fixed[0].day_score == fixed[1].day_score
        assert grown[0].day_score == fixed[0].day_score
        assert grown[1].day_score < fixed[1].day_score

    def test_colliding_day_index_relabelled(self):
        train = TrajectorySet("a", tuple(routine(d) for d in range(3)))
        (rep,) = iterative_detect(train, [routine(1, [2])], EPS)
        assert rep.day_index == 1 and rep.day_score > 0

    def test_mismatched_m(self):
        train = TrajectorySet("a", tuple(routine(d) for d in range(3)))
        with pytest.raises(ValidationError):
            iterative_detect(train, [routine(4, m=22)], EPS)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(0, 2**32 - 1))
def test_rule_tags_follow_node_presence(s1, s2):
    a, b = random_graph(s1, m=15), random_graph(s2, m=15)
    ta, tb = set(a.node_times()), set(b.node_times())
    for h in reeb_distance(a, b).hours:
        present = (h.time in ta) + (h.time in tb)
        assert h.rule == {2: BOTH_PRESENT, 1: ONE_SIDED, 0: BOTH_ABSENT}[present]
