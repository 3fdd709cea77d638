import numpy as np
import pytest

from lifereeb.anomaly import iterative_detect
from lifereeb.synthgen import (
    GenerationError,
    Poi,
    RoadNetwork,
    Scenario,
    ScenarioSpec,
    Visit,
    apply_scenario,
    case_study_network,
    case_study_pois,
    generate_case_study,
    generate_day,
    generate_scenario_days,
    normal_itinerary,
    scenario_spec,
)
from lifereeb.trajectory import DEFAULT_EPS as EPS, validate_set


@pytest.fixture(scope="module")
def study():
    return generate_case_study(seed=0, n_normal_test=3)


def far_hours(day, train):
    """Hours at which ``day`` is farther than eps from every training day."""
    d = np.hypot(*(train.positions() - day.samples[None]).transpose(2, 0, 1))
    return set(np.flatnonzero((d > EPS).all(axis=0)).tolist())


class TestRoadNetwork:
    def test_grid_path_is_manhattan(self):
        net = RoadNetwork.grid((0.0, 0.0), 1.0, 6, 6)
        path = net.shortest_path(net.snap((0, 0)), net.snap((4, 3)))
        assert len(path) - 1 == 7
        steps = np.abs(np.diff(net.vertices[path], axis=0)).sum(axis=1)
        assert np.allclose(steps, 1.0)

    def test_disconnected_network(self):
        net = RoadNetwork([[0, 0], [0, 1], [5, 5], [5, 6]], [[0, 1], [2, 3]])
        assert not net.is_connected
        with pytest.raises(GenerationError):
            net.shortest_path(0, 3)

    def test_snap_off_network(self):
        net = RoadNetwork.grid((0.0, 0.0), 1.0, 3, 3)
        with pytest.raises(GenerationError):
            net.snap((10.0, 10.0))

    def test_generate_day_rejects_disconnected_network(self):
        net = RoadNetwork([[0, 0], [0, 1], [5, 5], [5, 6]], [[0, 1], [2, 3]])
        a, b = Poi("a", (0, 0), ((0, 10),)), Poi("b", (5, 5), ((11, 24),))
        with pytest.raises(GenerationError):
            generate_day(net, normal_itinerary([a, b]))


class TestScenarioSpec:
    def test_s1_requires_poi(self):
        with pytest.raises(ValueError):
            ScenarioSpec(Scenario.RARE_LOCATION)

    def test_s4_delta_at_least_one_hour(self):
        with pytest.raises(ValueError):
            ScenarioSpec(Scenario.UNCOMMON_DURATION, stay_poi="home", delta=0.5)

    def test_normal_takes_no_extras(self):
        with pytest.raises(ValueError):
            ScenarioSpec(Scenario.NORMAL, delta=2)

    def test_poi_window_checked(self):
        with pytest.raises(ValueError):
            Poi("x", (0, 0), ((5, 3),))

    def test_s4_extends_stay(self):
        pois = case_study_pois()
        visits = apply_scenario(normal_itinerary(list(pois.values())), scenario_spec("s4", pois))
        home = visits[0]
        assert home.poi.name == "home" and home.depart == 11.5
        assert all(v.arrive >= home.depart for v in visits[1:])

    def test_s4_missing_poi(self):
        pois = case_study_pois()
        spec = ScenarioSpec(Scenario.UNCOMMON_DURATION, stay_poi="gym", delta=2)
        with pytest.raises(GenerationError):
            apply_scenario(normal_itinerary(list(pois.values())), spec)


def test_normal_itinerary_prefers_venue():
    pois = list(case_study_pois().values())
    names = [v.poi.name for v in normal_itinerary(pois, prefer=("lake",))]
    assert names == ["home", "school", "lake", "home"]


def test_overlapping_visits_rejected():
    pois = case_study_pois()
    bad = [Visit(pois["home"], 0, 10), Visit(pois["school"], 9, 24)]
    with pytest.raises(GenerationError, match="overlap"):
        generate_day(case_study_network(), bad, ScenarioSpec(Scenario.UNCOMMON_TIME, schedule=tuple(bad)))


class TestCaseStudy:
    def test_shape_and_validity(self, study):
        assert study.train.n == 5 and study.train.m == 23
        assert list(study.tests) == ["s1", "s2", "s3", "s4", "normal-0", "normal-1", "normal-2"]
        assert validate_set(study.train) == [] and validate_set(study.test_set()) == []

    def test_seed_determinism(self, study):
        again = generate_case_study(seed=0, n_normal_test=3)
        assert again.train.trajectories == study.train.trajectories
        assert again.tests == study.tests
        other = generate_case_study(seed=1)
        assert other.train.trajectories != study.train.trajectories

    def test_normal_days_share_every_hour_but_the_venue(self, study):
        pos = study.train.positions()
        for i in range(5):
            for j in range(i + 1, 5):
                d = np.hypot(*(pos[i] - pos[j]).T)
                close = set(np.flatnonzero(d <= EPS).tolist())
                assert close >= set(range(24)) - {17}

    def test_normal_test_days_never_far(self, study):
        for j in range(3):
            assert far_hours(study.tests[f"normal-{j}"], study.train) == set()

    @pytest.mark.parametrize("kind, window", [
        ("s1", set(range(8, 13))),                      # theater 7:45-12:30
        ("s2", {9}),                                    # detour 8:45-9:15
        ("s3", set(range(2, 8)) | set(range(10, 18))),  # shifted schedule
        ("s4", set(range(8, 12))),                      # home until 11:30
    ])
    def test_scenario_far_hours(self, study, kind, window):
        hours = far_hours(study.tests[kind], study.train)
        assert hours and hours <= window

    def test_s3_stays_on_normal_pois(self, study):
        pois = case_study_pois()
        normal = np.array([pois[n].location for n in ("home", "school", "park", "grocery", "lake")])
        day = study.tests["s3"].samples
        d = np.hypot(*(day[:, None, :] - normal[None]).transpose(2, 0, 1)).min(axis=1)
        assert d.max() <= EPS

    def test_jitter_below_quarter_eps(self, study):
        home = np.asarray(case_study_pois()["home"].location)
        d = np.hypot(*(study.train.positions()[:, 0] - home).T)
        assert d.max() < EPS / 4


def test_generate_scenario_days_deterministic():
    a = generate_scenario_days("s2", seed=4, days=2)
    b = generate_scenario_days("s2", seed=4, days=2)
    assert a.trajectories == b.trajectories and a.n == 2


def test_other_resolution():
    ts = generate_scenario_days("normal", seed=0, days=1, m=47)
    assert ts.m == 47


def test_s1_score_grows_with_distance(study):
    net = case_study_network()
    pois = case_study_pois()
    itinerary = normal_itinerary(list(pois.values()), prefer=("park",))
    scores = []
    for cell in (40, 60, 80):
        lat, lon = net.vertices[cell * 90 + cell]
        theater = Poi("theater", (lat, lon), abnormal_times=((7.75, 12.5),))
        day = generate_day(net, itinerary, ScenarioSpec(Scenario.RARE_LOCATION, poi=theater, rng_seed=7),
                           agent_id="student", day_index=5)
        (rep,) = iterative_detect(study.train, [day], EPS)
        scores.append(rep.day_score)
    assert scores == sorted(scores) and scores[0] > 0
