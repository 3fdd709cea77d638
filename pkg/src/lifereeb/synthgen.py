"""Synthetic daily routines on a grid road network.

An agent's day is an itinerary of timed stays at points of interest.  Between
stays the agent follows the shortest network path at the uniform speed that
fits the travel window; the day is sampled every 10 seconds and downsampled to
the model grid.  Scenario specs perturb a normal itinerary into one of four
anomaly types: a rare location, a rare route, an uncommon visiting time, or
an uncommon stay duration.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components, dijkstra

from .trajectory import (
    DAY_SECONDS,
    DEFAULT_EPS,
    DEFAULT_M,
    GpsPoint,
    Trajectory,
    TrajectorySet,
    downsample,
)

DAY_HOURS = DAY_SECONDS / 3600
#: Time kept free for travelling between two stays, in hours.
TRAVEL_GAP = 0.25
FINE_STEP_SECONDS = 10


class GenerationError(RuntimeError):
    pass


@dataclass(frozen=True)
class Poi:
    name: str
    location: GpsPoint
    normal_times: tuple = ()
    abnormal_times: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "location", GpsPoint(*map(float, self.location)))
        for arrive, depart in tuple(self.normal_times) + tuple(self.abnormal_times):
            if not 0 <= arrive < depart <= DAY_HOURS:
                raise ValueError(f"{self.name}: bad visit window ({arrive}, {depart})")


@dataclass(frozen=True)
class Visit:
    poi: Poi
    arrive: float
    depart: float


class RoadNetwork:
    """Undirected road graph whose edge weights are traversal times at unit speed."""

    def __init__(self, vertices, edges):
        self.vertices = np.asarray(vertices, dtype=float)
        edges = np.asarray(edges, dtype=int).reshape(-1, 2)
        lengths = np.hypot(*(self.vertices[edges[:, 0]] - self.vertices[edges[:, 1]]).T)
        n = len(self.vertices)
        rows = np.concatenate([edges[:, 0], edges[:, 1]])
        cols = np.concatenate([edges[:, 1], edges[:, 0]])
        self.adjacency = coo_matrix((np.concatenate([lengths, lengths]), (rows, cols)), shape=(n, n)).tocsr()
        self.n_components = int(connected_components(self.adjacency, directed=False)[0])
        self.spacing = float(lengths.min()) if len(lengths) else 0.0
        self._predecessors: dict = {}

    @classmethod
    def grid(cls, origin, step: float, rows: int, cols: int) -> "RoadNetwork":
        """A ``rows`` x ``cols`` lattice starting at ``origin`` = (lat, lon)."""
        lat0, lon0 = origin
        ii, jj = np.meshgrid(np.arange(rows), np.arange(cols), indexing="ij")
        vertices = np.column_stack([lat0 + ii.ravel() * step, lon0 + jj.ravel() * step])
        vid = (ii * cols + jj)
        edges = np.concatenate([
            np.column_stack([vid[:-1, :].ravel(), vid[1:, :].ravel()]),
            np.column_stack([vid[:, :-1].ravel(), vid[:, 1:].ravel()]),
        ])
        return cls(vertices, edges)

    @property
    def is_connected(self) -> bool:
        return self.n_components == 1

    def snap(self, point) -> int:
        """Index of the vertex nearest ``point``."""
        d = np.hypot(self.vertices[:, 0] - point[0], self.vertices[:, 1] - point[1])
        vertex = int(np.argmin(d))
        if self.spacing and d[vertex] > self.spacing:
            raise GenerationError(f"point {tuple(point)} is off the road network")
        return vertex

    def shortest_path(self, source: int, target: int) -> list[int]:
        if source not in self._predecessors:
            _, pred = dijkstra(self.adjacency, directed=False, indices=source, return_predecessors=True)
            self._predecessors[source] = pred
        pred = self._predecessors[source]
        path = [target]
        while path[-1] != source:
            prev = int(pred[path[-1]])
            if prev < 0:
                raise GenerationError(f"vertex {target} unreachable from {source}")
            path.append(prev)
        return path[::-1]


class Scenario(str, enum.Enum):
    NORMAL = "normal"
    RARE_LOCATION = "s1"
    RARE_ROUTE = "s2"
    UNCOMMON_TIME = "s3"
    UNCOMMON_DURATION = "s4"


@dataclass(frozen=True)
class ScenarioSpec:
    """How one day deviates from the routine.

    ``poi`` is the anomalous place (S1) or detour waypoint (S2), visited in its
    ``abnormal_times``; ``schedule`` replaces the whole itinerary (S3);
    ``stay_poi`` and ``delta`` extend the first stay at that POI by ``delta``
    hours (S4).
    """

    kind: Scenario = Scenario.NORMAL
    poi: Poi | None = None
    schedule: tuple | None = None
    stay_poi: str | None = None
    delta: float | None = None
    rng_seed: int = 0

    def __post_init__(self):
        kind = Scenario(self.kind)
        object.__setattr__(self, "kind", kind)
        needs_poi = kind in (Scenario.RARE_LOCATION, Scenario.RARE_ROUTE)
        needs_schedule = kind is Scenario.UNCOMMON_TIME
        needs_stay = kind is Scenario.UNCOMMON_DURATION
        if needs_poi != (self.poi is not None):
            raise ValueError(f"{kind.value}: poi is {'required' if needs_poi else 'not allowed'}")
        if needs_poi and not self.poi.abnormal_times:
            raise ValueError(f"{kind.value}: poi {self.poi.name!r} has no abnormal_times")
        if needs_schedule != (self.schedule is not None):
            raise ValueError(f"{kind.value}: schedule is {'required' if needs_schedule else 'not allowed'}")
        has_stay = (self.stay_poi is not None, self.delta is not None)
        if has_stay != (needs_stay, needs_stay):
            raise ValueError(f"{kind.value}: stay_poi and delta are {'required' if needs_stay else 'not allowed'}")
        if needs_stay and self.delta < 1:
            raise ValueError(f"s4: delta must be at least 1 hour, got {self.delta}")


def _carve(visits: Sequence[Visit], lo: float, hi: float) -> list[Visit]:
    """Remove the time window (lo, hi) from every visit, splitting if needed."""
    out = []
    for v in visits:
        if v.depart <= lo or v.arrive >= hi:
            out.append(v)
            continue
        if v.arrive < lo:
            out.append(replace(v, depart=lo))
        if v.depart > hi:
            out.append(replace(v, arrive=hi))
    return out


def apply_scenario(itinerary: Sequence[Visit], spec: ScenarioSpec) -> list[Visit]:
    visits = sorted(itinerary, key=lambda v: v.arrive)
    kind = spec.kind
    if kind in (Scenario.RARE_LOCATION, Scenario.RARE_ROUTE):
        for arrive, depart in spec.poi.abnormal_times:
            visits = _carve(visits, arrive - TRAVEL_GAP, depart + TRAVEL_GAP)
            visits.append(Visit(spec.poi, arrive, depart))
    elif kind is Scenario.UNCOMMON_TIME:
        visits = list(spec.schedule)
    elif kind is Scenario.UNCOMMON_DURATION:
        idx = next((i for i, v in enumerate(visits) if v.poi.name == spec.stay_poi), None)
        if idx is None:
            raise GenerationError(f"s4: {spec.stay_poi!r} is not on the itinerary")
        stay = visits.pop(idx)
        longer = replace(stay, depart=min(stay.depart + spec.delta, DAY_HOURS))
        visits = _carve(visits, stay.arrive, longer.depart + TRAVEL_GAP) + [longer]
    return sorted(visits, key=lambda v: v.arrive)


def normal_itinerary(pois: Sequence[Poi], rng=None, prefer: Sequence[str] = ()) -> list[Visit]:
    """Expand the POIs' normal windows into one day's itinerary.

    Overlapping windows are alternatives: the one named in ``prefer`` wins,
    otherwise ``rng`` picks uniformly (the first when ``rng`` is None).
    """
    visits = sorted(
        (Visit(p, a, d) for p in pois for a, d in p.normal_times),
        key=lambda v: (v.arrive, v.poi.name),
    )
    chosen, group, group_end = [], [], -1.0
    for v in visits + [None]:
        if v is not None and group and v.arrive < group_end:
            group.append(v)
            group_end = max(group_end, v.depart)
            continue
        if group:
            preferred = [g for g in group if g.poi.name in prefer]
            if preferred:
                chosen.append(preferred[0])
            elif rng is not None and len(group) > 1:
                chosen.append(group[int(rng.integers(len(group)))])
            else:
                chosen.append(group[0])
        if v is not None:
            group, group_end = [v], v.depart
    return chosen


def _keyframes(net: RoadNetwork, visits: Sequence[Visit]):
    times, points, stays = [], [], []
    for i, v in enumerate(visits):
        loc = np.asarray(v.poi.location)
        arrive = 0.0 if i == 0 else v.arrive
        depart = DAY_HOURS if i == len(visits) - 1 else v.depart
        if i > 0:
            prev = visits[i - 1]
            if v.arrive < prev.depart:
                raise GenerationError(f"visits to {prev.poi.name!r} and {v.poi.name!r} overlap")
            route = [np.asarray(prev.poi.location)]
            route += list(net.vertices[net.shortest_path(net.snap(prev.poi.location), net.snap(loc))])
            route.append(loc)
            route = np.array(route)
            seg = np.hypot(*np.diff(route, axis=0).T)
            total = seg.sum()
            frac = np.concatenate([[0.0], np.cumsum(seg)]) / total if total > 0 else np.linspace(0, 1, len(route))
            for f, p in zip(frac[1:-1], route[1:-1]):
                times.append(prev.depart + f * (v.arrive - prev.depart))
                points.append(p)
        else:
            net.snap(loc)
        times += [arrive, depart]
        points += [loc, loc]
        stays.append((arrive, depart))
    return np.array(times) * 3600.0, np.array(points), stays


def generate_day(
    net: RoadNetwork,
    itinerary: Sequence[Visit],
    spec: ScenarioSpec = ScenarioSpec(),
    m: int = DEFAULT_M,
    agent_id: str = "agent",
    day_index: int = 0,
    jitter: float = DEFAULT_EPS / 4,
) -> Trajectory:
    """Simulate one day and downsample it to ``m + 1`` samples.

    Stay positions receive random offsets of radius below ``jitter`` drawn
    from ``spec.rng_seed``.
    """
    visits = apply_scenario(itinerary, spec)
    if not visits:
        raise GenerationError("empty itinerary")
    if not net.is_connected:
        raise GenerationError("road network is not connected")
    for v in visits:
        if not 0 <= v.arrive <= v.depart <= DAY_HOURS:
            raise GenerationError(f"visit to {v.poi.name!r} outside the day: ({v.arrive}, {v.depart})")

    key_t, key_p, stays = _keyframes(net, visits)
    t = np.arange(0, DAY_SECONDS, FINE_STEP_SECONDS, dtype=float)
    fine = np.column_stack([np.interp(t, key_t, key_p[:, 0]), np.interp(t, key_t, key_p[:, 1])])

    rng = np.random.default_rng(spec.rng_seed)
    radius = jitter * rng.random(len(t))
    angle = rng.uniform(0.0, 2 * np.pi, len(t))
    hours = t / 3600.0
    staying = np.zeros(len(t), dtype=bool)
    for arrive, depart in stays:
        staying |= (hours >= arrive) & (hours <= depart)
    fine[staying, 0] += (radius * np.cos(angle))[staying]
    fine[staying, 1] += (radius * np.sin(angle))[staying]

    samples = downsample(fine, m, times=t, period=DAY_SECONDS)
    return Trajectory(agent_id, day_index, samples)


# Case-study layout: a 90 x 90 grid of 0.001 degree blocks.
GRID_ORIGIN = (34.40, -119.86)
GRID_STEP = 0.001
GRID_SIZE = 90


def _at(i, j) -> GpsPoint:
    return GpsPoint(round(GRID_ORIGIN[0] + i * GRID_STEP, 6), round(GRID_ORIGIN[1] + j * GRID_STEP, 6))


VENUES = ("park", "grocery", "lake")


def case_study_pois() -> dict[str, Poi]:
    """Home, school, three after-school venues, a distant theater and a detour point."""
    after_school = ((16.75, 17.5),)
    return {
        "home": Poi("home", _at(10, 10), ((0.0, 7.5), (17.75, 24.0))),
        "school": Poi("school", _at(20, 20), ((7.75, 16.5),)),
        "park": Poi("park", _at(30, 20), after_school),
        "grocery": Poi("grocery", _at(20, 30), after_school),
        "lake": Poi("lake", _at(35, 35), after_school),
        "theater": Poi("theater", _at(80, 80), abnormal_times=((7.75, 12.5),)),
        "detour": Poi("detour", _at(14, 26), abnormal_times=((8.75, 9.25),)),
    }


def case_study_network() -> RoadNetwork:
    return RoadNetwork.grid(GRID_ORIGIN, GRID_STEP, GRID_SIZE, GRID_SIZE)


def scenario_spec(kind, pois: dict[str, Poi], seed: int = 0) -> ScenarioSpec:
    """The case-study parameters for one scenario kind."""
    kind = Scenario(kind)
    if kind is Scenario.RARE_LOCATION:
        return ScenarioSpec(kind, poi=pois["theater"], rng_seed=seed)
    if kind is Scenario.RARE_ROUTE:
        return ScenarioSpec(kind, poi=pois["detour"], rng_seed=seed)
    if kind is Scenario.UNCOMMON_TIME:
        schedule = (
            Visit(pois["home"], 0.0, 1.5),
            Visit(pois["school"], 1.75, 9.5),
            Visit(pois["park"], 9.75, 10.5),
            Visit(pois["home"], 10.75, 24.0),
        )
        return ScenarioSpec(kind, schedule=schedule, rng_seed=seed)
    if kind is Scenario.UNCOMMON_DURATION:
        return ScenarioSpec(kind, stay_poi="home", delta=4, rng_seed=seed)
    return ScenarioSpec(kind, rng_seed=seed)


@dataclass
class CaseStudy:
    train: TrajectorySet
    tests: dict = field(default_factory=dict)
    pois: dict = field(default_factory=dict)

    def test_set(self) -> TrajectorySet:
        return TrajectorySet(self.train.agent_id, tuple(self.tests.values()))


def _day_seeds(seed: int, count: int) -> list[int]:
    return [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(seed).spawn(count)]


def generate_case_study(seed: int = 0, m: int = DEFAULT_M, n_normal_test: int = 0, agent_id: str = "student") -> CaseStudy:
    """Five normal training days plus one test day per scenario S1-S4.

    Training days rotate through the after-school venues so their routines
    split around hour 17 and merge again at home by hour 18.  Up to
    ``n_normal_test`` additional normal days are appended to the tests as
    ``normal-0``, ``normal-1``, ...
    """
    net = case_study_network()
    pois = case_study_pois()
    routine = list(pois.values())
    seeds = _day_seeds(seed, 5 + 4 + n_normal_test)

    def normal_day(day, venue, s):
        itinerary = normal_itinerary(routine, prefer=(venue,))
        return generate_day(net, itinerary, ScenarioSpec(rng_seed=s), m, agent_id, day)

    train = TrajectorySet(agent_id, tuple(
        normal_day(d, VENUES[d % len(VENUES)], seeds[d]) for d in range(5)
    ))
    tests = {}
    for i, kind in enumerate(("s1", "s2", "s3", "s4")):
        day = 5 + i
        itinerary = normal_itinerary(routine, prefer=(VENUES[day % len(VENUES)],))
        tests[kind] = generate_day(net, itinerary, scenario_spec(kind, pois, seeds[day]), m, agent_id, day)
    for j in range(n_normal_test):
        day = 9 + j
        tests[f"normal-{j}"] = normal_day(day, VENUES[day % len(VENUES)], seeds[day])
    return CaseStudy(train, tests, pois)


def generate_scenario_days(kind, seed: int = 0, days: int = 1, m: int = DEFAULT_M, agent_id: str = "student") -> TrajectorySet:
    """``days`` trajectories of a single scenario on the case-study layout."""
    net = case_study_network()
    pois = case_study_pois()
    routine = list(pois.values())
    rng = np.random.default_rng(seed)
    out = []
    for day, s in enumerate(_day_seeds(seed, days)):
        itinerary = normal_itinerary(routine, rng=rng)
        out.append(generate_day(net, itinerary, scenario_spec(kind, pois, s), m, agent_id, day))
    return TrajectorySet(agent_id, tuple(out))
