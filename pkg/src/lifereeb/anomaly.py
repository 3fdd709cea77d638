"""Hour-by-hour distance between Reeb graphs and day-over-day anomaly scoring."""
from __future__ import annotations

import bisect
import math
import warnings
from collections import defaultdict
from dataclasses import dataclass
from typing import NamedTuple, Sequence

from .reeb import ReebGraph, ReebNode, construct_reeb
from .trajectory import DEFAULT_EPS, Trajectory, TrajectorySet, ValidationError, check_trajectory_set

BOTH_PRESENT = "both-present"
ONE_SIDED = "one-sided-nearest"
BOTH_ABSENT = "both-absent"
RULES = (BOTH_PRESENT, ONE_SIDED, BOTH_ABSENT)


class HourDistance(NamedTuple):
    time: int
    value: float
    rule: str


class ReebDistance(NamedTuple):
    day_score: float
    hours: tuple


@dataclass(frozen=True)
class AnomalyReport:
    day_index: int
    hour_distances: tuple
    day_score: float

    def values(self) -> list[float]:
        return [h.value for h in self.hour_distances]


def _node_distance(a: ReebNode, b: ReebNode) -> float:
    return math.hypot(a.location.lat - b.location.lat, a.location.lon - b.location.lon)


def _greedy_match(left: Sequence[ReebNode], right: Sequence[ReebNode]):
    """Pair nodes by ascending distance.

    Returns the matched distances and the unmatched nodes of each side.

    Ties are broken on the sorted location pair so that swapping the two sides
    gives the same matching.
    """
    candidates = []
    for i, a in enumerate(left):
        for j, b in enumerate(right):
            la, lb = tuple(a.location), tuple(b.location)
            candidates.append((_node_distance(a, b), min(la, lb), max(la, lb), i, j))
    candidates.sort(key=lambda c: c[:3])
    used_l, used_r, matched = set(), set(), []
    for d, _, _, i, j in candidates:
        if i in used_l or j in used_r:
            continue
        used_l.add(i)
        used_r.add(j)
        matched.append(d)
    rest_l = [a for i, a in enumerate(left) if i not in used_l]
    rest_r = [b for j, b in enumerate(right) if j not in used_r]
    return matched, rest_l, rest_r


class _TimeIndex:
    """Nodes of one graph bucketed by time, for nearest-in-time lookups."""

    def __init__(self, graph: ReebGraph):
        self.by_time = defaultdict(list)
        for node in graph.nodes:
            self.by_time[node.time].append(node)
        self.times = sorted(self.by_time)

    def __bool__(self):
        return bool(self.times)

    def nearest(self, node: ReebNode) -> float:
        """Distance to the temporally closest nodes, closest in space among those."""
        pos = bisect.bisect_left(self.times, node.time)
        gaps = []
        if pos < len(self.times):
            gaps.append(self.times[pos] - node.time)
        if pos > 0:
            gaps.append(node.time - self.times[pos - 1])
        dt = min(gaps)
        candidates = self.by_time.get(node.time - dt, []) + (self.by_time.get(node.time + dt, []) if dt else [])
        return min(_node_distance(node, other) for other in candidates)


def reeb_distance(r1: ReebGraph, r2: ReebGraph) -> ReebDistance:
    """Distance between two Reeb graphs of the same agent, summed over hours.

    For each time index ``k``:

    * nodes in both graphs: nodes are paired greedily by smallest Euclidean
      distance and the pair distances summed; nodes left unpaired are scored as
      below against the other graph (whose closest nodes in time are at ``k``);
    * nodes in only one graph: each contributes its distance to the temporally
      closest node of the other graph, the spatially nearest on ties;
    * nodes in neither: 0.
    """
    if r1.m != r2.m:
        raise ValidationError(f"graphs have different m: {r1.m} vs {r2.m}")
    idx1, idx2 = _TimeIndex(r1), _TimeIndex(r2)
    if (idx1 and not idx2) or (idx2 and not idx1):
        warnings.warn("one Reeb graph has no nodes; one-sided hours contribute 0", RuntimeWarning)

    hours = []
    for k in range(r1.m + 1):
        a, b = idx1.by_time.get(k, []), idx2.by_time.get(k, [])
        if a and b:
            parts, rest_a, rest_b = _greedy_match(a, b)
            parts += [idx2.nearest(n) for n in rest_a] + [idx1.nearest(n) for n in rest_b]
            hours.append(HourDistance(k, math.fsum(parts), BOTH_PRESENT))
        elif a or b:
            other = idx2 if a else idx1
            parts = [other.nearest(n) for n in (a or b)] if other else []
            hours.append(HourDistance(k, math.fsum(parts), ONE_SIDED))
        else:
            hours.append(HourDistance(k, 0.0, BOTH_ABSENT))
    return ReebDistance(math.fsum(h.value for h in hours), tuple(hours))


def iterative_detect(
    train: TrajectorySet,
    test_days: Sequence[Trajectory],
    eps: float = DEFAULT_EPS,
    accumulate_threshold: float | None = None,
) -> list[AnomalyReport]:
    """Score each test day against the Reeb graph of the training days.

    Every test day is added to the baseline days, the graph rebuilt and its
    distance to the baseline graph reported.  The baseline stays fixed unless
    ``accumulate_threshold`` is given, in which case days scoring at or below
    it are folded into the baseline before the next day is scored.
    """
    check_trajectory_set(train)
    baseline = train
    base_graph = construct_reeb(baseline, eps)
    reports = []
    for day in test_days:
        if baseline.m is not None and day.m != baseline.m:
            raise ValidationError(f"test day {day.day_index} has m={day.m}, expected {baseline.m}")
        probe = day
        if day.day_index in baseline.day_indices:
            probe = day.with_day(max(baseline.day_indices) + 1)
        graph = construct_reeb(baseline.with_day(probe), eps)
        score, hours = reeb_distance(base_graph, graph)
        reports.append(AnomalyReport(day.day_index, hours, score))
        if accumulate_threshold is not None and score <= accumulate_threshold:
            baseline, base_graph = baseline.with_day(probe), graph
    return reports
