"""Appear/disappear and connect/disconnect events between daily trajectories."""
from __future__ import annotations

import enum
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .trajectory import (
    Trajectory,
    TrajectorySet,
    ValidationError,
    pairwise_distances,
)


class EventKind(enum.IntEnum):
    # Value is the within-time ordering used by find_all_events.
    APPEAR = 0
    CONNECT = 1
    DISCONNECT = 2
    DISAPPEAR = 3

    @property
    def label(self) -> str:
        return self.name.lower()


@dataclass(frozen=True, order=True)
class EventRecord:
    time: int
    kind: EventKind
    subjects: tuple

    def __post_init__(self):
        subjects = tuple(int(s) for s in self.subjects)
        if self.kind in (EventKind.CONNECT, EventKind.DISCONNECT):
            if len(subjects) != 2 or subjects[0] == subjects[1]:
                raise ValueError(f"{self.kind.label} needs two distinct subjects, got {subjects}")
            subjects = tuple(sorted(subjects))
        elif len(subjects) != 1:
            raise ValueError(f"{self.kind.label} needs exactly one subject, got {subjects}")
        object.__setattr__(self, "subjects", subjects)

    def sort_key(self):
        return (self.time, int(self.kind), self.subjects)


@dataclass(frozen=True)
class PairEventMap:
    """Connect/disconnect events of one unordered trajectory pair.

    ``events`` holds ``(time, kind)`` tuples in increasing time, alternating
    and starting with a connect.
    """

    pair: tuple
    events: tuple

    def as_dict(self) -> dict:
        return dict(self.events)

    def records(self) -> list[EventRecord]:
        return [EventRecord(k, kind, self.pair) for k, kind in self.events]

    def __len__(self):
        return len(self.events)


def connectivity_runs(connected: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Start indices and exclusive end indices of the True runs in ``connected``."""
    c = np.asarray(connected, dtype=np.int8)
    edges = np.diff(np.concatenate(([0], c, [0])))
    return np.flatnonzero(edges == 1), np.flatnonzero(edges == -1)


def find_pair_events(a: Trajectory, b: Trajectory, eps: float) -> PairEventMap:
    """Connect/disconnect events between two trajectories.

    Two trajectories are connected at ``t_k`` when their positions are at most
    ``eps`` apart.  A connect is emitted at the first index of every maximal
    connected run and a disconnect at the first index after it, unless the run
    lasts through ``t_m``.
    """
    if not eps > 0:
        raise ValidationError(f"eps must be positive, got {eps}")
    if a.m != b.m:
        raise ValidationError(
            f"trajectories have different lengths: day {a.day_index} m={a.m}, day {b.day_index} m={b.m}"
        )
    pair = tuple(sorted((a.day_index, b.day_index)))
    connected = pairwise_distances(a.samples, b.samples) <= eps
    starts, stops = connectivity_runs(connected)
    m = a.m
    events = []
    for start, stop in zip(starts.tolist(), stops.tolist()):
        events.append((start, EventKind.CONNECT))
        if stop <= m:
            events.append((stop, EventKind.DISCONNECT))
    return PairEventMap(pair, tuple(events))


def find_boundary_events(ts: TrajectorySet) -> list[EventRecord]:
    """One appear at ``t_0`` and one disappear at ``t_m`` per trajectory."""
    out = []
    for traj in ts:
        out.append(EventRecord(0, EventKind.APPEAR, (traj.day_index,)))
    for traj in ts:
        out.append(EventRecord(traj.m, EventKind.DISAPPEAR, (traj.day_index,)))
    out.sort(key=EventRecord.sort_key)
    return out


def find_all_pair_events(ts: TrajectorySet, eps: float) -> list[PairEventMap]:
    by_day = sorted(ts, key=lambda t: t.day_index)
    return [find_pair_events(a, b, eps) for a, b in combinations(by_day, 2)]


def find_all_events(ts: TrajectorySet, eps: float) -> list[EventRecord]:
    """Boundary and pair events of a set, in a deterministic total order.

    Records are sorted by time, then appear < connect < disconnect <
    disappear, then by subject day indices.
    """
    records = find_boundary_events(ts)
    for pem in find_all_pair_events(ts, eps):
        records.extend(pem.records())
    records.sort(key=EventRecord.sort_key)
    return records
