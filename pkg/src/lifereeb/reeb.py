"""Dynamic connectivity graphs, bundle partitions and Reeb graph construction.

Replaying the time-ordered event stream gives, at every event time, the graph
whose vertices are the days present and whose edges join days within ``eps``.
Its connected components are the groupings of the agent's days.  A bundle is a
maximal interval over which one member set stays a component; the Reeb graph
has a node wherever a component is born (plus one terminal node per component
alive at ``t_m``) and an edge for every bundle.
"""
from __future__ import annotations

import gc
from collections import defaultdict
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .events import EventKind, EventRecord, find_all_events
from .trajectory import DEFAULT_EPS, GpsPoint, TrajectorySet, ValidationError, as_trajectory_set


class MalformedEventStreamError(ValueError):
    pass


@dataclass(frozen=True)
class DynamicGraph:
    vertices: frozenset = frozenset()
    edges: frozenset = frozenset()

    def __post_init__(self):
        for a, b in self.edges:
            if a not in self.vertices or b not in self.vertices:
                raise MalformedEventStreamError(f"edge ({a}, {b}) between absent vertices")


class Snapshot(NamedTuple):
    """Graph state at one event time.

    ``graph`` reflects every event at ``time``.  ``observed`` is the state the
    samples at ``time`` actually see: all events applied except disappearances,
    which take effect once the instant is over.
    """

    time: int
    graph: DynamicGraph
    observed: DynamicGraph


def connected_components(g: DynamicGraph) -> list[frozenset]:
    """Connected components of ``g``, ordered by smallest member."""
    parent = {v: v for v in g.vertices}

    def find(v):
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    for a, b in g.edges:
        ra, rb = find(a), find(b)
        if ra != rb:
            if rb < ra:
                ra, rb = rb, ra
            parent[rb] = ra

    groups = defaultdict(set)
    for v in g.vertices:
        groups[find(v)].add(v)
    return sorted((frozenset(s) for s in groups.values()), key=min)


def _group_by_time(events: Iterable[EventRecord]):
    batch, current = [], None
    for ev in events:
        if current is not None and ev.time < current:
            raise MalformedEventStreamError(f"event at t={ev.time} after t={current}")
        if ev.time != current and batch:
            yield current, batch
            batch = []
        current = ev.time
        batch.append(ev)
    if batch:
        yield current, batch


def replay_events(events: Sequence[EventRecord]) -> list[Snapshot]:
    """Apply a time-ordered event stream, one :class:`Snapshot` per event time."""
    vertices: set = set()
    edges: set = set()
    snapshots = []
    for time, batch in _group_by_time(events):
        leaving = []
        for ev in sorted(batch, key=EventRecord.sort_key):
            if ev.kind is EventKind.APPEAR:
                (v,) = ev.subjects
                if v in vertices:
                    raise MalformedEventStreamError(f"t={time}: day {v} appears twice")
                vertices.add(v)
            elif ev.kind is EventKind.CONNECT:
                a, b = ev.subjects
                if a not in vertices or b not in vertices:
                    raise MalformedEventStreamError(f"t={time}: connect ({a}, {b}) with absent vertex")
                if ev.subjects in edges:
                    raise MalformedEventStreamError(f"t={time}: edge ({a}, {b}) already present")
                edges.add(ev.subjects)
            elif ev.kind is EventKind.DISCONNECT:
                if ev.subjects not in edges:
                    raise MalformedEventStreamError(f"t={time}: disconnect of absent edge {ev.subjects}")
                edges.remove(ev.subjects)
            else:
                (v,) = ev.subjects
                if v not in vertices or v in leaving:
                    raise MalformedEventStreamError(f"t={time}: day {v} disappears while absent")
                leaving.append(v)
        observed = DynamicGraph(frozenset(vertices), frozenset(edges))
        if leaving:
            vertices.difference_update(leaving)
            edges = {e for e in edges if e[0] in vertices and e[1] in vertices}
            graph = DynamicGraph(frozenset(vertices), frozenset(edges))
        else:
            graph = observed
        snapshots.append(Snapshot(time, graph, observed))
    return snapshots


@dataclass(frozen=True)
class Bundle:
    id: int
    members: frozenset
    start: int
    end: int

    def __post_init__(self):
        if not self.members:
            raise ValueError("bundle needs at least one member")
        if self.start > self.end:
            raise ValueError(f"bundle {self.id}: start {self.start} > end {self.end}")

    def covers(self, day: int, k: int) -> bool:
        return day in self.members and self.start <= k <= self.end


@dataclass(frozen=True)
class BundlePartition:
    bundles: tuple = ()

    def __iter__(self):
        return iter(self.bundles)

    def __len__(self):
        return len(self.bundles)

    def at(self, k: int) -> list[Bundle]:
        return [b for b in self.bundles if b.start <= k <= b.end]

    def coverage(self) -> dict:
        """Map ``(day, k)`` to the list of bundle ids covering it."""
        cover = defaultdict(list)
        for b in self.bundles:
            for day in b.members:
                for k in range(b.start, b.end + 1):
                    cover[(day, k)].append(b.id)
        return cover


def partition_bundles(snapshots: Sequence[Snapshot]) -> BundlePartition:
    """Partition every (day, time) sample into bundles.

    A component whose member set is unchanged from the previous event time
    continues its bundle; any other component opens a new bundle.  Bundle ids
    follow time order, ties broken by smallest member.
    """
    active: dict = {}  # members -> (id, start)
    closed: list = []
    next_id = 0

    def open_(members, start):
        nonlocal next_id
        active[members] = (next_id, start)
        next_id += 1

    def close(members, end):
        bid, start = active.pop(members)
        closed.append(Bundle(bid, members, start, end))

    last_time = None
    for snap in snapshots:
        t = snap.time
        comps = connected_components(snap.observed)
        current = set(comps)
        for members in [c for c in active if c not in current]:
            close(members, t - 1)
        for members in comps:
            if members not in active:
                open_(members, t)
        if snap.graph is not snap.observed:
            after = connected_components(snap.graph)
            remaining = set(after)
            for members in sorted((c for c in active if c not in remaining), key=min):
                close(members, t)
            for members in after:
                if members not in active:
                    open_(members, t + 1)
        last_time = t
    for members in sorted(active, key=min):
        close(members, last_time)
    return BundlePartition(tuple(sorted(closed, key=lambda b: b.id)))


@dataclass(frozen=True)
class ReebNode:
    id: int
    time: int
    location: GpsPoint
    members: frozenset


@dataclass(frozen=True)
class ReebEdge:
    source: int
    target: int
    bundle: int
    members: frozenset


@dataclass(frozen=True)
class ReebGraph:
    nodes: tuple
    edges: tuple
    m: int
    n: int
    eps: float
    bundles: BundlePartition = field(default_factory=BundlePartition)

    def nodes_at(self, k: int) -> list[ReebNode]:
        return [node for node in self.nodes if node.time == k]

    def node_times(self) -> list[int]:
        return sorted({node.time for node in self.nodes})

    def node(self, node_id: int) -> ReebNode:
        return self.nodes[node_id]


def mean_location(positions: np.ndarray) -> GpsPoint:
    """Mean of ``(lat, lon)`` rows, exact when every row is identical."""
    ref = positions[0]
    lat, lon = ref + (positions - ref).mean(axis=0)
    return GpsPoint(float(lat), float(lon))


def build_graph(partition: BundlePartition, ts: TrajectorySet, eps: float) -> ReebGraph:
    """Attach nodes to the bundle ends of ``partition``.

    Each bundle's first instant is a birth node carrying exactly its members.
    A bundle that ends because its component changed links to every birth node
    at the next instant sharing its members (several when it splits).  A bundle
    that lasts to the final instant links to its own terminal node there; one
    born at the final instant has no edge, its birth node being terminal.
    """
    m = ts.m if ts.m is not None else 0
    index = {day: i for i, day in enumerate(ts.day_indices)}
    positions = ts.positions()
    final = max((b.end for b in partition), default=m)

    def locate(members, k):
        rows = [index[d] for d in sorted(members)]
        return mean_location(positions[rows, k])

    raw = []  # (time, members, kind, bundle_id)
    for b in partition:
        raw.append((b.start, b.members, "birth", b.id))
        if b.end == final and b.start < b.end:
            raw.append((b.end, b.members, "terminal", b.id))
    raw.sort(key=lambda r: (r[0], min(r[1])))

    nodes = []
    birth_node, terminal_node = {}, {}
    births_at = defaultdict(list)
    for time, members, kind, bid in raw:
        node = ReebNode(len(nodes), time, locate(members, time), members)
        nodes.append(node)
        if kind == "birth":
            birth_node[bid] = node.id
            births_at[time].append(node)
        else:
            terminal_node[bid] = node.id

    edges = []
    for b in partition:
        src = birth_node[b.id]
        if b.id in terminal_node:
            edges.append(ReebEdge(src, terminal_node[b.id], b.id, b.members))
        elif b.end < final:
            for node in births_at[b.end + 1]:
                shared = node.members & b.members
                if shared:
                    edges.append(ReebEdge(src, node.id, b.id, frozenset(shared)))
    edges.sort(key=lambda e: (e.bundle, e.target))
    return ReebGraph(tuple(nodes), tuple(edges), m, ts.n, float(eps), partition)


@contextmanager
def _gc_paused():
    # Construction allocates many small acyclic records; full collections
    # rescanning them all would make the run superlinear in m.
    enabled = gc.isenabled()
    gc.disable()
    try:
        yield
    finally:
        if enabled:
            gc.enable()


def construct_reeb(ts, eps: float = DEFAULT_EPS) -> ReebGraph:
    """Build the Reeb graph of an agent's days.

    ``ts`` may be a :class:`TrajectorySet`, a list of trajectories or an array
    of shape ``(n_days, m + 1, 2)``.
    """
    if not eps > 0:
        raise ValidationError(f"eps must be positive, got {eps}")
    ts = as_trajectory_set(ts)
    with _gc_paused():
        events = find_all_events(ts, eps)
        partition = partition_bundles(replay_events(events))
        return build_graph(partition, ts, eps)
