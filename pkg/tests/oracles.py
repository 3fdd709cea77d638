"""Brute-force reference computations used to check the fast paths."""
import math

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from lifereeb.trajectory import Trajectory, TrajectorySet


def pair_events(a, b, eps):
    """Threshold every index, then read connect/disconnect off the flips."""
    m = len(a) - 1
    conn = []
    for k in range(m + 1):
        d = math.sqrt((a[k][0] - b[k][0]) ** 2 + (a[k][1] - b[k][1]) ** 2)
        conn.append(d <= eps)
    out = {}
    for k in range(m + 1):
        prev = conn[k - 1] if k > 0 else False
        if conn[k] and not prev:
            out[k] = "connect"
        elif prev and not conn[k]:
            out[k] = "disconnect"
    return out


def components_at(positions, day_ids, eps, k):
    """Components of the eps-graph at index k, via scipy on the full distance matrix."""
    pts = positions[:, k, :]
    n = len(pts)
    if n == 0:
        return set()
    diff = pts[:, None, :] - pts[None, :, :]
    dist = np.sqrt((diff ** 2).sum(axis=-1))
    adj = csr_matrix((dist <= eps).astype(int))
    _, labels = connected_components(adj, directed=False)
    groups = {}
    for i, lab in enumerate(labels):
        groups.setdefault(lab, set()).add(day_ids[i])
    return {frozenset(g) for g in groups.values()}


def partition(ts, eps):
    """Maximal runs of identical components from per-index recomputation."""
    positions = ts.positions()
    day_ids = ts.day_indices
    m = ts.m
    runs = {}
    out = set()
    for k in range(m + 1):
        comps = components_at(positions, day_ids, eps, k)
        for c in list(runs):
            if c not in comps:
                out.add((c, runs.pop(c), k - 1))
        for c in comps:
            runs.setdefault(c, k)
    for c, start in runs.items():
        out.add((c, start, m))
    return out


def component_counts(ts, eps):
    positions = ts.positions()
    return [len(components_at(positions, ts.day_indices, eps, k)) for k in range(ts.m + 1)]


def random_walk_set(rng, n, m, eps, step=None, agent_id="fuzz"):
    """Independent random walks started near one point, so groups split and merge."""
    step = eps if step is None else step
    start = np.array([34.4, -119.8])
    days = []
    for d in range(n):
        walk = start + rng.uniform(-eps, eps, 2) + np.cumsum(rng.normal(scale=step, size=(m + 1, 2)), axis=0)
        days.append(Trajectory(agent_id, d, walk))
    return TrajectorySet(agent_id, tuple(days))


def sticky_set(rng, n, m, eps, p=0.15, agent_id="fuzz"):
    """Days that hop between a few shared anchor points, giving frequent exact regroupings."""
    anchors = np.array([34.4, -119.8]) + rng.uniform(-20 * eps, 20 * eps, size=(3, 2))
    days = []
    for d in range(n):
        choice = np.empty(m + 1, dtype=int)
        choice[0] = rng.integers(3)
        for k in range(1, m + 1):
            choice[k] = rng.integers(3) if rng.random() < p else choice[k - 1]
        pts = anchors[choice] + rng.uniform(-eps / 4, eps / 4, size=(m + 1, 2))
        days.append(Trajectory(agent_id, d, pts))
    return TrajectorySet(agent_id, tuple(days))
