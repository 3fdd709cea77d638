"""Daily trajectories, the planar degree metric, resampling and validation.

A trajectory is one agent-day sampled on a uniform grid of ``m + 1`` instants
(``t_0 .. t_m``).  Positions are ``(lat, lon)`` in degrees and distances are
plain Euclidean distances in degree space; no great-circle correction is made.
The default threshold of 0.0005 degrees spans about 55.6 m along a meridian
(less along a parallel, by the cosine of the latitude).
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

#: Default connectivity threshold in degrees (about 55.6 m north-south).
DEFAULT_EPS = 0.0005
#: Default last time index; 23 gives 24 hourly samples per day.
DEFAULT_M = 23
#: Seconds in the period covered by one trajectory.
DAY_SECONDS = 86400


class ValidationError(ValueError):
    """Raised when trajectories or their parameters break an invariant."""

    def __init__(self, message, violations=()):
        super().__init__(message)
        self.violations = list(violations)


class GpsPoint(NamedTuple):
    lat: float
    lon: float

    def is_valid(self) -> bool:
        return (
            math.isfinite(self.lat)
            and math.isfinite(self.lon)
            and -90.0 <= self.lat <= 90.0
            and -180.0 <= self.lon <= 180.0
        )


def gps_distance(p, q) -> float:
    """Euclidean distance between two ``(lat, lon)`` points, in degrees."""
    lat_p, lon_p = float(p[0]), float(p[1])
    lat_q, lon_q = float(q[0]), float(q[1])
    if not all(map(math.isfinite, (lat_p, lon_p, lat_q, lon_q))):
        raise ValidationError(f"non-finite coordinate in {tuple(p)!r} / {tuple(q)!r}")
    return math.hypot(lat_p - lat_q, lon_p - lon_q)


def pairwise_distances(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Per-index distance between two ``(m + 1, 2)`` coordinate arrays."""
    return np.hypot(a[:, 0] - b[:, 0], a[:, 1] - b[:, 1])


def _as_samples(samples) -> np.ndarray:
    arr = np.array(samples, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValidationError(f"samples must have shape (k, 2), got {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Trajectory:
    """One agent-day: ``samples[k]`` is the ``(lat, lon)`` position at ``t_k``."""

    agent_id: str
    day_index: int
    samples: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "samples", _as_samples(self.samples))
        object.__setattr__(self, "day_index", int(self.day_index))
        if self.day_index < 0:
            raise ValidationError(f"day_index must be >= 0, got {self.day_index}")

    @property
    def m(self) -> int:
        return len(self.samples) - 1

    def __len__(self):
        return len(self.samples)

    def __getitem__(self, k) -> GpsPoint:
        lat, lon = self.samples[k]
        return GpsPoint(float(lat), float(lon))

    def __eq__(self, other):
        if not isinstance(other, Trajectory):
            return NotImplemented
        return (
            self.agent_id == other.agent_id
            and self.day_index == other.day_index
            and self.samples.shape == other.samples.shape
            and bool(np.array_equal(self.samples, other.samples))
        )

    def __hash__(self):
        return hash((self.agent_id, self.day_index, self.samples.tobytes()))

    def with_day(self, day_index: int) -> "Trajectory":
        return Trajectory(self.agent_id, day_index, self.samples)


@dataclass(frozen=True)
class TrajectorySet:
    """All daily trajectories of one agent."""

    agent_id: str
    trajectories: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "trajectories", tuple(self.trajectories))

    def __len__(self):
        return len(self.trajectories)

    def __iter__(self):
        return iter(self.trajectories)

    @property
    def n(self) -> int:
        return len(self.trajectories)

    @property
    def m(self) -> int | None:
        return self.trajectories[0].m if self.trajectories else None

    @property
    def day_indices(self) -> list[int]:
        return [t.day_index for t in self.trajectories]

    def positions(self) -> np.ndarray:
        """Stacked coordinates with shape ``(n, m + 1, 2)``."""
        if not self.trajectories:
            return np.empty((0, 0, 2))
        return np.stack([t.samples for t in self.trajectories])

    def with_day(self, trajectory: Trajectory) -> "TrajectorySet":
        return TrajectorySet(self.agent_id, self.trajectories + (trajectory,))


class Violation(NamedTuple):
    day_index: int | None
    time: int | None
    message: str

    def __str__(self):
        where = []
        if self.day_index is not None:
            where.append(f"day {self.day_index}")
        if self.time is not None:
            where.append(f"k {self.time}")
        prefix = f"[{', '.join(where)}] " if where else ""
        return prefix + self.message


def validate_set(ts: TrajectorySet, m: int | None = None) -> list[Violation]:
    """Return every invariant violation in ``ts``; an empty list means valid.

    The expected ``m`` defaults to the most common trajectory length in the set.
    """
    violations = []
    if not ts.trajectories:
        return violations
    if m is None:
        counts = Counter(t.m for t in ts.trajectories)
        m = max(counts, key=lambda k: (counts[k], k))
    seen = set()
    for traj in ts.trajectories:
        day = traj.day_index
        if day in seen:
            violations.append(Violation(day, None, "duplicate day_index"))
        seen.add(day)
        if traj.m != m:
            violations.append(
                Violation(day, None, f"expected {m + 1} samples (m={m}), got {len(traj)}")
            )
        lat, lon = traj.samples[:, 0], traj.samples[:, 1]
        bad = ~np.isfinite(traj.samples).all(axis=1)
        for k in np.flatnonzero(bad):
            violations.append(Violation(day, int(k), "non-finite coordinate"))
        with np.errstate(invalid="ignore"):
            out = ~bad & ((np.abs(lat) > 90.0) | (np.abs(lon) > 180.0))
        for k in np.flatnonzero(out):
            violations.append(
                Violation(day, int(k), f"coordinate out of range: ({lat[k]}, {lon[k]})")
            )
    return violations


def check_trajectory_set(ts: TrajectorySet, m: int | None = None) -> TrajectorySet:
    violations = validate_set(ts, m)
    if violations:
        shown = "; ".join(map(str, violations[:5]))
        more = f" (+{len(violations) - 5} more)" if len(violations) > 5 else ""
        raise ValidationError(f"invalid trajectory set {ts.agent_id!r}: {shown}{more}", violations)
    return ts


def as_trajectory_set(X, agent_id: str = "agent") -> TrajectorySet:
    """Coerce ``X`` into a validated :class:`TrajectorySet`.

    Accepts a ``TrajectorySet``, an iterable of :class:`Trajectory`, or an
    array-like of shape ``(n_days, m + 1, 2)`` (days numbered from 0).
    """
    if isinstance(X, TrajectorySet):
        ts = X
    elif isinstance(X, Trajectory):
        ts = TrajectorySet(X.agent_id, (X,))
    else:
        items = list(X) if not isinstance(X, np.ndarray) else None
        if items is not None and items and all(isinstance(t, Trajectory) for t in items):
            ts = TrajectorySet(items[0].agent_id, tuple(items))
        else:
            arr = np.asarray(X, dtype=float)
            if arr.ndim == 2 and arr.shape[-1] == 2:
                arr = arr[np.newaxis]
            if arr.size == 0:
                return TrajectorySet(agent_id, ())
            if arr.ndim != 3 or arr.shape[-1] != 2:
                raise ValidationError(f"expected shape (n_days, m + 1, 2), got {arr.shape}")
            ts = TrajectorySet(agent_id, tuple(Trajectory(agent_id, i, a) for i, a in enumerate(arr)))
    return check_trajectory_set(ts)


def downsample(raw, target_m: int, times: Sequence[float] | None = None, period: float | None = None):
    """Resample onto ``target_m + 1`` uniform grid instants by nearest neighbour.

    Grid instant ``k`` sits at ``k * period / (target_m + 1)``.  Without
    ``times`` the raw samples are assumed uniform with unit spacing and
    ``period`` defaults to their count; with ``times`` (seconds since the start
    of the day) ``period`` defaults to one day.  Ties go to the earlier raw
    sample.  A grid instant farther than one grid step from every raw sample is
    a gap and raises :class:`ValidationError`.

    Returns a :class:`Trajectory` when given one, otherwise an ``ndarray``.
    """
    if target_m < 1:
        raise ValidationError(f"target_m must be >= 1, got {target_m}")
    points = raw.samples if isinstance(raw, Trajectory) else np.asarray(raw, dtype=float)
    if points.ndim != 2 or points.shape[1] != 2:
        raise ValidationError(f"raw samples must have shape (k, 2), got {points.shape}")
    if len(points) < 2:
        raise ValidationError("raw trajectory needs at least 2 points")

    if times is None:
        t = np.arange(len(points), dtype=float)
        period = float(len(points)) if period is None else float(period)
    else:
        t = np.asarray(times, dtype=float)
        if t.shape != (len(points),):
            raise ValidationError("times must have one entry per raw sample")
        if np.any(np.diff(t) < 0):
            raise ValidationError("raw timestamps must be non-decreasing")
        period = float(DAY_SECONDS) if period is None else float(period)

    step = period / (target_m + 1)
    grid = np.arange(target_m + 1) * step
    right = np.clip(np.searchsorted(t, grid, side="left"), 0, len(t) - 1)
    left = np.clip(right - 1, 0, len(t) - 1)
    pick = np.where(np.abs(grid - t[left]) <= np.abs(t[right] - grid), left, right)
    gaps = np.abs(t[pick] - grid) > step
    if gaps.any():
        k = int(np.flatnonzero(gaps)[0])
        raise ValidationError(f"no raw sample within one grid step of grid instant {k}")

    out = points[pick]
    if isinstance(raw, Trajectory):
        return Trajectory(raw.agent_id, raw.day_index, out)
    return out
