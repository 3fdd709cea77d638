"""File formats: trajectory CSV, Reeb graph JSON/DOT/CSV, event and score tables."""
from __future__ import annotations

import csv
import io as _io
import json
import re
from collections import defaultdict
from datetime import date, datetime, timedelta
from pathlib import Path
from typing import Iterable

import numpy as np

from .events import EventRecord
from .reeb import ReebEdge, ReebGraph, ReebNode
from .trajectory import (
    DAY_SECONDS,
    DEFAULT_M,
    GpsPoint,
    Trajectory,
    TrajectorySet,
    ValidationError,
    downsample,
)

TRAJECTORY_COLUMNS = ("agent_id", "day", "timestamp_iso8601", "lat", "lon")
BASE_DATE = date(2024, 1, 1)


def safe_name(agent_id: str) -> str:
    return re.sub(r"[^A-Za-z0-9._-]", "_", str(agent_id)) or "_"


def _parse_timestamp(text: str, where: str) -> float:
    text = text.strip()
    if text.endswith("Z"):
        text = text[:-1] + "+00:00"
    try:
        ts = datetime.fromisoformat(text)
    except ValueError:
        raise ValidationError(f"{where}: bad timestamp {text!r}")
    # Wall-clock time as written; no time-zone conversion.
    return ts.hour * 3600 + ts.minute * 60 + ts.second + ts.microsecond / 1e6


def read_trajectory_csv(source, m: int = DEFAULT_M) -> dict[str, TrajectorySet]:
    """Read the ingestion CSV into one downsampled :class:`TrajectorySet` per agent.

    ``source`` is a path or an open text file.  Rows of one (agent, day) may
    come in any order; they are sorted by time of day before downsampling.
    """
    if isinstance(source, (str, Path)):
        with open(source, newline="", encoding="utf-8") as fh:
            return read_trajectory_csv(fh, m)
    reader = csv.DictReader(source)
    if reader.fieldnames is None or set(TRAJECTORY_COLUMNS) - set(reader.fieldnames):
        raise ValidationError(f"CSV header must contain {','.join(TRAJECTORY_COLUMNS)}")
    raw = defaultdict(list)
    for line, row in enumerate(reader, start=2):
        where = f"line {line}"
        try:
            day = int(row["day"])
            lat, lon = float(row["lat"]), float(row["lon"])
        except (TypeError, ValueError):
            raise ValidationError(f"{where}: day must be an integer and lat/lon numbers")
        raw[(row["agent_id"], day)].append((_parse_timestamp(row["timestamp_iso8601"], where), lat, lon))

    per_agent = defaultdict(list)
    for (agent, day), rows in sorted(raw.items()):
        rows.sort(key=lambda r: r[0])
        arr = np.array(rows, dtype=float)
        try:
            samples = downsample(arr[:, 1:], m, times=arr[:, 0], period=DAY_SECONDS)
        except ValidationError as exc:
            raise ValidationError(f"agent {agent!r} day {day}: {exc}")
        per_agent[agent].append(Trajectory(agent, day, samples))
    return {agent: TrajectorySet(agent, tuple(days)) for agent, days in per_agent.items()}


def _grid_timestamp(day: int, k: int, m: int) -> str:
    seconds = k * DAY_SECONDS / (m + 1)
    stamp = datetime.combine(BASE_DATE, datetime.min.time()) + timedelta(days=day, seconds=seconds)
    return stamp.isoformat(timespec="seconds" if float(seconds).is_integer() else "microseconds")


def write_trajectory_csv(target, sets: Iterable[TrajectorySet]) -> None:
    """Write trajectories in the ingestion format, one row per grid sample."""
    if isinstance(target, (str, Path)):
        with open(target, "w", newline="", encoding="utf-8") as fh:
            return write_trajectory_csv(fh, sets)
    writer = csv.writer(target, lineterminator="\n")
    writer.writerow(TRAJECTORY_COLUMNS)
    for ts in sets:
        for traj in ts:
            for k, (lat, lon) in enumerate(traj.samples.tolist()):
                writer.writerow([traj.agent_id, traj.day_index, _grid_timestamp(traj.day_index, k, traj.m),
                                 repr(lat), repr(lon)])


def graph_to_dict(graph: ReebGraph) -> dict:
    return {
        "m": graph.m,
        "n": graph.n,
        "eps": graph.eps,
        "nodes": [
            {"id": nd.id, "time": nd.time, "lat": nd.location.lat, "lon": nd.location.lon,
             "members": sorted(nd.members)}
            for nd in graph.nodes
        ],
        "edges": [
            {"source": e.source, "target": e.target, "bundle": e.bundle, "members": sorted(e.members)}
            for e in graph.edges
        ],
    }


def graph_from_dict(data: dict) -> ReebGraph:
    try:
        nodes = tuple(
            ReebNode(int(nd["id"]), int(nd["time"]), GpsPoint(float(nd["lat"]), float(nd["lon"])),
                     frozenset(nd["members"]))
            for nd in data["nodes"]
        )
        edges = tuple(
            ReebEdge(int(e["source"]), int(e["target"]), int(e["bundle"]), frozenset(e["members"]))
            for e in data["edges"]
        )
        return ReebGraph(nodes, edges, int(data["m"]), int(data["n"]), float(data["eps"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"malformed Reeb graph JSON: {exc!r}")


def graph_to_json(graph: ReebGraph) -> str:
    return json.dumps(graph_to_dict(graph), indent=2) + "\n"


def graph_to_dot(graph: ReebGraph) -> str:
    lines = ["digraph reeb {", "  rankdir=LR;"]
    for nd in graph.nodes:
        lines.append(f'  n{nd.id} [label="t={nd.time}"];')
    for e in graph.edges:
        lines.append(f'  n{e.source} -> n{e.target} [label="b{e.bundle}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def graph_to_csv(graph: ReebGraph) -> str:
    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["time", "lat", "lon", "node_id"])
    for nd in graph.nodes:
        writer.writerow([nd.time, repr(nd.location.lat), repr(nd.location.lon), nd.id])
    return buf.getvalue()


_RENDERERS = {"json": graph_to_json, "dot": graph_to_dot, "csv": graph_to_csv}


def render_graph(graph: ReebGraph, fmt: str) -> str:
    try:
        return _RENDERERS[fmt](graph)
    except KeyError:
        raise ValidationError(f"unknown graph format {fmt!r}")


def read_graph_json(path) -> ReebGraph:
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{path}: not JSON ({exc})")
    return graph_from_dict(data)


def events_to_csv(events: Iterable[EventRecord], agent_id: str | None = None) -> str:
    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    header = ["time_index", "kind", "subject_a", "subject_b"]
    writer.writerow((["agent_id"] if agent_id is not None else []) + header)
    for ev in events:
        a = ev.subjects[0]
        b = ev.subjects[1] if len(ev.subjects) > 1 else ""
        row = [ev.time, ev.kind.label, a, b]
        writer.writerow(([agent_id] if agent_id is not None else []) + row)
    return buf.getvalue()


def hours_to_csv(reports) -> str:
    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["day", "hour", "distance", "rule"])
    for rep in reports:
        for h in rep.hour_distances:
            writer.writerow([rep.day_index, h.time, repr(h.value), h.rule])
    return buf.getvalue()


def scores_to_csv(reports) -> str:
    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["day", "day_score"])
    for rep in reports:
        writer.writerow([rep.day_index, repr(rep.day_score)])
    return buf.getvalue()
