"""Run configuration, the multi-agent batch runner and the scaling benchmark."""
from __future__ import annotations

import logging
import os
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import io
from .events import find_all_events
from .reeb import construct_reeb
from .trajectory import DEFAULT_EPS, DEFAULT_M, Trajectory, TrajectorySet, ValidationError

log = logging.getLogger(__name__)

WORKERS_ENV = "REESPOT_WORKERS"
EXPORT_FORMATS = ("json", "dot", "csv")


@dataclass(frozen=True)
class RunConfig:
    eps: float = DEFAULT_EPS
    m: int = DEFAULT_M
    workers: int = 1
    input: str | None = None
    output: str | None = None
    formats: tuple = ("json",)

    def __post_init__(self):
        if not self.eps > 0:
            raise ValidationError(f"eps must be positive, got {self.eps}")
        if self.m < 1:
            raise ValidationError(f"m must be >= 1, got {self.m}")
        if self.workers < 1:
            raise ValidationError(f"workers must be >= 1, got {self.workers}")
        unknown = set(self.formats) - set(EXPORT_FORMATS)
        if unknown:
            raise ValidationError(f"unknown export formats: {sorted(unknown)}")
        object.__setattr__(self, "formats", tuple(self.formats))

    @classmethod
    def resolve(cls, flags: dict | None = None, config_file: dict | None = None, env=None) -> "RunConfig":
        """Merge settings: CLI flags > ``REESPOT_WORKERS`` > config file > defaults."""
        env = os.environ if env is None else env
        merged = {}
        for source in (config_file or {},):
            merged.update({k: v for k, v in source.items() if v is not None})
        if env.get(WORKERS_ENV):
            try:
                merged["workers"] = int(env[WORKERS_ENV])
            except ValueError:
                raise ValidationError(f"{WORKERS_ENV} must be an integer, got {env[WORKERS_ENV]!r}")
        merged.update({k: v for k, v in (flags or {}).items() if v is not None})
        known = {f for f in cls.__dataclass_fields__}
        extra = set(merged) - known
        if extra:
            raise ValidationError(f"unknown configuration keys: {sorted(extra)}")
        if "formats" in merged and isinstance(merged["formats"], str):
            merged["formats"] = tuple(f for f in merged["formats"].split(",") if f)
        return cls(**merged)


@dataclass
class BatchResult:
    written: list = field(default_factory=list)
    failed: dict = field(default_factory=dict)


def _build_exports(agent: TrajectorySet, eps: float, formats: Sequence[str]) -> dict:
    graph = construct_reeb(agent, eps)
    return {fmt: io.render_graph(graph, fmt) for fmt in formats}


def _safe_build(args):
    agent, eps, formats = args
    try:
        return agent.agent_id, _build_exports(agent, eps, formats), None
    except Exception as exc:  # reported per agent, the batch goes on
        return agent.agent_id, None, f"{type(exc).__name__}: {exc}"


def run_batch(config: RunConfig, agents: Iterable[TrajectorySet], out_dir=None) -> BatchResult:
    """Build and export one Reeb graph per agent into ``out_dir``.

    Files are named ``<agent_id>.<format>`` and written by the parent process
    in agent-id order, so the output tree does not depend on the worker count.
    """
    out = Path(out_dir or config.output or ".")
    out.mkdir(parents=True, exist_ok=True)
    agents = sorted(agents, key=lambda a: a.agent_id)
    jobs = [(a, config.eps, config.formats) for a in agents]
    if config.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            results = list(pool.map(_safe_build, jobs, chunksize=max(1, len(jobs) // (4 * config.workers))))
    else:
        results = [_safe_build(job) for job in jobs]

    result = BatchResult()
    for agent_id, exports, error in sorted(results, key=lambda r: r[0]):
        if error is not None:
            log.warning("agent %s skipped: %s", agent_id, error)
            result.failed[agent_id] = error
            continue
        for fmt, text in exports.items():
            path = out / f"{io.safe_name(agent_id)}.{fmt}"
            path.write_text(text, encoding="utf-8", newline="\n")
            result.written.append(path)
    return result


def random_trajectory_set(rng, n: int, m: int, eps: float = DEFAULT_EPS, switch_prob: float = 0.05,
                          agent_id: str = "bench") -> TrajectorySet:
    """Random-walk days whose event density per time index is fixed.

    All days follow one shared walk; each day independently toggles between
    riding the walk and an offset private to that day with probability
    ``switch_prob`` per index, so the number of events grows linearly in ``m``.
    """
    steps = rng.normal(scale=eps, size=(m + 1, 2))
    base = np.cumsum(steps, axis=0) + np.array([34.4, -119.8])
    days = []
    for d in range(n):
        flips = rng.random(m + 1) < switch_prob
        away = np.cumsum(flips) % 2 == 1
        offset = np.zeros((m + 1, 2))
        offset[away, 0] = 10 * eps * (d + 1)
        noise = rng.uniform(-eps / 8, eps / 8, size=(m + 1, 2))
        days.append(Trajectory(agent_id, d, base + offset + noise))
    return TrajectorySet(agent_id, tuple(days))


@dataclass
class BenchReport:
    rows: list = field(default_factory=list)  # (m, n, agents, wall_seconds, events_count)
    slope: float | None = None

    def medians(self) -> dict:
        by_m = {}
        for m, _, _, wall, _ in self.rows:
            by_m.setdefault(m, []).append(wall)
        return {m: statistics.median(v) for m, v in sorted(by_m.items())}

    def to_csv(self) -> str:
        lines = ["m,n,agents,wall_seconds,events_count"]
        lines += [f"{m},{n},{a},{w:.6f},{e}" for m, n, a, w, e in self.rows]
        return "\n".join(lines) + "\n"


def loglog_slope(ms: Sequence[float], times: Sequence[float]) -> float:
    return float(np.polyfit(np.log(ms), np.log(times), 1)[0])


def bench(config: RunConfig, m_values: Sequence[int], n: int = 7, trials: int = 3,
          seed: int = 0, agents: int = 1) -> BenchReport:
    """Time ``construct_reeb`` on random sets for each ``m``.

    Each row is one trial over ``agents`` independent agents; the report's
    ``slope`` is the log-log fit of per-``m`` median wall time against ``m``.
    """
    if list(m_values) != sorted(m_values):
        raise ValidationError("m_values must be ascending")
    report = BenchReport()
    if trials <= 0 or not m_values:
        return report
    rng = np.random.default_rng(seed)
    construct_reeb(random_trajectory_set(rng, n, 16, config.eps))  # warm-up
    for m in m_values:
        for _ in range(trials):
            sets = [random_trajectory_set(rng, n, m, config.eps, agent_id=f"a{i}") for i in range(agents)]
            events = sum(len(find_all_events(s, config.eps)) for s in sets)
            start = time.perf_counter()
            for s in sets:
                construct_reeb(s, config.eps)
            wall = max(time.perf_counter() - start, 1e-9)
            report.rows.append((m, n, agents, wall, events))
    medians = report.medians()
    if len(medians) >= 2:
        report.slope = loglog_slope(list(medians), list(medians.values()))
    return report
