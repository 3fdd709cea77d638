"""Command line interface.

Exit codes: 0 on success, 1 on invalid input or configuration, 2 on I/O
failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import io
from .anomaly import iterative_detect, reeb_distance
from .batch import EXPORT_FORMATS, RunConfig, bench, run_batch
from .events import find_all_events
from .synthgen import Scenario, generate_case_study, generate_scenario_days
from .trajectory import ValidationError, check_trajectory_set

EXIT_OK, EXIT_INVALID, EXIT_IO = 0, 1, 2

log = logging.getLogger("lifereeb")


def _load_config(path):
    if path is None:
        return {}
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"config {path}: {exc}")
    if not isinstance(data, dict):
        raise ValidationError(f"config {path}: expected a JSON object")
    return data


def _config(args, **flags) -> RunConfig:
    flags.update(eps=getattr(args, "eps", None), m=getattr(args, "m", None))
    return RunConfig.resolve(flags, _load_config(getattr(args, "config", None)))


def _write(path, text):
    if path is None or str(path) == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8", newline="\n")


def _pick_agent(sets: dict, agent):
    if agent is not None:
        if agent not in sets:
            raise ValidationError(f"agent {agent!r} not in input")
        return {agent: sets[agent]}
    return sets


def cmd_generate(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    m = _config(args).m
    if args.scenario == "case-study":
        cs = generate_case_study(args.seed, m=m, n_normal_test=args.normal_tests)
        io.write_trajectory_csv(out / "train.csv", [cs.train])
        io.write_trajectory_csv(out / "test.csv", [cs.test_set()])
        lines = ["day,label"] + [f"{t.day_index},{label}" for label, t in cs.tests.items()]
        _write(out / "labels.csv", "\n".join(lines) + "\n")
    else:
        ts = generate_scenario_days(args.scenario, args.seed, days=args.days, m=m)
        io.write_trajectory_csv(out / f"{args.scenario}.csv", [ts])
    return EXIT_OK


def cmd_events(args):
    cfg = _config(args)
    sets = _pick_agent(io.read_trajectory_csv(args.input, cfg.m), args.agent)
    chunks = []
    tagged = len(sets) > 1
    for agent, ts in sorted(sets.items()):
        check_trajectory_set(ts)
        text = io.events_to_csv(find_all_events(ts, cfg.eps), agent if tagged else None)
        chunks.append(text if not chunks else text.split("\n", 1)[1])
    _write(args.output, "".join(chunks) or "time_index,kind,subject_a,subject_b\n")
    return EXIT_OK


def cmd_build(args):
    cfg = _config(args, workers=args.workers, formats=args.format, output=args.out)
    sets = _pick_agent(io.read_trajectory_csv(args.input, cfg.m), args.agent)
    result = run_batch(cfg, sets.values(), cfg.output)
    for agent, error in result.failed.items():
        print(f"skipped {agent}: {error}", file=sys.stderr)
    print(f"wrote {len(result.written)} files for {len(sets) - len(result.failed)} agents to {cfg.output}",
          file=sys.stderr)
    return EXIT_OK


def cmd_distance(args):
    a, b = io.read_graph_json(args.first), io.read_graph_json(args.second)
    score, hours = reeb_distance(a, b)
    lines = ["hour,distance,rule"] + [f"{h.time},{h.value!r},{h.rule}" for h in hours]
    lines.append(f"total,{score!r},")
    _write(args.output, "\n".join(lines) + "\n")
    return EXIT_OK


def cmd_detect(args):
    cfg = _config(args)
    train = _pick_agent(io.read_trajectory_csv(args.train, cfg.m), args.agent)
    test = io.read_trajectory_csv(args.test, cfg.m)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for agent, ts in sorted(train.items()):
        days = list(test[agent]) if agent in test else []
        reports = iterative_detect(ts, days, cfg.eps, args.accumulate)
        prefix = "" if len(train) == 1 else f"{io.safe_name(agent)}_"
        _write(out / f"{prefix}hours.csv", io.hours_to_csv(reports))
        _write(out / f"{prefix}scores.csv", io.scores_to_csv(reports))
        for rep in reports:
            print(f"{agent} day {rep.day_index}: {rep.day_score:.6f}", file=sys.stderr)
    return EXIT_OK


def cmd_bench(args):
    cfg = _config(args)
    report = bench(cfg, args.m_values, n=args.n, trials=args.trials, seed=args.seed, agents=args.agents)
    _write(args.output, report.to_csv())
    for m, med in report.medians().items():
        print(f"m={m}: median {med:.4f} s", file=sys.stderr)
    if report.slope is not None:
        print(f"log-log slope: {report.slope:.3f}", file=sys.stderr)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lifereeb", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, with_agent=True):
        p.add_argument("--eps", type=float, help="connectivity threshold in degrees (default 0.0005)")
        p.add_argument("--m", type=int, help="last time index per day (default 23, hourly)")
        p.add_argument("--config", help="JSON file with default settings")
        if with_agent:
            p.add_argument("--agent", help="only process this agent")

    p = sub.add_parser("generate", help="write synthetic trajectories as CSV")
    p.add_argument("--scenario", required=True, choices=[s.value for s in Scenario] + ["case-study"])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--days", type=int, default=5, help="days to generate for a single scenario")
    p.add_argument("--normal-tests", type=int, default=3,
                   help="extra normal test days in the case study")
    p.add_argument("--out", required=True)
    common(p, with_agent=False)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("events", help="list appear/connect/disconnect/disappear events")
    p.add_argument("input")
    p.add_argument("-o", "--output")
    common(p)
    p.set_defaults(func=cmd_events)

    p = sub.add_parser("build", help="build and export Reeb graphs for every agent")
    p.add_argument("input")
    p.add_argument("--out", required=True)
    p.add_argument("--format", help=f"comma-separated subset of {','.join(EXPORT_FORMATS)}")
    p.add_argument("--workers", type=int)
    common(p)
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("distance", help="hour-by-hour distance between two Reeb graph JSON files")
    p.add_argument("first")
    p.add_argument("second")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_distance)

    p = sub.add_parser("detect", help="score test days against training days")
    p.add_argument("--train", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--accumulate", type=float, metavar="THRESHOLD",
                   help="fold test days scoring at or below THRESHOLD into the baseline")
    common(p)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("bench", help="time Reeb graph construction against m")
    p.add_argument("--m-values", type=int, nargs="+", default=[720, 1440, 2880, 5760])
    p.add_argument("--n", type=int, default=7)
    p.add_argument("--trials", type=int, default=3)
    p.add_argument("--agents", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output")
    common(p, with_agent=False)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ValidationError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
