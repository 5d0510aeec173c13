"""Command-line entry point: ``desknav {map,plan,run,render,batch}``.

Exit codes: 0 success, 1 runtime failure (missing file, planning failure, ...),
2 usage error.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import yaml

from . import harness
from .config import load_scenario
from .errors import DesknavError
from .kinematics import Pose2D
from .mapping import load_map, save_map, split_map_path, to_costmap
from .planning import PlanRequest, carrot_adjust_goal, inflate, load_path, plan, save_path
from .world import load_world


def _xy(text: str) -> tuple[float, float]:
    try:
        x, y = (float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected X,Y, got {text!r}")
    return x, y


def _seed_range(text: str) -> range:
    try:
        a, b = (int(v) for v in text.split(".."))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected A..B, got {text!r}")
    if b < a:
        raise argparse.ArgumentTypeError("empty seed range")
    return range(a, b + 1)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="desknav", description="2D navigation simulation toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    m = sub.add_parser("map", help="build and save an occupancy map from a scripted tour")
    m.add_argument("--scenario", required=True, type=Path)
    m.add_argument("--tour", required=True, type=Path, help="YAML list of [x, y, theta] poses")
    m.add_argument("--out", required=True, type=Path)
    m.add_argument("--basename", default="map")

    pl = sub.add_parser("plan", help="plan a path on a saved map")
    pl.add_argument("--map", required=True, type=Path, help="DIR/base of a saved map")
    pl.add_argument("--start", required=True, type=_xy)
    pl.add_argument("--goal", required=True, type=_xy)
    pl.add_argument("--algo", choices=("dijkstra", "astar"), default="dijkstra")
    pl.add_argument("--heuristic-weight", type=float, default=1.0)
    pl.add_argument("--robot-radius", type=float, default=0.2)
    pl.add_argument("--inflation-radius", type=float, default=0.5)
    pl.add_argument("--cost-scaling", type=float, default=5.0)
    pl.add_argument("--out", required=True, type=Path)

    r = sub.add_parser("run", help="run one scenario and write trace + metrics")
    r.add_argument("--scenario", required=True, type=Path)
    r.add_argument("--seed", type=int)
    r.add_argument("--path", type=Path)
    r.add_argument("--out", required=True, type=Path)

    rd = sub.add_parser("render", help="render a trace over its world as PPM")
    rd.add_argument("--trace", required=True, type=Path)
    rd.add_argument("--scenario", required=True, type=Path)
    rd.add_argument("--path", type=Path, help="optional saved path to overlay")
    rd.add_argument("--scale", type=int, default=2)
    rd.add_argument("--out", required=True, type=Path)

    b = sub.add_parser("batch", help="run a seed range and write a summary table")
    b.add_argument("--scenario", required=True, type=Path)
    b.add_argument("--seeds", required=True, type=_seed_range)
    b.add_argument("--path", type=Path)
    b.add_argument("--workers", type=int, default=1)
    b.add_argument("--out", required=True, type=Path)
    return p


def _read_tour(path: Path) -> list[Pose2D]:
    if not path.is_file():
        raise FileNotFoundError(f"tour file not found: {path}")
    doc = yaml.safe_load(path.read_text())
    if isinstance(doc, dict):
        doc = doc.get("poses")
    if not isinstance(doc, list) or not doc:
        raise DesknavError(f"{path}: expected a non-empty list of [x, y, theta]")
    return [Pose2D(*(float(v) for v in p)) for p in doc]


def cmd_map(a) -> int:
    cfg = load_scenario(a.scenario)
    tour = _read_tour(a.tour)
    grid = harness.build_map(load_world(cfg.document), tour, cfg.scan)
    a.out.mkdir(parents=True, exist_ok=True)
    pgm, yml = save_map(grid, a.out, a.basename)
    print(f"command=map image={pgm} metadata={yml} poses={len(tour)}")
    return 0


def cmd_plan(a) -> int:
    d, base = split_map_path(a.map)
    grid, _ = load_map(d, base)
    cm = inflate(to_costmap(grid), a.robot_radius, a.inflation_radius, a.cost_scaling)
    start, goal = Pose2D(*a.start), Pose2D(*a.goal)
    adjusted = carrot_adjust_goal(cm, start, goal)
    if (adjusted.x, adjusted.y) != (goal.x, goal.y):
        print(f"note: goal ({goal.x}, {goal.y}) is blocked; carrot-adjusted to "
              f"({adjusted.x:.4f}, {adjusted.y:.4f})", file=sys.stderr)
    path = plan(cm, PlanRequest(start, adjusted, a.algo, a.heuristic_weight))
    save_path(path.world_points, a.out)
    print(f"command=plan cells={len(path)} cost={path.total_cost!r} length={path.length()!r} "
          f"goal_adjusted={int(adjusted != goal)} out={a.out}")
    return 0


def cmd_run(a) -> int:
    cfg = load_scenario(a.scenario)
    res = harness.run_scenario(cfg, a.seed, a.path)
    a.out.mkdir(parents=True, exist_ok=True)
    harness.write_trace(res.trace, a.out / "trace.jsonl")
    harness.write_metrics(res.metrics, a.out / "metrics.json")
    seed = cfg.seed if a.seed is None else a.seed
    print(harness.summary_line(res.metrics, command="run", seed=seed, trace_sha256=res.trace_hash))
    return 0


def cmd_render(a) -> int:
    cfg = load_scenario(a.scenario)
    if not a.trace.is_file():
        raise FileNotFoundError(f"trace file not found: {a.trace}")
    trace = harness.read_trace(a.trace)
    world = load_world(cfg.document)
    path = None
    if a.path is not None:
        path = load_path(a.path)
    img = harness.render(world, trace, a.out, path=path, scale=a.scale)
    print(f"command=render out={a.out} width={img.shape[1]} height={img.shape[0]} records={len(trace)}")
    return 0


def cmd_batch(a) -> int:
    cfg = load_scenario(a.scenario)
    rows = harness.run_batch(cfg, a.seeds, a.path, a.workers)
    a.out.mkdir(parents=True, exist_ok=True)
    harness.write_summary(rows, a.out / "summary.csv")
    n = len(rows)
    ok = sum(m.success for _, m, _, _ in rows)
    clean = sum(m.collisions == 0 for _, m, _, _ in rows)
    print(f"command=batch runs={n} success={ok} collision_free={clean} summary={a.out / 'summary.csv'}")
    return 0


COMMANDS = {"map": cmd_map, "plan": cmd_plan, "run": cmd_run, "render": cmd_render, "batch": cmd_batch}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return COMMANDS[args.command](args)
    except (OSError, DesknavError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
