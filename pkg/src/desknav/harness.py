"""Deterministic scenario runner, metrics, JSONL traces, and PPM rendering."""
from __future__ import annotations

import hashlib
import json
import math
import re
from collections import deque
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from .config import ScenarioConfig
from .control import ControlState, Mode, executive_step
from .errors import ConfigError, ContractError, PlanningError, TraceParseError
from .kinematics import (
    Pose2D, Twist2D, WheelRates, body_twist_from_wheels, integrate_pose, noisy_odometry,
    pose_delta, wheels_from_body_twist,
)
from .localization import GaussianPrior, MonteCarloLocalizer
from .mapping import (
    FREE, OCCUPIED, OccupancyGrid, SensorModel, integrate_scan, load_map, new_grid, split_map_path,
    to_costmap,
)
from .perception import make_provider
from .planning import carrot_adjust_goal, inflate, load_path, plan, PlanRequest, simplify_path
from .world import World, check_collision, clearance, load_world, ray_cast, step_dynamics


@dataclass(frozen=True)
class TraceRecord:
    t: float
    x: float
    y: float
    theta: float
    est_x: float
    est_y: float
    est_theta: float
    v: float
    w: float
    p_t: float
    s_k: float
    mode: str
    collision: bool
    clearance: float


TRACE_KEYS = tuple(f.name for f in fields(TraceRecord))


@dataclass(frozen=True)
class Metrics:
    success: bool
    collisions: int
    time_to_goal: float | None
    path_length: float
    min_clearance: float
    mean_localization_error: float


@dataclass(frozen=True)
class RunResult:
    trace: list
    metrics: Metrics
    waypoints: list
    world: World

    @property
    def trace_hash(self) -> str:
        return trace_hash(self.trace)

    @property
    def modes_seen(self) -> set:
        return {r.mode for r in self.trace}


def clamp_wheels(twist: Twist2D, robot) -> Twist2D:
    """Scale both wheel rates together so neither exceeds v_max / R (curvature kept)."""
    rates = wheels_from_body_twist(twist, robot)
    limit = robot.v_max / robot.wheel_radius
    peak = max(abs(rates.v_r), abs(rates.v_l))
    if peak <= limit:
        return twist
    k = limit / peak
    return body_twist_from_wheels(WheelRates(rates.v_r * k, rates.v_l * k), robot)


def planning_grid(config: ScenarioConfig, world: World) -> OccupancyGrid:
    if config.planning.map is None:
        return world.static_grid
    d, base = split_map_path(config.resolve(config.planning.map))
    grid, _ = load_map(d, base)
    return grid


def plan_waypoints(config: ScenarioConfig, grid: OccupancyGrid) -> list[tuple[float, float]]:
    """Inflate, carrot-adjust the goal, plan, and simplify on ``grid``."""
    pc = config.planning
    cm = inflate(to_costmap(grid), pc.robot_radius, pc.inflation_radius, pc.cost_scaling)
    start, goal = config.task.start, config.task.goal
    goal = carrot_adjust_goal(cm, start, goal)
    path = plan(cm, PlanRequest(start, goal, pc.algorithm, pc.heuristic_weight))
    pts = simplify_path(path, pc.simplify_tolerance)
    # the plan starts at a cell center; anchor it at the true start and goal
    pts[0] = (start.x, start.y)
    pts[-1] = (goal.x, goal.y)
    return pts


def resolve_waypoints(config: ScenarioConfig, world: World, path_file=None) -> list[tuple[float, float]]:
    path_file = path_file if path_file is not None else config.resolve(config.task.path_file)
    if path_file is not None:
        path_file = Path(path_file)
        if not path_file.is_file():
            raise FileNotFoundError(f"path file not found: {path_file}")
        pts = load_path(path_file)
        if not pts:
            raise ConfigError("task.path_file", "path file is empty")
        return pts
    try:
        return plan_waypoints(config, planning_grid(config, world))
    except PlanningError as e:
        raise ConfigError("task", f"planning failed: {e}") from e


def run_scenario(config: ScenarioConfig, seed: int | None = None, path_file=None) -> RunResult:
    seed = config.seed if seed is None else seed
    world_rng, sensor_rng, odom_rng, mcl_rng = (
        np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(4))
    world = load_world(config.document, world_rng)
    waypoints = resolve_waypoints(config, world, path_file)
    robot = config.robot
    params = config.control
    provider = make_provider(config.perception.provider, config.perception.oracle)

    pose = config.task.start
    est = pose
    loc = None
    if config.localization.mode == "mcl":
        lc = config.localization
        prior = GaussianPrior(pose, lc.init_sigma_xy, lc.init_sigma_theta)
        loc = MonteCarloLocalizer(planning_grid(config, world), lc.particles, prior, config.odometry, mcl_rng)
        est = loc.estimate().mean

    state = ControlState()
    scans = deque(maxlen=config.perception.latency_steps + 1)
    odom = None
    trace = []
    dt = config.dt
    n_steps = int(math.floor(config.t_max / dt + 1e-9))
    for k in range(1, n_steps + 1):
        t_prev, t = (k - 1) * dt, k * dt
        world_now = step_dynamics(world, t_prev)
        scan = ray_cast(world_now, pose, config.scan, t_prev, sensor_rng)
        scans.append(scan)
        if loc is not None and odom is not None:
            est = loc.step(odom, scan).mean
        elif loc is None:
            est = pose
        percept = provider(scans[0])
        cmd, state = executive_step(state, est, percept, waypoints, params, t_prev)
        twist = clamp_wheels(Twist2D(cmd.v, cmd.w), robot)
        new_pose = integrate_pose(pose, twist, dt)
        odom = noisy_odometry(pose_delta(pose, new_pose), config.odometry, odom_rng)
        pose = new_pose
        # estimate carried forward to the same instant as the true pose
        est_t = integrate_pose(est, twist, dt)
        # the world boundary acts as a wall, and nothing can be sensed past it
        escaped = not world.inside(pose.x, pose.y)
        hit = escaped or check_collision(world, pose, robot.footprint_radius, t)
        clear = 0.0 if escaped else clearance(world, pose, t) - robot.footprint_radius
        trace.append(TraceRecord(t, pose.x, pose.y, pose.theta, est_t.x, est_t.y, est_t.theta,
                                 twist.v, twist.w, percept.p_t, percept.s_k, state.mode.value, hit, clear))
        if escaped or (hit and config.halt_on_collision):
            break
        if state.mode is Mode.DONE:
            break
    goal = Pose2D(*waypoints[-1])
    metrics = compute_metrics(trace, config, goal)
    return RunResult(trace, metrics, waypoints, world)


def compute_metrics(trace, config: ScenarioConfig, goal: Pose2D | None = None) -> Metrics:
    if not trace:
        raise ContractError("cannot compute metrics of an empty trace")
    xs = np.array([r.x for r in trace])
    ys = np.array([r.y for r in trace])
    length = float(np.hypot(np.diff(xs), np.diff(ys)).sum()) if len(trace) > 1 else 0.0
    collisions = sum(1 for r in trace if r.collision)
    done_t = next((r.t for r in trace if r.mode == Mode.DONE.value), None)
    last = trace[-1]
    success = last.mode == Mode.DONE.value and collisions == 0
    if success and goal is not None:
        success = math.hypot(last.x - goal.x, last.y - goal.y) <= config.control.goal_tolerance
    err = [math.hypot(r.x - r.est_x, r.y - r.est_y) for r in trace]
    return Metrics(success, collisions, done_t, length, float(min(r.clearance for r in trace)), float(np.mean(err)))


def record_line(r: TraceRecord) -> str:
    return json.dumps({k: getattr(r, k) for k in TRACE_KEYS})


def trace_bytes(trace) -> bytes:
    return "".join(record_line(r) + "\n" for r in trace).encode()


def trace_hash(trace) -> str:
    return hashlib.sha256(trace_bytes(trace)).hexdigest()


def write_trace(trace, path) -> None:
    Path(path).write_bytes(trace_bytes(trace))


def read_trace(path) -> list[TraceRecord]:
    out = []
    text = Path(path).read_text()
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as e:
            raise TraceParseError(lineno, f"malformed JSON ({e.msg})") from e
        if not isinstance(obj, dict) or tuple(obj) != TRACE_KEYS:
            raise TraceParseError(lineno, f"expected keys {list(TRACE_KEYS)}")
        out.append(TraceRecord(**obj))
    return out


def write_metrics(metrics: Metrics, path) -> None:
    Path(path).write_text(json.dumps(asdict(metrics), indent=2) + "\n")


def summary_line(metrics: Metrics, **extra) -> str:
    items = {**extra, **asdict(metrics)}
    return " ".join(f"{k}={v}" for k, v in items.items())


def _run_for_seed(args):
    config, seed, path_file = args
    res = run_scenario(config, seed, path_file)
    return seed, res.metrics, res.trace_hash, sorted(res.modes_seen)


def run_batch(config: ScenarioConfig, seeds, path_file=None, workers: int = 1) -> list[tuple]:
    """(seed, metrics, trace_hash, modes) per seed, in seed order."""
    jobs = [(config, s, path_file) for s in seeds]
    if workers <= 1:
        return [_run_for_seed(j) for j in jobs]
    with ProcessPoolExecutor(workers) as ex:
        return list(ex.map(_run_for_seed, jobs))


def write_summary(rows, path) -> None:
    header = "seed,success,collisions,time_to_goal,path_length,min_clearance,mean_localization_error,trace_sha256"
    lines = [header]
    for seed, m, h, _ in rows:
        ttg = "" if m.time_to_goal is None else repr(m.time_to_goal)
        lines.append(f"{seed},{int(m.success)},{m.collisions},{ttg},{m.path_length!r},"
                     f"{m.min_clearance!r},{m.mean_localization_error!r},{h}")
    Path(path).write_text("\n".join(lines) + "\n")


def build_map(world: World, tour, scan_params, model: SensorModel | None = None,
              rng: np.random.Generator | None = None, t: float = 0.0) -> OccupancyGrid:
    """Known-pose occupancy mapping of ``world`` from scans taken at each tour pose."""
    g = world.static_grid
    model = model or SensorModel()
    grid = new_grid(g.width, g.height, g.resolution, g.origin, model)
    for pose in tour:
        pose = pose if isinstance(pose, Pose2D) else Pose2D(*pose)
        scan = ray_cast(step_dynamics(world, t), pose, scan_params, t, rng)
        grid = integrate_scan(grid, pose, scan, model)
    return grid


# fixed render palette (RGB)
COLOR_FREE = (255, 255, 255)
COLOR_OCCUPIED = (0, 0, 0)
COLOR_UNKNOWN = (205, 205, 205)
COLOR_PATH = (0, 0, 255)
COLOR_ESTIMATE = (220, 0, 0)
COLOR_TRUE = (0, 160, 0)
COLOR_OBSTACLE = (255, 140, 0)


def _line(x0, y0, x1, y1):
    """Integer Bresenham segment, endpoints inclusive."""
    dx, dy = abs(x1 - x0), -abs(y1 - y0)
    sx, sy = (1 if x0 < x1 else -1), (1 if y0 < y1 else -1)
    err = dx + dy
    while True:
        yield x0, y0
        if x0 == x1 and y0 == y1:
            return
        e2 = 2 * err
        if e2 >= dy:
            err += dy
            x0 += sx
        if e2 <= dx:
            err += dx
            y0 += sy


def render(world: World, trace, out_path, map_grid: OccupancyGrid | None = None, path=None,
           scale: int = 2) -> np.ndarray:
    """Write a binary PPM (P6) figure and return the RGB raster.

    Layers, bottom to top: occupancy (``map_grid`` if given, else ground truth),
    planned path, estimated trajectory, true trajectory, obstacles at the final trace time.
    """
    g = map_grid if map_grid is not None else world.static_grid
    classes = g.classify()
    img = np.empty(classes.shape + (3,), dtype=np.uint8)
    img[:] = COLOR_UNKNOWN
    img[classes == FREE] = COLOR_FREE
    img[classes == OCCUPIED] = COLOR_OCCUPIED
    img = np.repeat(np.repeat(img, scale, axis=0), scale, axis=1)
    h, w = img.shape[:2]
    px_per_m = scale / g.resolution

    def to_px(x, y):
        return (int(math.floor((x - g.origin.x) * px_per_m)), int(math.floor((y - g.origin.y) * px_per_m)))

    def polyline(points, color):
        pts = [to_px(x, y) for x, y in points]
        if len(pts) == 1:
            pts = pts * 2
        for (x0, y0), (x1, y1) in zip(pts, pts[1:]):
            for cx, cy in _line(x0, y0, x1, y1):
                if 0 <= cx < w and 0 <= cy < h:
                    img[cy, cx] = color

    if path:
        polyline(path, COLOR_PATH)
    if trace:
        polyline([(r.est_x, r.est_y) for r in trace], COLOR_ESTIMATE)
        polyline([(r.x, r.y) for r in trace], COLOR_TRUE)
    t_final = trace[-1].t if trace else 0.0
    if world.dynamic_obstacles:
        yy, xx = np.mgrid[0:h, 0:w]
        mx = g.origin.x + (xx + 0.5) / px_per_m
        my = g.origin.y + (yy + 0.5) / px_per_m
        for cx, cy, r in world.obstacle_positions(t_final):
            img[(mx - cx) ** 2 + (my - cy) ** 2 <= r * r] = COLOR_OBSTACLE

    out = np.ascontiguousarray(img[::-1])
    with open(out_path, "wb") as f:
        f.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
        f.write(out.tobytes())
    return out


def read_ppm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    m = re.match(rb"P6\s+(\d+)\s+(\d+)\s+255\s", data)
    if m is None:
        raise ValueError(f"{path}: not a binary PPM")
    w, h = int(m.group(1)), int(m.group(2))
    return np.frombuffer(data[m.end():m.end() + w * h * 3], dtype=np.uint8).reshape(h, w, 3)
