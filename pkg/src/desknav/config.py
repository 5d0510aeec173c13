"""Scenario documents: YAML in the same flat style as map metadata files.

Top-level sections (all but ``world`` and ``task`` optional)::

    world:        bounds, resolution, walls, dynamic_obstacles
    robot:        wheel_radius, wheel_base, footprint_radius, v_max, w_max
    scan:         beam_count, angle_min, angle_max, max_range, range_noise_sigma
    odometry:     sigma_rot1, sigma_trans, sigma_rot2
    localization: mode (mcl | ground_truth), particles, init_sigma_xy, init_sigma_theta
    perception:   provider (oracle | none), latency_steps, cone_half_angle, d_stop,
                  d_free, sector_count, steering_fov
    control:      preset (thesis | dronet) plus any ControlParams field
    planning:     algorithm, heuristic_weight, robot_radius, inflation_radius,
                  cost_scaling, simplify_tolerance, map
    task:         start [x, y, theta], goal [x, y], path_file
    sim:          dt, t_max, seed, halt_on_collision

Angles are radians. Relative file paths resolve against the scenario file's directory.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, fields
from pathlib import Path

import yaml

from .control import PRESETS, ControlParams
from .errors import ConfigError, DesknavError
from .kinematics import OdometryNoise, Pose2D, RobotParams
from .perception import OracleParams
from .world import ScanParams, load_world

SECTIONS = {"world", "robot", "scan", "odometry", "localization", "perception", "control",
            "planning", "task", "sim"}


@dataclass(frozen=True)
class LocalizationConfig:
    mode: str = "ground_truth"
    particles: int = 500
    init_sigma_xy: float = 0.5
    init_sigma_theta: float = math.pi / 12


@dataclass(frozen=True)
class PerceptionConfig:
    provider: str = "oracle"
    latency_steps: int = 0
    oracle: OracleParams = field(default_factory=OracleParams)


@dataclass(frozen=True)
class PlanningConfig:
    algorithm: str = "dijkstra"
    heuristic_weight: float = 1.0
    robot_radius: float = 0.15
    inflation_radius: float = 0.45
    cost_scaling: float = 5.0
    simplify_tolerance: float = 0.05
    map: str | None = None


@dataclass(frozen=True)
class TaskConfig:
    start: Pose2D
    goal: Pose2D | None = None
    path_file: str | None = None


@dataclass(frozen=True)
class ScenarioConfig:
    document: dict
    robot: RobotParams
    scan: ScanParams
    odometry: OdometryNoise
    localization: LocalizationConfig
    perception: PerceptionConfig
    control: ControlParams
    planning: PlanningConfig
    task: TaskConfig
    dt: float = 0.05
    t_max: float = 60.0
    seed: int = 0
    halt_on_collision: bool = True
    base_dir: Path = Path(".")

    def resolve(self, p: str | None) -> Path | None:
        if p is None:
            return None
        p = Path(p)
        return p if p.is_absolute() else self.base_dir / p


def _section(doc, name) -> dict:
    sec = doc.get(name) or {}
    if not isinstance(sec, dict):
        raise ConfigError(name, "expected a mapping")
    return sec


def _build(cls, sec: dict, name: str, extra=(), **kwargs):
    """Instantiate a dataclass from a section, rejecting unknown keys."""
    allowed = {f.name for f in fields(cls)} | set(extra)
    for key in sec:
        if key not in allowed:
            raise ConfigError(f"{name}.{key}", "unknown key")
    values = {k: v for k, v in sec.items() if k not in extra}
    values.update(kwargs)
    for key, val in values.items():
        if isinstance(val, bool) or val is None or isinstance(val, (str, Pose2D, OracleParams)):
            continue
        if not isinstance(val, (int, float)):
            raise ConfigError(f"{name}.{key}", f"expected a number, got {val!r}")
    try:
        return cls(**values)
    except (DesknavError, ValueError, TypeError) as e:
        raise ConfigError(name, str(e)) from e


def _pose(value, key, need_theta=False) -> Pose2D:
    if not isinstance(value, (list, tuple)) or len(value) not in ((3,) if need_theta else (2, 3)):
        raise ConfigError(key, f"expected [x, y{', theta' if need_theta else '[, theta]'}], got {value!r}")
    try:
        return Pose2D(*(float(v) for v in value))
    except (TypeError, ValueError) as e:
        raise ConfigError(key, "non-numeric entry") from e


def parse_scenario(doc: dict, base_dir=".") -> ScenarioConfig:
    if not isinstance(doc, dict):
        raise ConfigError("<root>", "scenario document must be a mapping")
    for key in doc:
        if key not in SECTIONS:
            raise ConfigError(key, "unknown section")
    for req in ("world", "task"):
        if req not in doc:
            raise ConfigError(req, "required section missing")
    load_world(doc)  # validates the world section without jitter

    robot = _build(RobotParams, _section(doc, "robot"), "robot")
    scan = _build(ScanParams, _section(doc, "scan"), "scan")
    odometry = _build(OdometryNoise, _section(doc, "odometry"), "odometry")
    loc = _build(LocalizationConfig, _section(doc, "localization"), "localization")
    if loc.mode not in ("mcl", "ground_truth"):
        raise ConfigError("localization.mode", f"expected mcl or ground_truth, got {loc.mode!r}")

    psec = dict(_section(doc, "perception"))
    provider = psec.pop("provider", "oracle")
    if provider not in ("oracle", "none"):
        raise ConfigError("perception.provider", f"expected oracle or none, got {provider!r}")
    latency = psec.pop("latency_steps", 0)
    if not isinstance(latency, int) or latency < 0:
        raise ConfigError("perception.latency_steps", "expected a non-negative integer")
    oracle = _build(OracleParams, psec, "perception")
    perception = PerceptionConfig(provider, latency, oracle)

    csec = _section(doc, "control")
    preset = csec.get("preset", "thesis")
    if preset not in PRESETS:
        raise ConfigError("control.preset", f"expected one of {sorted(PRESETS)}, got {preset!r}")
    cvals = {**PRESETS[preset], "v_max": robot.v_max, "w_max": robot.w_max}
    cvals.update({k: v for k, v in csec.items() if k != "preset"})
    control = _build(ControlParams, {k: v for k, v in cvals.items()}, "control")

    planning = _build(PlanningConfig, _section(doc, "planning"), "planning")
    if planning.algorithm not in ("dijkstra", "astar"):
        raise ConfigError("planning.algorithm", f"expected dijkstra or astar, got {planning.algorithm!r}")

    tsec = _section(doc, "task")
    for key in tsec:
        if key not in ("start", "goal", "path_file"):
            raise ConfigError(f"task.{key}", "unknown key")
    if "start" not in tsec:
        raise ConfigError("task.start", "required")
    start = _pose(tsec["start"], "task.start", need_theta=True)
    goal = _pose(tsec["goal"], "task.goal") if tsec.get("goal") is not None else None
    if goal is None and tsec.get("path_file") is None:
        raise ConfigError("task.goal", "either goal or path_file is required")
    task = TaskConfig(start, goal, tsec.get("path_file"))

    ssec = _section(doc, "sim")
    for key in ssec:
        if key not in ("dt", "t_max", "seed", "halt_on_collision"):
            raise ConfigError(f"sim.{key}", "unknown key")
    dt = ssec.get("dt", 0.05)
    t_max = ssec.get("t_max", 60.0)
    seed = ssec.get("seed", 0)
    halt = ssec.get("halt_on_collision", True)
    if isinstance(dt, bool) or not isinstance(dt, (int, float)) or dt <= 0:
        raise ConfigError("sim.dt", "must be a number > 0")
    if isinstance(t_max, bool) or not isinstance(t_max, (int, float)) or t_max <= dt:
        raise ConfigError("sim.t_max", "must be a number > dt")
    if isinstance(seed, bool) or not isinstance(seed, int):
        raise ConfigError("sim.seed", "must be an integer")
    if not isinstance(halt, bool):
        raise ConfigError("sim.halt_on_collision", "must be true or false")

    return ScenarioConfig(doc, robot, scan, odometry, loc, perception, control, planning, task,
                          float(dt), float(t_max), seed, halt, Path(base_dir))


def load_scenario(path) -> ScenarioConfig:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"scenario file not found: {path}")
    try:
        doc = yaml.safe_load(path.read_text())
    except yaml.YAMLError as e:
        raise ConfigError("<root>", f"{path}: {e}") from e
    return parse_scenario(doc, path.parent)


def scenario_bytes(config: ScenarioConfig) -> bytes:
    """Canonical serialization of the scenario document (for hashing)."""
    return yaml.safe_dump(config.document, sort_keys=True).encode()
