"""Ground-truth world: static occupancy, scripted disc obstacles, lidar simulation, collisions."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import _raycore
from .errors import ConfigError, DomainError, ValidationError
from .kinematics import Pose2D
from .mapping import FREE, OCCUPIED, OccupancyGrid, grid_from_classes

MIN_RANGE = 1e-6


@dataclass(frozen=True)
class ScanParams:
    beam_count: int = 360
    angle_min: float = -math.pi
    angle_max: float = math.pi - 2 * math.pi / 360
    max_range: float = 3.5
    range_noise_sigma: float = 0.0

    def __post_init__(self):
        if self.beam_count < 2:
            raise ValidationError("beam_count must be >= 2")
        if not self.angle_min < self.angle_max:
            raise ValidationError("angle_min must be < angle_max")
        if not self.max_range > 0:
            raise ValidationError("max_range must be > 0")
        if self.range_noise_sigma < 0:
            raise ValidationError("range_noise_sigma must be >= 0")

    @property
    def angle_increment(self) -> float:
        return (self.angle_max - self.angle_min) / (self.beam_count - 1)

    def angles(self) -> np.ndarray:
        """Beam bearings relative to the robot heading."""
        return self.angle_min + self.angle_increment * np.arange(self.beam_count)


@dataclass(frozen=True)
class LaserScan:
    ranges: np.ndarray
    hit_flags: np.ndarray
    params: ScanParams
    stamp: float = 0.0


@dataclass(frozen=True)
class DynamicObstacle:
    radius: float
    waypoints: tuple  # ((t, x, y), ...)

    def __post_init__(self):
        if not self.radius > 0:
            raise ValidationError("obstacle radius must be > 0")
        if len(self.waypoints) == 0:
            raise ValidationError("obstacle needs at least one waypoint")
        times = [w[0] for w in self.waypoints]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValidationError(f"waypoint times must be strictly increasing, got {times}")

    def position(self, t: float) -> tuple[float, float]:
        wps = self.waypoints
        if t <= wps[0][0]:
            return wps[0][1], wps[0][2]
        if t >= wps[-1][0]:
            return wps[-1][1], wps[-1][2]
        for (t0, x0, y0), (t1, x1, y1) in zip(wps, wps[1:]):
            if t0 <= t <= t1:
                a = (t - t0) / (t1 - t0)
                return x0 + a * (x1 - x0), y0 + a * (y1 - y0)
        raise AssertionError("unreachable")

    def shifted(self, dt: float) -> "DynamicObstacle":
        return replace(self, waypoints=tuple((t + dt, x, y) for t, x, y in self.waypoints))


@dataclass(frozen=True)
class World:
    static_grid: OccupancyGrid
    dynamic_obstacles: tuple = ()
    bounds: tuple = (0.0, 0.0, 1.0, 1.0)  # xmin, ymin, xmax, ymax
    time: float = 0.0
    occupied: np.ndarray = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.occupied is None:
            object.__setattr__(self, "occupied", self.static_grid.occupied_mask())

    @property
    def resolution(self) -> float:
        return self.static_grid.resolution

    def inside(self, x: float, y: float) -> bool:
        xmin, ymin, xmax, ymax = self.bounds
        return xmin <= x <= xmax and ymin <= y <= ymax

    def obstacle_positions(self, t: float | None = None) -> np.ndarray:
        t = self.time if t is None else t
        if not self.dynamic_obstacles:
            return np.zeros((0, 3))
        return np.array([(*o.position(t), o.radius) for o in self.dynamic_obstacles])


def _as_float(value, key):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(key, f"expected a number, got {value!r}")
    return float(value)


def _as_list(value, key, length=None):
    if not isinstance(value, (list, tuple)):
        raise ConfigError(key, f"expected a list, got {value!r}")
    if length is not None and len(value) != length:
        raise ConfigError(key, f"expected {length} entries, got {len(value)}")
    return list(value)


_WORLD_KEYS = {"bounds", "resolution", "walls", "dynamic_obstacles"}
_OBSTACLE_KEYS = {"radius", "waypoints", "time_jitter"}


def rasterize_walls(shape, resolution, origin, walls) -> np.ndarray:
    """Boolean raster of cells whose square overlaps any wall rectangle."""
    occ = np.zeros(shape, dtype=bool)
    tol = 1e-9
    for x0, y0, x1, y1 in walls:
        c0 = max(int(math.floor((x0 - origin[0]) / resolution + tol)), 0)
        c1 = min(int(math.ceil((x1 - origin[0]) / resolution - tol)), shape[1])
        r0 = max(int(math.floor((y0 - origin[1]) / resolution + tol)), 0)
        r1 = min(int(math.ceil((y1 - origin[1]) / resolution - tol)), shape[0])
        occ[r0:r1, c0:c1] = True
    return occ


def load_world(config: dict, rng: np.random.Generator | None = None) -> World:
    """Build a validated World from a scenario document (or its ``world`` section).

    Obstacles with ``time_jitter`` get their whole schedule shifted by a uniform draw
    from ``rng``; without an rng the schedules are taken as written.
    """
    doc = config.get("world", config) if isinstance(config, dict) else None
    if not isinstance(doc, dict):
        raise ConfigError("world", "expected a mapping")
    unknown = set(doc) - _WORLD_KEYS
    if unknown:
        raise ConfigError(f"world.{sorted(unknown)[0]}", "unknown key")
    if "bounds" not in doc:
        raise ConfigError("world.bounds", "required")
    xmin, ymin, xmax, ymax = (_as_float(v, "world.bounds") for v in _as_list(doc["bounds"], "world.bounds", 4))
    if not (xmax > xmin and ymax > ymin):
        raise ConfigError("world.bounds", "empty extent")
    res = _as_float(doc.get("resolution", 0.05), "world.resolution")
    if res <= 0:
        raise ConfigError("world.resolution", "must be > 0")

    walls = []
    for i, w in enumerate(doc.get("walls", []) or []):
        key = f"world.walls[{i}]"
        x0, y0, x1, y1 = (_as_float(v, key) for v in _as_list(w, key, 4))
        if not (x1 > x0 and y1 > y0):
            raise ConfigError(key, "wall must have positive extent (x0 < x1, y0 < y1)")
        if x0 < xmin - 1e-9 or y0 < ymin - 1e-9 or x1 > xmax + 1e-9 or y1 > ymax + 1e-9:
            raise ValidationError(f"{key} lies outside world bounds")
        walls.append((x0, y0, x1, y1))

    width = int(round((xmax - xmin) / res))
    height = int(round((ymax - ymin) / res))
    occ = rasterize_walls((height, width), res, (xmin, ymin), walls)
    classes = np.where(occ, OCCUPIED, FREE).astype(np.int8)
    grid = grid_from_classes(classes, res, Pose2D(xmin, ymin, 0.0))

    obstacles = []
    for i, o in enumerate(doc.get("dynamic_obstacles", []) or []):
        key = f"world.dynamic_obstacles[{i}]"
        if not isinstance(o, dict):
            raise ConfigError(key, "expected a mapping")
        unknown = set(o) - _OBSTACLE_KEYS
        if unknown:
            raise ConfigError(f"{key}.{sorted(unknown)[0]}", "unknown key")
        for req in ("radius", "waypoints"):
            if req not in o:
                raise ConfigError(f"{key}.{req}", "required")
        wps = []
        for j, wp in enumerate(_as_list(o["waypoints"], f"{key}.waypoints")):
            wk = f"{key}.waypoints[{j}]"
            wps.append(tuple(_as_float(v, wk) for v in _as_list(wp, wk, 3)))
        obstacle = DynamicObstacle(_as_float(o["radius"], f"{key}.radius"), tuple(wps))
        jitter = _as_float(o.get("time_jitter", 0.0), f"{key}.time_jitter")
        if jitter and rng is not None:
            obstacle = obstacle.shifted(float(rng.uniform(-jitter, jitter)))
        for t, x, y in obstacle.waypoints:
            if not (xmin <= x <= xmax and ymin <= y <= ymax):
                raise ValidationError(f"{key} waypoint ({x}, {y}) outside world bounds")
        obstacles.append(obstacle)

    return World(grid, tuple(obstacles), (xmin, ymin, xmax, ymax))


def step_dynamics(world: World, t: float) -> World:
    if t < 0:
        raise DomainError("t must be >= 0")
    return replace(world, time=float(t))


def _disc_hits(ox, oy, bearings, discs):
    """Ray parameter of the first disc surface along each bearing (inf if none)."""
    out = np.full(bearings.shape, np.inf)
    if len(discs) == 0:
        return out
    dx, dy = np.cos(bearings), np.sin(bearings)
    for cx, cy, r in discs:
        px, py = cx - ox, cy - oy
        b = px * dx + py * dy
        c = px * px + py * py - r * r
        disc = b * b - c
        ok = disc >= 0
        root = np.sqrt(np.where(ok, disc, 0.0))
        near = b - root
        far = b + root
        t = np.where(near >= 0, near, np.where(far >= 0, 0.0, np.inf))
        t = np.where(ok, t, np.inf)
        np.minimum(out, t, out=out)
    return out


def ray_cast(world: World, pose: Pose2D, params: ScanParams, t: float,
             rng: np.random.Generator | None = None) -> LaserScan:
    if not world.inside(pose.x, pose.y):
        raise DomainError(f"pose ({pose.x}, {pose.y}) outside world bounds")
    grid = world.static_grid
    bearings = pose.theta + params.angles()
    gx, gy = grid.to_grid_units(pose.x, pose.y)
    t_cells, hit = _raycore.cast_rays(world.occupied, gx, gy, bearings, params.max_range / grid.resolution)
    ranges = t_cells * grid.resolution
    ranges[~hit] = params.max_range

    disc_t = _disc_hits(pose.x, pose.y, bearings, world.obstacle_positions(t))
    closer = disc_t < ranges
    closer &= disc_t <= params.max_range
    ranges = np.where(closer, disc_t, ranges)
    hit = hit | closer

    if params.range_noise_sigma > 0 and rng is not None:
        noise = rng.normal(0.0, params.range_noise_sigma, params.beam_count)
        ranges = np.where(hit, ranges + noise, ranges)
    ranges = np.clip(ranges, MIN_RANGE, params.max_range)
    return LaserScan(ranges, hit, params, float(t))


def _static_distance(world: World, x: float, y: float, search: float) -> float:
    """Distance from (x, y) to the nearest occupied cell square, capped at ``search``."""
    grid = world.static_grid
    res = grid.resolution
    r0, c0 = grid.cell_of(x, y)
    k = int(math.ceil(search / res)) + 1
    rlo, rhi = max(r0 - k, 0), min(r0 + k + 1, grid.height)
    clo, chi = max(c0 - k, 0), min(c0 + k + 1, grid.width)
    if rlo >= rhi or clo >= chi:
        return search
    rows, cols = np.nonzero(world.occupied[rlo:rhi, clo:chi])
    if rows.size == 0:
        return search
    cx0 = grid.origin.x + (cols + clo) * res
    cy0 = grid.origin.y + (rows + rlo) * res
    dx = np.maximum(np.maximum(cx0 - x, x - (cx0 + res)), 0.0)
    dy = np.maximum(np.maximum(cy0 - y, y - (cy0 + res)), 0.0)
    return float(min(np.hypot(dx, dy).min(), search))


def clearance(world: World, pose: Pose2D, t: float, search: float = 2.0) -> float:
    """Distance from the robot center to the nearest obstacle surface (static or dynamic)."""
    d = _static_distance(world, pose.x, pose.y, search)
    for cx, cy, r in world.obstacle_positions(t):
        d = min(d, math.hypot(cx - pose.x, cy - pose.y) - r)
    return d


def check_collision(world: World, pose: Pose2D, footprint_radius: float, t: float) -> bool:
    if not footprint_radius > 0:
        raise DomainError("footprint_radius must be > 0")
    if _static_distance(world, pose.x, pose.y, footprint_radius + world.resolution) < footprint_radius:
        return True
    for cx, cy, r in world.obstacle_positions(t):
        if math.hypot(cx - pose.x, cy - pose.y) < r + footprint_radius:
            return True
    return False
