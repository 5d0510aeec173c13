"""Global planning on costmaps: inflation, Dijkstra/A*, carrot goal adjustment, path simplification."""
from __future__ import annotations

import heapq
import json
import math
from dataclasses import dataclass
from pathlib import Path as FsPath

import numpy as np
from scipy import ndimage

from .errors import InvalidGoal, InvalidStart, NoPath
from .kinematics import Pose2D
from .mapping import LETHAL, Costmap

SQRT2 = math.sqrt(2.0)
INSCRIBED = 253
COST_SCALE = 64.0
# 8-neighbourhood, fixed order for deterministic expansion
NEIGHBOURS = ((-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1))


@dataclass(frozen=True)
class Path:
    cells: tuple  # ((row, col), ...)
    world_points: tuple  # ((x, y), ...)
    total_cost: float

    def __len__(self):
        return len(self.cells)

    def length(self) -> float:
        pts = np.asarray(self.world_points, dtype=float)
        if len(pts) < 2:
            return 0.0
        return float(np.hypot(*np.diff(pts, axis=0).T).sum())


@dataclass(frozen=True)
class PlanRequest:
    start: Pose2D
    goal: Pose2D
    algorithm: str = "dijkstra"
    heuristic_weight: float = 1.0


def inflation_cost(d, robot_radius, cost_scaling):
    """Cost of a cell at distance ``d`` from the nearest lethal cell, outside the robot radius."""
    return INSCRIBED * np.exp(-cost_scaling * (np.asarray(d, dtype=float) - robot_radius))


def inflate(costmap: Costmap, robot_radius: float, inflation_radius: float, cost_scaling: float = 10.0) -> Costmap:
    if inflation_radius < robot_radius:
        raise ValueError("inflation_radius must be >= robot_radius")
    lethal = costmap.cost == LETHAL
    out = costmap.copy()
    if not lethal.any():
        return out
    d = ndimage.distance_transform_edt(~lethal) * costmap.resolution
    eps = 1e-9
    unknown = costmap.cost > LETHAL
    inner = (d <= robot_radius + eps) & ~unknown
    band = (d > robot_radius + eps) & (d <= inflation_radius + eps) & ~unknown
    ramp = np.floor(inflation_cost(d[band], robot_radius, cost_scaling)).astype(np.uint8)
    out.cost[band] = np.maximum(out.cost[band], ramp)
    out.cost[inner] = LETHAL
    return out


def step_cost(cost_a: int, cost_b: int, diagonal: bool) -> float:
    base = SQRT2 if diagonal else 1.0
    return base * (1.0 + (cost_a + cost_b) / 2.0 / COST_SCALE)


def neighbours(costmap: Costmap, row: int, col: int):
    """Traversable 8-neighbours of a cell with their step costs."""
    c = costmap.cost
    h, w = c.shape
    here = int(c[row, col])
    for dr, dc in NEIGHBOURS:
        r, q = row + dr, col + dc
        if not (0 <= r < h and 0 <= q < w) or c[r, q] >= LETHAL:
            continue
        diagonal = dr != 0 and dc != 0
        if diagonal and c[row, q] >= LETHAL and c[r, col] >= LETHAL:
            continue
        yield r, q, step_cost(here, int(c[r, q]), diagonal)


def _endpoint(costmap: Costmap, pose: Pose2D, err):
    cell = costmap.cell_of(pose.x, pose.y)
    if costmap.is_blocked(*cell):
        raise err(f"cell {cell} for ({pose.x:.3f}, {pose.y:.3f}) is lethal, unknown or off-map")
    return cell


def octile(a, b) -> float:
    dr, dc = abs(a[0] - b[0]), abs(a[1] - b[1])
    return (max(dr, dc) - min(dr, dc)) + SQRT2 * min(dr, dc)


def _search(costmap: Costmap, start: Pose2D, goal: Pose2D, weight: float) -> Path:
    s = _endpoint(costmap, start, InvalidStart)
    g = _endpoint(costmap, goal, InvalidGoal)
    # shrink the heuristic a hair so float rounding can never make it overestimate
    hw = weight * (1.0 - 1e-9) if weight <= 1.0 else weight
    dist = {s: 0.0}
    parent = {s: None}
    closed = set()
    heap = [(hw * octile(s, g) if hw else 0.0, s[0], s[1])]
    while heap:
        _, r, c = heapq.heappop(heap)
        cell = (r, c)
        if cell in closed:
            continue
        if cell == g:
            break
        closed.add(cell)
        base = dist[cell]
        for nr, nc, w in neighbours(costmap, r, c):
            nxt = (nr, nc)
            nd = base + w
            if nd < dist.get(nxt, math.inf):
                dist[nxt] = nd
                parent[nxt] = cell
                closed.discard(nxt)
                h = hw * octile(nxt, g) if hw else 0.0
                heapq.heappush(heap, (nd + h, nr, nc))
    if g not in dist:
        raise NoPath(f"goal cell {g} unreachable from {s}")
    cells = []
    cur = g
    while cur is not None:
        cells.append(cur)
        cur = parent[cur]
    cells.reverse()
    pts = tuple(costmap.cell_center(r, c) for r, c in cells)
    return Path(tuple(cells), pts, dist[g])


def plan_dijkstra(costmap: Costmap, start: Pose2D, goal: Pose2D) -> Path:
    return _search(costmap, start, goal, 0.0)


def plan_astar(costmap: Costmap, start: Pose2D, goal: Pose2D, heuristic_weight: float = 1.0) -> Path:
    if heuristic_weight < 0:
        raise ValueError("heuristic_weight must be >= 0")
    return _search(costmap, start, goal, heuristic_weight)


def plan(costmap: Costmap, request: PlanRequest) -> Path:
    if request.algorithm == "dijkstra":
        return plan_dijkstra(costmap, request.start, request.goal)
    if request.algorithm == "astar":
        return plan_astar(costmap, request.start, request.goal, request.heuristic_weight)
    raise ValueError(f"unknown algorithm {request.algorithm!r}")


def path_cost(costmap: Costmap, cells) -> float:
    total = 0.0
    for (r0, c0), (r1, c1) in zip(cells, cells[1:]):
        total += step_cost(int(costmap.cost[r0, c0]), int(costmap.cost[r1, c1]), r0 != r1 and c0 != c1)
    return total


def carrot_adjust_goal(costmap: Costmap, robot: Pose2D, goal: Pose2D) -> Pose2D:
    """Walk from the goal back toward the robot until a non-lethal point is found."""
    if not costmap.is_blocked(*costmap.cell_of(goal.x, goal.y)):
        return goal
    dx, dy = robot.x - goal.x, robot.y - goal.y
    dist = math.hypot(dx, dy)
    step = costmap.resolution / 2.0
    n = int(math.floor(dist / step))
    if dist > 0:
        ux, uy = dx / dist, dy / dist
        for k in range(1, n + 1):
            x, y = goal.x + k * step * ux, goal.y + k * step * uy
            if not costmap.is_blocked(*costmap.cell_of(x, y)):
                return Pose2D(x, y, goal.theta)
    return Pose2D(robot.x, robot.y, goal.theta)


def _point_segment_distance(p, a, b) -> float:
    ab = b - a
    denom = float(ab @ ab)
    if denom == 0.0:
        return float(np.hypot(*(p - a)))
    t = min(max(float((p - a) @ ab) / denom, 0.0), 1.0)
    return float(np.hypot(*(p - (a + t * ab))))


def simplify_path(path, tolerance: float) -> list[tuple[float, float]]:
    """Ramer-Douglas-Peucker reduction of a Path (or point list); endpoints kept."""
    pts = np.asarray(path.world_points if isinstance(path, Path) else path, dtype=float)
    if len(pts) <= 2 or tolerance <= 0:
        return [tuple(map(float, p)) for p in pts]
    keep = np.zeros(len(pts), dtype=bool)
    keep[0] = keep[-1] = True
    stack = [(0, len(pts) - 1)]
    while stack:
        i, j = stack.pop()
        if j - i < 2:
            continue
        d = [_point_segment_distance(pts[k], pts[i], pts[j]) for k in range(i + 1, j)]
        k = int(np.argmax(d))
        if d[k] > tolerance:
            m = i + 1 + k
            keep[m] = True
            stack.append((i, m))
            stack.append((m, j))
    return [tuple(map(float, p)) for p in pts[keep]]


def save_path(points, path) -> None:
    """JSON lines, one ``[x, y]`` pair per line."""
    lines = [json.dumps([float(x), float(y)]) for x, y in points]
    FsPath(path).write_text("".join(line + "\n" for line in lines))


def load_path(path) -> list[tuple[float, float]]:
    out = []
    for lineno, line in enumerate(FsPath(path).read_text().splitlines(), 1):
        if not line.strip():
            continue
        try:
            x, y = json.loads(line)
            out.append((float(x), float(y)))
        except (ValueError, TypeError) as e:
            raise ValueError(f"{path}: line {lineno}: expected [x, y]") from e
    return out
