"""Occupancy grids: log-odds mapping with known poses, costmaps, and PGM/YAML map files."""
from __future__ import annotations

import math
import os
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import yaml

from . import _raycore
from .errors import DomainError, MapFormatError, ValidationError
from .kinematics import Pose2D

FREE = 0
OCCUPIED = 100
UNKNOWN = -1

LETHAL = 254
NO_INFORMATION = 255

# map_server image conventions
PIXEL_FREE = 254
PIXEL_OCCUPIED = 0
PIXEL_UNKNOWN = 205
OCCUPIED_THRESH = 0.65
FREE_THRESH = 0.196


@dataclass(frozen=True)
class SensorModel:
    """Inverse sensor model increments in log-odds."""

    l_occ: float = 0.85
    l_free: float = -0.4
    l_min: float = -4.0
    l_max: float = 4.0


@dataclass
class OccupancyGrid:
    log_odds: np.ndarray
    resolution: float
    origin: Pose2D = field(default_factory=Pose2D)
    l_min: float = -4.0
    l_max: float = 4.0

    @property
    def height(self) -> int:
        return self.log_odds.shape[0]

    @property
    def width(self) -> int:
        return self.log_odds.shape[1]

    @property
    def shape(self):
        return self.log_odds.shape

    def copy(self) -> "OccupancyGrid":
        return replace(self, log_odds=self.log_odds.copy())

    def cell_center(self, row: int, col: int) -> tuple[float, float]:
        r = self.resolution
        return self.origin.x + (col + 0.5) * r, self.origin.y + (row + 0.5) * r

    def cell_of(self, x: float, y: float) -> tuple[int, int]:
        return (
            int(math.floor((y - self.origin.y) / self.resolution)),
            int(math.floor((x - self.origin.x) / self.resolution)),
        )

    def in_bounds(self, row: int, col: int) -> bool:
        return 0 <= row < self.height and 0 <= col < self.width

    def contains(self, x: float, y: float) -> bool:
        return self.in_bounds(*self.cell_of(x, y))

    def to_grid_units(self, x: float, y: float) -> tuple[float, float]:
        return (x - self.origin.x) / self.resolution, (y - self.origin.y) / self.resolution

    def probabilities(self) -> np.ndarray:
        return 1.0 / (1.0 + np.exp(-self.log_odds))

    def classify(self, occupied_thresh: float = OCCUPIED_THRESH, free_thresh: float = FREE_THRESH) -> np.ndarray:
        """Trinary view: OCCUPIED, FREE or UNKNOWN per cell."""
        p = self.probabilities()
        out = np.full(self.shape, UNKNOWN, dtype=np.int8)
        out[p <= free_thresh] = FREE
        out[p >= occupied_thresh] = OCCUPIED
        return out

    def occupied_mask(self) -> np.ndarray:
        return self.classify() == OCCUPIED

    def free_mask(self) -> np.ndarray:
        return self.classify() == FREE


def new_grid(width: int, height: int, resolution: float, origin: Pose2D | None = None,
             model: SensorModel | None = None) -> OccupancyGrid:
    if width <= 0 or height <= 0:
        raise ValidationError(f"grid dimensions must be positive, got {width}x{height}")
    if not resolution > 0:
        raise ValidationError("resolution must be > 0")
    model = model or SensorModel()
    return OccupancyGrid(np.zeros((int(height), int(width))), float(resolution), origin or Pose2D(),
                         model.l_min, model.l_max)


def grid_from_classes(classes: np.ndarray, resolution: float, origin: Pose2D,
                      l_min: float = -4.0, l_max: float = 4.0) -> OccupancyGrid:
    """Grid whose log-odds sit at the clamp bounds for known cells and 0 for unknown."""
    lo = np.zeros(classes.shape)
    lo[classes == OCCUPIED] = l_max
    lo[classes == FREE] = l_min
    return OccupancyGrid(lo, float(resolution), origin, l_min, l_max)


def scan_marks(grid: OccupancyGrid, pose: Pose2D, scan) -> np.ndarray:
    """Per-cell marks for one scan: 0 untouched, 1 free pass, 2 endpoint hit."""
    if not grid.contains(pose.x, pose.y):
        raise DomainError(f"pose ({pose.x}, {pose.y}) outside grid")
    gx, gy = grid.to_grid_units(pose.x, pose.y)
    angles = pose.theta + scan.params.angles()
    lengths = np.asarray(scan.ranges, dtype=float) / grid.resolution
    hits = np.asarray(scan.hit_flags, dtype=np.bool_)
    marks = np.zeros(grid.shape, dtype=np.uint8)
    _raycore.mark_scan(marks, gx, gy, angles, lengths, hits, 1e-4)
    return marks


def integrate_scan(grid: OccupancyGrid, pose: Pose2D, scan, model: SensorModel | None = None) -> OccupancyGrid:
    """Log-odds update of ``grid`` from one scan taken at a known pose.

    Each cell is updated at most once per scan; an endpoint hit wins over a free pass.
    """
    model = model or SensorModel(l_min=grid.l_min, l_max=grid.l_max)
    marks = scan_marks(grid, pose, scan)
    out = grid.copy()
    lo = out.log_odds
    lo[marks == 1] += model.l_free
    lo[marks == 2] += model.l_occ
    touched = marks > 0
    lo[touched] = np.clip(lo[touched], grid.l_min, grid.l_max)
    return out


@dataclass(frozen=True)
class MapMetadata:
    image_name: str
    resolution: float
    origin: tuple[float, float, float]
    negate: int = 0
    occupied_thresh: float = OCCUPIED_THRESH
    free_thresh: float = FREE_THRESH

    def __post_init__(self):
        if self.negate not in (0, 1):
            raise MapFormatError("negate must be 0 or 1")
        if not 0 <= self.free_thresh < self.occupied_thresh <= 1:
            raise MapFormatError(
                f"thresholds must satisfy 0 <= free_thresh < occupied_thresh <= 1, "
                f"got free={self.free_thresh} occupied={self.occupied_thresh}")
        if not self.resolution > 0:
            raise MapFormatError("resolution must be > 0")


def encode_pixels(classes: np.ndarray) -> np.ndarray:
    """Trinary classes to image bytes, flipped so image row 0 is the map top."""
    px = np.full(classes.shape, PIXEL_UNKNOWN, dtype=np.uint8)
    px[classes == FREE] = PIXEL_FREE
    px[classes == OCCUPIED] = PIXEL_OCCUPIED
    return np.ascontiguousarray(px[::-1])


def decode_pixels(pixels: np.ndarray, meta: MapMetadata) -> np.ndarray:
    p = pixels.astype(float) / 255.0
    occ = p if meta.negate else 1.0 - p
    classes = np.full(pixels.shape, UNKNOWN, dtype=np.int8)
    classes[occ > meta.occupied_thresh] = OCCUPIED
    classes[occ < meta.free_thresh] = FREE
    return classes[::-1].copy()


def write_pgm(path, pixels: np.ndarray) -> None:
    h, w = pixels.shape
    with open(path, "wb") as f:
        f.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        f.write(np.ascontiguousarray(pixels, dtype=np.uint8).tobytes())


def _pgm_tokens(data: bytes):
    # header tokens with '#' comments, returns (tokens, offset of raster)
    tokens, i, n = [], 0, len(data)
    while len(tokens) < 4:
        while i < n and data[i:i + 1].isspace():
            i += 1
        if i < n and data[i:i + 1] == b"#":
            while i < n and data[i:i + 1] not in (b"\n", b"\r"):
                i += 1
            continue
        j = i
        while j < n and not data[j:j + 1].isspace():
            j += 1
        if j == i:
            raise MapFormatError("truncated PGM header")
        tokens.append(data[i:j])
        i = j
    return tokens, i + 1


def read_pgm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    tokens, offset = _pgm_tokens(data)
    if tokens[0] != b"P5":
        raise MapFormatError(f"{path}: expected binary PGM (P5), got {tokens[0]!r}")
    try:
        w, h, maxval = (int(t) for t in tokens[1:])
    except ValueError as e:
        raise MapFormatError(f"{path}: malformed PGM header") from e
    if maxval != 255:
        raise MapFormatError(f"{path}: maxval must be 255, got {maxval}")
    raster = data[offset:offset + w * h]
    if len(raster) != w * h:
        raise MapFormatError(f"{path}: raster has {len(raster)} bytes, expected {w * h}")
    return np.frombuffer(raster, dtype=np.uint8).reshape(h, w).copy()


def _yaml_text(meta: MapMetadata) -> str:
    ox, oy, oyaw = (float(v) for v in meta.origin)
    return (
        f"image: {meta.image_name}\n"
        f"resolution: {float(meta.resolution)!r}\n"
        f"origin: [{ox!r}, {oy!r}, {oyaw!r}]\n"
        f"negate: {int(meta.negate)}\n"
        f"occupied_thresh: {float(meta.occupied_thresh)!r}\n"
        f"free_thresh: {float(meta.free_thresh)!r}\n"
    )


def save_map(grid: OccupancyGrid, directory, basename: str,
             occupied_thresh: float = OCCUPIED_THRESH, free_thresh: float = FREE_THRESH) -> tuple[Path, Path]:
    directory = Path(directory)
    meta = MapMetadata(f"{basename}.pgm", grid.resolution, (grid.origin.x, grid.origin.y, grid.origin.theta),
                       0, occupied_thresh, free_thresh)
    pgm_path = directory / f"{basename}.pgm"
    yaml_path = directory / f"{basename}.yaml"
    try:
        write_pgm(pgm_path, encode_pixels(grid.classify(occupied_thresh, free_thresh)))
        yaml_path.write_text(_yaml_text(meta))
    except OSError as e:
        raise OSError(e.errno, f"cannot write map: {e.strerror}", str(e.filename or directory)) from e
    return pgm_path, yaml_path


def read_metadata(yaml_path) -> MapMetadata:
    try:
        doc = yaml.safe_load(Path(yaml_path).read_text())
    except yaml.YAMLError as e:
        raise MapFormatError(f"{yaml_path}: {e}") from e
    if not isinstance(doc, dict):
        raise MapFormatError(f"{yaml_path}: expected a mapping")
    missing = [k for k in ("image", "resolution", "origin") if k not in doc]
    if missing:
        raise MapFormatError(f"{yaml_path}: missing keys {missing}")
    try:
        origin = tuple(float(v) for v in doc["origin"])
        if len(origin) != 3:
            raise ValueError
        return MapMetadata(
            str(doc["image"]), float(doc["resolution"]), origin,
            int(doc.get("negate", 0)),
            float(doc.get("occupied_thresh", OCCUPIED_THRESH)),
            float(doc.get("free_thresh", FREE_THRESH)),
        )
    except (TypeError, ValueError) as e:
        raise MapFormatError(f"{yaml_path}: malformed metadata") from e


def load_map(directory, basename: str) -> tuple[OccupancyGrid, MapMetadata]:
    directory = Path(directory)
    yaml_path = directory / f"{basename}.yaml"
    if not yaml_path.is_file():
        raise FileNotFoundError(f"map metadata not found: {yaml_path}")
    meta = read_metadata(yaml_path)
    image = Path(meta.image_name)
    pgm_path = image if image.is_absolute() else directory / image
    if not pgm_path.is_file():
        raise FileNotFoundError(f"map image not found: {pgm_path}")
    classes = decode_pixels(read_pgm(pgm_path), meta)
    grid = grid_from_classes(classes, meta.resolution, Pose2D(*meta.origin))
    return grid, meta


def split_map_path(path) -> tuple[str, str]:
    """``DIR/base`` (with or without .yaml) -> (DIR, base)."""
    path = os.fspath(path)
    if path.endswith(".yaml"):
        path = path[:-5]
    d, b = os.path.split(path)
    return d or ".", b


@dataclass
class Costmap:
    cost: np.ndarray  # uint8, rows along y
    resolution: float
    origin: Pose2D = field(default_factory=Pose2D)

    @property
    def shape(self):
        return self.cost.shape

    def copy(self) -> "Costmap":
        return replace(self, cost=self.cost.copy())

    def cell_of(self, x: float, y: float) -> tuple[int, int]:
        return (
            int(math.floor((y - self.origin.y) / self.resolution)),
            int(math.floor((x - self.origin.x) / self.resolution)),
        )

    def cell_center(self, row: int, col: int) -> tuple[float, float]:
        r = self.resolution
        return self.origin.x + (col + 0.5) * r, self.origin.y + (row + 0.5) * r

    def in_bounds(self, row: int, col: int) -> bool:
        return 0 <= row < self.cost.shape[0] and 0 <= col < self.cost.shape[1]

    def blocked(self) -> np.ndarray:
        return self.cost >= LETHAL

    def is_blocked(self, row: int, col: int) -> bool:
        return not self.in_bounds(row, col) or self.cost[row, col] >= LETHAL


def to_costmap(grid: OccupancyGrid, occupied_thresh: float = OCCUPIED_THRESH,
               free_thresh: float = FREE_THRESH) -> Costmap:
    classes = grid.classify(occupied_thresh, free_thresh)
    cost = np.full(grid.shape, NO_INFORMATION, dtype=np.uint8)
    cost[classes == FREE] = 0
    cost[classes == OCCUPIED] = LETHAL
    return Costmap(cost, grid.resolution, grid.origin)
