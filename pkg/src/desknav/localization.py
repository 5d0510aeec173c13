"""Monte Carlo localization with a likelihood-field sensor model."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import ndimage

from .errors import ContractError, ValidationError
from .kinematics import OdometryIncrement, OdometryNoise, Pose2D, decompose
from .mapping import OccupancyGrid


@dataclass(frozen=True)
class Particle:
    pose: Pose2D
    weight: float


@dataclass
class ParticleSet:
    poses: np.ndarray  # (n, 3): x, y, theta
    weights: np.ndarray  # (n,)
    normalized: bool = True
    weight_reset: bool = False  # set when a measurement update underflowed

    def __len__(self):
        return self.poses.shape[0]

    @property
    def particles(self) -> list[Particle]:
        return [Particle(Pose2D(*p), float(w)) for p, w in zip(self.poses, self.weights)]

    def copy(self) -> "ParticleSet":
        return replace(self, poses=self.poses.copy(), weights=self.weights.copy())


@dataclass(frozen=True)
class PoseEstimate:
    mean: Pose2D
    covariance: np.ndarray


@dataclass(frozen=True)
class UniformPrior:
    pass


@dataclass(frozen=True)
class GaussianPrior:
    pose: Pose2D
    sigma_xy: float = 0.0
    sigma_theta: float = 0.0


@dataclass(frozen=True)
class LikelihoodFieldModel:
    z_hit: float = 0.95
    z_rand: float = 0.05
    sigma_hit: float = 0.1
    max_beams: int = 30


@dataclass
class LikelihoodField:
    """Distance (m) from each cell center to the nearest occupied cell, plus free-cell list."""

    distance: np.ndarray
    resolution: float
    origin: Pose2D
    free_cells: np.ndarray = field(repr=False)
    max_distance: float = 2.0

    @classmethod
    def from_grid(cls, grid: OccupancyGrid, max_distance: float = 2.0) -> "LikelihoodField":
        occ = grid.occupied_mask()
        if occ.any():
            dist = ndimage.distance_transform_edt(~occ) * grid.resolution
        else:
            dist = np.full(grid.shape, max_distance)
        dist = np.minimum(dist, max_distance)
        free = np.argwhere(grid.free_mask())
        return cls(dist, grid.resolution, grid.origin, free, max_distance)

    def lookup(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        col = np.floor((x - self.origin.x) / self.resolution).astype(np.int64)
        row = np.floor((y - self.origin.y) / self.resolution).astype(np.int64)
        h, w = self.distance.shape
        inside = (row >= 0) & (row < h) & (col >= 0) & (col < w)
        out = np.full(x.shape, self.max_distance)
        out[inside] = self.distance[row[inside], col[inside]]
        return out


def _field(map_or_field) -> LikelihoodField:
    if isinstance(map_or_field, LikelihoodField):
        return map_or_field
    return LikelihoodField.from_grid(map_or_field)


def init_particles(n: int, map, prior, rng: np.random.Generator) -> ParticleSet:
    if n < 1:
        raise ContractError("particle count must be >= 1")
    weights = np.full(n, 1.0 / n)
    if isinstance(prior, GaussianPrior):
        p = prior.pose
        poses = np.empty((n, 3))
        poses[:, 0] = p.x + prior.sigma_xy * rng.normal(size=n)
        poses[:, 1] = p.y + prior.sigma_xy * rng.normal(size=n)
        poses[:, 2] = _wrap(p.theta + prior.sigma_theta * rng.normal(size=n))
        return ParticleSet(poses, weights)
    lf = _field(map)
    if len(lf.free_cells) == 0:
        raise ValidationError("map has no free cells to sample from")
    idx = rng.integers(0, len(lf.free_cells), n)
    cells = lf.free_cells[idx]
    jitter = rng.uniform(0.0, 1.0, (n, 2))
    poses = np.empty((n, 3))
    poses[:, 0] = lf.origin.x + (cells[:, 1] + jitter[:, 0]) * lf.resolution
    poses[:, 1] = lf.origin.y + (cells[:, 0] + jitter[:, 1]) * lf.resolution
    poses[:, 2] = rng.uniform(-math.pi, math.pi, n)
    return ParticleSet(poses, weights)


def _wrap(a):
    """Wrap to (-pi, pi]; in-range values pass through bit-exact."""
    a = np.asarray(a, dtype=float)
    out = a - 2 * np.pi * np.round(a / (2 * np.pi))
    return np.where(out <= -np.pi, out + 2 * np.pi, out)


def motion_update(pset: ParticleSet, odom: OdometryIncrement, noise: OdometryNoise,
                  rng: np.random.Generator) -> ParticleSet:
    """Shift every particle by the odometry increment, perturbed per particle."""
    n = len(pset)
    rot1, trans, rot2 = decompose(odom)
    if noise.is_zero:
        r1 = np.full(n, rot1)
        tr = np.full(n, trans)
        r2 = np.full(n, rot2)
    else:
        e = rng.normal(size=(n, 3))
        r1 = rot1 + noise.sigma_rot1 * e[:, 0]
        tr = trans + noise.sigma_trans * e[:, 1]
        r2 = rot2 + noise.sigma_rot2 * e[:, 2]
    poses = pset.poses.copy()
    heading = poses[:, 2] + r1
    poses[:, 0] += tr * np.cos(heading)
    poses[:, 1] += tr * np.sin(heading)
    poses[:, 2] = _wrap(poses[:, 2] + r1 + r2)
    return replace(pset, poses=poses, weights=pset.weights.copy(), weight_reset=False)


def beam_subset(beam_count: int, max_beams: int) -> np.ndarray:
    if beam_count <= max_beams:
        return np.arange(beam_count)
    return np.unique(np.round(np.linspace(0, beam_count - 1, max_beams)).astype(int))


def measurement_update(pset: ParticleSet, scan, map, model: LikelihoodFieldModel | None = None) -> ParticleSet:
    model = model or LikelihoodFieldModel()
    lf = _field(map)
    idx = beam_subset(scan.params.beam_count, model.max_beams)
    ranges = np.asarray(scan.ranges)[idx]
    hits = np.asarray(scan.hit_flags)[idx]
    bearings = scan.params.angles()[idx][hits]
    ranges = ranges[hits]

    n = len(pset)
    with np.errstate(divide="ignore"):
        log_w = np.log(pset.weights)
    if ranges.size:
        heading = pset.poses[:, 2:3] + bearings[None, :]
        ex = pset.poses[:, 0:1] + ranges[None, :] * np.cos(heading)
        ey = pset.poses[:, 1:2] + ranges[None, :] * np.sin(heading)
        d = lf.lookup(ex, ey)
        s = model.sigma_hit
        p_hit = np.exp(-0.5 * (d / s) ** 2) / (s * math.sqrt(2 * math.pi))
        p = model.z_hit * p_hit + model.z_rand / scan.params.max_range
        with np.errstate(divide="ignore"):
            log_w = log_w + np.log(p).sum(axis=1)

    top = log_w.max()
    reset = False
    if not np.isfinite(top):
        w = np.full(n, 1.0 / n)
        reset = True
    else:
        w = np.exp(log_w - top)
        total = w.sum()
        if not (total > 0 and np.isfinite(total)):
            w = np.full(n, 1.0 / n)
            reset = True
        else:
            w = w / total
    return replace(pset, poses=pset.poses.copy(), weights=w, normalized=True, weight_reset=reset)


def _check_normalized(pset: ParticleSet):
    if not pset.normalized or abs(float(pset.weights.sum()) - 1.0) > 1e-9:
        raise ContractError("particle weights are not normalized")


def systematic_indices(weights: np.ndarray, offset: float) -> np.ndarray:
    """Low-variance resampling indices for stratum offset ``offset`` in [0, 1)."""
    n = len(weights)
    cdf = np.cumsum(weights)
    cdf[-1] = 1.0
    u = (offset + np.arange(n)) / n
    # absorb cumsum round-off so strata aligned with the cdf steps split cleanly
    return np.minimum(np.searchsorted(cdf - 1e-12, u, side="right"), n - 1)


def resample(pset: ParticleSet, rng: np.random.Generator) -> ParticleSet:
    _check_normalized(pset)
    n = len(pset)
    idx = systematic_indices(pset.weights, float(rng.uniform(0.0, 1.0)))
    return ParticleSet(pset.poses[idx].copy(), np.full(n, 1.0 / n), True, False)


def effective_sample_size(pset: ParticleSet) -> float:
    w = np.asarray(pset.weights, dtype=float)
    return float(1.0 / np.dot(w, w))


def estimate(pset: ParticleSet) -> PoseEstimate:
    _check_normalized(pset)
    w = pset.weights
    x = float(np.dot(w, pset.poses[:, 0]))
    y = float(np.dot(w, pset.poses[:, 1]))
    th = math.atan2(float(np.dot(w, np.sin(pset.poses[:, 2]))), float(np.dot(w, np.cos(pset.poses[:, 2]))))
    res = np.column_stack([pset.poses[:, 0] - x, pset.poses[:, 1] - y, _wrap(pset.poses[:, 2] - th)])
    cov = (res * w[:, None]).T @ res
    cov = 0.5 * (cov + cov.T)
    return PoseEstimate(Pose2D(x, y, th), cov)


class MonteCarloLocalizer:
    """Runs the filter loop; resamples when ESS drops below ``resample_ratio * n``."""

    def __init__(self, grid: OccupancyGrid, n: int, prior, noise: OdometryNoise,
                 rng: np.random.Generator, model: LikelihoodFieldModel | None = None,
                 resample_ratio: float = 0.5):
        self.field = LikelihoodField.from_grid(grid)
        self.noise = noise
        self.model = model or LikelihoodFieldModel()
        self.rng = rng
        self.resample_ratio = resample_ratio
        self.particles = init_particles(n, self.field, prior, rng)
        self.resets = 0

    def step(self, odom: OdometryIncrement, scan) -> PoseEstimate:
        self.particles = motion_update(self.particles, odom, self.noise, self.rng)
        self.particles = measurement_update(self.particles, scan, self.field, self.model)
        self.resets += self.particles.weight_reset
        if effective_sample_size(self.particles) < self.resample_ratio * len(self.particles):
            self.particles = resample(self.particles, self.rng)
        return estimate(self.particles)

    def estimate(self) -> PoseEstimate:
        return estimate(self.particles)
