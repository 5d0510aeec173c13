"""Collision-probability / steering providers.

The reference provider derives both outputs from a range scan: collision probability
ramps with the closest return in a frontal cone, steering points at the most open
sector ahead. Any callable ``scan -> PerceptionOutput`` can stand in for it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ContractError, ValidationError


@dataclass(frozen=True)
class PerceptionOutput:
    p_t: float
    s_k: float
    stamp: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.p_t <= 1.0:
            raise ValidationError(f"p_t out of [0, 1]: {self.p_t}")
        if not -1.0 <= self.s_k <= 1.0:
            raise ValidationError(f"s_k out of [-1, 1]: {self.s_k}")


@dataclass(frozen=True)
class OracleParams:
    cone_half_angle: float = math.radians(30.0)
    d_stop: float = 0.3
    d_free: float = 1.5
    sector_count: int = 9
    steering_fov: float = math.pi  # total width of the forward arc split into sectors

    def __post_init__(self):
        if not 0 < self.d_stop < self.d_free:
            raise ValidationError("need 0 < d_stop < d_free")
        if self.sector_count < 3 or self.sector_count % 2 == 0:
            raise ValidationError("sector_count must be odd and >= 3")
        if not self.cone_half_angle > 0:
            raise ValidationError("cone_half_angle must be > 0")
        if not 0 < self.steering_fov <= 2 * math.pi:
            raise ValidationError("steering_fov must be in (0, 2*pi]")


def collision_probability(d_min: float, d_stop: float, d_free: float) -> float:
    if d_min <= d_stop:
        return 1.0
    if d_min >= d_free:
        return 0.0
    return (d_free - d_min) / (d_free - d_stop)


def _bearings(scan) -> np.ndarray:
    a = scan.params.angles()
    return np.mod(a + np.pi, 2 * np.pi) - np.pi


def frontal_min_range(scan, cone_half_angle: float) -> float:
    bearings = _bearings(scan)
    cone = np.abs(bearings) <= cone_half_angle + 1e-12
    if not cone.any():
        raise ContractError("scan has no beams inside the frontal cone")
    return float(np.min(np.asarray(scan.ranges)[cone]))


def sector_means(scan, params: OracleParams) -> tuple[np.ndarray, np.ndarray]:
    """Mean range and center bearing of each steering sector (index 0 = rightmost).

    Beams on a shared boundary count toward both neighbours so the split stays
    mirror-symmetric.
    """
    bearings = _bearings(scan)
    ranges = np.asarray(scan.ranges, dtype=float)
    n = params.sector_count
    width = params.steering_fov / n
    centers = (np.arange(n) - n // 2) * width
    lo = centers - width / 2
    means = np.full(n, -np.inf)
    tol = 1e-9
    for i in range(n):
        sel = (bearings >= lo[i] - tol) & (bearings <= lo[i] + width + tol)
        if sel.any():
            vals = ranges[sel]
            means[i] = math.fsum(vals) / len(vals)
    return means, centers


def pick_sector(means: np.ndarray) -> int:
    """Most open sector; ties go to the one nearest the center, then the leftmost."""
    best = np.max(means)
    mid = len(means) // 2
    tied = [i for i in range(len(means)) if means[i] >= best - 1e-12]
    return min(tied, key=lambda i: (abs(i - mid), -i))


def oracle_perception(scan, params: OracleParams | None = None) -> PerceptionOutput:
    params = params or OracleParams()
    d_min = frontal_min_range(scan, params.cone_half_angle)
    p_t = collision_probability(d_min, params.d_stop, params.d_free)
    means, centers = sector_means(scan, params)
    if not np.isfinite(means).any():
        raise ContractError("scan has no beams inside the steering arc")
    s_k = float(np.clip(centers[pick_sector(means)] / (math.pi / 2), -1.0, 1.0))
    return PerceptionOutput(p_t, s_k, float(getattr(scan, "stamp", 0.0)))


class OracleProvider:
    def __init__(self, params: OracleParams | None = None):
        self.params = params or OracleParams()

    def __call__(self, scan) -> PerceptionOutput:
        return oracle_perception(scan, self.params)


class NullProvider:
    """Perception disabled: never reports risk, never steers."""

    def __call__(self, scan) -> PerceptionOutput:
        return PerceptionOutput(0.0, 0.0, float(getattr(scan, "stamp", 0.0)))


def make_provider(name: str, params: OracleParams | None = None):
    if name == "oracle":
        return OracleProvider(params)
    if name == "none":
        return NullProvider()
    raise ValidationError(f"unknown perception provider {name!r}")
