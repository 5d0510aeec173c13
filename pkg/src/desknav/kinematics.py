"""Differential-drive kinematics: wheel/twist conversion, pose integration, odometry noise."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ContractError, ValidationError

# below this yaw rate the arc is evaluated through its series limit
ARC_EPS = 1e-6


def normalize_angle(a: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    a = math.remainder(a, 2.0 * math.pi)
    if a <= -math.pi:
        a += 2.0 * math.pi
    return a


@dataclass(frozen=True)
class Pose2D:
    x: float = 0.0
    y: float = 0.0
    theta: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "theta", normalize_angle(float(self.theta)))

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.theta])

    def distance_to(self, other: "Pose2D") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)


@dataclass(frozen=True)
class Twist2D:
    v: float = 0.0
    w: float = 0.0


@dataclass(frozen=True)
class WheelRates:
    v_r: float = 0.0
    v_l: float = 0.0


@dataclass(frozen=True)
class RobotParams:
    wheel_radius: float = 0.033
    wheel_base: float = 0.16
    footprint_radius: float = 0.15
    v_max: float = 0.3
    w_max: float = 1.5

    def __post_init__(self):
        for name in ("wheel_radius", "wheel_base", "footprint_radius", "v_max", "w_max"):
            if not getattr(self, name) > 0:
                raise ValidationError(f"RobotParams.{name} must be > 0")


@dataclass(frozen=True)
class OdometryIncrement:
    """Relative motion expressed in the body frame of the start pose."""

    dx: float = 0.0
    dy: float = 0.0
    dtheta: float = 0.0


@dataclass(frozen=True)
class OdometryNoise:
    sigma_rot1: float = 0.0
    sigma_trans: float = 0.0
    sigma_rot2: float = 0.0

    def __post_init__(self):
        if min(self.sigma_rot1, self.sigma_trans, self.sigma_rot2) < 0:
            raise ValidationError("odometry sigmas must be >= 0")

    @property
    def is_zero(self) -> bool:
        return self.sigma_rot1 == 0 and self.sigma_trans == 0 and self.sigma_rot2 == 0


def body_twist_from_wheels(rates: WheelRates, params: RobotParams) -> Twist2D:
    R, L = params.wheel_radius, params.wheel_base
    return Twist2D(v=0.5 * R * (rates.v_r + rates.v_l), w=(R / L) * (rates.v_r - rates.v_l))


def wheels_from_body_twist(twist: Twist2D, params: RobotParams) -> WheelRates:
    R, L = params.wheel_radius, params.wheel_base
    return WheelRates(
        v_r=(2.0 * twist.v + twist.w * L) / (2.0 * R),
        v_l=(2.0 * twist.v - twist.w * L) / (2.0 * R),
    )


def integrate_pose(pose: Pose2D, twist: Twist2D, dt: float) -> Pose2D:
    """Advance ``pose`` along the exact constant-twist arc for ``dt`` seconds.

    The chord form ``v*dt*sinc(w*dt/2)`` along the mid-arc heading is algebraically
    the same as ``(v/w)(sin(theta + w*dt) - sin(theta))`` but stays accurate as w -> 0.
    """
    if not dt > 0:
        raise ContractError("dt must be > 0")
    v, w = twist.v, twist.w
    half = 0.5 * w * dt
    if abs(w) >= ARC_EPS:
        chord = v * dt * math.sin(half) / half
    else:
        # straight-line limit, second-order term kept for continuity at the switch
        chord = v * dt * (1.0 - half * half / 6.0)
    heading = pose.theta + half
    return Pose2D(
        pose.x + chord * math.cos(heading),
        pose.y + chord * math.sin(heading),
        pose.theta + w * dt,
    )


def pose_delta(a: Pose2D, b: Pose2D) -> OdometryIncrement:
    """Motion from ``a`` to ``b`` in the body frame of ``a``."""
    c, s = math.cos(a.theta), math.sin(a.theta)
    gx, gy = b.x - a.x, b.y - a.y
    return OdometryIncrement(c * gx + s * gy, -s * gx + c * gy, normalize_angle(b.theta - a.theta))


def compose(pose: Pose2D, inc: OdometryIncrement) -> Pose2D:
    c, s = math.cos(pose.theta), math.sin(pose.theta)
    return Pose2D(pose.x + c * inc.dx - s * inc.dy, pose.y + s * inc.dx + c * inc.dy, pose.theta + inc.dtheta)


def decompose(inc: OdometryIncrement) -> tuple[float, float, float]:
    """(rot1, trans, rot2) form of an increment."""
    trans = math.hypot(inc.dx, inc.dy)
    rot1 = math.atan2(inc.dy, inc.dx) if trans > 1e-12 else 0.0
    rot2 = normalize_angle(inc.dtheta - rot1)
    return rot1, trans, rot2


def noisy_odometry(true_delta: OdometryIncrement, noise: OdometryNoise, rng: np.random.Generator) -> OdometryIncrement:
    if noise.is_zero:
        return true_delta
    rot1, trans, rot2 = decompose(true_delta)
    e = rng.normal(0.0, 1.0, 3)
    rot1 += noise.sigma_rot1 * e[0]
    trans += noise.sigma_trans * e[1]
    rot2 += noise.sigma_rot2 * e[2]
    return OdometryIncrement(trans * math.cos(rot1), trans * math.sin(rot1), normalize_angle(rot1 + rot2))
