"""Low-pass-filtered reactive control, pure pursuit, and the navigation executive."""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ContractError, ValidationError
from .kinematics import Pose2D, normalize_angle

HALF_PI = math.pi / 2


class Mode(str, Enum):
    TRACKING = "Tracking"
    REACTIVE = "Reactive"
    RECOVERY = "Recovery"
    DONE = "Done"


@dataclass(frozen=True)
class ControlParams:
    alpha: float = 0.3
    beta: float = 0.5
    v_max: float = 0.3
    w_max: float = 1.5
    override_on: float = 0.7
    override_off: float = 0.4
    override_hold: float = 1.0
    lookahead: float = 0.4
    goal_tolerance: float = 0.15
    stuck_speed: float = 0.01
    stuck_time: float = 3.0
    recovery_spin: float = 0.5
    recovery_timeout: float = 15.0

    def __post_init__(self):
        if not (0.0 <= self.alpha <= 1.0 and 0.0 <= self.beta <= 1.0):
            raise ValidationError("alpha and beta must lie in [0, 1]")
        if not self.override_off < self.override_on:
            raise ValidationError("override_off must be < override_on")
        for name in ("v_max", "w_max", "override_hold", "lookahead", "goal_tolerance",
                     "stuck_speed", "stuck_time", "recovery_spin", "recovery_timeout"):
            if not getattr(self, name) > 0:
                raise ValidationError(f"{name} must be > 0")


# the thesis retune and the original DroNet constants
PRESETS = {
    "thesis": {"alpha": 0.3, "beta": 0.5},
    "dronet": {"alpha": 0.7, "beta": 0.5},
}


def preset(name: str, **overrides) -> ControlParams:
    return ControlParams(**{**PRESETS[name], **overrides})


@dataclass
class ControlState:
    v_prev: float = 0.0
    theta_prev: float = 0.0
    mode: Mode = Mode.TRACKING
    mode_entered_at: float = 0.0
    below_off_since: float | None = None
    slow_since: float | None = None
    entered_reactive: bool = False
    entered_recovery: bool = False

    def set_mode(self, mode: Mode, t: float):
        if mode is not self.mode:
            self.mode = mode
            self.mode_entered_at = t
            if mode is Mode.REACTIVE:
                self.entered_reactive = True
            elif mode is Mode.RECOVERY:
                self.entered_recovery = True


@dataclass(frozen=True)
class ControlCommand:
    v: float = 0.0
    w: float = 0.0


def lpf_velocity(state: ControlState, p_t: float, params: ControlParams) -> float:
    """v_k = (1 - alpha) v_{k-1} + alpha (1 - p_t) v_max; updates ``state.v_prev``."""
    if not 0.0 <= p_t <= 1.0:
        raise ContractError(f"p_t must be in [0, 1], got {p_t}")
    a = params.alpha
    v = (1.0 - a) * state.v_prev + a * (1.0 - p_t) * params.v_max
    state.v_prev = v
    return v


def lpf_steering(state: ControlState, s_k: float, params: ControlParams) -> float:
    """theta_k = (1 - beta) theta_{k-1} + beta (pi/2) s_k; updates ``state.theta_prev``."""
    if not -1.0 <= s_k <= 1.0:
        raise ContractError(f"s_k must be in [-1, 1], got {s_k}")
    b = params.beta
    th = (1.0 - b) * state.theta_prev + b * HALF_PI * s_k
    state.theta_prev = th
    return th


def _lookahead_point(pts: np.ndarray, x: float, y: float, lookahead: float):
    """Point ``lookahead`` metres of arc past the closest point on the polyline."""
    if len(pts) == 1:
        return pts[0]
    a, b = pts[:-1], pts[1:]
    seg = b - a
    seg_len = np.hypot(seg[:, 0], seg[:, 1])
    denom = np.where(seg_len > 0, seg_len ** 2, 1.0)
    t = np.clip(((x - a[:, 0]) * seg[:, 0] + (y - a[:, 1]) * seg[:, 1]) / denom, 0.0, 1.0)
    proj = a + t[:, None] * seg
    d = np.hypot(proj[:, 0] - x, proj[:, 1] - y)
    i = int(np.argmin(d))
    remaining = lookahead + t[i] * seg_len[i]
    while i < len(seg):
        if remaining <= seg_len[i]:
            f = remaining / seg_len[i] if seg_len[i] > 0 else 0.0
            return a[i] + f * seg[i]
        remaining -= seg_len[i]
        i += 1
    return pts[-1]


def pure_pursuit(pose: Pose2D, waypoints, params: ControlParams) -> tuple[float, float, bool]:
    """Returns (v_ref, w_ref, goal_reached)."""
    pts = np.asarray(waypoints, dtype=float).reshape(-1, 2)
    if len(pts) == 0:
        raise ContractError("pure_pursuit needs at least one waypoint")
    gx, gy = pts[-1]
    if math.hypot(gx - pose.x, gy - pose.y) <= params.goal_tolerance:
        return 0.0, 0.0, True
    tx, ty = _lookahead_point(pts, pose.x, pose.y, params.lookahead)
    err = normalize_angle(math.atan2(ty - pose.y, tx - pose.x) - pose.theta)
    quarter = math.pi / 4
    scale = 1.0 if abs(err) <= quarter else max(0.0, 1.0 - (abs(err) - quarter) / (math.pi - quarter))
    v_ref = params.v_max * scale
    w_ref = 2.0 * v_ref * math.sin(err) / params.lookahead
    return v_ref, w_ref, False


def _clip(x: float, lim: float) -> float:
    return min(max(x, -lim), lim)


def executive_step(state: ControlState, pose: Pose2D, perception, waypoints, params: ControlParams,
                   t: float) -> tuple[ControlCommand, ControlState]:
    """One tick of the Tracking / Reactive / Recovery / Done state machine.

    The perception output supplies p_t (collision probability) and s_k (steering);
    p_t == 0 doubles as the "front is clear" signal that ends a recovery spin.
    """
    if state.mode is Mode.DONE:
        return ControlCommand(0.0, 0.0), state
    v_ref, w_ref, reached = pure_pursuit(pose, waypoints, params)
    if reached:
        state.set_mode(Mode.DONE, t)
        state.v_prev = 0.0
        return ControlCommand(0.0, 0.0), state

    p_t, s_k = perception.p_t, perception.s_k

    if state.mode is Mode.RECOVERY:
        spun_out = t - state.mode_entered_at >= params.recovery_timeout
        if p_t == 0.0 or spun_out:
            state.set_mode(Mode.TRACKING, t)
            state.slow_since = None
        else:
            direction = 1.0 if w_ref >= 0 else -1.0
            state.v_prev = 0.0
            return ControlCommand(0.0, direction * min(params.recovery_spin, params.w_max)), state

    v_k = lpf_velocity(state, p_t, params)
    theta_k = lpf_steering(state, s_k, params)

    if state.mode is Mode.TRACKING and p_t > params.override_on:
        state.set_mode(Mode.REACTIVE, t)
        state.below_off_since = None
    elif state.mode is Mode.REACTIVE:
        if p_t < params.override_off:
            if state.below_off_since is None:
                state.below_off_since = t
            if t - state.below_off_since >= params.override_hold - 1e-9:
                state.set_mode(Mode.TRACKING, t)
                state.below_off_since = None
        else:
            state.below_off_since = None

    if state.mode is Mode.REACTIVE:
        cmd = ControlCommand(v_k, _clip(theta_k, params.w_max))
    else:
        cmd = ControlCommand(min(v_ref, v_k), _clip(w_ref, params.w_max))

    if abs(cmd.v) < params.stuck_speed:
        if state.slow_since is None:
            state.slow_since = t
        if t - state.slow_since >= params.stuck_time - 1e-9:
            state.set_mode(Mode.RECOVERY, t)
            state.slow_since = None
            state.v_prev = 0.0
            direction = 1.0 if w_ref >= 0 else -1.0
            cmd = ControlCommand(0.0, direction * min(params.recovery_spin, params.w_max))
    else:
        state.slow_since = None
    return cmd, state
