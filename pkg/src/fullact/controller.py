"""PX4-style cascade extended with attitude and thrust setpoint generators.

Pipeline per control step: position P -> velocity PID -> desired force
(inertial, gravity compensated) -> attitude setpoint generator -> thrust
setpoint generator (on the *measured* attitude) -> attitude P -> rate PID ->
torque -> control allocation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .allocation import MotorCommand, allocate, min_lateral_thrust
from .attitude_gen import (AttitudeSetpoint, AttitudeSetpointGenerator, AttitudeStrategy,
                           FixedAttitude, FixedTilt)
from .frames import FrameId, FrameVector, Rotation
from .thrust_gen import ThrustLimits, ThrustSetpoint, ThrustStrategy, generate_thrust
from .vehicle_sim import SimState, VehicleParams


def _vec3(v) -> np.ndarray:
    a = np.array(v, dtype=float).reshape(3)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Waypoint:
    x: float
    y: float
    z: float
    yaw: float = 0.0
    hold_time: float = 0.0
    capture_radius: float = 0.1

    def __post_init__(self):
        if not self.capture_radius > 0:
            raise ValueError("capture_radius must be positive")
        if self.hold_time < 0:
            raise ValueError("hold_time must be nonnegative")

    @property
    def position(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])


@dataclass(frozen=True, eq=False)
class FullPoseSetpoint:
    """6-D pose input; the override replaces the configured attitude strategy."""
    position: FrameVector
    yaw: float = 0.0
    attitude_override: Optional[Union[FixedAttitude, FixedTilt]] = None

    def __post_init__(self):
        if self.position.frame is not FrameId.INERTIAL:
            raise ValueError("pose position must be inertial")
        if self.attitude_override is not None and not isinstance(
                self.attitude_override, (FixedAttitude, FixedTilt)):
            raise TypeError("attitude_override must be FixedAttitude or FixedTilt")


@dataclass(frozen=True, eq=False)
class ControllerGains:
    pos_p: np.ndarray = field(default_factory=lambda: _vec3([1.2, 1.2, 1.5]))
    vel_p: np.ndarray = field(default_factory=lambda: _vec3([2.5, 2.5, 4.0]))
    vel_i: np.ndarray = field(default_factory=lambda: _vec3([0.8, 0.8, 1.5]))
    vel_d: np.ndarray = field(default_factory=lambda: _vec3([0.0, 0.0, 0.0]))
    att_p: np.ndarray = field(default_factory=lambda: _vec3([6.0, 6.0, 3.0]))
    rate_p: np.ndarray = field(default_factory=lambda: _vec3([16.0, 16.0, 10.0]))
    rate_i: np.ndarray = field(default_factory=lambda: _vec3([2.0, 2.0, 1.0]))
    rate_d: np.ndarray = field(default_factory=lambda: _vec3([0.0, 0.0, 0.0]))
    vel_max_xy: float = 2.0
    vel_max_z: float = 1.0
    acc_max_xy: float = 1.5
    acc_max_z: float = 3.0
    vel_i_limit: float = 2.0
    rate_max: np.ndarray = field(default_factory=lambda: _vec3(np.radians([120.0, 120.0, 60.0])))
    rate_i_limit: float = 0.5

    def __post_init__(self):
        for name in ("pos_p", "vel_p", "vel_i", "vel_d", "att_p", "rate_p", "rate_i",
                     "rate_d", "rate_max"):
            v = _vec3(getattr(self, name))
            if np.any(v < 0) or not np.all(np.isfinite(v)):
                raise ValueError(f"gain {name} must be finite and nonnegative")
            object.__setattr__(self, name, v)
        for name in ("vel_max_xy", "vel_max_z", "acc_max_xy", "acc_max_z", "vel_i_limit",
                     "rate_i_limit"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")


@dataclass(frozen=True, eq=False)
class ControlOutput:
    f_des_inertial: FrameVector
    f_sp_body: ThrustSetpoint
    attitude_sp: AttitudeSetpoint
    omega_dot_sp: np.ndarray
    torque: np.ndarray
    motor_cmd: MotorCommand


def configured_f_lmax(params: VehicleParams, safety: float = 0.9, n_directions: int = 36) -> float:
    """Constant lateral bound: worst sampled direction at hover, times a safety factor."""
    return safety * min_lateral_thrust(params.geom, params.u_max, -params.hover_force,
                                       n_directions)


def _clip_norm(v: np.ndarray, limit: float) -> np.ndarray:
    n = float(np.linalg.norm(v))
    return v * (limit / n) if n > limit else v


def rotation_vector(m: np.ndarray) -> np.ndarray:
    """Axis * angle of a rotation matrix, angle in [0, pi]."""
    c = min(1.0, max(-1.0, 0.5 * (m[0, 0] + m[1, 1] + m[2, 2] - 1.0)))
    angle = math.acos(c)
    v = np.array([m[2, 1] - m[1, 2], m[0, 2] - m[2, 0], m[1, 0] - m[0, 1]])
    s = math.sin(angle)
    if s > 1e-6:
        return v * (angle / (2.0 * s))
    if angle < 0.5:
        return 0.5 * v  # small-angle limit
    # near pi: axis from the symmetric part
    b = 0.5 * (m + np.eye(3))
    i = int(np.argmax(np.diag(b)))
    axis = b[:, i] / math.sqrt(max(b[i, i], 1e-300))
    if axis @ v < 0:
        axis = -axis
    return axis * angle


class CascadeController:
    """Single-owner controller holding integrator and setpoint-generator state."""

    def __init__(self, params: VehicleParams, gains: ControllerGains, limits: ThrustLimits,
                 attitude_strategy: AttitudeStrategy, thrust_strategy: ThrustStrategy):
        self.params = params
        self.gains = gains
        self.limits = limits
        self.thrust_strategy = thrust_strategy
        self.attitude_gen = AttitudeSetpointGenerator(attitude_strategy)
        self.reset()

    @property
    def attitude_strategy(self) -> AttitudeStrategy:
        return self.attitude_gen.strategy

    def reset(self) -> None:
        self.vel_int = np.zeros(3)
        self.rate_int = np.zeros(3)
        self._prev_vel: Optional[np.ndarray] = None
        self._prev_omega: Optional[np.ndarray] = None
        self.attitude_gen.reset()

    def position_loop(self, state: SimState, target, dt: float) -> FrameVector:
        """Desired inertial force, gravity compensation included."""
        g = self.gains
        p_sp = _target_position(target)
        pos = state.position.vec
        vel = state.velocity.vec

        v_sp = g.pos_p * (p_sp - pos)
        v_sp[:2] = _clip_norm(v_sp[:2], g.vel_max_xy)
        v_sp[2] = min(g.vel_max_z, max(-g.vel_max_z, v_sp[2]))

        err = v_sp - vel
        self.vel_int = np.clip(self.vel_int + err * dt, -g.vel_i_limit, g.vel_i_limit)
        dvel = np.zeros(3) if self._prev_vel is None else (vel - self._prev_vel) / dt
        self._prev_vel = vel.copy()
        acc = g.vel_p * err + g.vel_i * self.vel_int - g.vel_d * dvel
        acc[:2] = _clip_norm(acc[:2], g.acc_max_xy)
        acc[2] = min(g.acc_max_z, max(-g.acc_max_z, acc[2]))

        m = self.params.mass
        f = m * acc
        f[2] -= m * self.params.gravity
        return FrameVector(f, FrameId.INERTIAL)

    def attitude_rate_loops(self, state: SimState, attitude_sp: Rotation, dt: float) -> np.ndarray:
        """Angular acceleration setpoint (body frame) from attitude and rate errors.

        The attitude error is taken in the inertial frame so a pure heading
        change is flown as a rotation about the vertical, leaving roll and
        pitch untouched.
        """
        g = self.gains
        r_ib = state.attitude.m
        r_is = attitude_sp.m if attitude_sp.to_frame is FrameId.INERTIAL else attitude_sp.m.T
        err_inertial = rotation_vector(r_is @ r_ib.T)
        rate_sp = r_ib.T @ (g.att_p * err_inertial)
        # uniform scaling keeps the rotation axis
        over = np.max(np.abs(rate_sp) / np.maximum(g.rate_max, 1e-12))
        if over > 1.0:
            rate_sp = rate_sp / over

        omega = state.omega
        err = rate_sp - omega
        self.rate_int = np.clip(self.rate_int + err * dt, -g.rate_i_limit, g.rate_i_limit)
        domega = np.zeros(3) if self._prev_omega is None else (omega - self._prev_omega) / dt
        self._prev_omega = omega.copy()
        return g.rate_p * err + g.rate_i * self.rate_int - g.rate_d * domega

    def control_step(self, state: SimState, target, dt: float) -> ControlOutput:
        f_des = self.position_loop(state, target, dt)
        strategy = None
        if isinstance(target, FullPoseSetpoint):
            yaw = target.yaw
            strategy = target.attitude_override
        else:
            yaw = target.yaw
        att_sp = self.attitude_gen(f_des, yaw, strategy)
        thrust_sp = generate_thrust(self.thrust_strategy, f_des, state.r_bi, self.limits)

        omega_dot = self.attitude_rate_loops(state, att_sp.r_is, dt)
        inertia = self.params.inertia
        omega = state.omega
        torque = inertia @ omega_dot + np.cross(omega, inertia @ omega)
        cmd = allocate(thrust_sp.f_sp_body, torque, self.params.alloc, self.params.u_max,
                       hover_fz=-self.params.hover_force)
        return ControlOutput(f_des, thrust_sp, att_sp, omega_dot, torque, cmd)


def _target_position(target) -> np.ndarray:
    if isinstance(target, Waypoint):
        return target.position
    if isinstance(target, FullPoseSetpoint):
        return target.position.vec
    raise TypeError(f"unsupported setpoint {type(target).__name__}")
