"""Attitude setpoint generation for fully-actuated multirotors.

Each strategy turns the gravity-compensated desired force ``F_des`` (inertial,
newtons), the desired yaw and strategy-specific inputs into a full attitude
setpoint ``R_IS`` whose columns are the setpoint axes in inertial coordinates.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .frames import FrameId, FrameVector, Rotation, euler_matrix, rodrigues

EPS_FORCE = 1e-6
EPS_YAW_AXIS = 1e-6

_K_I = np.array([0.0, 0.0, 1.0])


@dataclass(frozen=True)
class ZeroTilt:
    pass


@dataclass(frozen=True)
class FullTilt:
    pass


@dataclass(frozen=True)
class MinimumTilt:
    f_lmax: float

    def __post_init__(self):
        if not self.f_lmax > 0.0:
            raise ValueError("f_lmax must be positive")


@dataclass(frozen=True)
class FixedTilt:
    lambda_des: float
    kappa_des: float

    def __post_init__(self):
        if not 0.0 <= self.lambda_des < math.pi / 2:
            raise ValueError("lambda_des must be in [0, pi/2)")


@dataclass(frozen=True)
class FixedAttitude:
    phi_des: float
    theta_des: float

    def __post_init__(self):
        if abs(self.phi_des) >= math.pi / 2 or abs(self.theta_des) >= math.pi / 2:
            raise ValueError("|phi_des| and |theta_des| must be below pi/2")


AttitudeStrategy = Union[ZeroTilt, FullTilt, MinimumTilt, FixedTilt, FixedAttitude]


@dataclass(frozen=True)
class AttitudeSetpoint:
    r_is: Rotation
    strategy_used: AttitudeStrategy
    degraded: bool = False


def _setpoint(m: np.ndarray, strategy, degraded: bool = False) -> AttitudeSetpoint:
    return AttitudeSetpoint(Rotation(m, FrameId.SETPOINT, FrameId.INERTIAL), strategy, degraded)


def _yaw_matrix(psi: float) -> np.ndarray:
    c, s = math.cos(psi), math.sin(psi)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def _axes_from_z(k_s: np.ndarray, psi: float) -> Optional[np.ndarray]:
    """Complete a frame around ``k_s`` whose x axis follows the yaw heading.

    Returns None when the heading-normal direction is parallel to ``k_s``.
    """
    y_c = np.array([-math.sin(psi), math.cos(psi), 0.0])
    i_s = np.cross(y_c, k_s)
    n = np.linalg.norm(i_s)
    if n < EPS_YAW_AXIS:
        return None
    i_s /= n
    j_s = np.cross(k_s, i_s)
    return np.column_stack((i_s, j_s, k_s))


def _inertial(f: FrameVector) -> np.ndarray:
    if f.frame is not FrameId.INERTIAL:
        raise ValueError(f"desired force must be inertial, got {f.frame.name}")
    return f.vec


def attitude_zero_tilt(psi_des: float) -> AttitudeSetpoint:
    return _setpoint(_yaw_matrix(psi_des), ZeroTilt())


def attitude_full_tilt(f_des_inertial: FrameVector, psi_des: float,
                       previous: Optional[AttitudeSetpoint] = None) -> AttitudeSetpoint:
    f = _inertial(f_des_inertial)
    norm = float(np.linalg.norm(f))
    if norm <= EPS_FORCE:
        return _setpoint(_yaw_matrix(psi_des), FullTilt(), degraded=True)
    k_s = -f / norm
    return _complete(k_s, psi_des, FullTilt(), previous)


def _complete(k_s: np.ndarray, psi: float, strategy,
              previous: Optional[AttitudeSetpoint]) -> AttitudeSetpoint:
    # thrust that does not point upward cannot be tracked by tilting
    if k_s[2] <= 0.0:
        if previous is not None:
            return AttitudeSetpoint(previous.r_is, strategy, True)
        return _setpoint(_yaw_matrix(psi), strategy, degraded=True)
    m = _axes_from_z(k_s, psi)
    if m is not None:
        return _setpoint(m, strategy)
    if previous is None:
        return _setpoint(_yaw_matrix(psi), strategy, degraded=True)
    i_prev = previous.r_is.m[:, 0]
    i_s = i_prev - (i_prev @ k_s) * k_s
    n = np.linalg.norm(i_s)
    if n < EPS_YAW_AXIS:
        return AttitudeSetpoint(previous.r_is, strategy, True)
    i_s /= n
    return _setpoint(np.column_stack((i_s, np.cross(k_s, i_s), k_s)), strategy, degraded=True)


def minimum_tilt_angle(f: np.ndarray, f_lmax: float) -> float:
    """Tilt that leaves exactly ``f_lmax`` of lateral force; 0 when none is needed."""
    norm = float(np.linalg.norm(f))
    horiz = math.hypot(f[0], f[1])
    if horiz <= f_lmax:
        return 0.0
    chi = math.asin(min(1.0, horiz / norm))
    mu = math.asin(min(1.0, f_lmax / norm))
    return chi - mu


def attitude_minimum_tilt(f_des_inertial: FrameVector, psi_des: float, f_lmax: float,
                          previous: Optional[AttitudeSetpoint] = None) -> AttitudeSetpoint:
    strategy = MinimumTilt(f_lmax)
    f = _inertial(f_des_inertial)
    if float(np.linalg.norm(f)) <= EPS_FORCE:
        return _setpoint(_yaw_matrix(psi_des), strategy, degraded=True)
    if math.hypot(f[0], f[1]) <= f_lmax:
        return _setpoint(_yaw_matrix(psi_des), strategy)
    lam = minimum_tilt_angle(f, f_lmax)
    axis = np.cross(f, _K_I)
    axis /= np.linalg.norm(axis)
    k_s = rodrigues(_K_I, axis, lam)
    return _complete(k_s, psi_des, strategy, previous)


def attitude_fixed_tilt(psi_des: float, lambda_des: float, kappa_des: float) -> AttitudeSetpoint:
    """Tilt by ``lambda_des`` toward compass direction ``kappa_des`` (from north)."""
    strategy = FixedTilt(lambda_des, kappa_des)
    axis = np.cross(np.array([math.cos(kappa_des), math.sin(kappa_des), 0.0]), _K_I)
    k_s = rodrigues(_K_I, axis, lambda_des)
    m = _axes_from_z(k_s, psi_des)
    if m is None:  # unreachable for lambda_des < pi/2
        return _setpoint(_yaw_matrix(psi_des), strategy, degraded=True)
    return _setpoint(m, strategy)


def attitude_fixed(psi_des: float, phi_des: float, theta_des: float) -> AttitudeSetpoint:
    return _setpoint(euler_matrix(phi_des, theta_des, psi_des), FixedAttitude(phi_des, theta_des))


def generate_attitude(strategy: AttitudeStrategy, f_des_inertial: FrameVector, psi_des: float,
                      previous: Optional[AttitudeSetpoint] = None) -> AttitudeSetpoint:
    if isinstance(strategy, ZeroTilt):
        return attitude_zero_tilt(psi_des)
    if isinstance(strategy, FullTilt):
        return attitude_full_tilt(f_des_inertial, psi_des, previous)
    if isinstance(strategy, MinimumTilt):
        return attitude_minimum_tilt(f_des_inertial, psi_des, strategy.f_lmax, previous)
    if isinstance(strategy, FixedTilt):
        return attitude_fixed_tilt(psi_des, strategy.lambda_des, strategy.kappa_des)
    if isinstance(strategy, FixedAttitude):
        return attitude_fixed(psi_des, strategy.phi_des, strategy.theta_des)
    raise TypeError(f"unknown attitude strategy {strategy!r}")


class AttitudeSetpointGenerator:
    """Stateful wrapper remembering the last setpoint for the singular fallbacks."""

    def __init__(self, strategy: AttitudeStrategy):
        self.strategy = strategy
        self.last: Optional[AttitudeSetpoint] = None

    def __call__(self, f_des_inertial: FrameVector, psi_des: float,
                 strategy: Optional[AttitudeStrategy] = None) -> AttitudeSetpoint:
        if strategy is None:
            strategy = self.strategy
        sp = generate_attitude(strategy, f_des_inertial, psi_des, self.last)
        self.last = sp
        return sp

    def reset(self) -> None:
        self.last = None
