"""Newton-Euler plant for the hexarotor with first-order rotor lag."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Tuple

import numpy as np

from . import kernels
from .allocation import (AllocationMatrix, MotorCommand, RotorGeometry,
                         build_allocation_matrix, hexarotor)
from .frames import FrameId, FrameVector, Rotation

BLOWUP_LIMIT = 1e6
MAX_DT = 0.01


class NumericalBlowup(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class VehicleParams:
    mass: float = 4.0
    inertia: np.ndarray = field(default_factory=lambda: np.diag([0.08, 0.08, 0.14]))
    geom: RotorGeometry = field(default_factory=hexarotor)
    u_max: float = 25.0
    motor_tau: float = 0.05
    gravity: float = 9.81

    def __post_init__(self):
        inertia = np.array(self.inertia, dtype=float).reshape(3, 3)
        if not self.mass > 0:
            raise ValueError("mass must be positive")
        if not np.allclose(inertia, inertia.T) or np.any(np.linalg.eigvalsh(inertia) <= 0):
            raise ValueError("inertia must be symmetric positive definite")
        if not self.motor_tau > 0:
            raise ValueError("motor_tau must be positive")
        if not self.u_max > 0:
            raise ValueError("u_max must be positive")
        inertia.setflags(write=False)
        object.__setattr__(self, "inertia", inertia)

    @cached_property
    def alloc(self) -> AllocationMatrix:
        return build_allocation_matrix(self.geom)

    @cached_property
    def inertia_inv(self) -> np.ndarray:
        return np.linalg.inv(self.inertia)

    @property
    def hover_force(self) -> float:
        return self.mass * self.gravity


@dataclass(frozen=True, eq=False)
class Disturbance:
    force: FrameVector = field(default_factory=lambda: FrameVector.zero(FrameId.INERTIAL))
    torque: np.ndarray = field(default_factory=lambda: np.zeros(3))  # body frame

    def __post_init__(self):
        if self.force.frame is not FrameId.INERTIAL:
            raise ValueError("disturbance force must be inertial")
        torque = np.array(self.torque, dtype=float).reshape(3)
        if not np.all(np.isfinite(torque)):
            raise ValueError("disturbance torque must be finite")
        object.__setattr__(self, "torque", torque)


@dataclass(frozen=True, eq=False)
class SimState:
    position: FrameVector
    velocity: FrameVector
    attitude: Rotation          # Body -> Inertial
    omega: np.ndarray           # body rates, rad/s
    motor_thrusts: np.ndarray   # newtons
    t: float = 0.0

    def to_vector(self) -> np.ndarray:
        return np.concatenate((self.position.vec, self.velocity.vec,
                               quat_from_matrix(self.attitude.m), self.omega,
                               self.motor_thrusts))

    @classmethod
    def from_vector(cls, x: np.ndarray, t: float) -> SimState:
        return cls(FrameVector(x[0:3], FrameId.INERTIAL),
                   FrameVector(x[3:6], FrameId.INERTIAL),
                   Rotation(quat_to_matrix(x[6:10]), FrameId.BODY, FrameId.INERTIAL),
                   np.array(x[10:13]), np.array(x[13:19]), t)

    @property
    def r_bi(self) -> Rotation:
        return self.attitude.inv()


def quat_to_matrix(q: np.ndarray) -> np.ndarray:
    w, x, y, z = q
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def quat_from_matrix(m: np.ndarray) -> np.ndarray:
    """Shepperd's method, canonical sign w >= 0."""
    tr = m[0, 0] + m[1, 1] + m[2, 2]
    if tr > 0:
        s = 2.0 * math.sqrt(1.0 + tr)
        q = [0.25 * s, (m[2, 1] - m[1, 2]) / s, (m[0, 2] - m[2, 0]) / s, (m[1, 0] - m[0, 1]) / s]
    elif m[0, 0] > m[1, 1] and m[0, 0] > m[2, 2]:
        s = 2.0 * math.sqrt(1.0 + m[0, 0] - m[1, 1] - m[2, 2])
        q = [(m[2, 1] - m[1, 2]) / s, 0.25 * s, (m[0, 1] + m[1, 0]) / s, (m[0, 2] + m[2, 0]) / s]
    elif m[1, 1] > m[2, 2]:
        s = 2.0 * math.sqrt(1.0 + m[1, 1] - m[0, 0] - m[2, 2])
        q = [(m[0, 2] - m[2, 0]) / s, (m[0, 1] + m[1, 0]) / s, 0.25 * s, (m[1, 2] + m[2, 1]) / s]
    else:
        s = 2.0 * math.sqrt(1.0 + m[2, 2] - m[0, 0] - m[1, 1])
        q = [(m[1, 0] - m[0, 1]) / s, (m[0, 2] + m[2, 0]) / s, (m[1, 2] + m[2, 1]) / s, 0.25 * s]
    q = np.array(q)
    q /= np.linalg.norm(q)
    return -q if q[0] < 0 else q


def initial_state(position=(0.0, 0.0, 0.0), yaw: float = 0.0,
                  motor_thrusts: Optional[np.ndarray] = None) -> SimState:
    c, s = math.cos(yaw), math.sin(yaw)
    att = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
    return SimState(FrameVector(position, FrameId.INERTIAL), FrameVector.zero(FrameId.INERTIAL),
                    Rotation(att, FrameId.BODY, FrameId.INERTIAL), np.zeros(3),
                    np.zeros(6) if motor_thrusts is None else np.array(motor_thrusts, dtype=float))


def integrate(x: np.ndarray, u: np.ndarray, params: VehicleParams, disturbance: Disturbance,
              dt: float, n_steps: int = 1) -> np.ndarray:
    """Advance a flat state vector; the hot path used by the scenario runner."""
    x = kernels.rk4_steps(x, u, params.alloc.b, params.mass, params.inertia,
                          params.inertia_inv, params.gravity, params.motor_tau,
                          disturbance.force.vec, disturbance.torque, dt, n_steps)
    if not np.all(np.isfinite(x)) or np.max(np.abs(x)) > BLOWUP_LIMIT:
        raise NumericalBlowup(f"state magnitude exceeded {BLOWUP_LIMIT:g}")
    return x


def step(state: SimState, u, params: VehicleParams, disturbance: Optional[Disturbance] = None,
         dt: float = 0.001) -> SimState:
    if not 0.0 < dt <= MAX_DT:
        raise ValueError(f"dt must be in (0, {MAX_DT}]")
    if isinstance(u, MotorCommand):
        u = u.thrusts
    if disturbance is None:
        disturbance = Disturbance()
    x = integrate(state.to_vector(), np.asarray(u, dtype=float), params, disturbance, dt)
    return SimState.from_vector(x, state.t + dt)


def trim_hover(params: VehicleParams) -> Tuple[SimState, MotorCommand, float]:
    """Hover equilibrium at the origin: state, rotor command and hover force m*g."""
    f_hover = params.mass * params.gravity
    w = np.array([0.0, 0.0, -f_hover, 0.0, 0.0, 0.0])
    u = params.alloc.b_inv @ w
    if np.any(u < 0) or np.any(u > params.u_max):
        raise ValueError("vehicle cannot hover within its rotor limits")
    return initial_state(motor_thrusts=u), MotorCommand(u), f_hover
