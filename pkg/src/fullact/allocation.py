"""Control allocation for a fixed-tilt hexarotor.

Motor commands are rotor thrusts in newtons, so the wrench map is linear:
``[F_x, F_y, F_z, tau_x, tau_y, tau_z] = B @ u``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .frames import FrameId, FrameVector, rodrigues

COND_LIMIT = 1e9
_BOUND_TOL = 1e-9


class SingularGeometry(ValueError):
    pass


class Spin(enum.IntEnum):
    """Rotor direction seen from above; value is the sign of the drag torque along the thrust axis."""
    CW = 1
    CCW = -1


@dataclass(frozen=True)
class RotorGeometry:
    positions: np.ndarray          # (n, 3) body FRD, meters
    tilts: np.ndarray              # (n,) radians, signed rotation about the arm axis
    spins: tuple                   # n x Spin
    k_f: float = 1.5e-5            # N per (rad/s)^2, used by the motor model only
    k_m: float = 0.02              # N*m of drag torque per N of thrust

    def __post_init__(self):
        pos = np.array(self.positions, dtype=float).reshape(-1, 3)
        tilts = np.array(self.tilts, dtype=float).reshape(-1)
        if len(pos) != len(tilts) or len(pos) != len(self.spins):
            raise ValueError("positions, tilts and spins must have equal length")
        if self.k_f <= 0 or self.k_m <= 0:
            raise ValueError("k_f and k_m must be positive")
        pos.setflags(write=False)
        tilts.setflags(write=False)
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "tilts", tilts)
        object.__setattr__(self, "spins", tuple(Spin(s) for s in self.spins))

    @property
    def n_rotors(self) -> int:
        return len(self.tilts)

    def thrust_axes(self) -> np.ndarray:
        """Unit thrust direction of every rotor, shape (n, 3)."""
        down = np.array([0.0, 0.0, -1.0])
        axes = []
        for p, tilt in zip(self.positions, self.tilts):
            arm = p / np.linalg.norm(p)
            axes.append(rodrigues(down, arm, float(tilt)))
        return np.array(axes)


def hexarotor(arm_length: float = 0.48, tilt: float = math.radians(30.0),
              k_f: float = 1.5e-5, k_m: float = 0.02) -> RotorGeometry:
    """Six arms at 60 deg spacing, rotors tilted +tilt/-tilt alternately.

    Spin directions are chosen so the yaw torque of the tilted thrust and
    the rotor drag torque add up.
    """
    az = np.radians(np.arange(6) * 60.0)
    positions = arm_length * np.column_stack((np.cos(az), np.sin(az), np.zeros(6)))
    tilts = np.array([tilt if i % 2 == 0 else -tilt for i in range(6)])
    spins = [Spin.CCW if i % 2 == 0 else Spin.CW for i in range(6)]
    return RotorGeometry(positions, tilts, spins, k_f, k_m)


def wrench_matrix(geom: RotorGeometry) -> np.ndarray:
    """Columns are the body wrench produced by one newton of each rotor."""
    axes = geom.thrust_axes()
    cols = []
    for p, a, s in zip(geom.positions, axes, geom.spins):
        cols.append(np.concatenate((a, np.cross(p, a) + int(s) * geom.k_m * a)))
    return np.array(cols).T


@dataclass(frozen=True)
class AllocationMatrix:
    b: np.ndarray
    b_inv: np.ndarray

    def forward(self, u: np.ndarray) -> np.ndarray:
        return self.b @ u


def build_allocation_matrix(geom: RotorGeometry) -> AllocationMatrix:
    b = wrench_matrix(geom)
    if b.shape != (6, 6):
        raise SingularGeometry(f"need six rotors for a square map, got {b.shape[1]}")
    cond = np.linalg.cond(b)
    if not cond < COND_LIMIT:
        raise SingularGeometry(f"allocation matrix is rank deficient (cond={cond:.3g})")
    b_inv = np.linalg.inv(b)
    b.setflags(write=False)
    b_inv.setflags(write=False)
    return AllocationMatrix(b, b_inv)


@dataclass
class MotorCommand:
    thrusts: np.ndarray
    saturated: bool = False
    infeasible: bool = False
    # 0: no relaxation, 1: lateral force, 2: normal force, 3: torque
    stage: int = 0
    relaxation: float = 1.0


def _max_feasible(u0: np.ndarray, du: np.ndarray, u_max: float) -> Optional[float]:
    """Largest k in [0, 1] with 0 <= u0 + k*du <= u_max, None if k=0 is infeasible."""
    if np.any(u0 < -_BOUND_TOL) or np.any(u0 > u_max + _BOUND_TOL):
        return None
    k = 1.0
    for a, d in zip(u0, du):
        if d > 0.0:
            k = min(k, (u_max - a) / d)
        elif d < 0.0:
            k = min(k, -a / d)
    return max(0.0, k)


def _in_bounds(u: np.ndarray, u_max: float) -> bool:
    return bool(np.all(u >= -_BOUND_TOL) and np.all(u <= u_max + _BOUND_TOL))


def default_hover_fz(alloc: AllocationMatrix, u_max: float) -> float:
    """Body-z force with every motor at half thrust."""
    return float(alloc.b[2] @ np.full(alloc.b.shape[1], 0.5 * u_max))


def allocate(force: FrameVector, torque: Sequence[float], alloc: AllocationMatrix,
             u_max: float, hover_fz: Optional[float] = None) -> MotorCommand:
    """Map a body wrench to rotor thrusts, giving up force before torque.

    When the direct solution leaves ``[0, u_max]`` the demand is relaxed in
    order: lateral force toward zero, then normal force toward ``hover_fz``,
    then torque toward zero. Each stage keeps the largest feasible fraction of
    what it relaxes.
    """
    if force.frame is not FrameId.BODY:
        raise ValueError(f"wrench force must be in the body frame, got {force.frame.name}")
    tau = np.asarray(torque, dtype=float).reshape(3)
    w = np.concatenate((force.vec, tau))
    if not np.all(np.isfinite(w)):
        raise ValueError("wrench must be finite")
    b_inv = alloc.b_inv
    u = b_inv @ w
    if _in_bounds(u, u_max):
        return MotorCommand(np.clip(u, 0.0, u_max))

    if hover_fz is None:
        hover_fz = default_hover_fz(alloc, u_max)

    # stage 1: lateral force
    w0 = w.copy()
    w0[:2] = 0.0
    u0 = b_inv @ w0
    k = _max_feasible(u0, u - u0, u_max)
    if k is not None:
        return MotorCommand(np.clip(u0 + k * (u - u0), 0.0, u_max), True, False, 1, k)

    # stage 2: normal force toward the hover share
    w1 = w0.copy()
    w1[2] = hover_fz
    u1 = b_inv @ w1
    k = _max_feasible(u1, u0 - u1, u_max)
    if k is not None:
        return MotorCommand(np.clip(u1 + k * (u0 - u1), 0.0, u_max), True, False, 2, k)

    # stage 3: torque
    w2 = np.zeros(6)
    w2[2] = hover_fz
    u2 = b_inv @ w2
    k = _max_feasible(u2, u1 - u2, u_max)
    if k is not None:
        return MotorCommand(np.clip(u2 + k * (u1 - u2), 0.0, u_max), True, True, 3, k)
    return MotorCommand(np.clip(u2, 0.0, u_max), True, True, 3, 0.0)


def _wrench_feasible(b: np.ndarray, b_inv: Optional[np.ndarray], w: np.ndarray,
                     u_max: float) -> bool:
    if b_inv is not None:
        return _in_bounds(b_inv @ w, u_max)
    # singular map: least-squares solution must reproduce the wrench exactly
    u, *_ = np.linalg.lstsq(b, w, rcond=None)
    return bool(np.linalg.norm(b @ u - w) < 1e-9) and _in_bounds(u, u_max)


def max_lateral_thrust(geom: RotorGeometry, u_max: float, direction: Sequence[float],
                       fz: Optional[float] = None, iterations: int = 60) -> float:
    """Largest lateral force along ``direction`` at normal force ``fz`` and zero torque.

    ``fz`` defaults to the half-thrust collective. Found by bisection.
    """
    d = np.asarray(direction, dtype=float).reshape(2)
    if abs(np.linalg.norm(d) - 1.0) > 1e-9:
        raise ValueError("direction must be a unit 2-vector")
    b = wrench_matrix(geom)
    b_inv = None
    if b.shape == (6, 6) and np.linalg.cond(b) < COND_LIMIT:
        b_inv = np.linalg.inv(b)
    if fz is None:
        fz = float(b[2] @ np.full(b.shape[1], 0.5 * u_max))
    if b_inv is None:
        target = np.array([d[0], d[1], 0, 0, 0, 0])
        u, *_ = np.linalg.lstsq(b, target, rcond=None)
        if np.linalg.norm(b @ u - target) > 1e-9:
            return 0.0  # no lateral authority in this direction

    def feasible(c: float) -> bool:
        return _wrench_feasible(b, b_inv, np.array([c * d[0], c * d[1], fz, 0, 0, 0]), u_max)

    if not feasible(0.0):
        return 0.0
    lo, hi = 0.0, b.shape[1] * u_max
    if feasible(hi):
        return hi
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        if feasible(mid):
            lo = mid
        else:
            hi = mid
    return lo


def min_lateral_thrust(geom: RotorGeometry, u_max: float, fz: Optional[float] = None,
                       n_directions: int = 36) -> float:
    """Worst-case lateral capacity over evenly sampled directions."""
    angles = np.arange(n_directions) * (2.0 * math.pi / n_directions)
    return min(max_lateral_thrust(geom, u_max, (math.cos(a), math.sin(a)), fz) for a in angles)


def max_normal_thrust(geom: RotorGeometry, u_max: float) -> float:
    """Largest upward body force with zero lateral force and zero torque."""
    alloc = build_allocation_matrix(geom)
    du = alloc.b_inv @ np.array([0.0, 0.0, -1.0, 0.0, 0.0, 0.0])
    return float(min(u_max / d for d in du if d > 0.0))
