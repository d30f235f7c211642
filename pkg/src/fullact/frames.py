"""Frame conventions and rotation helpers.

Inertial frame is North-East-Down, body and setpoint frames are
Forward-Right-Down. Gravity points along +z inertial, so upward thrust has a
negative z component in every frame.

A :class:`Rotation` maps vectors expressed in ``from_frame`` into
``to_frame`` (``v_to = m @ v_from``). An attitude matrix whose columns are the
body (or setpoint) unit axes written in inertial coordinates therefore has
``from_frame`` = Body/Setpoint and ``to_frame`` = Inertial.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

ORTHO_TOL = 1e-9
_REORTHO_TOL = 1e-12
GIMBAL_TOL = 1e-12


class FrameError(ValueError):
    """Arithmetic attempted between vectors tagged with different frames."""


class GimbalLock(ValueError):
    pass


class NonUnitAxis(ValueError):
    pass


class FrameId(enum.Enum):
    INERTIAL = "inertial"
    BODY = "body"
    SETPOINT = "setpoint"


class FrameVector:
    """A 3-vector tagged with the frame it is expressed in."""

    __slots__ = ("vec", "frame")

    def __init__(self, xyz, frame: FrameId):
        vec = np.array(xyz, dtype=float).reshape(3)
        if not np.all(np.isfinite(vec)):
            raise ValueError(f"non-finite vector components: {vec}")
        self.vec = vec
        self.frame = frame

    @classmethod
    def zero(cls, frame: FrameId) -> FrameVector:
        return cls((0.0, 0.0, 0.0), frame)

    @property
    def x(self) -> float:
        return float(self.vec[0])

    @property
    def y(self) -> float:
        return float(self.vec[1])

    @property
    def z(self) -> float:
        return float(self.vec[2])

    def norm(self) -> float:
        return float(np.linalg.norm(self.vec))

    def _check(self, other: FrameVector) -> None:
        if not isinstance(other, FrameVector):
            raise TypeError(f"expected FrameVector, got {type(other).__name__}")
        if other.frame is not self.frame:
            raise FrameError(f"{self.frame.name} vs {other.frame.name}")

    def __add__(self, other: FrameVector) -> FrameVector:
        self._check(other)
        return FrameVector(self.vec + other.vec, self.frame)

    def __sub__(self, other: FrameVector) -> FrameVector:
        self._check(other)
        return FrameVector(self.vec - other.vec, self.frame)

    def __neg__(self) -> FrameVector:
        return FrameVector(-self.vec, self.frame)

    def __mul__(self, scalar: float) -> FrameVector:
        return FrameVector(self.vec * float(scalar), self.frame)

    __rmul__ = __mul__

    def dot(self, other: FrameVector) -> float:
        self._check(other)
        return float(self.vec @ other.vec)

    def cross(self, other: FrameVector) -> FrameVector:
        self._check(other)
        return FrameVector(np.cross(self.vec, other.vec), self.frame)

    def __eq__(self, other) -> bool:
        if not isinstance(other, FrameVector):
            return NotImplemented
        return self.frame is other.frame and bool(np.array_equal(self.vec, other.vec))

    def __repr__(self) -> str:
        x, y, z = self.vec
        return f"FrameVector([{x:.6g}, {y:.6g}, {z:.6g}], {self.frame.name})"


def orthonormality_defect(m: np.ndarray) -> float:
    return float(np.max(np.abs(m.T @ m - np.eye(3))))


def gram_schmidt(m: np.ndarray) -> np.ndarray:
    """Re-orthonormalize the columns of ``m`` (first column kept in direction)."""
    c0 = m[:, 0] / np.linalg.norm(m[:, 0])
    c1 = m[:, 1] - (c0 @ m[:, 1]) * c0
    c1 /= np.linalg.norm(c1)
    c2 = np.cross(c0, c1)
    return np.column_stack((c0, c1, c2))


@dataclass(frozen=True)
class Rotation:
    m: np.ndarray
    from_frame: FrameId
    to_frame: FrameId

    def __post_init__(self):
        m = np.array(self.m, dtype=float).reshape(3, 3)
        defect = orthonormality_defect(m)
        if defect > _REORTHO_TOL:
            if defect > 1e-3:
                raise ValueError(f"matrix is not a rotation (defect {defect:.3g})")
            m = gram_schmidt(m)
        if abs(np.linalg.det(m) - 1.0) > ORTHO_TOL:
            raise ValueError("rotation matrix must have det +1")
        m.setflags(write=False)
        object.__setattr__(self, "m", m)

    def apply(self, v: FrameVector) -> FrameVector:
        if v.frame is not self.from_frame:
            raise FrameError(f"rotation expects {self.from_frame.name}, got {v.frame.name}")
        return FrameVector(self.m @ v.vec, self.to_frame)

    def inv(self) -> Rotation:
        return Rotation(self.m.T, self.to_frame, self.from_frame)

    @property
    def T(self) -> Rotation:
        return self.inv()

    def column(self, i: int) -> FrameVector:
        return FrameVector(self.m[:, i], self.to_frame)


class EulerAngles(NamedTuple):
    roll: float
    pitch: float
    yaw: float


def wrap_angle(a: float) -> float:
    """Wrap to (-pi, pi]."""
    w = math.remainder(a, 2.0 * math.pi)
    return math.pi if w == -math.pi else w


def euler_matrix(roll: float, pitch: float, yaw: float) -> np.ndarray:
    """Z-Y-X (yaw, pitch, roll) attitude matrix, columns are body axes in inertial."""
    cr, sr = math.cos(roll), math.sin(roll)
    cp, sp = math.cos(pitch), math.sin(pitch)
    cy, sy = math.cos(yaw), math.sin(yaw)
    return np.array([
        [cp * cy, sr * sp * cy - cr * sy, cr * sp * cy + sr * sy],
        [cp * sy, sr * sp * sy + cr * cy, cr * sp * sy - sr * cy],
        [-sp, sr * cp, cr * cp],
    ])


def rotation_from_euler(e: EulerAngles, frame: FrameId = FrameId.SETPOINT) -> Rotation:
    """Attitude rotation ``frame -> Inertial`` from roll/pitch/yaw."""
    roll, pitch, yaw = e
    for a in (roll, pitch, yaw):
        if not math.isfinite(a):
            raise ValueError("euler angles must be finite")
    return Rotation(euler_matrix(roll, pitch, yaw), frame, FrameId.INERTIAL)


def _attitude_matrix(r: Rotation) -> np.ndarray:
    # body/setpoint -> inertial form
    if r.to_frame is FrameId.INERTIAL:
        return r.m
    if r.from_frame is FrameId.INERTIAL:
        return r.m.T
    raise FrameError("rotation must involve the inertial frame")


def euler_from_rotation(r: Rotation) -> EulerAngles:
    m = _attitude_matrix(r)
    if abs(m[2, 0]) >= 1.0 - GIMBAL_TOL:
        raise GimbalLock(f"pitch at +-90 deg (m[2][0]={m[2, 0]:.15g})")
    pitch = -math.asin(m[2, 0])
    roll = math.atan2(m[2, 1], m[2, 2])
    yaw = math.atan2(m[1, 0], m[0, 0])
    return EulerAngles(wrap_angle(roll), pitch, wrap_angle(yaw))


def rodrigues(v: np.ndarray, axis: np.ndarray, angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return (1.0 - c) * float(axis @ v) * axis + v * c + np.cross(axis, v) * s


def rodrigues_rotate(v: FrameVector, axis: FrameVector, angle: float) -> FrameVector:
    """Rotate ``v`` about the unit ``axis`` by ``angle`` (right-hand rule)."""
    if v.frame is not axis.frame:
        raise FrameError(f"{v.frame.name} vs {axis.frame.name}")
    if abs(axis.norm() - 1.0) > 1e-9:
        raise NonUnitAxis(f"axis norm {axis.norm():.12g}")
    return FrameVector(rodrigues(v.vec, axis.vec, angle), v.frame)


def tilt_angle(r: Rotation) -> float:
    """Angle between the rotated z axis and the inertial z axis, in [0, pi].

    Same value as acos(m[2][2]) but evaluated with atan2, which stays accurate
    for tilts near zero where acos loses half the digits.
    """
    m = _attitude_matrix(r)
    return math.atan2(math.hypot(m[0, 2], m[1, 2]), m[2, 2])


def tilt_direction(r: Rotation) -> np.ndarray:
    """Horizontal (north, east) projection of the rotated z axis."""
    return _attitude_matrix(r)[:2, 2].copy()
