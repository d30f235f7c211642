"""Thrust setpoint generation under a lateral force bound.

Terminology: *lateral*/*normal* are the body XY-plane / body-z parts of a
force, *horizontal*/*vertical* the inertial XY-plane / inertial-z parts.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .frames import FrameId, FrameVector, Rotation

_EPS_LATERAL = 1e-9


class ThrustStrategy(enum.Enum):
    PASSTHROUGH = "passthrough"
    KEEP_VERTICAL = "keep_vertical"
    KEEP_ACCEL_DIRECTION = "keep_accel_direction"


class Feasibility(enum.Enum):
    CASE1 = 1
    CASE2 = 2


@dataclass(frozen=True)
class ThrustLimits:
    f_lmax: float
    f_hover: float

    def __post_init__(self):
        for name in ("f_lmax", "f_hover"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0.0):
                raise ValueError(f"{name} must be positive and finite, got {v}")


@dataclass(frozen=True)
class ThrustSetpoint:
    """Body-frame force command.

    ``scale`` is the factor applied to the bounded part of the demand (the
    horizontal part for keep-vertical, the above-hover residual for
    keep-accel-direction); ``branch`` names the path taken.
    """
    f_sp_body: FrameVector
    saturated: bool
    vertical_preserved: bool
    lateral_norm: float
    scale: float = 1.0
    branch: str = "passthrough"


def decompose_thrust(f: FrameVector) -> Tuple[np.ndarray, float]:
    """Split into the XY-plane part and the z part of its own frame.

    For a body vector this is (lateral, normal), for an inertial vector
    (horizontal, vertical).
    """
    return f.vec[:2].copy(), float(f.vec[2])


def _lat(v: np.ndarray) -> float:
    return math.hypot(v[0], v[1])


def _make(v: np.ndarray, saturated: bool, vertical_preserved: bool, scale: float,
          branch: str) -> ThrustSetpoint:
    return ThrustSetpoint(FrameVector(v, FrameId.BODY), saturated, vertical_preserved,
                          _lat(v), scale, branch)


def _check_rbi(r_bi: Rotation) -> None:
    if r_bi.from_frame is not FrameId.INERTIAL or r_bi.to_frame is not FrameId.BODY:
        raise ValueError("r_bi must map Inertial -> Body")


def _inertial(f: FrameVector) -> np.ndarray:
    if f.frame is not FrameId.INERTIAL:
        raise ValueError(f"desired force must be inertial, got {f.frame.name}")
    return f.vec


def lateral_budget_scale(base: np.ndarray, add: np.ndarray, f_lmax: float) -> float:
    """Largest s in [0, 1] with |lat(base + s*add)| <= f_lmax.

    Assumes |lat(base)| <= f_lmax. Exact on the lateral disc: the positive
    root of |a + s h|^2 = f^2.
    """
    ax, ay = base[0], base[1]
    hx, hy = add[0], add[1]
    hh = hx * hx + hy * hy
    if math.sqrt(hh) < _EPS_LATERAL:
        return 1.0
    ah = ax * hx + ay * hy
    c = min(0.0, ax * ax + ay * ay - f_lmax * f_lmax)
    root = math.sqrt(ah * ah - hh * c)
    # cancellation-free form of (-ah + root) / hh
    s = (-ah + root) / hh if ah <= 0.0 else -c / (ah + root)
    return min(1.0, max(0.0, s))


def classify_feasibility(f_des_inertial: FrameVector, r_bi: Rotation,
                         limits: ThrustLimits) -> Feasibility:
    _check_rbi(r_bi)
    f_b = r_bi.m @ _inertial(f_des_inertial)
    return Feasibility.CASE1 if _lat(f_b) <= limits.f_lmax else Feasibility.CASE2


def thrust_passthrough(f_des_inertial: FrameVector, r_bi: Rotation) -> ThrustSetpoint:
    _check_rbi(r_bi)
    return _make(r_bi.m @ _inertial(f_des_inertial), False, True, 1.0, "passthrough")


def thrust_keep_vertical(f_des_inertial: FrameVector, r_bi: Rotation,
                         limits: ThrustLimits) -> ThrustSetpoint:
    _check_rbi(r_bi)
    f = _inertial(f_des_inertial)
    r = r_bi.m
    f_b = r @ f
    f_lmax = limits.f_lmax
    if _lat(f_b) <= f_lmax:
        return _make(f_b, False, True, 1.0, "case1")

    ver_b = r[:, 2] * f[2]
    hor_b = r[:, 0] * f[0] + r[:, 1] * f[1]
    lat_ver = _lat(ver_b)
    if lat_ver > f_lmax:
        # vertical demand alone exceeds the bound: clamp it, drop the horizontal part
        out = ver_b.copy()
        out[:2] *= f_lmax / lat_ver
        return _make(out, True, False, 0.0, "vertical_infeasible")

    s = lateral_budget_scale(ver_b, hor_b, f_lmax)
    return _make(ver_b + s * hor_b, s < 1.0, True, s, "bounded")


def thrust_keep_accel_direction(f_des_inertial: FrameVector, r_bi: Rotation,
                                limits: ThrustLimits) -> ThrustSetpoint:
    _check_rbi(r_bi)
    f = _inertial(f_des_inertial)
    r = r_bi.m
    f_b = r @ f
    f_lmax = limits.f_lmax
    if _lat(f_b) <= f_lmax:
        return _make(f_b, False, True, 1.0, "case1")

    if -f[2] > limits.f_hover:
        hover_b = r[:, 2] * -limits.f_hover
        lat_hover = _lat(hover_b)
        if lat_hover > f_lmax:
            out = hover_b.copy()
            out[:2] *= f_lmax / lat_hover
            return _make(out, True, False, 0.0, "hover_infeasible")
        resid_b = f_b - hover_b
        s = lateral_budget_scale(hover_b, resid_b, f_lmax)
        return _make(hover_b + s * resid_b, s < 1.0, False, s, "hover_baseline")

    s = f_lmax / _lat(f_b)
    return _make(f_b * s, True, False, s, "below_hover")


def generate_thrust(strategy: ThrustStrategy, f_des_inertial: FrameVector, r_bi: Rotation,
                    limits: ThrustLimits) -> ThrustSetpoint:
    if strategy is ThrustStrategy.PASSTHROUGH:
        return thrust_passthrough(f_des_inertial, r_bi)
    if strategy is ThrustStrategy.KEEP_VERTICAL:
        return thrust_keep_vertical(f_des_inertial, r_bi, limits)
    if strategy is ThrustStrategy.KEEP_ACCEL_DIRECTION:
        return thrust_keep_accel_direction(f_des_inertial, r_bi, limits)
    raise TypeError(f"unknown thrust strategy {strategy!r}")
