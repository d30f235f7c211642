"""Scenario configs, the closed-loop runner and CSV telemetry.

Config files are TOML. Angles are given in degrees (keys ending in ``_deg``)
and converted to radians on load; everything else is SI. Unknown keys are
rejected. See ``scenarios/`` for the built-in files and README.md for the
full schema.
"""
from __future__ import annotations

import copy
import csv
import io
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .allocation import hexarotor
from .attitude_gen import (AttitudeStrategy, FixedAttitude, FixedTilt, FullTilt, MinimumTilt,
                           ZeroTilt)
from .controller import CascadeController, ControllerGains, Waypoint, configured_f_lmax
from .frames import (FrameId, FrameVector, GimbalLock, euler_from_rotation, orthonormality_defect,
                     tilt_angle)
from .thrust_gen import ThrustLimits, ThrustStrategy
from .vehicle_sim import Disturbance, NumericalBlowup, SimState, VehicleParams, integrate, trim_hover

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

LATERAL_TOL = 1e-9
ORTHO_TOL = 1e-9


class ConfigError(ValueError):
    pass


class ParseError(ConfigError):
    pass


class ValidationError(ConfigError):
    pass


ATTITUDE_NAMES = ("zero_tilt", "full_tilt", "minimum_tilt", "fixed_tilt", "fixed_attitude")

_SCHEMA: Dict[str, Any] = {
    "scenario": {"name", "duration", "dt_plant", "dt_control", "seed", "output"},
    "vehicle": {"mass", "inertia", "arm_length", "tilt_deg", "k_f", "k_m", "u_max",
                "motor_tau", "gravity"},
    "gains": {"pos_p", "vel_p", "vel_i", "vel_d", "att_p", "rate_p", "rate_i", "rate_d",
              "vel_max_xy", "vel_max_z", "acc_max_xy", "acc_max_z", "vel_i_limit",
              "rate_max_deg", "rate_i_limit"},
    "limits": {"f_lmax", "f_hover", "f_lmax_safety"},
    "attitude": {"strategy", "tilt_deg", "tilt_direction_deg", "roll_deg", "pitch_deg"},
    "thrust": {"strategy"},
    "waypoints": {"x", "y", "z", "yaw_deg", "hold_time", "capture_radius"},
    "disturbance": {"force", "torque"},
}


@dataclass(frozen=True, eq=False)
class ScenarioConfig:
    vehicle: VehicleParams
    gains: ControllerGains
    limits: ThrustLimits
    attitude_strategy: AttitudeStrategy
    thrust_strategy: ThrustStrategy
    waypoints: List[Waypoint]
    disturbance: Disturbance = field(default_factory=Disturbance)
    duration: float = 30.0
    dt_plant: float = 0.001
    dt_control: float = 0.004
    seed: int = 0
    output_path: str = "telemetry.csv"
    name: str = "scenario"

    @property
    def substeps(self) -> int:
        return int(round(self.dt_control / self.dt_plant))


@dataclass
class ScenarioSummary:
    name: str
    final_error: float
    max_tilt: float                 # deg
    rows_written: int
    violations: List[str]
    waypoints_reached: int
    rms_error: float
    energy_proxy: float
    exit_code: int
    output_path: Optional[str] = None


TELEMETRY_COLUMNS = (
    ["t", "x", "y", "z", "vx", "vy", "vz", "roll", "pitch", "yaw", "tilt", "tilt_dir",
     "sp_roll", "sp_pitch", "sp_yaw", "sp_tilt", "sp_tilt_dir",
     "fdes_x", "fdes_y", "fdes_z", "fsp_x", "fsp_y", "fsp_z", "lateral_norm", "saturated",
     "alloc_stage", "waypoint"]
    + [f"u{i + 1}" for i in range(6)]
)


# ---------------------------------------------------------------- parsing

def _float(v, path: str) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ValidationError(f"{path}: expected a number, got {v!r}")
    v = float(v)
    if not math.isfinite(v):
        raise ValidationError(f"{path}: must be finite")
    return v


def _positive(v, path: str) -> float:
    v = _float(v, path)
    if v <= 0:
        raise ValidationError(f"{path}: must be positive, got {v}")
    return v


def _vector(v, path: str, n: int = 3) -> np.ndarray:
    if not isinstance(v, list) or len(v) != n:
        raise ValidationError(f"{path}: expected a list of {n} numbers")
    return np.array([_float(x, f"{path}[{i}]") for i, x in enumerate(v)])


def _check_keys(table: dict, allowed: set, path: str) -> None:
    if not isinstance(table, dict):
        raise ValidationError(f"{path}: expected a table")
    unknown = sorted(set(table) - allowed)
    if unknown:
        raise ValidationError(f"{path}: unknown key(s) {', '.join(unknown)}")


def _vehicle(t: dict) -> VehicleParams:
    _check_keys(t, _SCHEMA["vehicle"], "vehicle")
    defaults = VehicleParams()
    kw: Dict[str, Any] = {}
    if "mass" in t:
        kw["mass"] = _positive(t["mass"], "vehicle.mass")
    if "inertia" in t:
        raw = t["inertia"]
        if isinstance(raw, list) and len(raw) == 3 and all(isinstance(r, list) for r in raw):
            kw["inertia"] = np.array([_vector(r, f"vehicle.inertia[{i}]") for i, r in enumerate(raw)])
        else:
            kw["inertia"] = np.diag(_vector(raw, "vehicle.inertia"))
    for key in ("u_max", "motor_tau", "gravity"):
        if key in t:
            kw[key] = _positive(t[key], f"vehicle.{key}")
    arm = _positive(t.get("arm_length", 0.48), "vehicle.arm_length")
    tilt = math.radians(_float(t.get("tilt_deg", 30.0), "vehicle.tilt_deg"))
    k_f = _positive(t.get("k_f", defaults.geom.k_f), "vehicle.k_f")
    k_m = _positive(t.get("k_m", defaults.geom.k_m), "vehicle.k_m")
    kw["geom"] = hexarotor(arm, tilt, k_f, k_m)
    try:
        params = VehicleParams(**kw)
        params.alloc  # noqa: B018 -- validates the geometry
    except ValueError as exc:
        raise ValidationError(f"vehicle: {exc}") from exc
    return params


def _gains(t: dict) -> ControllerGains:
    _check_keys(t, _SCHEMA["gains"], "gains")
    kw: Dict[str, Any] = {}
    for key, v in t.items():
        path = f"gains.{key}"
        if key == "rate_max_deg":
            kw["rate_max"] = np.radians(_vector(v, path))
        elif key in ("vel_max_xy", "vel_max_z", "acc_max_xy", "acc_max_z", "vel_i_limit",
                     "rate_i_limit"):
            kw[key] = _positive(v, path)
        else:
            kw[key] = _vector(v, path)
    try:
        return ControllerGains(**kw)
    except ValueError as exc:
        raise ValidationError(f"gains: {exc}") from exc


def _limits(t: dict, vehicle: VehicleParams) -> ThrustLimits:
    _check_keys(t, _SCHEMA["limits"], "limits")
    safety = _positive(t.get("f_lmax_safety", 0.9), "limits.f_lmax_safety")
    f_lmax = t.get("f_lmax", "auto")
    if f_lmax == "auto":
        f_lmax = configured_f_lmax(vehicle, safety)
    else:
        f_lmax = _positive(f_lmax, "limits.f_lmax")
    f_hover = t.get("f_hover", "auto")
    f_hover = vehicle.hover_force if f_hover == "auto" else _positive(f_hover, "limits.f_hover")
    if not f_lmax > 0:
        raise ValidationError("limits.f_lmax: vehicle has no lateral authority")
    return ThrustLimits(f_lmax, f_hover)


def attitude_strategy_from(t: dict, limits: ThrustLimits) -> AttitudeStrategy:
    _check_keys(t, _SCHEMA["attitude"], "attitude")
    name = t.get("strategy", "zero_tilt")
    try:
        if name == "zero_tilt":
            return ZeroTilt()
        if name == "full_tilt":
            return FullTilt()
        if name == "minimum_tilt":
            return MinimumTilt(limits.f_lmax)
        if name == "fixed_tilt":
            return FixedTilt(math.radians(_float(t.get("tilt_deg", 0.0), "attitude.tilt_deg")),
                             math.radians(_float(t.get("tilt_direction_deg", 0.0),
                                                 "attitude.tilt_direction_deg")))
        if name == "fixed_attitude":
            return FixedAttitude(math.radians(_float(t.get("roll_deg", 0.0), "attitude.roll_deg")),
                                 math.radians(_float(t.get("pitch_deg", 0.0), "attitude.pitch_deg")))
    except ValueError as exc:
        if isinstance(exc, ValidationError):
            raise
        raise ValidationError(f"attitude: {exc}") from exc
    raise ValidationError(f"attitude.strategy: unknown strategy {name!r} "
                          f"(expected one of {', '.join(ATTITUDE_NAMES)})")


def _thrust(t: dict) -> ThrustStrategy:
    _check_keys(t, _SCHEMA["thrust"], "thrust")
    name = t.get("strategy", "keep_vertical")
    try:
        return ThrustStrategy(name)
    except ValueError:
        choices = ", ".join(s.value for s in ThrustStrategy)
        raise ValidationError(f"thrust.strategy: unknown strategy {name!r} (expected {choices})")


def _waypoints(items) -> List[Waypoint]:
    if not isinstance(items, list) or not items:
        raise ValidationError("waypoints: at least one waypoint is required")
    out = []
    for i, w in enumerate(items):
        path = f"waypoints[{i}]"
        _check_keys(w, _SCHEMA["waypoints"], path)
        for key in ("x", "y", "z"):
            if key not in w:
                raise ValidationError(f"{path}.{key}: missing")
        try:
            out.append(Waypoint(
                _float(w["x"], f"{path}.x"), _float(w["y"], f"{path}.y"),
                _float(w["z"], f"{path}.z"),
                math.radians(_float(w.get("yaw_deg", 0.0), f"{path}.yaw_deg")),
                _float(w.get("hold_time", 0.0), f"{path}.hold_time"),
                _float(w.get("capture_radius", 0.1), f"{path}.capture_radius")))
        except ValueError as exc:
            if isinstance(exc, ValidationError):
                raise
            raise ValidationError(f"{path}: {exc}") from exc
    return out


def _disturbance(t: dict) -> Disturbance:
    _check_keys(t, _SCHEMA["disturbance"], "disturbance")
    force = _vector(t.get("force", [0.0, 0.0, 0.0]), "disturbance.force")
    torque = _vector(t.get("torque", [0.0, 0.0, 0.0]), "disturbance.torque")
    return Disturbance(FrameVector(force, FrameId.INERTIAL), torque)


def config_from_dict(doc: dict) -> ScenarioConfig:
    _check_keys(doc, set(_SCHEMA), "")
    sc = doc.get("scenario", {})
    _check_keys(sc, _SCHEMA["scenario"], "scenario")
    vehicle = _vehicle(doc.get("vehicle", {}))
    limits = _limits(doc.get("limits", {}), vehicle)
    duration = _positive(sc.get("duration", 30.0), "scenario.duration")
    dt_plant = _positive(sc.get("dt_plant", 0.001), "scenario.dt_plant")
    dt_control = _positive(sc.get("dt_control", 0.004), "scenario.dt_control")
    if dt_plant > 0.01:
        raise ValidationError("scenario.dt_plant: must not exceed 0.01 s")
    ratio = dt_control / dt_plant
    if ratio < 1 - 1e-9 or abs(ratio - round(ratio)) > 1e-9:
        raise ValidationError("scenario.dt_control: must be an integer multiple of dt_plant")
    seed = sc.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int):
        raise ValidationError("scenario.seed: expected an integer")
    name = str(sc.get("name", "scenario"))
    return ScenarioConfig(
        vehicle=vehicle,
        gains=_gains(doc.get("gains", {})),
        limits=limits,
        attitude_strategy=attitude_strategy_from(doc.get("attitude", {}), limits),
        thrust_strategy=_thrust(doc.get("thrust", {})),
        waypoints=_waypoints(doc.get("waypoints", [])),
        disturbance=_disturbance(doc.get("disturbance", {})),
        duration=duration, dt_plant=dt_plant, dt_control=dt_control, seed=seed,
        output_path=str(sc.get("output", f"{name}.csv")), name=name,
    )


def load_document(text: str) -> dict:
    try:
        return tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ParseError(f"config syntax error: {exc}") from exc


def apply_overrides(doc: dict, overrides: Sequence[str]) -> dict:
    """Apply ``dotted.key=value`` overrides; values are parsed as TOML literals."""
    doc = copy.deepcopy(doc)
    for item in overrides:
        if "=" not in item:
            raise ParseError(f"override {item!r}: expected key=value")
        key, raw = item.split("=", 1)
        try:
            value = tomllib.loads(f"v = {raw}")["v"]
        except tomllib.TOMLDecodeError:
            value = raw
        parts = key.strip().split(".")
        try:
            node: Any = doc
            for part in parts[:-1]:
                node = node[int(part)] if isinstance(node, list) else node.setdefault(part, {})
            last = parts[-1]
            if isinstance(node, list):
                node[int(last)] = value
            else:
                node[last] = value
        except (IndexError, ValueError, TypeError, AttributeError) as exc:
            raise ParseError(f"override {item!r}: bad key path ({exc})") from exc
    return doc


def parse_config(text: str, overrides: Sequence[str] = ()) -> ScenarioConfig:
    doc = load_document(text)
    if overrides:
        doc = apply_overrides(doc, overrides)
    return config_from_dict(doc)


def builtin_names() -> List[str]:
    files = resources.files("fullact").joinpath("scenarios")
    return sorted(p.name[:-5] for p in files.iterdir() if p.name.endswith(".toml"))


def read_config_text(ref: str) -> str:
    """Read a config file path, or a built-in scenario by name."""
    path = Path(ref)
    if path.is_file():
        return path.read_text()
    res = resources.files("fullact").joinpath("scenarios").joinpath(f"{ref}.toml")
    if res.is_file():
        return res.read_text()
    raise ConfigError(f"no config file or built-in scenario named {ref!r}")


def load_config(ref: str, overrides: Sequence[str] = ()) -> ScenarioConfig:
    return parse_config(read_config_text(ref), overrides)


# ---------------------------------------------------------------- running

def _tilt_dir_deg(m_attitude: np.ndarray) -> float:
    kx, ky = m_attitude[0, 2], m_attitude[1, 2]
    if math.hypot(kx, ky) < 1e-12:
        return 0.0
    return math.degrees(math.atan2(ky, kx))


def _euler_deg(rot) -> tuple:
    try:
        e = euler_from_rotation(rot)
    except GimbalLock:
        return (float("nan"),) * 3
    return tuple(math.degrees(a) for a in e)


def simulate(cfg: ScenarioConfig, writer=None) -> ScenarioSummary:
    """Run the closed loop; rows go to ``writer`` (a ``csv.writer``) when given."""
    params = cfg.vehicle
    ctrl = CascadeController(params, cfg.gains, cfg.limits, cfg.attitude_strategy,
                             cfg.thrust_strategy)
    trim, _, _ = trim_hover(params)
    x = trim.to_vector()
    dt = cfg.dt_control
    n_sub = cfg.substeps
    n_steps = int(round(cfg.duration / dt))
    bounding = cfg.thrust_strategy is not ThrustStrategy.PASSTHROUGH
    f_lmax = cfg.limits.f_lmax

    wp_idx = 0
    hold = 0.0
    reached = 0
    violations: List[str] = []
    max_tilt = 0.0
    sq_err = 0.0
    energy = 0.0
    rows = 0
    last = len(cfg.waypoints) - 1

    for k in range(n_steps):
        t = k * dt
        state = SimState.from_vector(x, t)
        pos = state.position.vec
        wp = cfg.waypoints[wp_idx]
        err = float(np.linalg.norm(pos - wp.position))
        if err < wp.capture_radius:
            hold += dt
            if hold >= wp.hold_time - 1e-12 and reached <= wp_idx:
                reached = wp_idx + 1
                if wp_idx < last:
                    wp_idx += 1
                    hold = 0.0
                    wp = cfg.waypoints[wp_idx]
                    err = float(np.linalg.norm(pos - wp.position))
        else:
            hold = 0.0
        sq_err += err * err

        out = ctrl.control_step(state, wp, dt)
        u = out.motor_cmd.thrusts
        energy += float(u @ u) * dt

        att = state.attitude
        defect = orthonormality_defect(att.m)
        if defect >= ORTHO_TOL:
            violations.append(f"t={t:.3f}: attitude orthonormality defect {defect:.3g}")
        lat = out.f_sp_body.lateral_norm
        if bounding and lat > f_lmax + LATERAL_TOL:
            violations.append(f"t={t:.3f}: lateral thrust {lat:.9g} exceeds {f_lmax:.9g}")
        tilt = math.degrees(tilt_angle(att))
        max_tilt = max(max_tilt, tilt)

        if writer is not None:
            sp = out.attitude_sp.r_is
            writer.writerow(
                [t, *pos, *state.velocity.vec, *_euler_deg(att), tilt, _tilt_dir_deg(att.m),
                 *_euler_deg(sp), math.degrees(tilt_angle(sp)), _tilt_dir_deg(sp.m),
                 *out.f_des_inertial.vec, *out.f_sp_body.f_sp_body.vec, lat,
                 int(out.f_sp_body.saturated), out.motor_cmd.stage, wp_idx, *u])
            rows += 1

        x = integrate(x, u, params, cfg.disturbance, cfg.dt_plant, n_sub)

    final_pos = x[0:3]
    final_wp = cfg.waypoints[-1]
    final_error = float(np.linalg.norm(final_pos - final_wp.position))
    if final_error < final_wp.capture_radius and reached == last:
        reached = last + 1
    ok = not violations and final_error < final_wp.capture_radius and reached == last + 1
    return ScenarioSummary(cfg.name, final_error, max_tilt, rows, violations, reached,
                           math.sqrt(sq_err / max(1, n_steps)), energy,
                           EXIT_OK if ok else EXIT_VIOLATION)


def run_scenario(cfg: ScenarioConfig, output_path: Optional[str] = None) -> ScenarioSummary:
    """Run ``cfg`` and write its telemetry CSV. Numerical blow-up yields exit code 3."""
    path = Path(output_path or cfg.output_path)
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TELEMETRY_COLUMNS)
        try:
            summary = simulate(cfg, writer)
        except NumericalBlowup as exc:
            return ScenarioSummary(cfg.name, float("inf"), float("nan"), 0, [str(exc)], 0,
                                   float("inf"), float("inf"), EXIT_NUMERICAL, str(path))
    summary.output_path = str(path)
    return summary


def read_telemetry(path) -> Dict[str, np.ndarray]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        data = np.array([[float(v) for v in row] for row in reader])
    return {name: data[:, i] for i, name in enumerate(header)}


# ---------------------------------------------------------------- comparison

COMPARE_COLUMNS = ["strategy", "max_tilt_deg", "rms_position_error", "energy_proxy",
                   "final_error", "waypoints_reached", "exit_code"]


def default_strategy_set(limits: ThrustLimits, base: Optional[AttitudeStrategy] = None) -> Dict[str, AttitudeStrategy]:
    """The five attitude strategies; fixed-tilt/attitude parameters come from ``base`` when it is one."""
    fixed_tilt = base if isinstance(base, FixedTilt) else FixedTilt(math.radians(7.5), 0.0)
    fixed_att = base if isinstance(base, FixedAttitude) else FixedAttitude(math.radians(5.0), 0.0)
    return {
        "zero_tilt": ZeroTilt(),
        "full_tilt": FullTilt(),
        "minimum_tilt": MinimumTilt(limits.f_lmax),
        "fixed_tilt": fixed_tilt,
        "fixed_attitude": fixed_att,
    }


def _simulate_quiet(cfg: ScenarioConfig) -> ScenarioSummary:
    try:
        return simulate(cfg)
    except NumericalBlowup as exc:
        return ScenarioSummary(cfg.name, float("inf"), float("nan"), 0, [str(exc)], 0,
                               float("inf"), float("inf"), EXIT_NUMERICAL)


def compare_strategies(cfg_base: ScenarioConfig, strategies: Optional[Dict[str, AttitudeStrategy]] = None,
                       output_path: Optional[str] = None, jobs: int = 1) -> List[dict]:
    """Fly the same mission with every attitude strategy and tabulate the results."""
    if strategies is None:
        strategies = default_strategy_set(cfg_base.limits, cfg_base.attitude_strategy)
    cfgs = [replace(cfg_base, attitude_strategy=s, name=name) for name, s in strategies.items()]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            summaries = list(pool.map(_simulate_quiet, cfgs))
    else:
        summaries = [_simulate_quiet(c) for c in cfgs]
    table = [{
        "strategy": s.name,
        "max_tilt_deg": s.max_tilt,
        "rms_position_error": s.rms_error,
        "energy_proxy": s.energy_proxy,
        "final_error": s.final_error,
        "waypoints_reached": s.waypoints_reached,
        "exit_code": s.exit_code,
    } for s in summaries]
    if output_path is not None:
        buf = io.StringIO()
        w = csv.DictWriter(buf, COMPARE_COLUMNS, lineterminator="\n")
        w.writeheader()
        w.writerows(table)
        Path(output_path).write_text(buf.getvalue())
    return table
