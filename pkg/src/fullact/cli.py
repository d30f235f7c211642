"""Command-line entry point: ``fullact run|compare|check|fmax <config>``.

``<config>`` is a TOML file path or the name of a built-in scenario
(``fullact check --list`` prints them). Exit codes: 0 ok, 1 invariant
violation or missed waypoint, 2 config error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import sys
from typing import List, Optional

from .allocation import max_lateral_thrust, max_normal_thrust, min_lateral_thrust
from .scenario import (EXIT_CONFIG, EXIT_OK, ConfigError, builtin_names,
                       compare_strategies, load_config, run_scenario)


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fullact", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, help_):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("config", nargs="?", help="TOML file or built-in scenario name")
        sp.add_argument("--override", "-O", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config value, e.g. thrust.strategy=\"keep_vertical\"")
        return sp

    run = add("run", "simulate a scenario and write CSV telemetry")
    run.add_argument("--out", help="CSV path (default: scenario.output)")
    cmp_ = add("compare", "fly the scenario with all five attitude strategies")
    cmp_.add_argument("--out", help="comparison CSV path")
    cmp_.add_argument("--jobs", "-j", type=int, default=1, help="parallel worker processes")
    chk = add("check", "parse and validate a config only")
    chk.add_argument("--list", action="store_true", help="list built-in scenarios")
    add("fmax", "print the lateral thrust bound derived from the vehicle")
    return p


def _cmd_run(args) -> int:
    cfg = load_config(args.config, args.override)
    s = run_scenario(cfg, args.out)
    print(f"{s.name}: final_error={s.final_error:.4f} m  max_tilt={s.max_tilt:.2f} deg  "
          f"rows={s.rows_written}  waypoints={s.waypoints_reached}/{len(cfg.waypoints)}  "
          f"-> {s.output_path}")
    for v in s.violations[:20]:
        print(f"violation: {v}", file=sys.stderr)
    if len(s.violations) > 20:
        print(f"... {len(s.violations) - 20} more violations", file=sys.stderr)
    return s.exit_code


def _cmd_compare(args) -> int:
    cfg = load_config(args.config, args.override)
    table = compare_strategies(cfg, output_path=args.out, jobs=max(1, args.jobs))
    print(f"{'strategy':<16}{'max_tilt':>10}{'rms_err':>10}{'energy':>12}{'final':>10}  exit")
    for r in table:
        print(f"{r['strategy']:<16}{r['max_tilt_deg']:>10.3f}{r['rms_position_error']:>10.4f}"
              f"{r['energy_proxy']:>12.1f}{r['final_error']:>10.4f}  {r['exit_code']}")
    return max((r["exit_code"] for r in table), default=EXIT_OK)


def _cmd_check(args) -> int:
    if args.list:
        print("\n".join(builtin_names()))
        return EXIT_OK
    cfg = load_config(args.config, args.override)
    strategy = type(cfg.attitude_strategy).__name__
    print(f"{cfg.name}: ok ({len(cfg.waypoints)} waypoints, {cfg.duration:g} s, "
          f"attitude={strategy}, thrust={cfg.thrust_strategy.value}, "
          f"f_lmax={cfg.limits.f_lmax:.4f} N, f_hover={cfg.limits.f_hover:.4f} N)")
    return EXIT_OK


def _cmd_fmax(args) -> int:
    cfg = load_config(args.config, args.override)
    v = cfg.vehicle
    fz = -v.hover_force
    fx = max_lateral_thrust(v.geom, v.u_max, (1.0, 0.0), fz)
    fy = max_lateral_thrust(v.geom, v.u_max, (0.0, 1.0), fz)
    worst = min_lateral_thrust(v.geom, v.u_max, fz)
    print(f"lateral capacity at hover: x {fx:.4f} N, y {fy:.4f} N, worst of 36 {worst:.4f} N")
    print(f"normal capacity: {max_normal_thrust(v.geom, v.u_max):.4f} N")
    print(f"configured f_lmax: {cfg.limits.f_lmax:.6f} N")
    return EXIT_OK


_COMMANDS = {"run": _cmd_run, "compare": _cmd_compare, "check": _cmd_check, "fmax": _cmd_fmax}


def main(argv: Optional[List[str]] = None) -> int:
    args = _parser().parse_args(argv)
    if args.config is None and not getattr(args, "list", False):
        print("fullact: error: a config file or built-in scenario name is required",
              file=sys.stderr)
        return EXIT_CONFIG
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"fullact: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"fullact: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
