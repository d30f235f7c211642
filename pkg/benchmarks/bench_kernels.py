"""Compare the compiled and pure-Python RK4 kernels on one simulated second.

Run with: python3 benchmarks/bench_kernels.py [--steps N] [--repeat R]
"""
import argparse
import timeit

import numpy as np

from fullact import _kernels_py
from fullact.vehicle_sim import Disturbance, VehicleParams, trim_hover

try:
    from fullact import _kernels as _kernels_c
except ImportError:
    _kernels_c = None


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--steps", type=int, default=1000)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    p = VehicleParams()
    dist = Disturbance()
    s, cmd, _ = trim_hover(p)
    x = s.to_vector()
    x[10:13] = [0.3, -0.2, 0.5]
    call_args = (x, cmd.thrusts, p.alloc.b, p.mass, p.inertia, p.inertia_inv, p.gravity,
                 p.motor_tau, dist.force.vec, dist.torque, 0.001, args.steps)

    backends = {"python": _kernels_py.rk4_steps}
    if _kernels_c is not None:
        backends["cython"] = _kernels_c.rk4_steps
    else:
        print("compiled kernel not built; timing the Python fallback only")

    best = {}
    for name, fn in backends.items():
        best[name] = min(timeit.repeat(lambda: fn(*call_args), number=1, repeat=args.repeat))
        print(f"{name:7s} {args.steps} steps: {1e3 * best[name]:9.3f} ms "
              f"({1e6 * best[name] / args.steps:.2f} us/step)")
    if len(best) == 2:
        same = np.array_equal(backends["python"](*call_args), backends["cython"](*call_args))
        print(f"speedup {best['python'] / best['cython']:.1f}x, results bit-identical: {same}")


if __name__ == "__main__":
    main()
