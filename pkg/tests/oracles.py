"""Independent reference computations used only by the tests.

These avoid the package's own helpers on purpose: rotations go through
quaternions, feasibility through brute-force search or a linear program.
"""
import math

import numpy as np


def quat_about(axis, angle):
    axis = np.asarray(axis, float)
    axis = axis / np.linalg.norm(axis)
    return np.concatenate(([math.cos(angle / 2)], math.sin(angle / 2) * axis))


def quat_mul(a, b):
    w1, x1, y1, z1 = a
    w2, x2, y2, z2 = b
    return np.array([
        w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
        w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
        w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
        w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
    ])


def quat_rotate(v, axis, angle):
    q = quat_about(axis, angle)
    qc = q * np.array([1, -1, -1, -1])
    return quat_mul(quat_mul(q, np.concatenate(([0.0], v))), qc)[1:]


def rot_x(a):
    c, s = math.cos(a), math.sin(a)
    return np.array([[1, 0, 0], [0, c, -s], [0, s, c]])


def rot_y(a):
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, 0, s], [0, 1, 0], [-s, 0, c]])


def rot_z(a):
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, -s, 0], [s, c, 0], [0, 0, 1]])


def zyx(roll, pitch, yaw):
    """Body -> inertial for intrinsic yaw, pitch, roll, as a product of elementary rotations."""
    return rot_z(yaw) @ rot_y(pitch) @ rot_x(roll)


def random_rotation(rng, max_tilt=None):
    """Uniform-ish random attitude; optionally with tilt below ``max_tilt`` rad."""
    while True:
        q = rng.normal(size=4)
        q /= np.linalg.norm(q)
        w, x, y, z = q
        m = np.array([
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ])
        if max_tilt is None or math.acos(min(1.0, m[2, 2])) < max_tilt:
            return m


def small_tilt_rotation(rng, max_tilt):
    """Random yaw times a tilt of at most ``max_tilt`` about a random horizontal axis."""
    yaw = rng.uniform(-math.pi, math.pi)
    tilt = rng.uniform(0.0, max_tilt)
    az = rng.uniform(-math.pi, math.pi)
    axis = np.array([math.cos(az), math.sin(az), 0.0])
    k = np.array([[0, -axis[2], axis[1]], [axis[2], 0, -axis[0]], [-axis[1], axis[0], 0]])
    tilt_m = np.eye(3) + math.sin(tilt) * k + (1 - math.cos(tilt)) * k @ k
    return tilt_m @ rot_z(yaw)


def keep_vertical_scale_bisection(ver_b, hor_b, f_lmax, iterations=200):
    """Largest s in [0, 1] with |lat(ver_b + s hor_b)| <= f_lmax, by grid then bisection."""
    def ok(s):
        v = ver_b + s * hor_b
        return math.hypot(v[0], v[1]) <= f_lmax
    if ok(1.0):
        return 1.0
    grid = np.linspace(0.0, 1.0, 1001)
    feas = [s for s in grid if ok(s)]
    lo = max(feas)
    hi = lo + 1e-3
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        if ok(mid):
            lo = mid
        else:
            hi = mid
    return lo


def lateral_capacity_lp(b, u_max, direction, fz):
    """Max lateral force along ``direction`` at normal force ``fz`` and zero torque (LP)."""
    from scipy.optimize import linprog
    d = np.asarray(direction, float)
    n = b.shape[1]
    # variables: u (n), c ; maximise c
    cost = np.zeros(n + 1)
    cost[-1] = -1.0
    a_eq = np.zeros((6, n + 1))
    a_eq[:, :n] = b
    a_eq[0, -1] = -d[0]
    a_eq[1, -1] = -d[1]
    b_eq = np.array([0, 0, fz, 0, 0, 0], float)
    bounds = [(0, u_max)] * n + [(0, None)]
    res = linprog(cost, A_eq=a_eq, b_eq=b_eq, bounds=bounds, method="highs")
    assert res.success
    return float(res.x[-1])


def lateral_capacity_grid(b, u_max, direction, fz, n_samples=4001):
    """Brute force over a dense grid of motor combinations.

    Zero off-axis force, the given normal force and zero torque leave a
    one-dimensional line of motor vectors; it is sampled densely and the
    in-box point with the largest lateral force is kept.
    """
    d = np.asarray(direction, float)
    perp = np.array([-d[1], d[0]])
    # constraint rows: off-axis lateral, normal force, torques
    a = np.vstack((perp @ b[:2], b[2], b[3:]))
    target = np.array([0.0, fz, 0.0, 0.0, 0.0])
    null = np.linalg.svd(a)[2][a.shape[0]:].T
    u_p = np.linalg.lstsq(a, target, rcond=None)[0]
    span = np.linspace(-3 * u_max, 3 * u_max, n_samples)
    best = 0.0
    for z in span:
        u = u_p + null[:, 0] * z
        if np.all(u >= -1e-12) and np.all(u <= u_max + 1e-12):
            best = max(best, float(d @ (b[:2] @ u)))
    return best


def keep_vertical_scale_batch(ver_b, hor_b, f_lmax, iterations=80):
    """Vectorised bisection for many (ver_b, hor_b, f_lmax) rows at once.

    The feasible set of s is an interval [0, s*] because the lateral disc is
    convex and s=0 is feasible, so plain bisection on [0, 1] finds s*.
    """
    ver_b = np.asarray(ver_b)
    hor_b = np.asarray(hor_b)
    f_lmax = np.asarray(f_lmax)

    def ok(s):
        v = ver_b[:, :2] + s[:, None] * hor_b[:, :2]
        return np.hypot(v[:, 0], v[:, 1]) <= f_lmax

    n = len(ver_b)
    lo = np.zeros(n)
    hi = np.ones(n)
    done = ok(hi)
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        good = ok(mid)
        lo = np.where(good, mid, lo)
        hi = np.where(good, hi, mid)
    return np.where(done, 1.0, lo)
