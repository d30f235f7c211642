"""Pure-Python rigid-body integrator, used when the compiled kernel is unavailable.

Must stay numerically in step with ``_kernels.pyx``: same state layout,
same operation order.

State layout (19 doubles): position NED (3), velocity NED (3), quaternion
body->inertial [w, x, y, z] (4), body rates (3), rotor thrusts (6).
"""
import math

import numpy as np

N_STATE = 19


def _deriv(x, u, B, mass, J, Ji, g, tau_m, fd, td):
    qw, qx, qy, qz = x[6], x[7], x[8], x[9]
    wx, wy, wz = x[10], x[11], x[12]
    m = x[13:19]

    w = [0.0] * 6
    for r in range(6):
        row = B[r]
        s = 0.0
        for c in range(6):
            s += row[c] * m[c]
        w[r] = s
    fbx, fby, fbz = w[0], w[1], w[2]

    # R(q) @ f_body
    r00 = 1.0 - 2.0 * (qy * qy + qz * qz)
    r01 = 2.0 * (qx * qy - qw * qz)
    r02 = 2.0 * (qx * qz + qw * qy)
    r10 = 2.0 * (qx * qy + qw * qz)
    r11 = 1.0 - 2.0 * (qx * qx + qz * qz)
    r12 = 2.0 * (qy * qz - qw * qx)
    r20 = 2.0 * (qx * qz - qw * qy)
    r21 = 2.0 * (qy * qz + qw * qx)
    r22 = 1.0 - 2.0 * (qx * qx + qy * qy)
    ax = (r00 * fbx + r01 * fby + r02 * fbz + fd[0]) / mass
    ay = (r10 * fbx + r11 * fby + r12 * fbz + fd[1]) / mass
    az = (r20 * fbx + r21 * fby + r22 * fbz + fd[2]) / mass + g

    dqw = 0.5 * (-qx * wx - qy * wy - qz * wz)
    dqx = 0.5 * (qw * wx + qy * wz - qz * wy)
    dqy = 0.5 * (qw * wy - qx * wz + qz * wx)
    dqz = 0.5 * (qw * wz + qx * wy - qy * wx)

    hx = J[0][0] * wx + J[0][1] * wy + J[0][2] * wz
    hy = J[1][0] * wx + J[1][1] * wy + J[1][2] * wz
    hz = J[2][0] * wx + J[2][1] * wy + J[2][2] * wz
    mx = w[3] + td[0] - (wy * hz - wz * hy)
    my = w[4] + td[1] - (wz * hx - wx * hz)
    mz = w[5] + td[2] - (wx * hy - wy * hx)
    dwx = Ji[0][0] * mx + Ji[0][1] * my + Ji[0][2] * mz
    dwy = Ji[1][0] * mx + Ji[1][1] * my + Ji[1][2] * mz
    dwz = Ji[2][0] * mx + Ji[2][1] * my + Ji[2][2] * mz

    out = [x[3], x[4], x[5], ax, ay, az, dqw, dqx, dqy, dqz, dwx, dwy, dwz]
    for i in range(6):
        out.append((u[i] - m[i]) / tau_m)
    return out


def rk4_steps(x0, u, B, mass, J, Ji, g, tau_m, f_dist, t_dist, dt, n_steps):
    """Advance the state ``n_steps`` RK4 steps of ``dt`` with a held motor command."""
    x = [float(v) for v in x0]
    u = [float(v) for v in u]
    B = np.asarray(B, dtype=float).tolist()
    J = np.asarray(J, dtype=float).tolist()
    Ji = np.asarray(Ji, dtype=float).tolist()
    fd = [float(v) for v in f_dist]
    td = [float(v) for v in t_dist]
    h2 = 0.5 * dt
    h6 = dt / 6.0
    args = (u, B, mass, J, Ji, g, tau_m, fd, td)
    for _ in range(n_steps):
        k1 = _deriv(x, *args)
        k2 = _deriv([x[i] + h2 * k1[i] for i in range(N_STATE)], *args)
        k3 = _deriv([x[i] + h2 * k2[i] for i in range(N_STATE)], *args)
        k4 = _deriv([x[i] + dt * k3[i] for i in range(N_STATE)], *args)
        x = [x[i] + h6 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) for i in range(N_STATE)]
        n = math.sqrt(x[6] * x[6] + x[7] * x[7] + x[8] * x[8] + x[9] * x[9])
        for i in range(6, 10):
            x[i] /= n
    return np.array(x)
