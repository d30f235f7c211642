# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled rigid-body integrator. Mirrors ``_kernels_py`` operation for operation."""
from libc.math cimport sqrt

import numpy as np

DEF N_STATE = 19


cdef void _deriv(const double* x, const double* u, const double[:, ::1] B, double mass,
                 const double[:, ::1] J, const double[:, ::1] Ji, double g, double tau_m,
                 const double* fd, const double* td, double* out) noexcept nogil:
    cdef double qw = x[6], qx = x[7], qy = x[8], qz = x[9]
    cdef double wx = x[10], wy = x[11], wz = x[12]
    cdef double w[6]
    cdef double s
    cdef int r, c, i
    for r in range(6):
        s = 0.0
        for c in range(6):
            s += B[r, c] * x[13 + c]
        w[r] = s
    cdef double fbx = w[0], fby = w[1], fbz = w[2]

    cdef double r00 = 1.0 - 2.0 * (qy * qy + qz * qz)
    cdef double r01 = 2.0 * (qx * qy - qw * qz)
    cdef double r02 = 2.0 * (qx * qz + qw * qy)
    cdef double r10 = 2.0 * (qx * qy + qw * qz)
    cdef double r11 = 1.0 - 2.0 * (qx * qx + qz * qz)
    cdef double r12 = 2.0 * (qy * qz - qw * qx)
    cdef double r20 = 2.0 * (qx * qz - qw * qy)
    cdef double r21 = 2.0 * (qy * qz + qw * qx)
    cdef double r22 = 1.0 - 2.0 * (qx * qx + qy * qy)
    out[0] = x[3]
    out[1] = x[4]
    out[2] = x[5]
    out[3] = (r00 * fbx + r01 * fby + r02 * fbz + fd[0]) / mass
    out[4] = (r10 * fbx + r11 * fby + r12 * fbz + fd[1]) / mass
    out[5] = (r20 * fbx + r21 * fby + r22 * fbz + fd[2]) / mass + g

    out[6] = 0.5 * (-qx * wx - qy * wy - qz * wz)
    out[7] = 0.5 * (qw * wx + qy * wz - qz * wy)
    out[8] = 0.5 * (qw * wy - qx * wz + qz * wx)
    out[9] = 0.5 * (qw * wz + qx * wy - qy * wx)

    cdef double hx = J[0, 0] * wx + J[0, 1] * wy + J[0, 2] * wz
    cdef double hy = J[1, 0] * wx + J[1, 1] * wy + J[1, 2] * wz
    cdef double hz = J[2, 0] * wx + J[2, 1] * wy + J[2, 2] * wz
    cdef double mx = w[3] + td[0] - (wy * hz - wz * hy)
    cdef double my = w[4] + td[1] - (wz * hx - wx * hz)
    cdef double mz = w[5] + td[2] - (wx * hy - wy * hx)
    out[10] = Ji[0, 0] * mx + Ji[0, 1] * my + Ji[0, 2] * mz
    out[11] = Ji[1, 0] * mx + Ji[1, 1] * my + Ji[1, 2] * mz
    out[12] = Ji[2, 0] * mx + Ji[2, 1] * my + Ji[2, 2] * mz
    for i in range(6):
        out[13 + i] = (u[i] - x[13 + i]) / tau_m


def rk4_steps(x0, u, B, double mass, J, Ji, double g, double tau_m, f_dist, t_dist,
              double dt, long n_steps):
    """Advance the state ``n_steps`` RK4 steps of ``dt`` with a held motor command."""
    cdef double[::1] xv = np.array(x0, dtype=np.float64).reshape(N_STATE)
    cdef const double[::1] uv = np.ascontiguousarray(u, dtype=np.float64).reshape(6)
    cdef const double[:, ::1] Bv = np.ascontiguousarray(B, dtype=np.float64)
    cdef const double[:, ::1] Jv = np.ascontiguousarray(J, dtype=np.float64)
    cdef const double[:, ::1] Jiv = np.ascontiguousarray(Ji, dtype=np.float64)
    cdef const double[::1] fdv = np.ascontiguousarray(f_dist, dtype=np.float64).reshape(3)
    cdef const double[::1] tdv = np.ascontiguousarray(t_dist, dtype=np.float64).reshape(3)
    cdef double x[N_STATE]
    cdef double tmp[N_STATE]
    cdef double k1[N_STATE]
    cdef double k2[N_STATE]
    cdef double k3[N_STATE]
    cdef double k4[N_STATE]
    cdef double h2 = 0.5 * dt
    cdef double h6 = dt / 6.0
    cdef double n
    cdef long step
    cdef int i
    for i in range(N_STATE):
        x[i] = xv[i]
    with nogil:
        for step in range(n_steps):
            _deriv(x, &uv[0], Bv, mass, Jv, Jiv, g, tau_m, &fdv[0], &tdv[0], k1)
            for i in range(N_STATE):
                tmp[i] = x[i] + h2 * k1[i]
            _deriv(tmp, &uv[0], Bv, mass, Jv, Jiv, g, tau_m, &fdv[0], &tdv[0], k2)
            for i in range(N_STATE):
                tmp[i] = x[i] + h2 * k2[i]
            _deriv(tmp, &uv[0], Bv, mass, Jv, Jiv, g, tau_m, &fdv[0], &tdv[0], k3)
            for i in range(N_STATE):
                tmp[i] = x[i] + dt * k3[i]
            _deriv(tmp, &uv[0], Bv, mass, Jv, Jiv, g, tau_m, &fdv[0], &tdv[0], k4)
            for i in range(N_STATE):
                x[i] = x[i] + h6 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
            n = sqrt(x[6] * x[6] + x[7] * x[7] + x[8] * x[8] + x[9] * x[9])
            for i in range(6, 10):
                x[i] = x[i] / n
    for i in range(N_STATE):
        xv[i] = x[i]
    return np.asarray(xv)
