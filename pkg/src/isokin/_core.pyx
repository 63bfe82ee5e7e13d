# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled integration kernels.

Same algorithms as isokin._kernels_py: coupled RK4 on (R, t[, omega]) with a
two-iteration Newton polar projection after every step.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


cdef void _mul_hat(double[3][3] r, double[3] w, double[3][3] out) noexcept nogil:
    cdef int i
    for i in range(3):
        out[i][0] = r[i][1] * w[2] - r[i][2] * w[1]
        out[i][1] = r[i][2] * w[0] - r[i][0] * w[2]
        out[i][2] = r[i][0] * w[1] - r[i][1] * w[0]


cdef void _inv_transpose(double[3][3] x, double[3][3] out) noexcept nogil:
    cdef double c00 = x[1][1] * x[2][2] - x[1][2] * x[2][1]
    cdef double c01 = x[1][2] * x[2][0] - x[1][0] * x[2][2]
    cdef double c02 = x[1][0] * x[2][1] - x[1][1] * x[2][0]
    cdef double c10 = x[0][2] * x[2][1] - x[0][1] * x[2][2]
    cdef double c11 = x[0][0] * x[2][2] - x[0][2] * x[2][0]
    cdef double c12 = x[0][1] * x[2][0] - x[0][0] * x[2][1]
    cdef double c20 = x[0][1] * x[1][2] - x[0][2] * x[1][1]
    cdef double c21 = x[0][2] * x[1][0] - x[0][0] * x[1][2]
    cdef double c22 = x[0][0] * x[1][1] - x[0][1] * x[1][0]
    cdef double det = x[0][0] * c00 + x[0][1] * c01 + x[0][2] * c02
    out[0][0] = c00 / det
    out[0][1] = c01 / det
    out[0][2] = c02 / det
    out[1][0] = c10 / det
    out[1][1] = c11 / det
    out[1][2] = c12 / det
    out[2][0] = c20 / det
    out[2][1] = c21 / det
    out[2][2] = c22 / det


cdef void _polar(double[3][3] x) noexcept nogil:
    cdef double[3][3] it
    cdef int k, i, j
    for k in range(2):
        _inv_transpose(x, it)
        for i in range(3):
            for j in range(3):
                x[i][j] = 0.5 * (x[i][j] + it[i][j])


cdef void _rod_omega_dot(double[3][3] r, double[3] lam, double[3] out) noexcept nogil:
    out[0] = -(lam[0] * r[0][1] + lam[1] * r[1][1] + lam[2] * r[2][1])
    out[1] = lam[0] * r[0][0] + lam[1] * r[1][0] + lam[2] * r[2][0]
    out[2] = 0.0


def integrate_frames(omega_nodes, omega_mids, double h):
    """Coupled RK4 for dR/ds = R hat(omega(s)), dt/ds = R e3."""
    cdef double[:, ::1] wn = np.ascontiguousarray(omega_nodes, dtype=np.float64)
    cdef double[:, ::1] wm = np.ascontiguousarray(omega_mids, dtype=np.float64)
    cdef Py_ssize_t n = wm.shape[0]
    frames_arr = np.empty((n + 1, 3, 3))
    pos_arr = np.empty((n + 1, 3))
    cdef double[:, :, ::1] frames = frames_arr
    cdef double[:, ::1] pos = pos_arr

    cdef double[3][3] R, R2, R3, R4, k1, k2, k3, k4
    cdef double[3] t, wa, wmid, wb
    cdef Py_ssize_t i, a, b
    cdef double h6 = h / 6.0

    for a in range(3):
        t[a] = 0.0
        for b in range(3):
            R[a][b] = 1.0 if a == b else 0.0
            frames[0, a, b] = R[a][b]
        pos[0, a] = 0.0

    for i in range(n):
        for a in range(3):
            wa[a] = wn[i, a]
            wmid[a] = wm[i, a]
            wb[a] = wn[i + 1, a]
        _mul_hat(R, wa, k1)
        for a in range(3):
            for b in range(3):
                R2[a][b] = R[a][b] + 0.5 * h * k1[a][b]
        _mul_hat(R2, wmid, k2)
        for a in range(3):
            for b in range(3):
                R3[a][b] = R[a][b] + 0.5 * h * k2[a][b]
        _mul_hat(R3, wmid, k3)
        for a in range(3):
            for b in range(3):
                R4[a][b] = R[a][b] + h * k3[a][b]
        _mul_hat(R4, wb, k4)
        for a in range(3):
            t[a] = t[a] + h6 * (R[a][2] + 2.0 * R2[a][2] + 2.0 * R3[a][2] + R4[a][2])
            for b in range(3):
                R[a][b] = R[a][b] + h6 * (
                    k1[a][b] + 2.0 * k2[a][b] + 2.0 * k3[a][b] + k4[a][b]
                )
        _polar(R)
        for a in range(3):
            pos[i + 1, a] = t[a]
            for b in range(3):
                frames[i + 1, a, b] = R[a][b]
    return frames_arr, pos_arr


def integrate_rod(omega0, lam_in, double h, Py_ssize_t steps):
    """Coupled RK4 for the rod shooting ODE (R, t, omega); lam constant."""
    cdef double[::1] w0 = np.ascontiguousarray(omega0, dtype=np.float64)
    cdef double[::1] lamv = np.ascontiguousarray(lam_in, dtype=np.float64)
    frames_arr = np.empty((steps + 1, 3, 3))
    pos_arr = np.empty((steps + 1, 3))
    omega_arr = np.empty((steps + 1, 3))
    domega_arr = np.empty((steps + 1, 3))
    cdef double[:, :, ::1] frames = frames_arr
    cdef double[:, ::1] pos = pos_arr
    cdef double[:, ::1] omegas = omega_arr
    cdef double[:, ::1] domegas = domega_arr

    cdef double[3][3] R, R2, R3, R4, kR1, kR2, kR3, kR4
    cdef double[3] t, w, w2, w3, w4, kw1, kw2, kw3, kw4, lam, dw
    cdef Py_ssize_t i, a, b
    cdef double h6 = h / 6.0

    for a in range(3):
        t[a] = 0.0
        w[a] = w0[a]
        lam[a] = lamv[a]
        for b in range(3):
            R[a][b] = 1.0 if a == b else 0.0
            frames[0, a, b] = R[a][b]
        pos[0, a] = 0.0
        omegas[0, a] = w[a]
    _rod_omega_dot(R, lam, dw)
    for a in range(3):
        domegas[0, a] = dw[a]

    for i in range(steps):
        _mul_hat(R, w, kR1)
        _rod_omega_dot(R, lam, kw1)
        for a in range(3):
            w2[a] = w[a] + 0.5 * h * kw1[a]
            for b in range(3):
                R2[a][b] = R[a][b] + 0.5 * h * kR1[a][b]
        _mul_hat(R2, w2, kR2)
        _rod_omega_dot(R2, lam, kw2)
        for a in range(3):
            w3[a] = w[a] + 0.5 * h * kw2[a]
            for b in range(3):
                R3[a][b] = R[a][b] + 0.5 * h * kR2[a][b]
        _mul_hat(R3, w3, kR3)
        _rod_omega_dot(R3, lam, kw3)
        for a in range(3):
            w4[a] = w[a] + h * kw3[a]
            for b in range(3):
                R4[a][b] = R[a][b] + h * kR3[a][b]
        _mul_hat(R4, w4, kR4)
        _rod_omega_dot(R4, lam, kw4)
        for a in range(3):
            t[a] = t[a] + h6 * (R[a][2] + 2.0 * R2[a][2] + 2.0 * R3[a][2] + R4[a][2])
            w[a] = w[a] + h6 * (kw1[a] + 2.0 * kw2[a] + 2.0 * kw3[a] + kw4[a])
            for b in range(3):
                R[a][b] = R[a][b] + h6 * (
                    kR1[a][b] + 2.0 * kR2[a][b] + 2.0 * kR3[a][b] + kR4[a][b]
                )
        _polar(R)
        _rod_omega_dot(R, lam, dw)
        for a in range(3):
            pos[i + 1, a] = t[a]
            omegas[i + 1, a] = w[a]
            domegas[i + 1, a] = dw[a]
            for b in range(3):
                frames[i + 1, a, b] = R[a][b]
    return frames_arr, pos_arr, omega_arr, domega_arr
