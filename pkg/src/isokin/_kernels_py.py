"""Pure NumPy fallback for the sequential integration kernels.

Mirrors isokin._core operation for operation (same RK4 stages, same polar
re-orthonormalization with a cofactor inverse-transpose) so both backends
agree to rounding.
"""

from __future__ import annotations

import numpy as np


def _mul_hat(R, w):
    """R @ hat(w) expanded column-wise."""
    out = np.empty((3, 3))
    out[:, 0] = R[:, 1] * w[2] - R[:, 2] * w[1]
    out[:, 1] = R[:, 2] * w[0] - R[:, 0] * w[2]
    out[:, 2] = R[:, 0] * w[1] - R[:, 1] * w[0]
    return out


def _inv_transpose(X):
    """Inverse transpose of a 3x3 matrix via the cofactor formula."""
    c = np.empty((3, 3))
    c[0, 0] = X[1, 1] * X[2, 2] - X[1, 2] * X[2, 1]
    c[0, 1] = X[1, 2] * X[2, 0] - X[1, 0] * X[2, 2]
    c[0, 2] = X[1, 0] * X[2, 1] - X[1, 1] * X[2, 0]
    c[1, 0] = X[0, 2] * X[2, 1] - X[0, 1] * X[2, 2]
    c[1, 1] = X[0, 0] * X[2, 2] - X[0, 2] * X[2, 0]
    c[1, 2] = X[0, 1] * X[2, 0] - X[0, 0] * X[2, 1]
    c[2, 0] = X[0, 1] * X[1, 2] - X[0, 2] * X[1, 1]
    c[2, 1] = X[0, 2] * X[1, 0] - X[0, 0] * X[1, 2]
    c[2, 2] = X[0, 0] * X[1, 1] - X[0, 1] * X[1, 0]
    det = X[0, 0] * c[0, 0] + X[0, 1] * c[0, 1] + X[0, 2] * c[0, 2]
    return c / det


def _polar(X, iterations=2):
    """Newton polar projection onto SO(3): X <- (X + X^-T)/2."""
    for _ in range(iterations):
        X = 0.5 * (X + _inv_transpose(X))
    return X


def integrate_frames(omega_nodes, omega_mids, h):
    """Coupled RK4 for dR/ds = R hat(omega(s)), dt/ds = R e3.

    omega_nodes has shape (n+1, 3) at the step endpoints, omega_mids (n, 3)
    at the midpoints.  Frames are re-orthonormalized after every step.
    Returns (frames (n+1,3,3), positions (n+1,3)).
    """
    omega_nodes = np.ascontiguousarray(omega_nodes, dtype=float)
    omega_mids = np.ascontiguousarray(omega_mids, dtype=float)
    n = omega_mids.shape[0]
    frames = np.empty((n + 1, 3, 3))
    pos = np.empty((n + 1, 3))
    R = np.eye(3)
    t = np.zeros(3)
    frames[0] = R
    pos[0] = t
    for i in range(n):
        wa = omega_nodes[i]
        wm = omega_mids[i]
        wb = omega_nodes[i + 1]
        k1 = _mul_hat(R, wa)
        u1 = R[:, 2]
        R2 = R + (0.5 * h) * k1
        k2 = _mul_hat(R2, wm)
        u2 = R2[:, 2]
        R3 = R + (0.5 * h) * k2
        k3 = _mul_hat(R3, wm)
        u3 = R3[:, 2]
        R4 = R + h * k3
        k4 = _mul_hat(R4, wb)
        u4 = R4[:, 2]
        R = _polar(R + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4))
        t = t + (h / 6.0) * (u1 + 2.0 * u2 + 2.0 * u3 + u4)
        frames[i + 1] = R
        pos[i + 1] = t
    return frames, pos


def _rod_omega_dot(R, lam):
    """d(omega)/ds = (-lam.R e2, lam.R e1, 0)."""
    return np.array(
        [
            -(lam[0] * R[0, 1] + lam[1] * R[1, 1] + lam[2] * R[2, 1]),
            lam[0] * R[0, 0] + lam[1] * R[1, 0] + lam[2] * R[2, 0],
            0.0,
        ]
    )


def integrate_rod(omega0, lam, h, steps):
    """Coupled RK4 for the rod shooting ODE.

    State (R, t, omega) with R' = R hat(omega), t' = R e3 and
    omega' = (-lam.R e2, lam.R e1, 0); lam is constant in s.
    Returns (frames, positions, omegas, omega_derivs), each sampled at the
    n+1 step endpoints.
    """
    omega0 = np.asarray(omega0, dtype=float)
    lam = np.asarray(lam, dtype=float)
    n = int(steps)
    frames = np.empty((n + 1, 3, 3))
    pos = np.empty((n + 1, 3))
    omegas = np.empty((n + 1, 3))
    omega_derivs = np.empty((n + 1, 3))
    R = np.eye(3)
    t = np.zeros(3)
    w = omega0.copy()
    frames[0] = R
    pos[0] = t
    omegas[0] = w
    omega_derivs[0] = _rod_omega_dot(R, lam)
    for i in range(n):
        kR1 = _mul_hat(R, w)
        kt1 = R[:, 2]
        kw1 = _rod_omega_dot(R, lam)

        R2 = R + (0.5 * h) * kR1
        w2 = w + (0.5 * h) * kw1
        kR2 = _mul_hat(R2, w2)
        kt2 = R2[:, 2]
        kw2 = _rod_omega_dot(R2, lam)

        R3 = R + (0.5 * h) * kR2
        w3 = w + (0.5 * h) * kw2
        kR3 = _mul_hat(R3, w3)
        kt3 = R3[:, 2]
        kw3 = _rod_omega_dot(R3, lam)

        R4 = R + h * kR3
        w4 = w + h * kw3
        kR4 = _mul_hat(R4, w4)
        kt4 = R4[:, 2]
        kw4 = _rod_omega_dot(R4, lam)

        R = _polar(R + (h / 6.0) * (kR1 + 2.0 * kR2 + 2.0 * kR3 + kR4))
        t = t + (h / 6.0) * (kt1 + 2.0 * kt2 + 2.0 * kt3 + kt4)
        w = w + (h / 6.0) * (kw1 + 2.0 * kw2 + 2.0 * kw3 + kw4)
        frames[i + 1] = R
        pos[i + 1] = t
        omegas[i + 1] = w
        omega_derivs[i + 1] = _rod_omega_dot(R, lam)
    return frames, pos, omegas, omega_derivs
