"""SO(3)/SE(3) operators, rigid poses and backbone curve integration.

Twist coordinates are ordered rotation-first: xi = (w1, w2, w3, v1, v2, v3),
matching the se(3) basis used by the adjoint block form [[R, 0], [t^ R, R]].
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _backend
from .errors import AngleNearPi, NotSkew, UndefinedNormal

_LOG_ANGLE_MARGIN = 1e-6
_SMALL_ANGLE = 1e-8


def hat3(v):
    """so(3) matrix of a 3-vector: hat3(e_i) = E_i."""
    v = np.asarray(v, dtype=float)
    return np.array(
        [
            [0.0, -v[2], v[1]],
            [v[2], 0.0, -v[0]],
            [-v[1], v[0], 0.0],
        ]
    )


def vee3(m, tol=1e-8):
    """Inverse of hat3; raises NotSkew when the input is not skew."""
    m = np.asarray(m, dtype=float)
    if np.max(np.abs(m + m.T)) > tol:
        raise NotSkew("matrix is not skew-symmetric")
    return np.array([m[2, 1], m[0, 2], m[1, 0]])


def hat6(xi):
    """se(3) matrix of a 6-vector twist (rotation first)."""
    xi = np.asarray(xi, dtype=float)
    out = np.zeros((4, 4))
    out[:3, :3] = hat3(xi[:3])
    out[:3, 3] = xi[3:]
    return out


def vee6(m, tol=1e-8):
    """Inverse of hat6; raises NotSkew for malformed input."""
    m = np.asarray(m, dtype=float)
    if np.max(np.abs(m[3])) > tol:
        raise NotSkew("bottom row must vanish")
    w = vee3(m[:3, :3], tol=tol)
    return np.concatenate([w, m[:3, 3]])


@dataclass(frozen=True)
class RigidPose:
    """SE(3) element: rotation matrix R and translation t (cm)."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        R = np.array(self.rotation, dtype=float).reshape(3, 3)
        t = np.array(self.translation, dtype=float).reshape(3)
        R.flags.writeable = False
        t.flags.writeable = False
        object.__setattr__(self, "rotation", R)
        object.__setattr__(self, "translation", t)

    @classmethod
    def identity(cls) -> "RigidPose":
        return cls(np.eye(3), np.zeros(3))

    @classmethod
    def from_matrix(cls, m) -> "RigidPose":
        m = np.asarray(m, dtype=float)
        return cls(m[:3, :3], m[:3, 3])

    def matrix(self) -> np.ndarray:
        out = np.eye(4)
        out[:3, :3] = self.rotation
        out[:3, 3] = self.translation
        return out

    def compose(self, other: "RigidPose") -> "RigidPose":
        return RigidPose(
            self.rotation @ other.rotation,
            self.rotation @ other.translation + self.translation,
        )

    __matmul__ = compose

    def inverse(self) -> "RigidPose":
        rt = self.rotation.T
        return RigidPose(rt, -rt @ self.translation)

    def transform(self, points):
        pts = np.asarray(points, dtype=float)
        return pts @ self.rotation.T + self.translation

    def is_rotation(self, tol=1e-10) -> bool:
        R = self.rotation
        return (
            np.max(np.abs(R.T @ R - np.eye(3))) <= tol
            and abs(np.linalg.det(R) - 1.0) <= tol
        )


def adjoint(pose: RigidPose) -> np.ndarray:
    """Adjoint of a pose, block form [[R, 0], [t^ R, R]]."""
    out = np.zeros((6, 6))
    R = pose.rotation
    out[:3, :3] = R
    out[3:, 3:] = R
    out[3:, :3] = hat3(pose.translation) @ R
    return out


def so3_exp(w) -> np.ndarray:
    """Rodrigues formula."""
    w = np.asarray(w, dtype=float)
    theta = np.linalg.norm(w)
    K = hat3(w)
    if theta < _SMALL_ANGLE:
        return np.eye(3) + K + 0.5 * (K @ K)
    a = np.sin(theta) / theta
    b = (1.0 - np.cos(theta)) / (theta * theta)
    return np.eye(3) + a * K + b * (K @ K)


def so3_log(R) -> np.ndarray:
    """Principal-branch rotation log; raises AngleNearPi near the cut."""
    R = np.asarray(R, dtype=float)
    c = np.clip((np.trace(R) - 1.0) / 2.0, -1.0, 1.0)
    theta = np.arccos(c)
    if theta > np.pi - _LOG_ANGLE_MARGIN:
        raise AngleNearPi(f"rotation angle {theta:.6f} too close to pi")
    w = np.array([R[2, 1] - R[1, 2], R[0, 2] - R[2, 0], R[1, 0] - R[0, 1]])
    if theta < _SMALL_ANGLE:
        return 0.5 * w * (1.0 + theta * theta / 6.0)
    return w * (theta / (2.0 * np.sin(theta)))


def _so3_left_jacobian(w):
    theta = np.linalg.norm(w)
    K = hat3(w)
    if theta < _SMALL_ANGLE:
        return np.eye(3) + 0.5 * K + (K @ K) / 6.0
    a = (1.0 - np.cos(theta)) / (theta * theta)
    b = (theta - np.sin(theta)) / (theta ** 3)
    return np.eye(3) + a * K + b * (K @ K)


def _so3_left_jacobian_inv(w):
    theta = np.linalg.norm(w)
    K = hat3(w)
    if theta < _SMALL_ANGLE:
        return np.eye(3) - 0.5 * K + (K @ K) / 12.0
    b = 1.0 / (theta * theta) - (1.0 + np.cos(theta)) / (
        2.0 * theta * np.sin(theta)
    )
    return np.eye(3) - 0.5 * K + b * (K @ K)


def se3_exp(xi) -> RigidPose:
    xi = np.asarray(xi, dtype=float)
    w, v = xi[:3], xi[3:]
    return RigidPose(so3_exp(w), _so3_left_jacobian(w) @ v)


def se3_log(pose: RigidPose) -> np.ndarray:
    w = so3_log(pose.rotation)
    v = _so3_left_jacobian_inv(w) @ pose.translation
    return np.concatenate([w, v])


@dataclass(frozen=True)
class BackboneCurve:
    """Arclength-sampled inextensible space curve with frames.

    frames[i] has columns (in-plane-1, in-plane-2, tangent); the tangent is
    the third column and positions satisfy dt/ds = R e3.  curvature is the
    unsigned Frenet curvature |(w1, w2)| and torsion the frame-consistent
    torsion; omega holds the body angular velocity samples when available.
    """

    s: np.ndarray
    pos: np.ndarray
    frames: np.ndarray
    curvature: np.ndarray
    torsion: np.ndarray
    length: float
    omega: np.ndarray | None = None
    omega_deriv: np.ndarray | None = None

    @property
    def steps(self) -> int:
        return len(self.s) - 1

    def end_pose(self) -> RigidPose:
        return RigidPose(self.frames[-1], self.pos[-1])

    def polyline_length(self) -> float:
        return float(np.sum(np.linalg.norm(np.diff(self.pos, axis=0), axis=1)))

    def max_frame_defect(self) -> float:
        prods = np.einsum("nji,njk->nik", self.frames, self.frames)
        return float(np.max(np.abs(prods - np.eye(3))))

    def max_speed_defect(self) -> float:
        """Worst per-step deviation of |delta t|/|delta s| from 1."""
        h = self.s[1] - self.s[0]
        v = np.diff(self.pos, axis=0) / h
        return float(np.max(np.abs(np.linalg.norm(v, axis=1) - 1.0)))


def _torsion_from_omega(omega, omega_deriv, kappa_floor=1e-9):
    """tau = w3 + (w1 w2' - w2 w1') / (w1^2 + w2^2), guarded near kappa = 0."""
    w1, w2, w3 = omega[:, 0], omega[:, 1], omega[:, 2]
    k2 = w1 * w1 + w2 * w2
    num = w1 * omega_deriv[:, 1] - w2 * omega_deriv[:, 0]
    tau = w3.copy()
    ok = k2 > kappa_floor * kappa_floor
    tau[ok] += num[ok] / k2[ok]
    return tau


def _centered_diff(values, h):
    out = np.empty_like(values)
    out[1:-1] = (values[2:] - values[:-2]) / (2.0 * h)
    out[0] = (values[1] - values[0]) / h
    out[-1] = (values[-1] - values[-2]) / h
    return out


def integrate_backbone(omega, length, steps=1000) -> BackboneCurve:
    """Integrate a backbone from its body angular velocity profile.

    ``omega`` maps arclength s to a 3-vector (scalar input; vectorized
    callables returning (n, 3) are used directly).  RK4 with per-step polar
    re-orthonormalization; positions integrate the tangent within the same
    RK4 stages.
    """
    if steps < 2:
        raise ValueError("steps must be >= 2")
    if not length > 0.0:
        raise ValueError("length must be positive")
    s = np.linspace(0.0, length, steps + 1)
    h = length / steps
    mids = s[:-1] + 0.5 * h

    def sample(points):
        try:
            out = np.asarray(omega(points), dtype=float)
            if out.shape == (len(points), 3):
                return out
        except Exception:
            pass
        return np.array([omega(float(si)) for si in points], dtype=float)

    omega_nodes = sample(s)
    omega_mids = sample(mids)
    frames, pos = _backend.integrate_frames(omega_nodes, omega_mids, h)
    omega_deriv = np.column_stack(
        [_centered_diff(omega_nodes[:, j], h) for j in range(3)]
    )
    curvature = np.hypot(omega_nodes[:, 0], omega_nodes[:, 1])
    torsion = _torsion_from_omega(omega_nodes, omega_deriv)
    return BackboneCurve(
        s=s,
        pos=pos,
        frames=frames,
        curvature=curvature,
        torsion=torsion,
        length=float(length),
        omega=omega_nodes,
        omega_deriv=omega_deriv,
    )


def backbone_from_frames(s, pos, frames) -> BackboneCurve:
    """Build a curve from raw position/frame samples.

    The body angular velocity is recovered by frame differencing, and
    curvature/torsion follow from it (the Frenet-difference fallback for
    curves that were not produced by an integrator).
    """
    s = np.asarray(s, dtype=float)
    pos = np.asarray(pos, dtype=float)
    frames = np.asarray(frames, dtype=float)
    h = s[1] - s[0]
    omega = np.empty((len(s), 3))
    for i in range(len(s)):
        lo, hi = max(i - 1, 0), min(i + 1, len(s) - 1)
        dR = (frames[hi] - frames[lo]) / ((hi - lo) * h)
        W = frames[i].T @ dR
        omega[i] = np.array([W[2, 1] - W[1, 2], W[0, 2] - W[2, 0], W[1, 0] - W[0, 1]]) / 2.0
    omega_deriv = np.column_stack([_centered_diff(omega[:, j], h) for j in range(3)])
    curvature = np.hypot(omega[:, 0], omega[:, 1])
    torsion = _torsion_from_omega(omega, omega_deriv)
    return BackboneCurve(
        s=s,
        pos=pos,
        frames=frames,
        curvature=curvature,
        torsion=torsion,
        length=float(s[-1] - s[0]),
        omega=omega,
        omega_deriv=omega_deriv,
    )


def frenet_normal(curve: BackboneCurve, index=0, kappa_floor=1e-9):
    """Frenet normal at a sample, from omega when available else from frames."""
    if curve.curvature[index] < kappa_floor:
        raise UndefinedNormal(
            f"curvature {curve.curvature[index]:.3e} at sample {index}"
        )
    if curve.omega is not None:
        w = curve.omega[index]
        local = np.array([w[1], -w[0], 0.0]) / np.hypot(w[0], w[1])
        return curve.frames[index] @ local
    # fallback: difference tangents
    h = curve.s[1] - curve.s[0]
    tangents = curve.frames[:, :, 2]
    i = min(max(index, 1), len(curve.s) - 2)
    dt = (tangents[i + 1] - tangents[i - 1]) / (2.0 * h)
    n = np.linalg.norm(dt)
    if n < kappa_floor:
        raise UndefinedNormal("tangent derivative vanishes")
    return dt / n


def minimal_twist_angle(curve: BackboneCurve):
    """Twist correction that removes accumulated torsion.

    Returns (theta1, theta2): theta1 maps arclength to -int_0^s tau, theta2
    is the constant angle aligning the base normal with the x2 axis.  Raises
    UndefinedNormal when the base curvature is below 1e-9 (callers fall back
    to theta2 = 0).
    """
    h = curve.s[1] - curve.s[0]
    theta1_samples = np.concatenate(
        [[0.0], -np.cumsum(0.5 * (curve.torsion[1:] + curve.torsion[:-1]) * h)]
    )
    s_grid = curve.s

    def theta1(s):
        return np.interp(np.asarray(s, dtype=float), s_grid, theta1_samples)

    n0 = frenet_normal(curve, 0)
    theta2 = float(np.arctan2(n0[0], n0[1]))
    return theta1, theta2
