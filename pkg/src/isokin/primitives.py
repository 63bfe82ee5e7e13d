"""Closed-form locally volume-preserving deformation primitives.

Every primitive maps reference coordinates x = (x1, x2, x3) to deformed
coordinates with an analytic 3x3 gradient whose determinant is exactly 1 on
its valid domain.  apply/gradient/is_valid are vectorized over (..., 3)
point arrays; apply and gradient raise SingularInput when any point lies in
the singular set.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import SingularInput
from .liegroup import BackboneCurve
from .modal import ModalFunction

BEND_KAPPA_EPS = 1e-6

# 5-point Gauss-Legendre rule on [-1, 1], used for backbone position quadrature
_GL_NODES = np.array(
    [
        -0.906179845938664,
        -0.5384693101056831,
        0.0,
        0.5384693101056831,
        0.906179845938664,
    ]
)
_GL_WEIGHTS = np.array(
    [
        0.23692688505618908,
        0.47862867049936647,
        0.5688888888888889,
        0.47862867049936647,
        0.23692688505618908,
    ]
)


def _as_points(x):
    pts = np.asarray(x, dtype=float)
    single = pts.ndim == 1
    if single:
        pts = pts[None, :]
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise ValueError(f"expected points of shape (..., 3), got {pts.shape}")
    return pts, single


class DeformationPrimitive:
    """Base class for the closed-form primitives; instances are immutable."""

    name = "primitive"

    @property
    def weights(self) -> np.ndarray:
        raise NotImplementedError

    @property
    def num_weights(self) -> int:
        return len(self.weights)

    def with_weights(self, weights):
        raise NotImplementedError

    def apply(self, x):
        pts, single = _as_points(x)
        out = self._apply(pts)
        return out[0] if single else out

    def gradient(self, x):
        pts, single = _as_points(x)
        out = self._gradient(pts)
        return out[0] if single else out

    def is_valid(self, x):
        pts, single = _as_points(x)
        mask = self._valid(pts)
        return bool(mask[0]) if single else mask

    def _check(self, mask, pts):
        """Raise SingularInput unless every point passed its validity test."""
        if not mask.all():
            i = int(np.argmin(mask))
            raise SingularInput(
                f"{self.name}: point {pts[i]} lies in the singular set"
            )

    # subclass hooks, all on (n, 3) arrays; _apply and _gradient enforce
    # validity themselves so intermediates are computed once
    def _apply(self, pts):
        raise NotImplementedError

    def _gradient(self, pts):
        raise NotImplementedError

    def _valid(self, pts):
        return np.ones(len(pts), dtype=bool)


@dataclass(frozen=True)
class Elongation(DeformationPrimitive):
    """Nonuniform stretch along x3 with area-compensating in-plane scaling.

    ``rate`` is the elongation rate m_e'(x3) (> 0); the axial map is its
    exact antiderivative m_e(x3).
    """

    rate: ModalFunction
    height: float

    name = "elongation"

    @property
    def weights(self):
        return self.rate.weights

    def with_weights(self, weights):
        return replace(self, rate=self.rate.with_weights(weights))

    def stretched_height(self) -> float:
        """Image of the reference height under the axial map."""
        return float(self.rate.integral(self.height))

    def _valid(self, pts):
        return self.rate(pts[:, 2]) > 0.0

    def _apply(self, pts):
        r = self.rate(pts[:, 2])
        self._check(r > 0.0, pts)
        inv = 1.0 / np.sqrt(r)
        out = np.empty_like(pts)
        out[:, 0] = pts[:, 0] * inv
        out[:, 1] = pts[:, 1] * inv
        out[:, 2] = self.rate.integral(pts[:, 2])
        return out

    def _gradient(self, pts):
        x3 = pts[:, 2]
        r = self.rate(x3)
        self._check(r > 0.0, pts)
        dr = self.rate.deriv(x3)
        inv = 1.0 / np.sqrt(r)
        dinv = -0.5 * dr * inv / r
        g = np.zeros((len(pts), 3, 3))
        g[:, 0, 0] = inv
        g[:, 1, 1] = inv
        g[:, 0, 2] = pts[:, 0] * dinv
        g[:, 1, 2] = pts[:, 1] * dinv
        g[:, 2, 2] = r
        return g


@dataclass(frozen=True)
class Twist(DeformationPrimitive):
    """Rotate each horizontal plane about the z axis by m_theta(x3) rad."""

    angle: ModalFunction

    name = "twist"

    @property
    def weights(self):
        return self.angle.weights

    def with_weights(self, weights):
        return replace(self, angle=self.angle.with_weights(weights))

    def _apply(self, pts):
        th = self.angle(pts[:, 2])
        c, s = np.cos(th), np.sin(th)
        out = np.empty_like(pts)
        out[:, 0] = pts[:, 0] * c - pts[:, 1] * s
        out[:, 1] = pts[:, 0] * s + pts[:, 1] * c
        out[:, 2] = pts[:, 2]
        return out

    def _gradient(self, pts):
        th = self.angle(pts[:, 2])
        dth = self.angle.deriv(pts[:, 2])
        c, s = np.cos(th), np.sin(th)
        g = np.zeros((len(pts), 3, 3))
        g[:, 0, 0] = c
        g[:, 0, 1] = -s
        g[:, 0, 2] = (-pts[:, 0] * s - pts[:, 1] * c) * dth
        g[:, 1, 0] = s
        g[:, 1, 1] = c
        g[:, 1, 2] = (pts[:, 0] * c - pts[:, 1] * s) * dth
        g[:, 2, 2] = 1.0
        return g


@dataclass(frozen=True)
class Shear(DeformationPrimitive):
    """Slide horizontal planes along x and y by m_s1(x3), m_s2(x3)."""

    s1: ModalFunction
    s2: ModalFunction

    name = "shear"

    @property
    def weights(self):
        return np.concatenate([self.s1.weights, self.s2.weights])

    def with_weights(self, weights):
        weights = np.asarray(weights, dtype=float)
        n1 = self.s1.num_weights
        return replace(
            self,
            s1=self.s1.with_weights(weights[:n1]),
            s2=self.s2.with_weights(weights[n1:]),
        )

    def _apply(self, pts):
        x3 = pts[:, 2]
        out = np.empty_like(pts)
        out[:, 0] = pts[:, 0] + self.s1(x3)
        out[:, 1] = pts[:, 1] + self.s2(x3)
        out[:, 2] = x3
        return out

    def _gradient(self, pts):
        x3 = pts[:, 2]
        g = np.zeros((len(pts), 3, 3))
        g[:, 0, 0] = 1.0
        g[:, 1, 1] = 1.0
        g[:, 2, 2] = 1.0
        g[:, 0, 2] = self.s1.deriv(x3)
        g[:, 1, 2] = self.s2.deriv(x3)
        return g


def _source_valid(mc, rho2):
    # off axis the image radius must stay real; the axis itself is singular
    # unless the strength vanishes there (identity map)
    return np.where(rho2 > 0.0, mc + rho2 > 0.0, mc == 0.0)


@dataclass(frozen=True)
class Source(DeformationPrimitive):
    """Radial cavity map r -> sqrt(m_c(x3) + r^2) at fixed angle and height."""

    strength: ModalFunction

    name = "source"

    @property
    def weights(self):
        return self.strength.weights

    def with_weights(self, weights):
        return replace(self, strength=self.strength.with_weights(weights))

    def _valid(self, pts):
        mc = self.strength(pts[:, 2])
        rho2 = pts[:, 0] ** 2 + pts[:, 1] ** 2
        return _source_valid(mc, rho2)

    def _apply(self, pts):
        mc = self.strength(pts[:, 2])
        rho2 = pts[:, 0] ** 2 + pts[:, 1] ** 2
        self._check(_source_valid(mc, rho2), pts)
        with np.errstate(divide="ignore", invalid="ignore"):
            scale = np.sqrt(mc + rho2) / np.sqrt(rho2)
        scale = np.where(rho2 > 0.0, scale, 1.0)
        return np.stack([pts[:, 0] * scale, pts[:, 1] * scale, pts[:, 2]], axis=-1)

    def _gradient(self, pts):
        x1, x2, x3 = pts[:, 0], pts[:, 1], pts[:, 2]
        mc = self.strength(x3)
        rho2 = x1 * x1 + x2 * x2
        self._check(_source_valid(mc, rho2), pts)
        dmc = self.strength.deriv(x3)
        on_axis = rho2 == 0.0
        rho2_safe = np.where(on_axis, 1.0, rho2)
        rho = np.sqrt(rho2_safe)
        rr = np.sqrt(mc + rho2)
        scale = rr / rho
        a = mc / (rho2_safe * rho * rr)
        g = np.zeros((len(pts), 3, 3))
        g[:, 0, 0] = np.where(on_axis, 1.0, scale - a * x1 * x1)
        g[:, 1, 1] = np.where(on_axis, 1.0, scale - a * x2 * x2)
        g[:, 0, 1] = np.where(on_axis, 0.0, -a * x1 * x2)
        g[:, 1, 0] = g[:, 0, 1]
        g[:, 0, 2] = np.where(on_axis, 0.0, x1 * dmc / (2.0 * rho * rr))
        g[:, 1, 2] = np.where(on_axis, 0.0, x2 * dmc / (2.0 * rho * rr))
        g[:, 2, 2] = 1.0
        return g


# ---------------------------------------------------------------------------
# shared bend machinery
# ---------------------------------------------------------------------------


def _profile_exact(kappa, c):
    """Stable forms of nu = (1 - sqrt(1 - 2 kappa c))/kappa and derivatives."""
    u = np.sqrt(np.maximum(1.0 - 2.0 * kappa * c, 0.0))
    nu = 2.0 * c / (1.0 + u)
    nu_c = 1.0 / u
    nu_k = 2.0 * c * c / (u * (1.0 + u) ** 2)
    return nu, nu_c, nu_k


def _profile_series(kappa, c):
    """Three-term expansion about kappa = 0."""
    w = kappa * c
    nu = c * (1.0 + 0.5 * w + 0.5 * w * w)
    nu_c = 1.0 + w + 1.5 * w * w
    nu_k = c * c * (0.5 + w)
    return nu, nu_c, nu_k


def bend_profile(kappa, c):
    """Radial bend coordinate nu(kappa, c) with d(nu)/dc and d(nu)/dkappa.

    The exact branch is used for |kappa| >= 1e-6 and the series branch below;
    both are regular at kappa = 0 and agree to well under 1e-10 at the
    switch.  Requires 2 kappa c < 1 (the bend validity condition).
    """
    kappa = np.asarray(kappa, dtype=float)
    c = np.asarray(c, dtype=float)
    kappa, c = np.broadcast_arrays(kappa, c)
    small = np.abs(kappa) < BEND_KAPPA_EPS
    with np.errstate(divide="ignore", invalid="ignore"):
        nu_e, nuc_e, nuk_e = _profile_exact(kappa, c)
    nu_s, nuc_s, nuk_s = _profile_series(kappa, c)
    return (
        np.where(small, nu_s, nu_e),
        np.where(small, nuc_s, nuc_e),
        np.where(small, nuk_s, nuk_e),
    )


@dataclass
class _BendFrames:
    """Per-point backbone data: origin a(s), adapted frame B(s) with columns
    (in-plane-1, in-plane-2, tangent), signed curvature, its s-derivative,
    and the unit curvature direction e in cross-section coordinates."""

    origin: np.ndarray
    frame: np.ndarray
    kappa: np.ndarray
    dkappa: np.ndarray
    e: np.ndarray
    de: np.ndarray


def _bend_c(pts, fr):
    return pts[:, 0] * fr.e[:, 0] + pts[:, 1] * fr.e[:, 1]


def _bend_valid(pts, fr):
    return 2.0 * fr.kappa * _bend_c(pts, fr) < 1.0


def _bend_apply(pts, fr):
    c = _bend_c(pts, fr)
    nu, _, _ = bend_profile(fr.kappa, c)
    g = nu - c
    v1 = pts[:, 0] + g * fr.e[:, 0]
    v2 = pts[:, 1] + g * fr.e[:, 1]
    # in-plane offset only: the tangent column of the frame is not used
    return (
        fr.origin
        + fr.frame[:, :, 0] * v1[:, None]
        + fr.frame[:, :, 1] * v2[:, None]
    )


def _bend_gradient(pts, fr):
    c = _bend_c(pts, fr)
    nu, nu_c, nu_k = bend_profile(fr.kappa, c)
    e1, e2 = fr.e[:, 0], fr.e[:, 1]
    g = nu - c
    x_de = pts[:, 0] * fr.de[:, 0] + pts[:, 1] * fr.de[:, 1]
    ds = (nu_c - 1.0) * x_de + nu_k * fr.dkappa

    m = np.zeros((len(pts), 3, 3))
    m[:, 0, 0] = 1.0 + (nu_c - 1.0) * e1 * e1
    m[:, 1, 0] = (nu_c - 1.0) * e1 * e2
    m[:, 0, 1] = m[:, 1, 0]
    m[:, 1, 1] = 1.0 + (nu_c - 1.0) * e2 * e2
    m[:, 0, 2] = ds * e1 + g * fr.de[:, 0]
    m[:, 1, 2] = ds * e2 + g * fr.de[:, 1]
    m[:, 2, 2] = 1.0 - fr.kappa * nu
    return np.einsum("nij,njk->nik", fr.frame, m)


@dataclass(frozen=True)
class Bend2D(DeformationPrimitive):
    """Planar bend about a modal-curvature backbone.

    The backbone starts in the y-z plane; ``plane_rotation`` conjugates the
    whole map with a rotation about z, turning the bending plane while
    keeping the clamped bottom plane fixed.  Backbone positions come from
    per-interval Gauss-Legendre quadrature of the exact tangent
    (theta(x3) is the exact antiderivative of the curvature).
    """

    curvature: ModalFunction
    plane_rotation: float = 0.0
    samples: int = 48

    name = "bend2d"

    def __post_init__(self):
        length = self.curvature.mode_scale()
        if length is None:
            raise ValueError("bend curvature needs at least one scaled mode")
        h = length / self.samples
        mids = (np.arange(self.samples) + 0.5) * h
        quad = mids[:, None] + (0.5 * h) * _GL_NODES[None, :]
        theta = self.curvature.integral(quad)
        iy = (0.5 * h) * (np.sin(theta) @ _GL_WEIGHTS)
        iz = (0.5 * h) * (np.cos(theta) @ _GL_WEIGHTS)
        grid = np.zeros((self.samples + 1, 2))
        grid[1:, 0] = np.cumsum(iy)
        grid[1:, 1] = np.cumsum(iz)
        object.__setattr__(self, "_length", float(length))
        object.__setattr__(self, "_grid", grid)

    @property
    def length(self) -> float:
        return self._length

    @property
    def weights(self):
        return self.curvature.weights

    def with_weights(self, weights):
        return Bend2D(
            self.curvature.with_weights(weights), self.plane_rotation, self.samples
        )

    def rescaled(self, length, weights=None):
        """New bend with the mode scale (arclength domain) replaced."""
        m = self.curvature if weights is None else self.curvature.with_weights(weights)
        return Bend2D(m.with_scale(length), self.plane_rotation, self.samples)

    def with_plane_rotation(self, plane_rotation: float) -> "Bend2D":
        """Cheap copy with a new bending plane; the backbone grid does not
        depend on the plane so it is shared."""
        if plane_rotation == self.plane_rotation:
            return self
        clone = object.__new__(Bend2D)
        object.__setattr__(clone, "curvature", self.curvature)
        object.__setattr__(clone, "plane_rotation", plane_rotation)
        object.__setattr__(clone, "samples", self.samples)
        object.__setattr__(clone, "_length", self._length)
        object.__setattr__(clone, "_grid", self._grid)
        return clone

    def _backbone_pos(self, s):
        h = self._length / self.samples
        idx = np.clip((s / h).astype(int), 0, self.samples - 1)
        s0 = idx * h
        half = 0.5 * (s - s0)
        quad = (s0 + half)[:, None] + half[:, None] * _GL_NODES[None, :]
        theta = self.curvature.integral(quad)
        ay = self._grid[idx, 0] + half * (np.sin(theta) @ _GL_WEIGHTS)
        az = self._grid[idx, 1] + half * (np.cos(theta) @ _GL_WEIGHTS)
        return ay, az

    def _frames(self, s):
        n = len(s)
        theta = self.curvature.integral(s)
        kappa = self.curvature(s)
        dkappa = self.curvature.deriv(s)
        ct, st = np.cos(theta), np.sin(theta)
        cp, sp = np.cos(self.plane_rotation), np.sin(self.plane_rotation)
        ay, az = self._backbone_pos(s)
        origin = np.empty((n, 3))
        origin[:, 0] = -sp * ay
        origin[:, 1] = cp * ay
        origin[:, 2] = az
        # conjugated planar frame Rz(phi) B0(theta) Rz(-phi): the cross
        # section keeps its unrotated coordinates, so the in-plane columns
        # turn with the curvature direction e
        frame = np.empty((n, 3, 3))
        frame[:, 0, 0] = cp * cp + sp * sp * ct
        frame[:, 0, 1] = cp * sp * (1.0 - ct)
        frame[:, 0, 2] = -sp * st
        frame[:, 1, 0] = cp * sp * (1.0 - ct)
        frame[:, 1, 1] = sp * sp + cp * cp * ct
        frame[:, 1, 2] = cp * st
        frame[:, 2, 0] = sp * st
        frame[:, 2, 1] = -cp * st
        frame[:, 2, 2] = ct
        e = np.broadcast_to(np.array([-sp, cp]), (n, 2))
        de = np.zeros((n, 2))
        return _BendFrames(origin, frame, kappa, dkappa, e, de)

    def _valid(self, pts):
        return _bend_valid(pts, self._frames(pts[:, 2]))

    def _apply(self, pts):
        fr = self._frames(pts[:, 2])
        self._check(_bend_valid(pts, fr), pts)
        return _bend_apply(pts, fr)

    def _gradient(self, pts):
        fr = self._frames(pts[:, 2])
        self._check(_bend_valid(pts, fr), pts)
        return _bend_gradient(pts, fr)


def _continued_curvature_direction(kvec):
    """Sign-continued unit direction and signed magnitude of a 2D field.

    Keeps e(s) smooth through zero crossings of the curvature vector by
    flipping the sign of the magnitude instead of the direction.
    """
    n = len(kvec)
    norms = np.hypot(kvec[:, 0], kvec[:, 1])
    e = np.empty((n, 2))
    ks = np.empty(n)
    nonzero = norms >= 1e-12
    if not nonzero.any():
        e[:] = (0.0, 1.0)
        ks[:] = 0.0
        return ks, e
    prev = kvec[int(np.argmax(nonzero))] / norms[int(np.argmax(nonzero))]
    for j in range(n):
        if nonzero[j]:
            d = kvec[j] / norms[j]
            if d @ prev < 0.0:
                d = -d
            prev = d
        e[j] = prev
        ks[j] = kvec[j] @ prev
    return ks, e


@dataclass(frozen=True)
class Bend3D(DeformationPrimitive):
    """Bend along a sampled 3D backbone curve.

    The cross-section is carried by the relatively-parallel (minimal twist)
    frame of the curve; the radial warp acts along the instantaneous
    curvature direction.  This is the Frenet-frame bend composed with the
    torsion-cancelling twist, written in a form that stays regular where the
    curvature vanishes.  Carries no modal weights; the curve itself is the
    degree of freedom (solved for by the rod shooting method).
    """

    backbone: BackboneCurve

    name = "bend3d"

    def __post_init__(self):
        curve = self.backbone
        if curve.omega is None:
            raise ValueError("Bend3D needs a curve with angular velocity samples")
        s = curve.s
        h = s[1] - s[0]
        w3 = curve.omega[:, 2]
        psi = np.concatenate([[0.0], np.cumsum(0.5 * (w3[1:] + w3[:-1]) * h)])
        cpsi, spsi = np.cos(psi), np.sin(psi)
        # relatively parallel frame: remove the accumulated tangential spin
        frames = np.empty_like(curve.frames)
        frames[:, :, 0] = cpsi[:, None] * curve.frames[:, :, 0] - spsi[
            :, None
        ] * curve.frames[:, :, 1]
        frames[:, :, 1] = spsi[:, None] * curve.frames[:, :, 0] + cpsi[
            :, None
        ] * curve.frames[:, :, 1]
        frames[:, :, 2] = curve.frames[:, :, 2]
        # natural curvature components in the parallel frame
        w1, w2 = curve.omega[:, 0], curve.omega[:, 1]
        kvec = np.stack([cpsi * w2 + spsi * w1, spsi * w2 - cpsi * w1], axis=-1)
        ks, e = _continued_curvature_direction(kvec)
        object.__setattr__(self, "_pos_sp", CubicSpline(s, curve.pos, axis=0))
        object.__setattr__(
            self, "_frame_sp", CubicSpline(s, frames.reshape(len(s), 9), axis=0)
        )
        ks_sp = CubicSpline(s, ks)
        e_sp = CubicSpline(s, e, axis=0)
        object.__setattr__(self, "_ks_sp", ks_sp)
        object.__setattr__(self, "_dks_sp", ks_sp.derivative())
        object.__setattr__(self, "_e_sp", e_sp)
        object.__setattr__(self, "_de_sp", e_sp.derivative())

    @property
    def weights(self):
        return np.zeros(0)

    def with_weights(self, weights):
        if len(np.asarray(weights).reshape(-1)) != 0:
            raise ValueError("Bend3D carries no modal weights")
        return self

    def _frames(self, s):
        return _BendFrames(
            origin=self._pos_sp(s),
            frame=self._frame_sp(s).reshape(len(s), 3, 3),
            kappa=self._ks_sp(s),
            dkappa=self._dks_sp(s),
            e=self._e_sp(s),
            de=self._de_sp(s),
        )

    def _valid(self, pts):
        return _bend_valid(pts, self._frames(pts[:, 2]))

    def _apply(self, pts):
        fr = self._frames(pts[:, 2])
        self._check(_bend_valid(pts, fr), pts)
        return _bend_apply(pts, fr)

    def _gradient(self, pts):
        fr = self._frames(pts[:, 2])
        self._check(_bend_valid(pts, fr), pts)
        return _bend_gradient(pts, fr)


def is_bend(primitive) -> bool:
    return isinstance(primitive, (Bend2D, Bend3D))
