"""Hyperelastic invariants, Mooney-Rivlin energy and the fitted weight matrix.

Energies are incompressible two-parameter Mooney-Rivlin, integrated by the
midpoint rule over structured grids (cylindrical grids carry the r weight).
Units: lengths cm, moduli kPa, energy kPa.cm^3 (= mJ).
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import IllConditioned, NotIsochoric, NotSymmetric

ISOCHORIC_TOL = 1e-6


@dataclass(frozen=True)
class Material:
    """Mooney-Rivlin coefficients in kPa; C01 = 0 gives Neo-Hookean."""

    c10: float
    c01: float


# Ecoflex 00-30 and Dragonskin 30 from uniaxial calibration
ECOFLEX_00_30 = Material(c10=5.6, c01=6.3)
DRAGONSKIN_30 = Material(c10=1.19, c01=23.028)


class QuadratureDomain:
    """Structured midpoint grid over a case geometry."""

    def points_and_volumes(self):
        raise NotImplementedError

    def refined(self, factor: int = 2) -> "QuadratureDomain":
        raise NotImplementedError


@dataclass(frozen=True)
class BlockDomain(QuadratureDomain):
    """Axis-centered box: x,y in [-w/2, w/2], z in [0, h]."""

    width_x: float
    width_y: float
    height: float
    nx: int = 20
    ny: int = 20
    nz: int = 20

    def points_and_volumes(self):
        xs = (np.arange(self.nx) + 0.5) * self.width_x / self.nx - self.width_x / 2
        ys = (np.arange(self.ny) + 0.5) * self.width_y / self.ny - self.width_y / 2
        zs = (np.arange(self.nz) + 0.5) * self.height / self.nz
        X, Y, Z = np.meshgrid(xs, ys, zs, indexing="ij")
        pts = np.stack([X.ravel(), Y.ravel(), Z.ravel()], axis=-1)
        cell = (
            self.width_x * self.width_y * self.height / (self.nx * self.ny * self.nz)
        )
        return pts, np.full(len(pts), cell)

    def refined(self, factor: int = 2):
        return replace(
            self, nx=self.nx * factor, ny=self.ny * factor, nz=self.nz * factor
        )


@dataclass(frozen=True)
class CylShellDomain(QuadratureDomain):
    """Cylindrical shell (chamber wall): r in [r_in, r_out], z in [0, h]."""

    r_in: float
    r_out: float
    height: float
    nr: int = 8
    ntheta: int = 32
    nh: int = 40

    def points_and_volumes(self):
        dr = (self.r_out - self.r_in) / self.nr
        rs = self.r_in + (np.arange(self.nr) + 0.5) * dr
        dth = 2.0 * np.pi / self.ntheta
        ths = (np.arange(self.ntheta) + 0.5) * dth
        dz = self.height / self.nh
        zs = (np.arange(self.nh) + 0.5) * dz
        R, T, Z = np.meshgrid(rs, ths, zs, indexing="ij")
        pts = np.stack(
            [(R * np.cos(T)).ravel(), (R * np.sin(T)).ravel(), Z.ravel()], axis=-1
        )
        vols = (R * dr * dth * dz).ravel()
        return pts, vols

    def refined(self, factor: int = 2):
        return replace(
            self,
            nr=self.nr * factor,
            ntheta=self.ntheta * factor,
            nh=self.nh * factor,
        )


@dataclass(frozen=True)
class SolidCylDomain(QuadratureDomain):
    """Solid cylinder (rod): r in (0, radius], z in [0, h].

    Bending energy density grows like (kappa x2)^2, so the thin cross
    section needs the radial resolution more than the axial one.
    """

    radius: float
    height: float
    nr: int = 12
    ntheta: int = 16
    nh: int = 60

    def points_and_volumes(self):
        dr = self.radius / self.nr
        rs = (np.arange(self.nr) + 0.5) * dr
        dth = 2.0 * np.pi / self.ntheta
        ths = (np.arange(self.ntheta) + 0.5) * dth
        dz = self.height / self.nh
        zs = (np.arange(self.nh) + 0.5) * dz
        R, T, Z = np.meshgrid(rs, ths, zs, indexing="ij")
        pts = np.stack(
            [(R * np.cos(T)).ravel(), (R * np.sin(T)).ravel(), Z.ravel()], axis=-1
        )
        vols = (R * dr * dth * dz).ravel()
        return pts, vols

    def refined(self, factor: int = 2):
        return replace(
            self,
            nr=self.nr * factor,
            ntheta=self.ntheta * factor,
            nh=self.nh * factor,
        )


def _det3(F):
    return (
        F[..., 0, 0] * (F[..., 1, 1] * F[..., 2, 2] - F[..., 1, 2] * F[..., 2, 1])
        - F[..., 0, 1] * (F[..., 1, 0] * F[..., 2, 2] - F[..., 1, 2] * F[..., 2, 0])
        + F[..., 0, 2] * (F[..., 1, 0] * F[..., 2, 1] - F[..., 1, 1] * F[..., 2, 0])
    )


def invariants(B):
    """Principal invariants (I1, I2, I3) of a symmetric tensor B.

    I1 = tr B, I2 = (tr^2 B - tr B^2)/2, I3 = det B.
    """
    B = np.asarray(B, dtype=float)
    if np.max(np.abs(B - np.swapaxes(B, -1, -2))) > 1e-8:
        raise NotSymmetric("B must be symmetric")
    tr = np.trace(B, axis1=-2, axis2=-1)
    tr2 = np.trace(
        np.einsum("...ij,...jk->...ik", B, B), axis1=-2, axis2=-1
    )
    i1 = tr
    i2 = 0.5 * (tr * tr - tr2)
    i3 = _det3(B)
    if B.ndim == 2:
        return float(i1), float(i2), float(i3)
    return i1, i2, i3


def mr_density(F, material: Material):
    """Incompressible Mooney-Rivlin density C10 (I1-3) + C01 (I2-3), kPa.

    F must be isochoric to 1e-6; a larger determinant defect signals a broken
    deformation and raises NotIsochoric.
    """
    F = np.asarray(F, dtype=float)
    det = _det3(F)
    if np.max(np.abs(det - 1.0)) > ISOCHORIC_TOL:
        raise NotIsochoric(
            f"det F deviates from 1 by {np.max(np.abs(det - 1.0)):.3e}"
        )
    B = np.einsum("...ij,...kj->...ik", F, F)
    tr = np.trace(B, axis1=-2, axis2=-1)
    tr2 = np.trace(np.einsum("...ij,...jk->...ik", B, B), axis1=-2, axis2=-1)
    i1 = tr
    i2 = 0.5 * (tr * tr - tr2)
    psi = material.c10 * (i1 - 3.0) + material.c01 * (i2 - 3.0)
    return float(psi) if F.ndim == 2 else psi


def total_energy(comp, params, domain: QuadratureDomain, material: Material) -> float:
    """Midpoint-rule total strain energy of the composite at these weights."""
    cw = comp.with_params(params)
    pts, vols = domain.points_and_volumes()
    F = cw.gradient(pts)
    psi = mr_density(F, material)
    return float(np.sum(vols * psi))


def symmetric_basis_matrices(m: int):
    """Basis of symmetric m x m matrices: unit diagonal entries first, then
    unit symmetric off-diagonal pairs in row-major order."""
    out = []
    for k in range(m):
        mat = np.zeros((m, m))
        mat[k, k] = 1.0
        out.append(mat)
    for i in range(m):
        for j in range(i + 1, m):
            mat = np.zeros((m, m))
            mat[i, j] = 1.0
            mat[j, i] = 1.0
            out.append(mat)
    return out


def _quadratic_design_matrix(samples):
    n, m = samples.shape
    cols = [samples[:, k] ** 2 for k in range(m)]
    for i in range(m):
        for j in range(i + 1, m):
            cols.append(2.0 * samples[:, i] * samples[:, j])
    return np.column_stack(cols)


def fit_quadratic_form(samples, energies):
    """Least-squares symmetric W with p.W.p matching the given energies.

    Returns (W, residual, rank).  Raises IllConditioned when the design
    matrix has effective rank below m(m+1)/2.
    """
    samples = np.asarray(samples, dtype=float)
    energies = np.asarray(energies, dtype=float)
    n, m = samples.shape
    k = m * (m + 1) // 2
    A = _quadratic_design_matrix(samples)
    w, _, rank, _ = np.linalg.lstsq(A, energies, rcond=None)
    if rank < k:
        raise IllConditioned(f"design matrix rank {rank} < {k}")
    W = np.zeros((m, m))
    idx = m
    for i in range(m):
        W[i, i] = w[i]
    for i in range(m):
        for j in range(i + 1, m):
            W[i, j] = w[idx]
            W[j, i] = w[idx]
            idx += 1
    residual = float(np.linalg.norm(A @ w - energies))
    return W, residual, int(rank)


@dataclass
class WeightFit:
    """Fitted quadratic energy form; W is symmetric by construction but not
    forced positive definite (the pseudoinverse refuses indefinite W)."""

    W: np.ndarray
    sample_count: int
    magnitude: float
    residual: float
    rank: int

    def is_positive_definite(self) -> bool:
        return bool(np.linalg.eigvalsh(self.W)[0] > 0.0)


def fit_weight_matrix(
    comp,
    domain: QuadratureDomain,
    material: Material,
    sample_count: int | None = None,
    magnitude: float = 1e-3,
    seed: int = 0,
) -> WeightFit:
    """Fit W so that p.W.p reproduces the strain energy of small deformations.

    Draws ``sample_count`` parameter vectors uniformly from
    [-magnitude, magnitude]^m (seeded), evaluates the exact energies, and
    solves the least-squares system over the m(m+1)/2 symmetric basis
    matrices.  sample_count must be at least m(m+1)/2 (default twice that).
    """
    m = comp.num_params
    k = m * (m + 1) // 2
    if sample_count is None:
        sample_count = 2 * k
    if sample_count < k:
        raise ValueError(f"sample_count {sample_count} < m(m+1)/2 = {k}")
    rng = np.random.default_rng(seed)
    samples = rng.uniform(-magnitude, magnitude, size=(sample_count, m))
    energies = np.array(
        [total_energy(comp, p, domain, material) for p in samples]
    )
    W, residual, rank = fit_quadratic_form(samples, energies)
    return WeightFit(W, sample_count, magnitude, residual, rank)
