"""Case-study state extractors, node data, comparison metric and exports.

The node CSV format is the bridge to external FEM exports: header line
``id,x,y,z``, comma separated, one node per line, coordinates in cm,
LF line endings, UTF-8.  Floats are written with 17 significant digits so a
round-trip is bit exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DuplicateId,
    IdMismatch,
    NegativeCavity,
    NonFinite,
    NonRigidTopPlane,
    ParseError,
    ZeroDisplacement,
)
from .liegroup import RigidPose, so3_log
from .modal import ModalFunction
from .primitives import Source

_RIGID_TOL = 1e-6


def top_plane_pose(comp, height: float) -> RigidPose:
    """Pose of the (rigid) top plane of a deformed body of the given height.

    Applies the deformation to the top-plane center and two orthogonal unit
    in-plane offsets, then builds the rotation by Gram-Schmidt from the
    deformed edge vectors.  If the edges are no longer unit length the
    boundary conditions are violated and NonRigidTopPlane is raised.
    """
    probes = np.array(
        [
            [0.0, 0.0, height],
            [1.0, 0.0, height],
            [0.0, 1.0, height],
        ]
    )
    img = comp.apply(probes)
    center = img[0]
    v1 = img[1] - center
    v2 = img[2] - center
    n1 = np.linalg.norm(v1)
    n2 = np.linalg.norm(v2)
    if abs(n1 - 1.0) > _RIGID_TOL or abs(n2 - 1.0) > _RIGID_TOL:
        raise NonRigidTopPlane(
            f"top-plane edge lengths {n1:.8f}, {n2:.8f} deviate from 1"
        )
    r1 = v1 / n1
    r2 = v2 - (v2 @ r1) * r1
    r2 = r2 / np.linalg.norm(r2)
    r3 = np.array(
        [
            r1[1] * r2[2] - r1[2] * r2[1],
            r1[2] * r2[0] - r1[0] * r2[2],
            r1[0] * r2[1] - r1[1] * r2[0],
        ]
    )
    return RigidPose(np.column_stack([r1, r2, r3]), center)


def make_pose_state(height: float):
    """State extractor: composite -> top-plane pose."""

    def state(comp) -> RigidPose:
        return top_plane_pose(comp, height)

    state.name = "top_plane_pose"
    return state


def make_top_plane_state(height: float):
    """State extractor: composite -> 6-vector (displacement, rotation log)."""

    def state(comp):
        pose = top_plane_pose(comp, height)
        disp = pose.translation - np.array([0.0, 0.0, height])
        return np.concatenate([disp, so3_log(pose.rotation)])

    state.name = "top_plane_6dof"
    return state


def make_planar_state(height: float):
    """State extractor for in-plane bending: (dy, dz, rotation about x)."""

    def state(comp):
        pose = top_plane_pose(comp, height)
        disp = pose.translation - np.array([0.0, 0.0, height])
        return np.array([disp[1], disp[2], so3_log(pose.rotation)[0]])

    state.name = "top_plane_planar"
    return state


def chamber_volume_change(strength: ModalFunction, length: float) -> float:
    """Enclosed-volume change pi * int_0^L m_c(x3) dx3 of the source map.

    Exact for the sine bases.  The strength must be non-negative over the
    span (the cavity cannot shrink past the wall), else NegativeCavity.
    """
    probe = np.linspace(0.0, length, 513)
    if np.min(strength(probe)) < -1e-12:
        raise NegativeCavity("source strength negative inside the span")
    return float(np.pi * strength.integral(length))


def make_volume_state():
    """State extractor: composite -> [enclosed volume change] (cm^3).

    Uses the raw analytic integral (finite-difference probes may take the
    strength infinitesimally negative; the sign guard belongs to
    chamber_volume_change, which reports physical results).
    """

    def state(comp):
        for stage in comp.stages:
            if isinstance(stage, Source):
                length = stage.strength.mode_scale()
                return np.array([np.pi * stage.strength.integral(length)])
        raise ValueError("composition has no source stage")

    state.name = "chamber_volume"
    return state


def gas_corrected_volume(
    v_before: float, p_before: float, p_after: float, v_injected: float
) -> float:
    """Ideal-gas corrected chamber volume change V_d = V_i - (V_b - V_a).

    V_b is the total air volume before inflation at pressure P_b, V_i the
    injected volume, P_a the pressure after; V_a = V_b P_b / P_a.
    """
    if p_before <= 0.0 or p_after <= 0.0:
        raise ValueError("pressures must be positive")
    v_after = v_before * p_before / p_after
    return v_injected - (v_before - v_after)


@dataclass(frozen=True)
class NodeSet:
    """One labelled point cloud with integer node ids."""

    ids: np.ndarray
    points: np.ndarray
    label: str = ""

    def __post_init__(self):
        ids = np.asarray(self.ids, dtype=int)
        pts = np.asarray(self.points, dtype=float).reshape(len(ids), 3)
        object.__setattr__(self, "ids", ids)
        object.__setattr__(self, "points", pts)

    def __len__(self):
        return len(self.ids)


@dataclass
class MetricResult:
    E: float
    ids: np.ndarray
    node_errors: np.ndarray       # e_i = |a_i - f_i|
    node_displacements: np.ndarray  # d_i = |a_i - o_i|


def error_metric(reference: NodeSet, theirs: NodeSet, ours: NodeSet) -> MetricResult:
    """Displacement-normalized RMS difference between two deformed clouds.

    E = sqrt( sum |a_i - f_i|^2 / sum |a_i - o_i|^2 ) with o the reference,
    a the external (FEM/experiment) result and f ours.  Sets must be
    id-aligned; a zero total displacement leaves E undefined.  The sums are
    exactly rounded (fsum over per-node squared distances), so the metric
    agrees bit for bit with a naive per-node summation.
    """
    for other in (theirs, ours):
        if len(other) != len(reference) or not np.array_equal(
            other.ids, reference.ids
        ):
            raise IdMismatch(
                f"node sets {other.label!r} and {reference.label!r} are not id-aligned"
            )
    diff = theirs.points - ours.points
    disp = theirs.points - reference.points
    e2 = np.einsum("ni,ni->n", diff, diff)
    d2 = np.einsum("ni,ni->n", disp, disp)
    denom = math.fsum(d2)
    if denom <= 0.0:
        raise ZeroDisplacement("reference displacement is zero")
    E = math.sqrt(math.fsum(e2) / denom)
    return MetricResult(E, reference.ids.copy(), np.sqrt(e2), np.sqrt(d2))


def ingest_nodes(path, label: str = "") -> NodeSet:
    """Parse a node CSV (strict: finite coordinates, unique ids)."""
    ids = []
    pts = []
    seen = set()
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline()
        if header.strip() != "id,x,y,z":
            raise ParseError(1, f"expected header 'id,x,y,z', got {header.strip()!r}")
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            fields = line.split(",")
            if len(fields) != 4:
                raise ParseError(lineno, f"expected 4 fields, got {len(fields)}")
            try:
                node_id = int(fields[0])
                xyz = [float(v) for v in fields[1:]]
            except ValueError as exc:
                raise ParseError(lineno, str(exc)) from exc
            if not all(np.isfinite(xyz)):
                raise NonFinite(lineno, f"non-finite coordinate in {line!r}")
            if node_id in seen:
                raise DuplicateId(lineno, f"duplicate node id {node_id}")
            seen.add(node_id)
            ids.append(node_id)
            pts.append(xyz)
    return NodeSet(np.array(ids, dtype=int), np.array(pts, dtype=float), label)


def export_nodes_csv(path, ids, points) -> None:
    """Write a node CSV; 17 significant digits make the round-trip exact."""
    points = np.asarray(points, dtype=float)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("id,x,y,z\n")
        for node_id, (x, y, z) in zip(ids, points):
            fh.write(f"{int(node_id)},{x:.17g},{y:.17g},{z:.17g}\n")


def export_surface_obj(path, grid) -> None:
    """Write an nu x nv structured surface grid as OBJ vertices + quads."""
    grid = np.asarray(grid, dtype=float)
    nu, nv = grid.shape[:2]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for i in range(nu):
            for j in range(nv):
                x, y, z = grid[i, j]
                fh.write(f"v {x:.17g} {y:.17g} {z:.17g}\n")
        for i in range(nu - 1):
            for j in range(nv - 1):
                a = i * nv + j + 1
                b = (i + 1) * nv + j + 1
                fh.write(f"f {a} {b} {b + 1} {a + 1}\n")


def block_surface_grid(width_x, width_y, height, nu, nv):
    """Lateral surface of the block: nu points around the perimeter loop,
    nv heights."""
    half_x, half_y = width_x / 2.0, width_y / 2.0
    corners = np.array(
        [
            [half_x, -half_y],
            [half_x, half_y],
            [-half_x, half_y],
            [-half_x, -half_y],
        ]
    )
    seg = np.array([width_y, width_x, width_y, width_x])
    total = seg.sum()
    ts = np.arange(nu) * total / nu
    ring = np.empty((nu, 2))
    for i, t in enumerate(ts):
        k = 0
        while t > seg[k]:
            t -= seg[k]
            k += 1
        frac = t / seg[k]
        ring[i] = corners[k] + frac * (corners[(k + 1) % 4] - corners[k])
    zs = np.linspace(0.0, height, nv)
    grid = np.empty((nu, nv, 3))
    grid[:, :, 0] = ring[:, 0:1]
    grid[:, :, 1] = ring[:, 1:2]
    grid[:, :, 2] = zs[None, :]
    return grid


def cylinder_surface_grid(radius, height, nu, nv):
    """Lateral cylinder surface (rod, or chamber outer wall)."""
    phis = np.arange(nu) * 2.0 * np.pi / nu
    zs = np.linspace(0.0, height, nv)
    grid = np.empty((nu, nv, 3))
    grid[:, :, 0] = radius * np.cos(phis)[:, None]
    grid[:, :, 1] = radius * np.sin(phis)[:, None]
    grid[:, :, 2] = zs[None, :]
    return grid


def block_surface_mask(points, width_x, width_y, height, tol=1e-6):
    pts = np.asarray(points, dtype=float)
    return (
        (np.abs(np.abs(pts[:, 0]) - width_x / 2.0) <= tol)
        | (np.abs(np.abs(pts[:, 1]) - width_y / 2.0) <= tol)
        | (np.abs(pts[:, 2]) <= tol)
        | (np.abs(pts[:, 2] - height) <= tol)
    )


def cylinder_surface_mask(points, radii, height, tol=1e-6):
    """Boundary nodes of a (shell or solid) cylinder; radii is an iterable of
    boundary radii (one for a rod, two for a chamber wall)."""
    pts = np.asarray(points, dtype=float)
    r = np.hypot(pts[:, 0], pts[:, 1])
    mask = (np.abs(pts[:, 2]) <= tol) | (np.abs(pts[:, 2] - height) <= tol)
    for rb in radii:
        mask |= np.abs(r - rb) <= tol
    return mask
