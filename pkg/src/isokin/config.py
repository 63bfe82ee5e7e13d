"""Config files (INI) and case assembly.

Sections: [case], [geometry], [material], [modes], [solver], [targets],
optional [quadrature] and [weightfit].  Rotational targets rx/ry/rz are
so(3) exponential coordinates (rad): the target rotation matrix is
exp(hat([rx, ry, rz])).  All lengths cm, moduli kPa.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, replace

import numpy as np

from .compose import CompositeDeformation
from .errors import ConfigError
from .harness import (
    block_surface_grid,
    cylinder_surface_grid,
    make_planar_state,
    make_pose_state,
    make_top_plane_state,
    make_volume_state,
)
from .liegroup import RigidPose, so3_exp
from .mechanics import (
    BlockDomain,
    CylShellDomain,
    Material,
    SolidCylDomain,
)
from .modal import make_basis
from .primitives import Bend2D, Bend3D, Elongation, Shear, Source, Twist
from .solver import (
    IKOptions,
    IKProblem,
    ik_jacobian,
    ik_projected_gradient,
    ik_se3_track,
    rod_shooting,
)

CASES = ("chamber", "rod2d", "rod3d", "block")
_METHODS = {
    "chamber": ("jacobian", "projgrad"),
    "rod2d": ("jacobian", "projgrad", "se3"),
    "block": ("jacobian", "projgrad", "se3"),
    "rod3d": ("se3",),
}
_DEFAULT_METHOD = {
    "chamber": "jacobian",
    "rod2d": "jacobian",
    "block": "jacobian",
    "rod3d": "se3",
}


@dataclass(frozen=True)
class BlockGeometry:
    width_x: float = 3.0
    width_y: float = 3.0
    height: float = 6.0


@dataclass(frozen=True)
class ChamberGeometry:
    inner_radius: float = 1.6
    wall_thickness: float = 0.2
    height: float = 10.0

    @property
    def outer_radius(self) -> float:
        return self.inner_radius + self.wall_thickness


@dataclass(frozen=True)
class RodGeometry:
    radius: float = 0.45
    height: float = 15.0


@dataclass
class WeightFitSettings:
    samples: int | None = None
    magnitude: float = 1e-3
    seed: int = 0


@dataclass
class CaseConfig:
    case: str
    geometry: object
    material: Material
    mode_counts: dict = field(default_factory=dict)
    method: str = "jacobian"
    options: IKOptions = field(default_factory=IKOptions)
    backbone_steps: int = 1000
    targets: dict = field(default_factory=dict)
    quadrature: tuple | None = None
    weightfit: WeightFitSettings = field(default_factory=WeightFitSettings)
    stage_order: tuple | None = None
    source_text: str = ""

    @property
    def height(self) -> float:
        return self.geometry.height


def _get(parser, section, key, cast, default=None):
    if not parser.has_option(section, key):
        if default is None:
            raise ConfigError(f"missing [{section}] {key}")
        return default
    raw = parser.get(section, key)
    try:
        return cast(raw)
    except ValueError as exc:
        raise ConfigError(f"bad value for [{section}] {key}: {raw!r}") from exc


def load_config(path) -> CaseConfig:
    parser = configparser.ConfigParser()
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
        parser.read_string(text)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc

    case = _get(parser, "case", "type", str)
    if case not in CASES:
        raise ConfigError(f"unknown case {case!r}; expected one of {CASES}")
    stage_order = None
    if parser.has_option("case", "stage_order"):
        stage_order = tuple(
            name.strip()
            for name in parser.get("case", "stage_order").split(",")
            if name.strip()
        )

    if case == "block":
        geometry = BlockGeometry(
            width_x=_get(parser, "geometry", "width_x", float, 3.0),
            width_y=_get(parser, "geometry", "width_y", float, 3.0),
            height=_get(parser, "geometry", "height", float, 6.0),
        )
        positive = (geometry.width_x, geometry.width_y, geometry.height)
    elif case == "chamber":
        geometry = ChamberGeometry(
            inner_radius=_get(parser, "geometry", "inner_radius", float, 1.6),
            wall_thickness=_get(parser, "geometry", "wall_thickness", float, 0.2),
            height=_get(parser, "geometry", "height", float, 10.0),
        )
        positive = (geometry.inner_radius, geometry.wall_thickness, geometry.height)
    else:
        geometry = RodGeometry(
            radius=_get(parser, "geometry", "radius", float, 0.45),
            height=_get(parser, "geometry", "height", float, 15.0),
        )
        positive = (geometry.radius, geometry.height)
    if any(v <= 0.0 for v in positive):
        raise ConfigError("geometry dimensions must be positive")

    material = Material(
        c10=_get(parser, "material", "c10", float, 5.6),
        c01=_get(parser, "material", "c01", float, 6.3),
    )

    mode_counts = {}
    if parser.has_section("modes"):
        for key in parser.options("modes"):
            mode_counts[key] = _get(parser, "modes", key, int)

    method = _get(parser, "solver", "method", str, _DEFAULT_METHOD[case])
    if method not in _METHODS[case]:
        raise ConfigError(
            f"method {method!r} not available for case {case!r}; "
            f"choose from {_METHODS[case]}"
        )
    try:
        options = IKOptions(
            max_iters=_get(parser, "solver", "max_iters", int, 100),
            tol=_get(parser, "solver", "tol", float, 1e-8),
            fd_step=_get(parser, "solver", "fd_step", float, 1e-6),
            step_fraction=_get(parser, "solver", "step_fraction", float, 0.1),
            alpha=_get(parser, "solver", "alpha", float, 0.1),
            damping=_get(parser, "solver", "damping", float, 1e-8),
            trajectory_steps=_get(parser, "solver", "trajectory_steps", int, 100),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    backbone_steps = _get(parser, "solver", "backbone_steps", int, 1000)

    targets = {}
    if parser.has_section("targets"):
        for key in parser.options("targets"):
            targets[key] = _get(parser, "targets", key, float)
    _required_targets(case, targets)

    quadrature = None
    if parser.has_section("quadrature"):
        quadrature = (
            _get(parser, "quadrature", "n1", int),
            _get(parser, "quadrature", "n2", int),
            _get(parser, "quadrature", "n3", int),
        )

    weightfit = WeightFitSettings()
    if parser.has_section("weightfit"):
        weightfit = WeightFitSettings(
            samples=(
                _get(parser, "weightfit", "samples", int)
                if parser.has_option("weightfit", "samples")
                else None
            ),
            magnitude=_get(parser, "weightfit", "magnitude", float, 1e-3),
            seed=_get(parser, "weightfit", "seed", int, 0),
        )

    return CaseConfig(
        case=case,
        geometry=geometry,
        material=material,
        mode_counts=mode_counts,
        method=method,
        options=options,
        backbone_steps=backbone_steps,
        targets=targets,
        quadrature=quadrature,
        weightfit=weightfit,
        stage_order=stage_order,
        source_text=text,
    )


def _required_targets(case, targets):
    required = {
        "chamber": ("volume",),
        "rod2d": ("dy", "dz", "rx"),
        "rod3d": ("dx", "dy", "dz", "rx", "ry", "rz"),
        "block": ("dx", "dy", "dz", "rx", "ry", "rz"),
    }[case]
    missing = [k for k in required if k not in targets]
    if missing:
        raise ConfigError(f"case {case!r} needs targets {missing}")


def build_composite(cfg: CaseConfig) -> CompositeDeformation | None:
    """Composite for the case; rod3d has none (its curve is solved)."""
    h = cfg.height
    if cfg.case == "chamber":
        basis = make_basis("chamber", h, cfg.mode_counts.get("source"))
        return CompositeDeformation((Source(basis),))
    if cfg.case == "rod2d":
        basis = make_basis("rod2d", h, cfg.mode_counts.get("bend"))
        return CompositeDeformation((Bend2D(basis),))
    if cfg.case == "block":
        named = {
            "twist": Twist(make_basis("block-twist", h)),
            "stretch": Elongation(make_basis("block-stretch-rate", h), h),
            "shear": Shear(make_basis("block-shear", h), make_basis("block-shear", h)),
            "bend": Bend2D(make_basis("block-bend", h, cfg.mode_counts.get("bend"))),
        }
        order = cfg.stage_order or ("twist", "stretch", "shear", "bend")
        if sorted(order) != sorted(named):
            raise ConfigError(
                f"stage_order must be a permutation of {sorted(named)}, got {order}"
            )
        stages = tuple(named[n] for n in order)
        return CompositeDeformation(
            stages, reference_height=h, rotate_bend_plane=True
        )
    return None


def build_domain(cfg: CaseConfig):
    q = cfg.quadrature
    if cfg.case == "block":
        g = cfg.geometry
        n = q or (20, 20, 20)
        return BlockDomain(g.width_x, g.width_y, g.height, *n)
    if cfg.case == "chamber":
        g = cfg.geometry
        n = q or (8, 32, 40)
        return CylShellDomain(g.inner_radius, g.outer_radius, g.height, *n)
    g = cfg.geometry
    n = q or (12, 16, 60)
    return SolidCylDomain(g.radius, g.height, *n)


def target_pose(cfg: CaseConfig) -> RigidPose:
    t = cfg.targets
    translation = np.array(
        [t.get("dx", 0.0), t.get("dy", 0.0), t.get("dz", 0.0)]
    ) + np.array([0.0, 0.0, cfg.height])
    rotation = so3_exp(
        np.array([t.get("rx", 0.0), t.get("ry", 0.0), t.get("rz", 0.0)])
    )
    return RigidPose(rotation, translation)


def target_vector(cfg: CaseConfig) -> np.ndarray:
    t = cfg.targets
    if cfg.case == "chamber":
        return np.array([t["volume"]])
    if cfg.case == "rod2d":
        return np.array([t["dy"], t["dz"], t["rx"]])
    return np.array([t["dx"], t["dy"], t["dz"], t["rx"], t["ry"], t["rz"]])


def build_problem(cfg: CaseConfig, weight_matrix=None) -> IKProblem:
    comp = build_composite(cfg)
    if comp is None:
        raise ConfigError("rod3d is solved by shooting, not a modal problem")
    options = cfg.options
    if weight_matrix is not None:
        options = replace(options, weight_matrix=weight_matrix)
    if cfg.method == "se3":
        return IKProblem(comp, make_pose_state(cfg.height), target_pose(cfg), options)
    if cfg.case == "chamber":
        state = make_volume_state()
    elif cfg.case == "rod2d":
        state = make_planar_state(cfg.height)
    else:
        state = make_top_plane_state(cfg.height)
    return IKProblem(comp, state, target_vector(cfg), options)


@dataclass
class SolveOutcome:
    params: np.ndarray
    residual: float
    iterations: int
    trace: list
    composite: CompositeDeformation | None
    curve: object = None

    @property
    def damped_any(self) -> bool:
        return any(r.damped for r in self.trace)


def run_case(cfg: CaseConfig, weight_matrix=None) -> SolveOutcome:
    """Solve the configured case; may raise NoConvergence/OrderViolation."""
    if cfg.case == "rod3d":
        options = cfg.options
        if weight_matrix is not None:
            options = replace(options, weight_matrix=weight_matrix)
        res = rod_shooting(target_pose(cfg), cfg.height, cfg.backbone_steps, options)
        return SolveOutcome(
            res.params, res.ik.residual, res.ik.iterations, res.ik.trace,
            CompositeDeformation((Bend3D(res.curve),)), res.curve,
        )
    problem = build_problem(cfg, weight_matrix)
    solver = {
        "jacobian": ik_jacobian,
        "projgrad": ik_projected_gradient,
        "se3": ik_se3_track,
    }[cfg.method]
    result = solver(problem)
    solved = problem.deformation.with_params(result.params)
    return SolveOutcome(
        result.params, result.residual, result.iterations, result.trace, solved
    )


def reference_surface_grid(cfg: CaseConfig, nu: int, nv: int):
    if cfg.case == "block":
        g = cfg.geometry
        return block_surface_grid(g.width_x, g.width_y, g.height, nu, nv)
    if cfg.case == "chamber":
        g = cfg.geometry
        return cylinder_surface_grid(g.outer_radius, g.height, nu, nv)
    g = cfg.geometry
    return cylinder_surface_grid(g.radius, g.height, nu, nv)


__all__ = [
    "BlockGeometry",
    "CaseConfig",
    "ChamberGeometry",
    "RodGeometry",
    "SolveOutcome",
    "WeightFitSettings",
    "build_composite",
    "build_domain",
    "build_problem",
    "load_config",
    "reference_surface_grid",
    "run_case",
    "target_pose",
    "target_vector",
]
