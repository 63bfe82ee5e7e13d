"""Reduced-order soft-body deformation via volume-preserving primitives.

Large deformations are modeled as compositions of closed-form, locally
volume-preserving maps parameterized by modal weights; boundary conditions
are satisfied by inverse kinematics over those weights, optionally biased
toward low Mooney-Rivlin strain energy.
"""

__version__ = "0.1.0"

from ._backend import backend_name
from .compose import CompositeDeformation, validate_order
from .errors import IsokinError
from .harness import (
    NodeSet,
    chamber_volume_change,
    error_metric,
    export_nodes_csv,
    export_surface_obj,
    gas_corrected_volume,
    ingest_nodes,
    top_plane_pose,
)
from .liegroup import (
    BackboneCurve,
    RigidPose,
    adjoint,
    hat3,
    hat6,
    integrate_backbone,
    minimal_twist_angle,
    se3_exp,
    se3_log,
    so3_exp,
    so3_log,
    vee3,
    vee6,
)
from .mechanics import (
    BlockDomain,
    CylShellDomain,
    Material,
    SolidCylDomain,
    WeightFit,
    fit_quadratic_form,
    fit_weight_matrix,
    invariants,
    mr_density,
    symmetric_basis_matrices,
    total_energy,
)
from .modal import BasisMode, ModalFunction, make_basis
from .primitives import (
    Bend2D,
    Bend3D,
    DeformationPrimitive,
    Elongation,
    Shear,
    Source,
    Twist,
    bend_profile,
)
from .solver import (
    IKOptions,
    IKProblem,
    IKResult,
    ik_jacobian,
    ik_projected_gradient,
    ik_se3_track,
    numerical_jacobian,
    pinv_weighted,
    pinv_weighted_info,
    rod_shooting,
)

__all__ = [
    "BackboneCurve",
    "BasisMode",
    "Bend2D",
    "Bend3D",
    "BlockDomain",
    "CompositeDeformation",
    "CylShellDomain",
    "DeformationPrimitive",
    "Elongation",
    "IKOptions",
    "IKProblem",
    "IKResult",
    "IsokinError",
    "Material",
    "ModalFunction",
    "NodeSet",
    "RigidPose",
    "Shear",
    "SolidCylDomain",
    "Source",
    "Twist",
    "WeightFit",
    "adjoint",
    "backend_name",
    "bend_profile",
    "chamber_volume_change",
    "error_metric",
    "export_nodes_csv",
    "export_surface_obj",
    "fit_quadratic_form",
    "fit_weight_matrix",
    "gas_corrected_volume",
    "hat3",
    "hat6",
    "ik_jacobian",
    "ik_projected_gradient",
    "ik_se3_track",
    "ingest_nodes",
    "integrate_backbone",
    "invariants",
    "make_basis",
    "minimal_twist_angle",
    "mr_density",
    "numerical_jacobian",
    "pinv_weighted",
    "pinv_weighted_info",
    "rod_shooting",
    "se3_exp",
    "se3_log",
    "so3_exp",
    "so3_log",
    "symmetric_basis_matrices",
    "top_plane_pose",
    "total_energy",
    "validate_order",
    "vee3",
    "vee6",
]
