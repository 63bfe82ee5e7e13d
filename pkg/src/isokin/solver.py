"""Inverse kinematics over modal parameters.

Three methods drive the weights until the state of interest reaches its
target: a damped Jacobian-pseudoinverse iteration for vector states, the
projected-gradient variant that additionally descends the configuration
cost p.p in the null space, and an SE(3) tracking method for pose targets.
All start from the undeformed parameters.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Any, Callable

import numpy as np
import scipy.linalg

from . import _backend
from .compose import CompositeDeformation
from .errors import (
    CheckFailed,
    NoConvergence,
    RankDeficient,
    SingularInput,
    StateUndefined,
    Unreachable,
)
from .liegroup import (
    BackboneCurve,
    RigidPose,
    _torsion_from_omega,
    adjoint,
    se3_exp,
    se3_log,
)


@dataclass
class IKOptions:
    """Solver knobs; defaults hold for all desk-scale cases."""

    max_iters: int = 100
    tol: float = 1e-8
    fd_step: float = 1e-6
    step_fraction: float = 0.1
    alpha: float = 0.1
    damping: float = 1e-8
    weight_matrix: np.ndarray | None = None
    trajectory_steps: int = 100
    dt: float | None = None

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")
        if not self.tol > 0.0:
            raise ValueError("tol must be positive")

    @property
    def step_dt(self) -> float:
        return self.dt if self.dt is not None else 1.0 / self.trajectory_steps


@dataclass(frozen=True)
class TraceRecord:
    iteration: int
    residual: float
    param_norm: float
    damped: bool


@dataclass
class IKResult:
    params: np.ndarray
    residual: float
    iterations: int
    converged: bool
    trace: list = field(default_factory=list)

    @property
    def damped_any(self) -> bool:
        return any(r.damped for r in self.trace)


@dataclass
class IKProblem:
    """One solve: a deformation, a state extractor, a target and options.

    ``state`` maps a composite (with parameters applied) to the state of
    interest; for solver tests and the rod shooting method ``deformation``
    may be None, in which case ``state`` maps the parameter vector directly.
    ``start`` defaults to the undeformed parameters (all weights zero).
    """

    deformation: CompositeDeformation | None
    state: Callable[..., Any]
    target: Any
    options: IKOptions = field(default_factory=IKOptions)
    start: np.ndarray | None = None

    def state_at(self, p):
        if self.deformation is None:
            return self.state(np.asarray(p, dtype=float))
        return self.state(self.deformation.with_params(p))

    def start_params(self) -> np.ndarray:
        if self.start is not None:
            return np.asarray(self.start, dtype=float).copy()
        if self.deformation is None:
            raise ValueError("problem without deformation needs explicit start")
        return np.zeros(self.deformation.num_params)


def numerical_jacobian(fn, p, fd_step=1e-6):
    """Centered-difference Jacobian of fn at p.

    Column j uses step h_j = fd_step * max(1, |p_j|).  Raises StateUndefined
    if a probe point leaves the valid domain (callers shrink fd_step once,
    then fail).
    """
    p = np.asarray(p, dtype=float)
    cols = []
    for j in range(len(p)):
        h = fd_step * max(1.0, abs(p[j]))
        pp = p.copy()
        pm = p.copy()
        pp[j] += h
        pm[j] -= h
        try:
            fp = np.asarray(fn(pp), dtype=float)
            fm = np.asarray(fn(pm), dtype=float)
        except SingularInput as exc:
            raise StateUndefined(f"probe at parameter {j} failed: {exc}") from exc
        cols.append((fp - fm) / (2.0 * h))
    return np.column_stack(cols) if cols else np.zeros((0, 0))


def pinv_weighted_info(J, W=None, damping=1e-8):
    """Weighted right pseudoinverse J+ = W^-1 J^T (J W^-1 J^T)^-1.

    Returns (J+, damped).  Requires n <= m.  Near rank deficiency the inner
    system is Tikhonov-damped and the fact reported; if damping still fails
    RankDeficient is raised.  An indefinite W is refused (CheckFailed), not
    silently repaired.
    """
    J = np.asarray(J, dtype=float)
    n, m = J.shape
    if n > m:
        raise ValueError(f"right pseudoinverse needs n <= m, got {n}x{m}")
    if W is None:
        X = J.T.copy()
    else:
        W = np.asarray(W, dtype=float)
        try:
            cho = scipy.linalg.cho_factor(W)
        except scipy.linalg.LinAlgError as exc:
            raise CheckFailed("weight matrix is not positive definite") from exc
        X = scipy.linalg.cho_solve(cho, J.T)
    G = J @ X
    if not np.isfinite(G).all():
        raise RankDeficient("Jacobian is not finite")
    try:
        lam, Q = np.linalg.eigh(0.5 * (G + G.T))
    except np.linalg.LinAlgError as exc:
        raise RankDeficient("cannot factor J W^-1 J^T") from exc
    if lam[-1] <= 0.0:
        # zero Jacobian: damp absolutely so the step is simply zero
        lam_floor = np.full_like(lam, max(damping, 1e-300))
        damped = True
    else:
        # relative damping floor: eigenvalues below damping * lam_max are
        # lifted to it, which bounds the gain near rank deficiency and
        # leaves well-conditioned systems exactly untouched
        floor = damping * lam[-1]
        damped = bool(lam[0] < floor)
        lam_floor = np.maximum(lam, floor)
    Jp = X @ (Q @ ((Q.T @ np.eye(n)) / lam_floor[:, None]))
    if not np.isfinite(Jp).all():
        raise RankDeficient("pseudoinverse is not finite")
    return Jp, damped


def pinv_weighted(J, W=None, damping=1e-8):
    return pinv_weighted_info(J, W, damping)[0]


def _jacobian_with_retry(fn, p, fd_step):
    try:
        return numerical_jacobian(fn, p, fd_step)
    except StateUndefined:
        return numerical_jacobian(fn, p, fd_step / 10.0)


def _check_dims(target, d):
    if np.shape(target) != np.shape(d):
        raise ValueError(
            f"target has shape {np.shape(target)} but the state returns "
            f"{np.shape(d)}"
        )


def ik_jacobian(problem: IKProblem) -> IKResult:
    """Pseudoinverse iteration p += J+ . step_fraction . (d_d - d(p))."""
    opt = problem.options
    target = np.asarray(problem.target, dtype=float)
    p = problem.start_params()
    trace = []
    d = np.asarray(problem.state_at(p), dtype=float)
    _check_dims(target, d)
    r = target - d
    res = float(np.linalg.norm(r))
    for it in range(opt.max_iters):
        if res < opt.tol:
            return IKResult(p, res, it, True, trace)
        J = _jacobian_with_retry(problem.state_at, p, opt.fd_step)
        Jp, damped = pinv_weighted_info(J, opt.weight_matrix, opt.damping)
        p = p + Jp @ (opt.step_fraction * r)
        d = np.asarray(problem.state_at(p), dtype=float)
        r = target - d
        res = float(np.linalg.norm(r))
        trace.append(TraceRecord(it + 1, res, float(np.linalg.norm(p)), damped))
    if res < opt.tol:
        return IKResult(p, res, opt.max_iters, True, trace)
    raise NoConvergence(res, opt.max_iters)


def ik_projected_gradient(problem: IKProblem) -> IKResult:
    """Pseudoinverse step plus null-space descent of the cost G(p) = p.p."""
    opt = problem.options
    target = np.asarray(problem.target, dtype=float)
    p = problem.start_params()
    trace = []
    d = np.asarray(problem.state_at(p), dtype=float)
    _check_dims(target, d)
    r = target - d
    res = float(np.linalg.norm(r))
    for it in range(opt.max_iters):
        if res < opt.tol:
            return IKResult(p, res, it, True, trace)
        J = _jacobian_with_retry(problem.state_at, p, opt.fd_step)
        Jp, damped = pinv_weighted_info(J, opt.weight_matrix, opt.damping)
        step = Jp @ (opt.step_fraction * r)
        if J.shape[0] < len(p):
            # null-space descent of G(p) = p.p; the null space is empty for
            # square or tall systems and the term vanishes identically
            Z = np.eye(len(p)) - Jp @ J
            step = step - opt.alpha * (Z @ (2.0 * p))
        p = p + step
        d = np.asarray(problem.state_at(p), dtype=float)
        r = target - d
        res = float(np.linalg.norm(r))
        trace.append(TraceRecord(it + 1, res, float(np.linalg.norm(p)), damped))
    if res < opt.tol:
        return IKResult(p, res, opt.max_iters, True, trace)
    raise NoConvergence(res, opt.max_iters)


def _pose_jacobian(state_at, p, g: RigidPose, fd_step):
    """Centered-difference Jacobian of the body-frame twist coordinates."""
    g_inv = g.inverse()

    def body_coords(q):
        return se3_log(g_inv @ state_at(q))

    return _jacobian_with_retry(body_coords, p, fd_step)


def ik_se3_track(problem: IKProblem) -> IKResult:
    """Track an SE(3) trajectory from the start pose to the target pose.

    The trajectory is the one-parameter interpolant
    g_p(t) = g(p0) . exp(t log(g(p0)^-1 g_target)).  Each iteration applies
    the body-velocity term dt . J+ Ad (g_p^-1 dg_p/dt) and the correction
    J+ Ad log(g^-1 g_p); once the trajectory is exhausted only the
    correction remains.  Terminates when |log(g^-1 g_target)| < tol.
    """
    opt = problem.options
    target: RigidPose = problem.target
    p = problem.start_params()
    g0 = problem.state_at(p)
    xi_traj = se3_log(g0.inverse() @ target)
    dt = opt.step_dt
    trace = []
    for it in range(opt.max_iters):
        g = problem.state_at(p)
        err = se3_log(g.inverse() @ target)
        res = float(np.linalg.norm(err))
        if res < opt.tol:
            return IKResult(p, res, it, True, trace)
        J = _pose_jacobian(problem.state_at, p, g, opt.fd_step)
        Jp, damped = pinv_weighted_info(J, opt.weight_matrix, opt.damping)
        if it < opt.trajectory_steps:
            t_k = min((it + 1) * dt, 1.0)
            g_wp = g0 @ se3_exp(t_k * xi_traj)
            ad = adjoint(g.inverse() @ g_wp)
            p = p + dt * (Jp @ (ad @ xi_traj)) + Jp @ (
                ad @ se3_log(g.inverse() @ g_wp)
            )
        else:
            ad = adjoint(g.inverse() @ target)
            p = p + Jp @ (ad @ err)
        trace.append(TraceRecord(it + 1, res, float(np.linalg.norm(p)), damped))
    g = problem.state_at(p)
    res = float(np.linalg.norm(se3_log(g.inverse() @ target)))
    if res < opt.tol:
        return IKResult(p, res, opt.max_iters, True, trace)
    raise NoConvergence(res, opt.max_iters)


@dataclass
class RodShootingResult:
    params: np.ndarray
    curve: BackboneCurve
    ik: IKResult


def _integrate_rod_curve(p, length, steps) -> BackboneCurve:
    h = length / steps
    frames, pos, omega, omega_deriv = _backend.integrate_rod(p[:3], p[3:], h, steps)
    curvature = np.hypot(omega[:, 0], omega[:, 1])
    torsion = _torsion_from_omega(omega, omega_deriv)
    return BackboneCurve(
        s=np.linspace(0.0, length, steps + 1),
        pos=pos,
        frames=frames,
        curvature=curvature,
        torsion=torsion,
        length=float(length),
        omega=omega,
        omega_deriv=omega_deriv,
    )


def rod_shooting(
    target: RigidPose, length: float, steps: int = 1000, options: IKOptions | None = None
) -> RodShootingResult:
    """Solve the inextensible-rod boundary value problem by shooting.

    The six parameters are the base angular velocity omega(0) and the
    constant Lagrange multiplier lambda of the coupled ODE
    dR/ds = R hat(omega), dt/ds = R e3,
    d(omega)/ds = (-lambda.R e2, lambda.R e1, 0).
    The outer loop is the SE(3) tracking method over those parameters.
    Returns the parameters and the solved backbone curve (feeds Bend3D).
    """
    opt = options if options is not None else IKOptions()
    if float(np.linalg.norm(target.translation)) > length + opt.tol:
        raise Unreachable(
            f"target at distance {np.linalg.norm(target.translation):.6g} cm "
            f"exceeds rod length {length:.6g} cm"
        )
    if opt.weight_matrix is None:
        # lambda moves the endpoint ~L^2 harder than omega(0) does and is
        # structurally null along the tangent at the straight start; weight
        # it like the nondimensional lambda L^2 so tracking stays stable
        opt = replace(opt, weight_matrix=np.diag([1.0, 1.0, 1.0] + [length**4] * 3))
    h = length / steps

    def end_pose(p):
        frames, pos, _, _ = _backend.integrate_rod(p[:3], p[3:], h, steps)
        return RigidPose(frames[-1], pos[-1])

    problem = IKProblem(
        deformation=None,
        state=end_pose,
        target=target,
        options=opt,
        start=np.zeros(6),
    )
    result = ik_se3_track(problem)
    curve = _integrate_rod_curve(result.params, length, steps)
    return RodShootingResult(result.params, curve, result)
