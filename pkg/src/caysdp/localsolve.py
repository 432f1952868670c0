"""Gauss-Newton local solvers on SO(3)/SE(3) with Cayley left perturbations.

All four problems share one engine: a problem-specific routine returns the
weighted residual blocks with their Jacobians with respect to the
perturbations ``T <- cay(eps^) T`` (or ``C <- cay(psi^) C``) and additive twist
updates; the engine solves the normal equations ``(J^T W J) dx = -J^T W r`` and
retracts.

Jacobians of a residual ``xi = cay^-1(X)^v``:

* averaging terms ``X = T T_meas^-1``: ``J_c^-1(xi)``
* relative terms ``X = T_{k+1} T_k^-1 (T_meas)^-1``:
  ``J_c^-1(xi) [-Ad(T_{k+1} T_k^-1), I]`` over ``(eps_k, eps_{k+1})``
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from . import liegroup as lg
from . import problems as pb

log = logging.getLogger(__name__)


@dataclass
class GnOptions:
    max_iter: int = 200
    step_tol: float = 1e-6
    cost_tol: float = 1e-10
    line_search: bool | None = None  # None: on for trajectories, off for averaging
    backtrack: float = 0.5
    armijo: float = 1e-4
    max_backtracks: int = 40

    def __post_init__(self):
        if self.step_tol <= 0 or self.cost_tol <= 0:
            raise ValueError("tolerances must be positive")
        if not 0 < self.backtrack < 1:
            raise ValueError("backtrack factor must be in (0, 1)")
        if not 0 < self.armijo < 1:
            raise ValueError("sufficient-decrease constant must be in (0, 1)")


@dataclass
class GnResult:
    estimate: object
    cost: float
    iterations: int
    converged: bool
    trace: list = field(default_factory=list)
    step_norm: float = np.nan
    grad_norm: float = np.nan
    message: str = ""


# ---------------------------------------------------------------------------
# residual stacks
# ---------------------------------------------------------------------------


@dataclass
class _Block:
    r: np.ndarray
    W: np.ndarray
    jac: list  # (variable slot, d x dim block)


def _dims(problem):
    """Tangent dimension of every variable slot."""
    if isinstance(problem, pb.RotationAveragingProblem):
        return [3]
    if isinstance(problem, pb.PoseAveragingProblem):
        return [6]
    K = problem.size
    if isinstance(problem, pb.ContinuousTrajectoryProblem):
        return [6] * (2 * K)
    return [6] * K


def _blocks(problem, est):
    if isinstance(problem, pb.RotationAveragingProblem):
        out = []
        for Cm, W in zip(problem.measurements, problem.weights):
            phi = lg.cay_inv_so3(est @ Cm.T)
            out.append(_Block(phi, W, [(0, lg.jac_cay_so3_inv(phi))]))
        return out
    if isinstance(problem, pb.PoseAveragingProblem):
        out = []
        for Tm, W in zip(problem.measurements, problem.weights):
            xi = lg.cay_inv_se3(est @ lg.pose_inv(Tm))
            out.append(_Block(xi, W, [(0, lg.jac_cay_se3_inv(xi))]))
        return out
    poses = est.poses
    if isinstance(problem, pb.DiscreteTrajectoryProblem):
        out = []
        for k, (Tm, W) in enumerate(zip(problem.abs_measurements, problem.abs_weights)):
            xi = lg.cay_inv_se3(poses[k] @ lg.pose_inv(Tm))
            out.append(_Block(xi, W, [(k, lg.jac_cay_se3_inv(xi))]))
        for k, (Tm, W) in enumerate(zip(problem.rel_measurements, problem.rel_weights)):
            rel = poses[k + 1] @ lg.pose_inv(poses[k])
            xi = lg.cay_inv_se3(rel @ lg.pose_inv(Tm))
            Ji = lg.jac_cay_se3_inv(xi)
            out.append(_Block(xi, W, [(k, -Ji @ lg.adjoint(rel)), (k + 1, Ji)]))
        return out
    if isinstance(problem, pb.ContinuousTrajectoryProblem):
        K = problem.size
        tw = est.twists
        out = []
        for k, Tm, W in zip(problem.meas_indices, problem.measurements, problem.weights):
            xi = lg.cay_inv_se3(poses[k] @ lg.pose_inv(Tm))
            out.append(_Block(xi, W, [(k, lg.jac_cay_se3_inv(xi))]))
        out.append(
            _Block(problem.prior_twist - tw[0], np.linalg.inv(problem.prior_cov), [(K, -np.eye(6))])
        )
        I6 = np.eye(6)
        Z6 = np.zeros((6, 6))
        for k, Qi in enumerate(pb.prior_informations(problem)):
            dt = problem.times[k + 1] - problem.times[k]
            rel = poses[k + 1] @ lg.pose_inv(poses[k])
            xi = lg.cay_inv_se3(rel)
            Ji = lg.jac_cay_se3_inv(xi)
            e = np.concatenate([dt * tw[k] - xi, tw[k] - tw[k + 1]])
            jac = [
                (k, np.vstack([Ji @ lg.adjoint(rel), Z6])),
                (k + 1, np.vstack([-Ji, Z6])),
                (K + k, np.vstack([dt * I6, I6])),
                (K + k + 1, np.vstack([Z6, -I6])),
            ]
            out.append(_Block(e, Qi, jac))
        return out
    raise TypeError(f"unknown problem type {type(problem).__name__}")


def residual_stack(problem, est):
    """Stacked residual ``r``, block-diagonal weight ``W`` and Jacobian ``J``."""
    blocks = _blocks(problem, est)
    dims = _dims(problem)
    offs = np.concatenate([[0], np.cumsum(dims)])
    r = np.concatenate([b.r for b in blocks])
    W = sla.block_diag(*[b.W for b in blocks])
    J = np.zeros((len(r), offs[-1]))
    row = 0
    for b in blocks:
        d = len(b.r)
        for slot, Jb in b.jac:
            J[row : row + d, offs[slot] : offs[slot + 1]] += Jb
        row += d
    return r, W, J


def retract(problem, est, dx):
    """Apply a tangent step: left Cayley perturbation of each pose/rotation."""
    dx = np.asarray(dx, dtype=float)
    if isinstance(problem, pb.RotationAveragingProblem):
        return lg.cay_so3(dx) @ est
    if isinstance(problem, pb.PoseAveragingProblem):
        return lg.cay_se3(dx) @ est
    K = problem.size
    poses = np.array([lg.cay_se3(dx[6 * k : 6 * k + 6]) @ T for k, T in enumerate(est.poses)])
    twists = None
    if isinstance(problem, pb.ContinuousTrajectoryProblem):
        twists = est.twists + dx[6 * K :].reshape(K, 6)
    return pb.TrajectoryEstimate(poses, twists)


def gn_step(problem, est):
    """Gauss-Newton step, cost and gradient at ``est``."""
    r, W, J = residual_stack(problem, est)
    H = J.T @ W @ J
    g = J.T @ W @ r
    try:
        with warnings.catch_warnings():
            # far from a minimum H can be nearly singular; the step is still
            # screened by the cost check and line search
            warnings.simplefilter("ignore", sla.LinAlgWarning)
            dx = -sla.solve(H, g, assume_a="pos")
    except (sla.LinAlgError, ValueError) as exc:
        raise np.linalg.LinAlgError("singular Gauss-Newton system") from exc
    return dx, float(r @ W @ r), g


# ---------------------------------------------------------------------------
# line search and driver
# ---------------------------------------------------------------------------


def line_search(cost_along, slope, o: GnOptions, f0=None):
    """Armijo backtracking on ``alpha -> cost_along(alpha)``.

    ``slope`` is the derivative at ``alpha = 0``. Returns ``(alpha, ok)``;
    a non-descent direction gives ``(0.0, False)``.
    """
    if not slope < 0:
        return 0.0, False
    f0 = cost_along(0.0) if f0 is None else f0
    alpha = 1.0
    for _ in range(o.max_backtracks):
        f = cost_along(alpha)
        if np.isfinite(f) and f <= f0 + o.armijo * alpha * slope:
            return alpha, True
        alpha *= o.backtrack
    return 0.0, False


def _safe_cost(problem, est):
    try:
        return pb.cost(problem, est)
    except (lg.SingularCayleyError, np.linalg.LinAlgError):
        return np.inf


def _check_init(problem, init):
    if isinstance(problem, pb.RotationAveragingProblem):
        return lg.check_rotation(init)
    if isinstance(problem, pb.PoseAveragingProblem):
        return lg.check_pose(init)
    for T in init.poses:
        lg.check_pose(T)
    if isinstance(problem, pb.ContinuousTrajectoryProblem):
        tw = np.zeros((problem.size, 6)) if init.twists is None else np.asarray(init.twists, float)
        return pb.TrajectoryEstimate(np.array(init.poses, dtype=float), tw)
    return pb.TrajectoryEstimate(np.array(init.poses, dtype=float))


def gauss_newton(problem, init, o: GnOptions | None = None) -> GnResult:
    o = o or GnOptions()
    use_ls = o.line_search
    if use_ls is None:
        use_ls = isinstance(problem, (pb.DiscreteTrajectoryProblem, pb.ContinuousTrajectoryProblem))
    est = _check_init(problem, init)
    cost = pb.cost(problem, est)
    trace = [cost]
    converged = False
    step_norm = np.nan
    g = None
    msg = ""
    it = 0
    for it in range(1, o.max_iter + 1):
        dx, cost, g = gn_step(problem, est)
        step_norm = float(np.linalg.norm(dx))
        if step_norm < o.step_tol * 1e-3:
            # already stationary; no update needed
            converged = True
            it -= 1
            break
        alpha = 1.0
        if use_ls:
            alpha, ok = line_search(
                lambda a: _safe_cost(problem, retract(problem, est, a * dx)), 2.0 * g @ dx, o, cost
            )
            if not ok:
                converged = step_norm < o.step_tol
                msg = "line search found no decrease"
                it -= 1
                break
        new = retract(problem, est, alpha * dx)
        new_cost = _safe_cost(problem, new)
        if not np.isfinite(new_cost):
            msg = "step reached a Cayley singularity"
            it -= 1
            break
        rel_change = abs(cost - new_cost) / (1.0 + abs(cost))
        est, cost = new, new_cost
        trace.append(cost)
        if step_norm < o.step_tol and rel_change < o.cost_tol:
            converged = True
            break
    else:
        msg = "maximum iterations reached"
    r, W, J = residual_stack(problem, est)
    grad = float(np.linalg.norm(J.T @ W @ r))
    return GnResult(est, float(cost), it, converged, trace, step_norm, grad, msg)


def gn_rotation_averaging(p, init, o=None):
    return gauss_newton(p, init, o)


def gn_pose_averaging(p, init, o=None):
    return gauss_newton(p, init, o)


def gn_discrete(p, init, o=None):
    return gauss_newton(p, init, o)


def gn_continuous(p, init, o=None):
    return gauss_newton(p, init, o)


SOLVERS = {
    "rotation_averaging": gn_rotation_averaging,
    "pose_averaging": gn_pose_averaging,
    "discrete_trajectory": gn_discrete,
    "continuous_trajectory": gn_continuous,
}


def solve_local(problem, init, o=None):
    return SOLVERS[problem.kind](problem, init, o)


# ---------------------------------------------------------------------------
# initialisation
# ---------------------------------------------------------------------------


def _positions(problem):
    meas = problem.abs_measurements if hasattr(problem, "abs_measurements") else problem.measurements
    return np.asarray(meas)[:, :3, 3]


def random_init(problem, rng):
    """Uniform random rotations; translations ``N(0, s^2 I)``.

    ``s`` is the measured extent around the measured centroid for the
    trajectory problems and 1 for the averaging problems. Twists start at 0.
    """
    if isinstance(problem, pb.RotationAveragingProblem):
        return lg.random_rotation(rng)
    if isinstance(problem, pb.PoseAveragingProblem):
        return lg.make_pose(lg.random_rotation(rng), rng.standard_normal(3))
    r = _positions(problem)
    centre = r.mean(axis=0)
    s = max(1.0, float(np.max(np.linalg.norm(r - centre, axis=1))))
    poses = np.array(
        [lg.make_pose(lg.random_rotation(rng), centre + s * rng.standard_normal(3)) for _ in range(problem.size)]
    )
    twists = np.zeros((problem.size, 6)) if isinstance(problem, pb.ContinuousTrajectoryProblem) else None
    return pb.TrajectoryEstimate(poses, twists)
