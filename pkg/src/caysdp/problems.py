"""Estimation problems: data containers, simulation and cost evaluation.

Four problems are covered: rotation averaging, pose averaging, discrete-time
trajectory estimation (absolute + relative pose measurements) and
continuous-time trajectory estimation with a white-noise-on-acceleration
(WNOA) prior on the twists.

Every problem serialises to a plain JSON document (see ``to_dict``); the
schema is described in the README.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import liegroup as lg
from .noise import make_rng, perturb_pose, perturb_rotation

SCHEMA_VERSION = 1


def _spd(W, name="weight"):
    W = np.asarray(W, dtype=float)
    if np.max(np.abs(W - W.T)) > 1e-12:
        raise ValueError(f"{name} must be symmetric")
    try:
        np.linalg.cholesky(W)
    except np.linalg.LinAlgError as exc:
        raise ValueError(f"{name} must be positive definite") from exc
    return W


def weight_from_sigma(sigma, dim):
    """Information matrix for noise ``N(0, sigma^2 I)``.

    ``sigma == 0`` (noiseless data) maps to the identity, since an infinite
    weight is meaningless; the estimate does not depend on the common scale.
    """
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    if sigma == 0:
        return np.eye(dim)
    return np.eye(dim) / sigma**2


# ---------------------------------------------------------------------------
# containers
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RotationAveragingProblem:
    measurements: np.ndarray  # (M, 3, 3)
    weights: np.ndarray  # (M, 3, 3)

    kind = "rotation_averaging"

    def __post_init__(self):
        C = np.asarray(self.measurements, dtype=float).reshape(-1, 3, 3)
        W = np.asarray(self.weights, dtype=float).reshape(-1, 3, 3)
        if len(C) < 1 or len(C) != len(W):
            raise ValueError("need M >= 1 measurements and one weight per measurement")
        for Cm in C:
            lg.check_rotation(Cm)
        for Wm in W:
            _spd(Wm)
        object.__setattr__(self, "measurements", C)
        object.__setattr__(self, "weights", W)

    @property
    def size(self):
        return len(self.measurements)

    def to_dict(self):
        return {
            "kind": self.kind,
            "version": SCHEMA_VERSION,
            "measurements": self.measurements.tolist(),
            "weights": self.weights.tolist(),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(np.array(d["measurements"]), np.array(d["weights"]))


@dataclass(frozen=True)
class PoseAveragingProblem:
    measurements: np.ndarray  # (M, 4, 4)
    weights: np.ndarray  # (M, 6, 6)

    kind = "pose_averaging"

    def __post_init__(self):
        T = np.asarray(self.measurements, dtype=float).reshape(-1, 4, 4)
        W = np.asarray(self.weights, dtype=float).reshape(-1, 6, 6)
        if len(T) < 1 or len(T) != len(W):
            raise ValueError("need M >= 1 measurements and one weight per measurement")
        for Tm in T:
            lg.check_pose(Tm)
        for Wm in W:
            _spd(Wm)
        object.__setattr__(self, "measurements", T)
        object.__setattr__(self, "weights", W)

    @property
    def size(self):
        return len(self.measurements)

    def to_dict(self):
        return {
            "kind": self.kind,
            "version": SCHEMA_VERSION,
            "measurements": self.measurements.tolist(),
            "weights": self.weights.tolist(),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(np.array(d["measurements"]), np.array(d["weights"]))


@dataclass(frozen=True)
class DiscreteTrajectoryProblem:
    abs_measurements: np.ndarray  # (K, 4, 4), T~_k
    abs_weights: np.ndarray  # (K, 6, 6)
    rel_measurements: np.ndarray  # (K-1, 4, 4), T~_{k+1,k}
    rel_weights: np.ndarray  # (K-1, 6, 6)

    kind = "discrete_trajectory"

    def __post_init__(self):
        Ta = np.asarray(self.abs_measurements, dtype=float).reshape(-1, 4, 4)
        Wa = np.asarray(self.abs_weights, dtype=float).reshape(-1, 6, 6)
        Tr = np.asarray(self.rel_measurements, dtype=float).reshape(-1, 4, 4)
        Wr = np.asarray(self.rel_weights, dtype=float).reshape(-1, 6, 6)
        K = len(Ta)
        if K < 2 or len(Wa) != K or len(Tr) != K - 1 or len(Wr) != K - 1:
            raise ValueError("need K >= 2 absolute and K-1 relative measurements with weights")
        for T in (*Ta, *Tr):
            lg.check_pose(T)
        for W in (*Wa, *Wr):
            _spd(W)
        object.__setattr__(self, "abs_measurements", Ta)
        object.__setattr__(self, "abs_weights", Wa)
        object.__setattr__(self, "rel_measurements", Tr)
        object.__setattr__(self, "rel_weights", Wr)

    @property
    def size(self):
        return len(self.abs_measurements)

    def to_dict(self):
        return {
            "kind": self.kind,
            "version": SCHEMA_VERSION,
            "abs_measurements": self.abs_measurements.tolist(),
            "abs_weights": self.abs_weights.tolist(),
            "rel_measurements": self.rel_measurements.tolist(),
            "rel_weights": self.rel_weights.tolist(),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            np.array(d["abs_measurements"]),
            np.array(d["abs_weights"]),
            np.array(d["rel_measurements"]),
            np.array(d["rel_weights"]),
        )


@dataclass(frozen=True)
class ContinuousTrajectoryProblem:
    times: np.ndarray  # (K,)
    meas_indices: tuple  # sorted state indices carrying a pose measurement
    measurements: np.ndarray  # (len(meas_indices), 4, 4)
    weights: np.ndarray  # (len(meas_indices), 6, 6)
    Qc: np.ndarray = field(default_factory=lambda: np.eye(6))
    prior_twist: np.ndarray = field(default_factory=lambda: np.zeros(6))
    prior_cov: np.ndarray = field(default_factory=lambda: np.eye(6))

    kind = "continuous_trajectory"

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float).ravel()
        if len(t) < 2 or np.any(np.diff(t) <= 0):
            raise ValueError("timestamps must be strictly increasing, K >= 2")
        idx = tuple(int(i) for i in self.meas_indices)
        if len(idx) < 1 or list(idx) != sorted(set(idx)) or idx[0] < 0 or idx[-1] >= len(t):
            raise ValueError("measurement indices must be sorted, unique and in range")
        T = np.asarray(self.measurements, dtype=float).reshape(-1, 4, 4)
        W = np.asarray(self.weights, dtype=float).reshape(-1, 6, 6)
        if len(T) != len(idx) or len(W) != len(idx):
            raise ValueError("one measurement and weight per measured index")
        for Tm in T:
            lg.check_pose(Tm)
        for Wm in W:
            _spd(Wm)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "meas_indices", idx)
        object.__setattr__(self, "measurements", T)
        object.__setattr__(self, "weights", W)
        object.__setattr__(self, "Qc", _spd(self.Qc, "Qc"))
        object.__setattr__(self, "prior_cov", _spd(self.prior_cov, "prior_cov"))
        object.__setattr__(self, "prior_twist", np.asarray(self.prior_twist, dtype=float).reshape(6))

    @property
    def size(self):
        return len(self.times)

    def to_dict(self):
        return {
            "kind": self.kind,
            "version": SCHEMA_VERSION,
            "times": self.times.tolist(),
            "meas_indices": list(self.meas_indices),
            "measurements": self.measurements.tolist(),
            "weights": self.weights.tolist(),
            "Qc": self.Qc.tolist(),
            "prior_twist": self.prior_twist.tolist(),
            "prior_cov": self.prior_cov.tolist(),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            np.array(d["times"]),
            tuple(d["meas_indices"]),
            np.array(d["measurements"]),
            np.array(d["weights"]),
            np.array(d["Qc"]),
            np.array(d["prior_twist"]),
            np.array(d["prior_cov"]),
        )


@dataclass
class TrajectoryEstimate:
    poses: np.ndarray  # (K, 4, 4)
    twists: np.ndarray | None = None  # (K, 6), continuous problem only

    def __post_init__(self):
        self.poses = np.asarray(self.poses, dtype=float).reshape(-1, 4, 4)
        if self.twists is not None:
            self.twists = np.asarray(self.twists, dtype=float).reshape(len(self.poses), 6)


PROBLEM_TYPES = {
    cls.kind: cls
    for cls in (
        RotationAveragingProblem,
        PoseAveragingProblem,
        DiscreteTrajectoryProblem,
        ContinuousTrajectoryProblem,
    )
}


def problem_from_dict(d):
    if d.get("version", SCHEMA_VERSION) != SCHEMA_VERSION:
        raise ValueError(f"unsupported schema version {d.get('version')}")
    try:
        cls = PROBLEM_TYPES[d["kind"]]
    except KeyError as exc:
        raise ValueError(f"unknown problem kind {d.get('kind')!r}") from exc
    return cls.from_dict(d)


def save_problem(problem, path, groundtruth=None):
    doc = problem.to_dict()
    if groundtruth is not None:
        doc["groundtruth"] = groundtruth_to_list(groundtruth)
    Path(path).write_text(json.dumps(doc))


def load_problem(path):
    """Returns ``(problem, groundtruth_or_None)``."""
    doc = json.loads(Path(path).read_text())
    gt = doc.get("groundtruth")
    return problem_from_dict(doc), groundtruth_from_list(gt) if gt is not None else None


def groundtruth_to_list(gt):
    if isinstance(gt, TrajectoryEstimate):
        return {
            "poses": gt.poses.tolist(),
            "twists": None if gt.twists is None else gt.twists.tolist(),
        }
    return np.asarray(gt).tolist()


def groundtruth_from_list(obj):
    if isinstance(obj, dict):
        tw = obj.get("twists")
        return TrajectoryEstimate(np.array(obj["poses"]), None if tw is None else np.array(tw))
    return np.array(obj)


# ---------------------------------------------------------------------------
# groundtruth generators
# ---------------------------------------------------------------------------


def random_pose(rng, translation_scale=1.0):
    return lg.make_pose(lg.random_rotation(rng), translation_scale * rng.standard_normal(3))


def constant_twist_trajectory(K, step=None, start=None):
    """``K`` poses with ``T_{k+1} = cay(step^) T_k``; consecutive positions are
    ``|rho-part translation|`` apart, unit by default."""
    if step is None:
        step = np.array([1.0, 0.0, 0.0, 0.0, 0.15, 0.35])
    step = np.asarray(step, dtype=float)
    inc = lg.cay_se3(step)
    # rescale translation so the increment moves exactly one unit
    inc[:3, 3] /= np.linalg.norm(inc[:3, 3])
    step = lg.cay_inv_se3(inc)
    T = np.eye(4) if start is None else np.asarray(start, dtype=float)
    poses = [T]
    for _ in range(K - 1):
        poses.append(inc @ poses[-1])
    return np.array(poses), step


# ---------------------------------------------------------------------------
# simulation
# ---------------------------------------------------------------------------


def simulate_rotation_averaging(M=10, sigma=0.1, seed=0, groundtruth=None):
    rng = make_rng(seed)
    C = lg.random_rotation(rng) if groundtruth is None else lg.check_rotation(groundtruth)
    cov = sigma**2 * np.eye(3)
    meas = [perturb_rotation(C, cov, rng) if sigma > 0 else C.copy() for _ in range(M)]
    W = np.array([weight_from_sigma(sigma, 3)] * M)
    return RotationAveragingProblem(np.array(meas), W), C


def simulate_pose_averaging(M=10, sigma=0.1, seed=0, groundtruth=None):
    rng = make_rng(seed)
    T = random_pose(rng) if groundtruth is None else lg.check_pose(groundtruth)
    cov = sigma**2 * np.eye(6)
    meas = [perturb_pose(T, cov, rng) if sigma > 0 else T.copy() for _ in range(M)]
    W = np.array([weight_from_sigma(sigma, 6)] * M)
    return PoseAveragingProblem(np.array(meas), W), T


def simulate_discrete(K=8, sigma=0.1, seed=0, groundtruth=None, sigma_rel=None):
    """Absolute measurements around ``T_k``; relative ones around ``T_{k+1} T_k^-1``."""
    rng = make_rng(seed)
    if groundtruth is None:
        poses, _ = constant_twist_trajectory(K, start=random_pose(rng))
    else:
        poses = np.asarray(groundtruth, dtype=float)
        K = len(poses)
    sigma_rel = sigma if sigma_rel is None else sigma_rel
    cov_a, cov_r = sigma**2 * np.eye(6), sigma_rel**2 * np.eye(6)
    Ta = [perturb_pose(T, cov_a, rng) if sigma > 0 else T.copy() for T in poses]
    Tr = []
    for k in range(K - 1):
        rel = poses[k + 1] @ lg.pose_inv(poses[k])
        Tr.append(perturb_pose(rel, cov_r, rng) if sigma_rel > 0 else rel)
    prob = DiscreteTrajectoryProblem(
        np.array(Ta),
        np.array([weight_from_sigma(sigma, 6)] * K),
        np.array(Tr),
        np.array([weight_from_sigma(sigma_rel, 6)] * (K - 1)),
    )
    return prob, TrajectoryEstimate(poses)


def simulate_continuous(
    K=9,
    sigma=0.1,
    seed=0,
    meas_indices=None,
    dt=1.0,
    step=None,
    Qc=None,
    prior_cov=None,
):
    """Constant-twist groundtruth with sparse pose measurements.

    Defaults: measurements at the first, middle and last state, ``Qc = I``,
    ``Q1 = I`` and the initial-twist prior centred on the true twist.
    """
    rng = make_rng(seed)
    poses, inc = constant_twist_trajectory(K, step=step, start=random_pose(rng))
    twist = inc / dt
    if meas_indices is None:
        meas_indices = sorted({0, K // 2, K - 1})
    cov = sigma**2 * np.eye(6)
    meas = [perturb_pose(poses[i], cov, rng) if sigma > 0 else poses[i].copy() for i in meas_indices]
    prob = ContinuousTrajectoryProblem(
        times=dt * np.arange(K),
        meas_indices=tuple(meas_indices),
        measurements=np.array(meas),
        weights=np.array([weight_from_sigma(sigma, 6)] * len(meas_indices)),
        Qc=np.eye(6) if Qc is None else Qc,
        prior_twist=twist,
        prior_cov=np.eye(6) if prior_cov is None else prior_cov,
    )
    return prob, TrajectoryEstimate(poses, np.tile(twist, (K, 1)))


SIMULATORS = {
    "rotation_averaging": simulate_rotation_averaging,
    "pose_averaging": simulate_pose_averaging,
    "discrete_trajectory": simulate_discrete,
    "continuous_trajectory": simulate_continuous,
}


# ---------------------------------------------------------------------------
# costs
# ---------------------------------------------------------------------------


def wnoa_Q(t0, t1, Qc):
    """Covariance of the WNOA prior error over ``[t0, t1]`` (12x12)."""
    dt = float(t1) - float(t0)
    if dt <= 0:
        raise ValueError("t1 must be greater than t0")
    Qc = np.asarray(Qc, dtype=float)
    return np.block(
        [
            [dt**3 / 3.0 * Qc, dt**2 / 2.0 * Qc],
            [dt**2 / 2.0 * Qc, dt * Qc],
        ]
    )


def _quad(v, W):
    return float(v @ W @ v)


def rotation_residuals(p: RotationAveragingProblem, C):
    return [lg.cay_inv_so3(C @ Cm.T) for Cm in p.measurements]


def pose_residuals(p: PoseAveragingProblem, T):
    return [lg.cay_inv_se3(T @ lg.pose_inv(Tm)) for Tm in p.measurements]


def cost_rotation_averaging(p: RotationAveragingProblem, C):
    return sum(_quad(phi, W) for phi, W in zip(rotation_residuals(p, C), p.weights))


def cost_pose_averaging(p: PoseAveragingProblem, T):
    return sum(_quad(xi, W) for xi, W in zip(pose_residuals(p, T), p.weights))


def discrete_residuals(p: DiscreteTrajectoryProblem, poses):
    """``(absolute residuals, relative residuals)``."""
    xa = [lg.cay_inv_se3(T @ lg.pose_inv(Tm)) for T, Tm in zip(poses, p.abs_measurements)]
    xr = [
        lg.cay_inv_se3(poses[k + 1] @ lg.pose_inv(poses[k]) @ lg.pose_inv(p.rel_measurements[k]))
        for k in range(len(poses) - 1)
    ]
    return xa, xr


def cost_discrete(p: DiscreteTrajectoryProblem, estimate):
    poses = estimate.poses if isinstance(estimate, TrajectoryEstimate) else np.asarray(estimate)
    xa, xr = discrete_residuals(p, poses)
    return sum(_quad(x, W) for x, W in zip(xa, p.abs_weights)) + sum(
        _quad(x, W) for x, W in zip(xr, p.rel_weights)
    )


def continuous_residuals(p: ContinuousTrajectoryProblem, poses, twists):
    """``(measurement residuals, initial-twist residual, prior errors e_{k+1,k})``."""
    xm = [lg.cay_inv_se3(poses[i] @ lg.pose_inv(Tm)) for i, Tm in zip(p.meas_indices, p.measurements)]
    e0 = p.prior_twist - twists[0]
    es = []
    for k in range(len(poses) - 1):
        dt = p.times[k + 1] - p.times[k]
        xi = lg.cay_inv_se3(poses[k + 1] @ lg.pose_inv(poses[k]))
        es.append(np.concatenate([dt * twists[k] - xi, twists[k] - twists[k + 1]]))
    return xm, e0, es


def prior_informations(p: ContinuousTrajectoryProblem):
    """Inverse prior covariances ``Q_{k+1,k}^-1`` for each interval."""
    return [
        np.linalg.inv(wnoa_Q(p.times[k], p.times[k + 1], p.Qc)) for k in range(len(p.times) - 1)
    ]


def cost_continuous(p: ContinuousTrajectoryProblem, estimate: TrajectoryEstimate):
    if estimate.twists is None:
        raise ValueError("continuous-time estimate needs twists")
    xm, e0, es = continuous_residuals(p, estimate.poses, estimate.twists)
    cost = sum(_quad(x, W) for x, W in zip(xm, p.weights))
    cost += _quad(e0, np.linalg.inv(p.prior_cov))
    cost += sum(_quad(e, Qi) for e, Qi in zip(es, prior_informations(p)))
    return cost


def cost(problem, estimate):
    """Dispatch to the cost matching ``problem``'s type."""
    if isinstance(problem, RotationAveragingProblem):
        return cost_rotation_averaging(problem, estimate)
    if isinstance(problem, PoseAveragingProblem):
        return cost_pose_averaging(problem, estimate)
    if isinstance(problem, DiscreteTrajectoryProblem):
        return cost_discrete(problem, estimate)
    if isinstance(problem, ContinuousTrajectoryProblem):
        return cost_continuous(problem, estimate)
    raise TypeError(f"unknown problem type {type(problem).__name__}")


def estimate_error(problem, estimate, groundtruth):
    """Largest entrywise difference between estimated and true poses/rotations."""
    if isinstance(estimate, TrajectoryEstimate):
        return float(np.max(np.abs(estimate.poses - groundtruth.poses)))
    return float(np.max(np.abs(np.asarray(estimate) - np.asarray(groundtruth))))
