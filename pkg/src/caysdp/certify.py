"""Rank-1 certificates for SDP solutions and extraction of estimates."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from . import liegroup as lg
from . import problems as pb
from . import qcqp

log = logging.getLogger(__name__)

SVR_THRESHOLD = 5.0
SVR_CAP = 300.0
_FLOOR = 1e-300


def log_svr(X, return_capped=False):
    """``log10(s1 / s2)`` for the two largest singular values of psd ``X``."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] != X.shape[1] or X.shape[0] < 2:
        raise ValueError("log_svr needs a square matrix with n >= 2")
    s = np.linalg.eigvalsh(0.5 * (X + X.T))[::-1]
    s = np.abs(s)  # tiny negative eigenvalues are rounding noise
    s.sort()
    s1, s2 = s[-1], s[-2]
    capped = s2 < _FLOOR
    val = SVR_CAP if capped else float(np.log10(s1 / s2))
    return (val, capped) if return_capped else val


@dataclass
class Extraction:
    x: np.ndarray
    estimate: object
    det_ok: bool


@dataclass
class Certificate:
    log_svr: float
    rank1: bool
    estimate: object
    extracted_cost: float
    sdp_value: float
    gap: float
    det_ok: bool
    threshold: float = SVR_THRESHOLD
    svr_capped: bool = False

    def to_dict(self):
        return {
            "log_svr": self.log_svr,
            "rank1": bool(self.rank1),
            "extracted_cost": self.extracted_cost,
            "sdp_value": self.sdp_value,
            "gap": self.gap,
            "det_ok": bool(self.det_ok),
            "threshold": self.threshold,
            "svr_capped": bool(self.svr_capped),
            "estimate": pb.groundtruth_to_list(self.estimate),
        }


def leading_vector(X):
    """``sqrt(l1) u1`` scaled so the homogenisation entry is exactly 1."""
    X = np.asarray(X, dtype=float)
    w, U = np.linalg.eigh(0.5 * (X + X.T))
    x = np.sqrt(max(w[-1], 0.0)) * U[:, -1]
    if abs(x[0]) < 1e-6:
        raise ValueError("homogenisation entry of the leading eigenvector is ~0")
    return x / x[0]


def _rotation(x, layout, name):
    M = x[layout[name]].reshape(3, 3).T  # stored column-wise
    det_ok = bool(np.linalg.det(M) > 0)
    return lg.project_to_so3(M), det_ok


def _pose(x, layout, k=""):
    C, ok = _rotation(x, layout, f"C{k}")
    return lg.make_pose(C, x[layout[f"r{k}"]]), ok


def extract(X, layout: qcqp.VariableLayout, kind=None) -> Extraction:
    """Read the estimate out of a (near) rank-1 ``X``.

    ``kind`` is inferred from the layout block names when omitted.
    """
    x = leading_vector(X)
    if len(x) != layout.size:
        raise ValueError("X does not match the layout size")
    if "C" in layout:
        if "r" in layout:
            T, ok = _pose(x, layout)
            return Extraction(x, T, ok)
        C, ok = _rotation(x, layout, "C")
        return Extraction(x, C, ok)
    K = sum(1 for nm in layout.names() if nm.startswith("C"))
    poses, oks = zip(*(_pose(x, layout, k) for k in range(K)))
    twists = None
    if "w0" in layout:
        twists = np.array([x[layout[f"w{k}"]] for k in range(K)])
    return Extraction(x, pb.TrajectoryEstimate(np.array(poses), twists), all(oks))


def recover_twists(problem, poses, recovery: qcqp.Recovery):
    """Optimal twists for fixed poses, through the marginalisation map.

    The lift is rebuilt from the (projected) poses so the twists are
    consistent with them rather than with a slightly non-rank-1 ``X``.
    """
    reduced = recovery.full_layout.without(recovery.dropped_names)
    x = qcqp.lift_point(problem, pb.TrajectoryEstimate(poses), reduced)
    w = recovery.dropped(x)
    return w.reshape(len(poses), 6)


def certify(problem, solution, q: qcqp.QcqpInstance, threshold=SVR_THRESHOLD) -> Certificate:
    """Rank test, extraction and cost comparison for one SDP solve.

    ``q`` is the instance that was relaxed (its layout and, for the
    continuous problem, its twist recovery map are used).
    """
    X = solution.X if hasattr(solution, "X") else np.asarray(solution)
    value = solution.primal_objective if hasattr(solution, "primal_objective") else float(
        np.sum(q.Q.toarray() * X)
    )
    svr, capped = log_svr(X, return_capped=True)
    ex = extract(X, q.layout)
    est = ex.estimate
    if isinstance(problem, pb.ContinuousTrajectoryProblem):
        if q.recovery is None:
            raise ValueError("continuous problem needs the marginalised instance")
        est = pb.TrajectoryEstimate(est.poses, recover_twists(problem, est.poses, q.recovery))
    try:
        cost = pb.cost(problem, est)
    except lg.SingularCayleyError:
        cost = np.inf
    gap = (cost - value) / (1.0 + abs(value))
    rank1 = bool(svr >= threshold and ex.det_ok)
    if svr >= threshold and not ex.det_ok:
        log.warning("rank-1 solution with det(C) < 0; certificate withheld")
    return Certificate(svr, rank1, est, cost, value, gap, ex.det_ok, threshold, capped)
