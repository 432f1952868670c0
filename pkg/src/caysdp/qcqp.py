"""Homogenised QCQP formulations of the four estimation problems.

Each builder returns a :class:`QcqpInstance` whose lifted vector ``x`` starts
with the homogenisation scalar ``x[0] = 1``. Costs and constraints are
symmetric matrices acting as ``x^T M x``. Linear terms ``l^T x`` are stored as
``(e0 l^T + l e0^T) / 2`` and constants in the ``(0, 0)`` entry.

Constraint convention for a residual ``xi = (rho, phi)`` defined by
``cay(xi^) = T T_meas^-1``::

    (I - phi^/2) c_i = (I + phi^/2) c_meas_i
    (I - phi^/2) r   = (I + phi^/2) r_meas + rho
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import liegroup as lg
from . import problems as pb

log = logging.getLogger(__name__)

# Levi-Civita tensor: (u x v)_a = sum_bc EPS[a, b, c] u_b v_c
EPS = np.zeros((3, 3, 3))
for _a, _b, _c in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
    EPS[_a, _b, _c] = 1.0
    EPS[_a, _c, _b] = -1.0

# (l, m, n) with c_l x c_m = c_n for a proper rotation
CYCLIC = ((0, 1, 2), (1, 2, 0), (2, 0, 1))

POSE_FAMILIES = ("pose_cr", "compact")
DISCRETE_FAMILIES = ("pose_cr", "compact", "rel_cr")
CONTINUOUS_FAMILIES = (
    "pose_cr",
    "compact",
    "phi_c",
    "phi_r",
    "cross",
    "rel_cr",
    "rel_compact",
    "rel_phi_c",
    "rel_phi_r",
)
DEFAULT_FAMILIES = {
    "rotation_averaging": (),
    "pose_averaging": POSE_FAMILIES,
    "discrete_trajectory": DISCRETE_FAMILIES,
    "continuous_trajectory": CONTINUOUS_FAMILIES,
}


# ---------------------------------------------------------------------------
# variable layout
# ---------------------------------------------------------------------------


class VariableLayout:
    """Ordered named blocks of the lifted vector; ``"h"`` is always index 0."""

    def __init__(self):
        self.blocks = {}
        self.size = 0
        self.add("h", 1)

    def add(self, name, size):
        if name in self.blocks:
            raise ValueError(f"duplicate block {name!r}")
        self.blocks[name] = slice(self.size, self.size + size)
        self.size += size
        return self.blocks[name]

    def __getitem__(self, name):
        return self.blocks[name]

    def __contains__(self, name):
        return name in self.blocks

    def names(self):
        return list(self.blocks)

    def without(self, names):
        """New layout with ``names`` removed and the rest packed in order."""
        out = VariableLayout()
        for name, s in self.blocks.items():
            if name != "h" and name not in names:
                out.add(name, s.stop - s.start)
        return out

    def indices(self, names):
        return np.concatenate([np.arange(self.blocks[n].start, self.blocks[n].stop) for n in names])


# ---------------------------------------------------------------------------
# affine vectors and quadratic forms in the lifted variable
# ---------------------------------------------------------------------------


class Aff:
    """Vector of affine forms ``coef @ x`` (constants through ``x[0]``)."""

    __slots__ = ("coef",)
    # let ``ndarray @ Aff`` fall through to __rmatmul__
    __array_ufunc__ = None

    def __init__(self, coef):
        self.coef = coef

    @classmethod
    def var(cls, layout, name):
        s = layout[name]
        coef = np.zeros((s.stop - s.start, layout.size))
        coef[np.arange(s.stop - s.start), np.arange(s.start, s.stop)] = 1.0
        return cls(coef)

    @classmethod
    def const(cls, vec, n):
        vec = np.asarray(vec, dtype=float)
        coef = np.zeros((len(vec), n))
        coef[:, 0] = vec
        return cls(coef)

    def __add__(self, other):
        return Aff(self.coef + other.coef)

    def __sub__(self, other):
        return Aff(self.coef - other.coef)

    def __neg__(self):
        return Aff(-self.coef)

    def __rmul__(self, s):
        return Aff(s * self.coef)

    def __rmatmul__(self, M):
        return Aff(np.asarray(M) @ self.coef)

    def __len__(self):
        return self.coef.shape[0]

    def value(self, x):
        return self.coef @ x

    @staticmethod
    def stack(*parts):
        return Aff(np.vstack([p.coef for p in parts]))


class QForm:
    """Quadratic form ``sum v x[i] x[j]`` kept as unsymmetrised triplets."""

    __slots__ = ("rows", "cols", "vals")

    def __init__(self, rows=None, cols=None, vals=None):
        self.rows = np.zeros(0, dtype=int) if rows is None else rows
        self.cols = np.zeros(0, dtype=int) if cols is None else cols
        self.vals = np.zeros(0) if vals is None else vals

    def __add__(self, other):
        return QForm(
            np.concatenate([self.rows, other.rows]),
            np.concatenate([self.cols, other.cols]),
            np.concatenate([self.vals, other.vals]),
        )

    def __sub__(self, other):
        return self + (-1.0) * other

    def __rmul__(self, s):
        return QForm(self.rows, self.cols, s * self.vals)

    def __neg__(self):
        return (-1.0) * self

    def matrix(self, n):
        M = sp.coo_matrix((self.vals, (self.rows, self.cols)), shape=(n, n)).tocsr()
        M = 0.5 * (M + M.T)
        M.sum_duplicates()
        M.data[np.abs(M.data) < 1e-15] = 0.0
        M.eliminate_zeros()
        return M.tocsr()

    def value(self, x):
        return float(np.sum(self.vals * x[self.rows] * x[self.cols]))


def _outer(u, v):
    """QForm of ``u(x) * v(x)`` for single affine rows ``u``, ``v``."""
    cu = np.flatnonzero(u)
    cv = np.flatnonzero(v)
    if len(cu) == 0 or len(cv) == 0:
        return QForm()
    rr, cc = np.meshgrid(cu, cv, indexing="ij")
    return QForm(rr.ravel(), cc.ravel(), np.outer(u[cu], v[cv]).ravel())


def dot(u: Aff, v: Aff) -> QForm:
    q = QForm()
    for a in range(len(u)):
        q = q + _outer(u.coef[a], v.coef[a])
    return q


def cross(u: Aff, v: Aff):
    """Rows of ``u x v`` as a list of three QForms."""
    out = []
    for a in range(3):
        q = QForm()
        for b in range(3):
            for c in range(3):
                if EPS[a, b, c] != 0.0:
                    q = q + EPS[a, b, c] * _outer(u.coef[b], v.coef[c])
        out.append(q)
    return out


def lin(u: Aff):
    """Homogenise an affine vector: each row becomes ``x0 * row(x)``."""
    e0 = np.zeros(u.coef.shape[1])
    e0[0] = 1.0
    return [_outer(e0, u.coef[a]) for a in range(len(u))]


def vadd(a, b, s=1.0):
    return [x + s * y for x, y in zip(a, b)]


# ---------------------------------------------------------------------------
# instance
# ---------------------------------------------------------------------------


@dataclass
class QcqpInstance:
    kind: str
    layout: VariableLayout
    Q: sp.csr_matrix
    A0: sp.csr_matrix
    A: list = field(default_factory=list)
    A_family: list = field(default_factory=list)
    B: list = field(default_factory=list)
    B_family: list = field(default_factory=list)
    # set by marginalisation: (dropped layout, recovery matrix)
    recovery: object = None

    @property
    def n(self):
        return self.layout.size

    def constraint_counts(self):
        counts = {}
        for fam in (*self.A_family, *self.B_family):
            counts[fam] = counts.get(fam, 0) + 1
        return counts

    def cost(self, x):
        return float(x @ (self.Q @ x))


def _canonical_key(M):
    coo = M.tocoo()
    mask = coo.row <= coo.col
    r, c, v = coo.row[mask], coo.col[mask], coo.data[mask]
    order = np.lexsort((c, r))
    r, c, v = r[order], c[order], v[order]
    if len(v) == 0:
        return None
    v = v / v[0]
    return (tuple(r), tuple(c), tuple(np.round(v, 10)))


class _Builder:
    def __init__(self, kind, layout):
        self.kind = kind
        self.layout = layout
        self.n = layout.size
        self.cost = QForm()
        self.A, self.A_family = [], []
        self.B, self.B_family = [], []
        self._seen = set()

    def v(self, name):
        return Aff.var(self.layout, name)

    def k(self, vec):
        return Aff.const(vec, self.n)

    def _emit(self, forms, fam, redundant):
        for q in forms:
            M = q.matrix(self.n)
            key = _canonical_key(M)
            if key is None or key in self._seen:
                continue
            self._seen.add(key)
            (self.B if redundant else self.A).append(M)
            (self.B_family if redundant else self.A_family).append(fam)

    def constrain(self, forms, fam):
        self._emit(forms, fam, False)

    def redundant(self, forms, fam):
        self._emit(forms, fam, True)

    def finish(self):
        A0 = sp.csr_matrix(([1.0], ([0], [0])), shape=(self.n, self.n))
        return QcqpInstance(
            self.kind,
            self.layout,
            self.cost.matrix(self.n),
            A0,
            self.A,
            self.A_family,
            self.B,
            self.B_family,
        )


def _resolve_families(kind, families, force=False):
    allowed = DEFAULT_FAMILIES[kind]
    if families is None:
        return set(allowed)
    if isinstance(families, str):
        families = {"all": allowed, "none": ()}.get(families, families.split(","))
    fams = {f for f in families if f}
    unknown = fams - set(allowed)
    if unknown:
        raise ValueError(f"unknown redundant families for {kind}: {sorted(unknown)}")
    if "compact" in allowed and "compact" not in fams and not force:
        # keeps the lifted feasible set compact; drop only when forced
        fams.add("compact")
    return fams


# -- shared constraint groups ------------------------------------------------


def _orthonormal(b, C):
    forms = []
    for i in range(3):
        for j in range(i, 3):
            q = dot(C[i], C[j])
            if i == j:
                q = q - lin(b.k([1.0]))[0]
            forms.append(q)
    b.constrain(forms, "orthonormal")


def _rotation_meas(b, C, Cm, phi, fam="rot_meas"):
    """(I - phi^/2) c_i = (I + phi^/2) cm_i, cm_i an Aff (data or variable)."""
    for i in range(3):
        lhs = vadd(lin(C[i] - Cm[i]), cross(phi, C[i] + Cm[i]), -0.5)
        b.constrain(lhs, fam)


def _translation_meas(b, r, rm, phi, rho, fam="trans_meas"):
    """(I - phi^/2) r = (I + phi^/2) rm + rho."""
    lhs = vadd(lin(r - rm - rho), cross(phi, r + rm), -0.5)
    b.constrain(lhs, fam)


def _pose_blocks(b, C, r, Cm, rm, rho, phi, fams, measured_const):
    """Measurement constraints plus the pose-averaging redundant families.

    ``Cm``/``rm`` are Aff expressions; ``measured_const`` gives the numeric
    measurement (Cm, rm) when the measured side is data, else ``None``.
    """
    _rotation_meas(b, C, Cm, phi)
    _translation_meas(b, r, rm, phi, rho)
    if measured_const is None:
        return
    Cd, rd = measured_const
    if "pose_cr" in fams:
        for i in range(3):
            q = 0.5 * dot(C[i] + Cm[i], rho) - dot(C[i], r) + lin(b.k([Cd[:, i] @ rd]))[0]
            b.redundant([q], "pose_cr")
    if "compact" in fams:
        q = dot(r, r) - dot(r, rm) + 0.5 * dot(r, lg.hat_so3(rd) @ phi) - dot(r, rho)
        b.redundant([q], "compact")
    if "phi_c" in fams:
        b.redundant([dot(phi, C[i] - Cm[i]) for i in range(3)], "phi_c")
    if "phi_r" in fams:
        b.redundant([dot(phi, r - rm - rho)], "phi_r")
    if "cross" in fams:
        forms = []
        for l_, m_, n_ in CYCLIC:
            q = (
                dot(C[m_], C[l_])
                - 0.5 * dot(phi, C[n_])
                - dot(C[m_], Cm[l_])
                + 0.5 * dot(C[m_], lg.hat_so3(Cd[:, l_]) @ phi)
            )
            forms.append(q)
        b.redundant(forms, "cross")


def _columns(b, name):
    cvec = b.v(name)
    return [Aff(cvec.coef[3 * i : 3 * i + 3]) for i in range(3)]


def _split_xi(b, name):
    xi = b.v(name)
    return Aff(xi.coef[:3]), Aff(xi.coef[3:])


# ---------------------------------------------------------------------------
# builders
# ---------------------------------------------------------------------------


def lift_rotation_averaging(p: pb.RotationAveragingProblem) -> QcqpInstance:
    lay = VariableLayout()
    lay.add("C", 9)
    for m in range(p.size):
        lay.add(f"phi{m}", 3)
    b = _Builder(p.kind, lay)
    C = _columns(b, "C")
    _orthonormal(b, C)
    for m in range(p.size):
        phi = b.v(f"phi{m}")
        Cm = [b.k(p.measurements[m][:, i]) for i in range(3)]
        _rotation_meas(b, C, Cm, phi)
        b.cost = b.cost + dot(phi, p.weights[m] @ phi)
    return b.finish()


def lift_pose_averaging(p: pb.PoseAveragingProblem, families=None, force=False) -> QcqpInstance:
    fams = _resolve_families(p.kind, families, force)
    lay = VariableLayout()
    lay.add("C", 9)
    lay.add("r", 3)
    for m in range(p.size):
        lay.add(f"xi{m}", 6)
    b = _Builder(p.kind, lay)
    C, r = _columns(b, "C"), b.v("r")
    _orthonormal(b, C)
    for m in range(p.size):
        Tm = p.measurements[m]
        rho, phi = _split_xi(b, f"xi{m}")
        Cm = [b.k(Tm[:3, i]) for i in range(3)]
        _pose_blocks(b, C, r, Cm, b.k(Tm[:3, 3]), rho, phi, fams, (Tm[:3, :3], Tm[:3, 3]))
        xi = b.v(f"xi{m}")
        b.cost = b.cost + dot(xi, p.weights[m] @ xi)
    return b.finish()


def _trajectory_layout(K, abs_idx, n_rel, twists=False):
    lay = VariableLayout()
    for k in range(K):
        lay.add(f"C{k}", 9)
        lay.add(f"r{k}", 3)
    for k in abs_idx:
        lay.add(f"xi{k}", 6)
    for k in range(n_rel):
        lay.add(f"xirel{k}", 6)
    if twists:
        for k in range(K):
            lay.add(f"w{k}", 6)
    return lay


def lift_discrete(p: pb.DiscreteTrajectoryProblem, families=None, force=False) -> QcqpInstance:
    fams = _resolve_families(p.kind, families, force)
    K = p.size
    lay = _trajectory_layout(K, range(K), K - 1)
    b = _Builder(p.kind, lay)
    for k in range(K):
        C, r = _columns(b, f"C{k}"), b.v(f"r{k}")
        _orthonormal(b, C)
        Tm = p.abs_measurements[k]
        rho, phi = _split_xi(b, f"xi{k}")
        Cm = [b.k(Tm[:3, i]) for i in range(3)]
        _pose_blocks(b, C, r, Cm, b.k(Tm[:3, 3]), rho, phi, fams, (Tm[:3, :3], Tm[:3, 3]))
        xi = b.v(f"xi{k}")
        b.cost = b.cost + dot(xi, p.abs_weights[k] @ xi)
    for k in range(K - 1):
        Ct = p.rel_measurements[k][:3, :3]
        rt = p.rel_measurements[k][:3, 3]
        C0, r0 = _columns(b, f"C{k}"), b.v(f"r{k}")
        C1, r1 = _columns(b, f"C{k + 1}"), b.v(f"r{k + 1}")
        rho, phi = _split_xi(b, f"xirel{k}")
        Cm = [Ct @ C0[i] for i in range(3)]
        rm = Ct @ r0 + b.k(rt)
        _rotation_meas(b, C1, Cm, phi, "rel_rot")
        _translation_meas(b, r1, rm, phi, rho, "rel_trans")
        if "rel_cr" in fams:
            forms = []
            for i in range(3):
                q = (
                    0.5 * dot(C1[i] + Cm[i], rho)
                    - dot(C1[i], r1)
                    + dot(C0[i], r0)
                    + dot(C0[i], b.k(Ct.T @ rt))
                )
                forms.append(q)
            b.redundant(forms, "rel_cr")
        xi = b.v(f"xirel{k}")
        b.cost = b.cost + dot(xi, p.rel_weights[k] @ xi)
    return b.finish()


def lift_continuous(p: pb.ContinuousTrajectoryProblem, families=None, force=False) -> QcqpInstance:
    """Continuous-time QCQP including the twist variables ``w{k}``.

    The twists appear only in the cost; use :func:`marginalize_unconstrained`
    (or :func:`lift_continuous_marginalized`) before relaxing.
    """
    fams = _resolve_families(p.kind, families, force)
    K = p.size
    lay = _trajectory_layout(K, p.meas_indices, K - 1, twists=True)
    b = _Builder(p.kind, lay)
    for k in range(K):
        _orthonormal(b, _columns(b, f"C{k}"))
    for j, k in enumerate(p.meas_indices):
        C, r = _columns(b, f"C{k}"), b.v(f"r{k}")
        Tm = p.measurements[j]
        rho, phi = _split_xi(b, f"xi{k}")
        Cm = [b.k(Tm[:3, i]) for i in range(3)]
        _pose_blocks(b, C, r, Cm, b.k(Tm[:3, 3]), rho, phi, fams, (Tm[:3, :3], Tm[:3, 3]))
        xi = b.v(f"xi{k}")
        b.cost = b.cost + dot(xi, p.weights[j] @ xi)
    for k in range(K - 1):
        C0, r0 = _columns(b, f"C{k}"), b.v(f"r{k}")
        C1, r1 = _columns(b, f"C{k + 1}"), b.v(f"r{k + 1}")
        rho, phi = _split_xi(b, f"xirel{k}")
        _rotation_meas(b, C1, C0, phi, "rel_rot")
        _translation_meas(b, r1, r0, phi, rho, "rel_trans")
        if "rel_cr" in fams:
            b.redundant(
                [0.5 * dot(C1[i] + C0[i], rho) - dot(C1[i], r1) + dot(C0[i], r0) for i in range(3)],
                "rel_cr",
            )
        if "rel_compact" in fams:
            b.redundant([dot(r1, r1) - dot(r1, rho) - dot(r0, rho) - dot(r0, r0)], "rel_compact")
        if "rel_phi_c" in fams:
            b.redundant([dot(phi, C1[i] - C0[i]) for i in range(3)], "rel_phi_c")
        if "rel_phi_r" in fams:
            b.redundant([dot(phi, r1 - r0 - rho)], "rel_phi_r")
    # prior on the first twist and WNOA terms
    w0 = b.v("w0")
    e0 = b.k(p.prior_twist) - w0
    b.cost = b.cost + dot(e0, np.linalg.inv(p.prior_cov) @ e0)
    for k, Qi in enumerate(pb.prior_informations(p)):
        dt = p.times[k + 1] - p.times[k]
        wk, wk1 = b.v(f"w{k}"), b.v(f"w{k + 1}")
        e = Aff.stack(dt * wk - b.v(f"xirel{k}"), wk - wk1)
        b.cost = b.cost + dot(e, Qi @ e)
    return b.finish()


# ---------------------------------------------------------------------------
# marginalisation
# ---------------------------------------------------------------------------


@dataclass
class Recovery:
    """Maps a retained lifted vector to the optimal marginalised blocks."""

    full_layout: VariableLayout
    keep: np.ndarray
    drop: np.ndarray
    dropped_names: list
    gain: np.ndarray  # dropped = gain @ x_keep

    def dropped(self, x_keep):
        return self.gain @ x_keep

    def full(self, x_keep):
        x = np.zeros(self.full_layout.size)
        x[self.keep] = x_keep
        x[self.drop] = self.dropped(x_keep)
        return x


def marginalize_unconstrained(q: QcqpInstance, blocks) -> tuple[QcqpInstance, Recovery]:
    """Eliminate quadratic-only blocks with a Schur complement.

    ``blocks`` must not appear in any constraint and their cost sub-block must
    be positive definite.
    """
    blocks = list(blocks)
    lay = q.layout
    drop = lay.indices(blocks)
    keep = np.setdiff1d(np.arange(lay.size), drop)
    dmask = np.zeros(lay.size, dtype=bool)
    dmask[drop] = True
    for M in (q.A0, *q.A, *q.B):
        coo = M.tocoo()
        if np.any(dmask[coo.row] | dmask[coo.col]):
            raise ValueError("cannot marginalise blocks that appear in constraints")
    Q = q.Q.toarray()
    Qkk = Q[np.ix_(keep, keep)]
    Qkw = Q[np.ix_(keep, drop)]
    Qww = Q[np.ix_(drop, drop)]
    try:
        L = np.linalg.cholesky(Qww)
    except np.linalg.LinAlgError as exc:
        raise ValueError("marginalised cost block is not positive definite") from exc
    Z = np.linalg.solve(L, Qkw.T)  # L^-1 Qwk
    Qred = Qkk - Z.T @ Z
    Qred = 0.5 * (Qred + Qred.T)
    gain = -np.linalg.solve(L.T, Z)
    new_lay = lay.without(blocks)

    def sub(M):
        return M.tocsr()[keep][:, keep].tocsr()

    out = QcqpInstance(
        q.kind,
        new_lay,
        sp.csr_matrix(Qred),
        sub(q.A0),
        [sub(M) for M in q.A],
        list(q.A_family),
        [sub(M) for M in q.B],
        list(q.B_family),
    )
    rec = Recovery(lay, keep, drop, blocks, gain)
    out.recovery = rec
    return out, rec


def lift_continuous_marginalized(p, families=None, force=False):
    full = lift_continuous(p, families, force)
    return marginalize_unconstrained(full, [f"w{k}" for k in range(p.size)])


def build(problem, families=None, force=False) -> QcqpInstance:
    """QCQP ready for relaxation (twists already marginalised)."""
    if isinstance(problem, pb.RotationAveragingProblem):
        return lift_rotation_averaging(problem)
    if isinstance(problem, pb.PoseAveragingProblem):
        return lift_pose_averaging(problem, families, force)
    if isinstance(problem, pb.DiscreteTrajectoryProblem):
        return lift_discrete(problem, families, force)
    if isinstance(problem, pb.ContinuousTrajectoryProblem):
        return lift_continuous_marginalized(problem, families, force)[0]
    raise TypeError(f"unknown problem type {type(problem).__name__}")


# ---------------------------------------------------------------------------
# feasible lifts
# ---------------------------------------------------------------------------


def _put(x, lay, name, val):
    x[lay[name]] = val


def lift_point(problem, estimate, layout: VariableLayout) -> np.ndarray:
    """Lifted vector of a feasible estimate, residual variables recomputed.

    Blocks absent from ``layout`` (e.g. marginalised twists) are skipped.
    """
    x = np.zeros(layout.size)
    x[0] = 1.0
    if isinstance(problem, pb.RotationAveragingProblem):
        C = np.asarray(estimate)
        _put(x, layout, "C", C.T.ravel())
        for m, phi in enumerate(pb.rotation_residuals(problem, C)):
            _put(x, layout, f"phi{m}", phi)
        return x
    if isinstance(problem, pb.PoseAveragingProblem):
        T = np.asarray(estimate)
        _put(x, layout, "C", T[:3, :3].T.ravel())
        _put(x, layout, "r", T[:3, 3])
        for m, xi in enumerate(pb.pose_residuals(problem, T)):
            _put(x, layout, f"xi{m}", xi)
        return x
    poses = estimate.poses
    for k, T in enumerate(poses):
        _put(x, layout, f"C{k}", T[:3, :3].T.ravel())
        _put(x, layout, f"r{k}", T[:3, 3])
    if isinstance(problem, pb.DiscreteTrajectoryProblem):
        xa, xr = pb.discrete_residuals(problem, poses)
        for k, xi in enumerate(xa):
            _put(x, layout, f"xi{k}", xi)
        for k, xi in enumerate(xr):
            _put(x, layout, f"xirel{k}", xi)
        return x
    if isinstance(problem, pb.ContinuousTrajectoryProblem):
        for i, Tm in zip(problem.meas_indices, problem.measurements):
            _put(x, layout, f"xi{i}", lg.cay_inv_se3(poses[i] @ lg.pose_inv(Tm)))
        for k in range(len(poses) - 1):
            _put(x, layout, f"xirel{k}", lg.cay_inv_se3(poses[k + 1] @ lg.pose_inv(poses[k])))
        if "w0" in layout and estimate.twists is not None:
            for k, w in enumerate(estimate.twists):
                _put(x, layout, f"w{k}", w)
        return x
    raise TypeError(f"unknown problem type {type(problem).__name__}")


def check_feasibility(q: QcqpInstance, x) -> float:
    """Largest violation over A0 (target 1) and every A_i, B_j (target 0)."""
    x = np.asarray(x, dtype=float)
    if x.shape != (q.n,):
        raise ValueError(f"lift has size {x.shape}, instance needs {q.n}")
    res = abs(float(x @ (q.A0 @ x)) - 1.0)
    for M in (*q.A, *q.B):
        res = max(res, abs(float(x @ (M @ x))))
    return res
