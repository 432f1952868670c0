"""Standard-form SDP, a dense primal-dual interior-point solver and SDPA I/O.

Primal::

    min <C, X>   s.t.  <A_i, X> = b_i,  X psd

Dual::

    max b^T y    s.t.  S = C - sum_i y_i A_i  psd

The solver follows the HKM search direction with a Mehrotra predictor-corrector
and separate primal/dual step lengths. It is written for the small dense
problems of this package (n up to a few hundred). When the iterations stall
near a numerically rank-one solution, a Newton polish on the rank-one KKT
system finishes the solve; the polished point is accepted only if it is
feasible, its dual slack is psd and the gap closes.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

log = logging.getLogger(__name__)

OPTIMAL = "optimal"
MAX_ITER = "max-iter"
NUMERICAL_FAILURE = "numerical-failure"

# the solution contract: what "optimal" guarantees after descaling
CONTRACT_GAP = 1e-7
CONTRACT_FEAS = 1e-8
# endgame stall rule: once the stopping score (worst measure over its
# tolerance) is below STALL_SCORE, give up after STALL_ITERS iterations
# without a 10% gain
STALL_SCORE = 1e4
STALL_ITERS = 8


@dataclass
class SdpProblem:
    C: sp.csr_matrix
    A: list
    b: np.ndarray
    labels: list = field(default_factory=list)
    pruned: list = field(default_factory=list)

    def __post_init__(self):
        self.C = sp.csr_matrix(self.C)
        self.A = [sp.csr_matrix(M) for M in self.A]
        self.b = np.asarray(self.b, dtype=float)
        if len(self.b) != len(self.A):
            raise ValueError("b and A have different lengths")
        if not self.labels:
            self.labels = [f"c{i}" for i in range(len(self.A))]
        n = self.C.shape[0]
        for M in (self.C, *self.A):
            if M.shape != (n, n):
                raise ValueError("all matrices must be n x n")
            if abs(M - M.T).max() > 1e-14 if M.nnz else False:
                raise ValueError("matrices must be symmetric")

    @property
    def n(self):
        return self.C.shape[0]

    @property
    def m(self):
        return len(self.A)

    def objective(self, X):
        return float(self.C.multiply(X).sum())

    def residual(self, X):
        return np.array([M.multiply(X).sum() for M in self.A]) - self.b


@dataclass
class SolverOptions:
    max_iter: int = 100
    gap_tol: float = 1e-9
    feas_tol: float = 1e-10
    scaling: bool = True
    step_fraction: float = 0.98
    # rank-one polish of a stalled iterate whose log10(s1/s2) reaches polish_svr
    polish: bool = True
    polish_svr: float = 5.0

    def __post_init__(self):
        if self.gap_tol <= 0 or self.feas_tol <= 0:
            raise ValueError("tolerances must be positive")
        if not 0 < self.step_fraction < 1:
            raise ValueError("step_fraction must be in (0, 1)")
        if self.max_iter < 1:
            raise ValueError("max_iter must be positive")


@dataclass
class SdpSolution:
    X: np.ndarray
    y: np.ndarray
    S: np.ndarray
    primal_objective: float
    dual_objective: float
    iterations: int
    status: str
    gap: float = np.nan
    primal_infeasibility: float = np.nan
    dual_infeasibility: float = np.nan
    gap_history: list = field(default_factory=list)
    time_s: float = 0.0
    # per iterate: (primal objective, dual objective, primal infeas., dual infeas.)
    trace: list = field(default_factory=list)
    # True when the returned point comes from the rank-one polish
    polished: bool = False

    @property
    def value(self):
        return self.primal_objective


# ---------------------------------------------------------------------------
# relaxation
# ---------------------------------------------------------------------------


def _key(M):
    """Scale-invariant hash of a symmetric sparse matrix (upper triangle)."""
    coo = sp.triu(M).tocoo()
    order = np.lexsort((coo.col, coo.row))
    r, c, v = coo.row[order], coo.col[order], coo.data[order]
    if len(v) == 0:
        return None
    v = v / v[0]
    return (r.tobytes(), c.tobytes(), np.round(v, 12).tobytes())


def _svec_rows(A, n):
    """Rows ``svec(A_i)`` restricted to occupied upper-triangle positions."""
    rows, cols, vals = [], [], []
    for i, M in enumerate(A):
        coo = sp.triu(M).tocoo()
        w = np.where(coo.row == coo.col, 1.0, np.sqrt(2.0))
        rows.append(np.full(coo.nnz, i))
        cols.append(coo.row * n + coo.col)
        vals.append(w * coo.data)
    rows, cols, vals = map(np.concatenate, (rows, cols, vals))
    used, cols = np.unique(cols, return_inverse=True)
    return sp.csr_matrix((vals, (rows, cols)), shape=(len(A), len(used)))


def prune_dependent(A, b, labels, tol=1e-10, priority=None):
    """Drop exact duplicates, then rows that are numerically dependent.

    Dependence is decided by column-pivoted QR of the normalised ``svec`` rows;
    a row is dropped when its pivot falls below ``tol``. Rows are processed in
    ``priority`` groups (lower first, default one group), so later groups only
    keep what is independent of earlier ones. Returns ``(A, b, labels, pruned)``
    with ``pruned`` listing ``(label, reason)`` pairs.
    """
    pruned = []
    keep = []
    seen = {}
    for i, M in enumerate(A):
        k = _key(M)
        if k is None:
            pruned.append((labels[i], "empty"))
            continue
        if k in seen:
            pruned.append((labels[i], f"duplicate of {labels[seen[k]]}"))
            continue
        seen[k] = i
        keep.append(i)
    if keep:
        n = A[0].shape[0]
        prio = np.zeros(len(A), dtype=int) if priority is None else np.asarray(priority)
        R = _svec_rows([A[i] for i in keep], n).toarray()
        R /= np.linalg.norm(R, axis=1, keepdims=True)
        basis = np.zeros((R.shape[1], 0))
        indep = []
        for g in np.unique(prio[keep]):
            pos = [t for t, i in enumerate(keep) if prio[i] == g]
            G = R[pos].T
            G = G - basis @ (basis.T @ G)
            G = G - basis @ (basis.T @ G)  # re-orthogonalise
            Qg, rr, piv = sla.qr(G, mode="economic", pivoting=True)
            d = np.abs(np.diag(rr))
            rank = int(np.sum(d > tol))
            indep += [pos[t] for t in piv[:rank]]
            basis = np.hstack([basis, Qg[:, :rank]])
        indep = set(indep)
        for t in range(len(keep)):
            if t not in indep:
                pruned.append((labels[keep[t]], "linearly dependent"))
        keep = [keep[t] for t in sorted(indep)]
    for lab, why in pruned:
        log.info("pruned constraint %s (%s)", lab, why)
    return [A[i] for i in keep], np.asarray(b)[keep], [labels[i] for i in keep], pruned


def relax(q, prune=True) -> SdpProblem:
    """Shor relaxation of a :class:`~caysdp.qcqp.QcqpInstance`."""
    A = [q.A0, *q.A, *q.B]
    labels = ["hom"]
    labels += [f"{f}[{i}]" for i, f in enumerate(q.A_family)]
    labels += [f"{f}*[{j}]" for j, f in enumerate(q.B_family)]
    b = np.zeros(len(A))
    b[0] = 1.0
    pruned = []
    if prune:
        priority = [0] * (1 + len(q.A)) + [1] * len(q.B)
        A, b, labels, pruned = prune_dependent(A, b, labels, priority=priority)
    return SdpProblem(q.Q, A, b, labels, pruned)


# ---------------------------------------------------------------------------
# scaling
# ---------------------------------------------------------------------------


@dataclass
class Descale:
    cost_scale: float
    row_scale: np.ndarray

    def objective(self, value):
        return self.cost_scale * value

    def dual(self, y_scaled):
        return self.cost_scale * y_scaled / self.row_scale

    def solution(self, sol: SdpSolution, original: SdpProblem) -> SdpSolution:
        y = self.dual(sol.y)
        S = self.cost_scale * sol.S
        X = sol.X
        p = original.objective(X)
        d = float(original.b @ y)
        # the gap stays relative to the normalised cost, see _solve_scaled
        cs = self.cost_scale
        return replace(
            sol,
            y=y,
            S=S,
            primal_objective=p,
            dual_objective=d,
            gap=abs(p - d) / (cs + abs(p) + abs(d)),
            primal_infeasibility=float(np.linalg.norm(original.residual(X)) / (1.0 + np.linalg.norm(original.b))),
        )


def scale(p: SdpProblem):
    """Unit max-abs cost and unit Frobenius-norm constraint rows."""
    cmax = abs(p.C).max() if p.C.nnz else 0.0
    if cmax == 0:
        raise ValueError("cannot scale a zero cost matrix")
    norms = np.array([sp.linalg.norm(M) for M in p.A])
    if np.any(norms == 0):
        raise ValueError("constraint matrix with zero norm")
    scaled = SdpProblem(
        p.C / cmax,
        [M / s for M, s in zip(p.A, norms)],
        p.b / norms,
        list(p.labels),
        list(p.pruned),
    )
    return scaled, Descale(float(cmax), norms)


# ---------------------------------------------------------------------------
# interior-point solver
# ---------------------------------------------------------------------------


class _Operator:
    """Sparse linear map ``X -> (<A_i, X>)_i`` and its adjoint."""

    def __init__(self, p: SdpProblem, chunk=2_000_000):
        n, m = p.n, p.m
        rows, a, b, v = [], [], [], []
        for i, M in enumerate(p.A):
            coo = M.tocoo()
            rows.append(np.full(coo.nnz, i))
            a.append(coo.row)
            b.append(coo.col)
            v.append(coo.data)
        self.row, self.a, self.b, self.v = map(np.concatenate, (rows, a, b, v))
        nnz = len(self.v)
        self.n, self.m = n, m
        self.V = sp.csr_matrix((self.v, (self.row, np.arange(nnz))), shape=(m, nnz))
        self.At = sp.csr_matrix((self.v, (self.a * n + self.b, self.row)), shape=(n * n, m))
        self.starts = np.searchsorted(self.row, np.arange(m))
        if np.any(np.diff(np.append(self.starts, nnz)) == 0):
            raise ValueError("empty constraint matrix")
        step = max(1, chunk // max(nnz, 1))
        self.chunks = []
        for s in range(0, nnz, step):
            sl = slice(s, min(nnz, s + step))
            rows, starts = np.unique(self.row[sl], return_index=True)
            self.chunks.append((sl, rows, starts))

    def apply(self, X):
        return self.V @ X[self.a, self.b]

    def adjoint(self, y):
        return (self.At @ y).reshape(self.n, self.n)

    def gram(self):
        """``G_ij = <A_i, A_j>``."""
        return (self.At.T @ self.At).toarray()

    def columns(self, x):
        """``n x m`` matrix with columns ``A_i x``."""
        return sp.csr_matrix((self.v * x[self.b], (self.a, self.row)), shape=(self.n, self.m)).toarray()


    def schur(self, X, Sinv):
        """``M_ij = tr(A_i X A_j S^-1)``."""
        a, b, v = self.a, self.b, self.v
        M = np.zeros((self.m, self.m))
        Xa = np.ascontiguousarray(X[:, a])  # Xa[r, p] = X[r, a_p]
        Sb = np.ascontiguousarray(Sinv[:, b])
        for sl, rows, starts in self.chunks:
            Pt = np.take(Xa, a[sl], axis=0)
            Pt *= np.take(Sb, b[sl], axis=0)  # Pt[q, p] = X[a_q, a_p] Sinv[b_q, b_p]
            Pt *= v
            # triplets are sorted by constraint, so row sums are segment sums
            G = np.add.reduceat(Pt, self.starts, axis=1)
            G *= v[sl, None]
            M[rows] += np.add.reduceat(G, starts, axis=0)
        return 0.5 * (M + M.T)


def _sym(M):
    return 0.5 * (M + M.T)


def _factor(M, refine=4):
    """Solver for the Schur system ``M dy = rhs``.

    ``M`` is Jacobi-scaled before Cholesky. Near a rank-deficient optimum
    rounding can make it slightly indefinite; then a pivoted LU takes over.
    A few refinement steps against ``M`` polish either solve.
    """
    if not np.all(np.isfinite(M)):
        raise np.linalg.LinAlgError("Schur matrix is not finite")
    diag = np.diag(M)
    d = np.sqrt(np.where(diag > 1e-150, diag, 1.0))
    Ms = M / np.outer(d, d)
    try:
        cf = sla.cho_factor(Ms)
        base = lambda r: sla.cho_solve(cf, r)
    except sla.LinAlgError:
        lu = sla.lu_factor(Ms)
        base = lambda r: sla.lu_solve(lu, r)

    def solve(rhs):
        x = base(rhs / d) / d
        res = np.linalg.norm((rhs - M @ x) / d)
        for _ in range(refine):
            dx = base((rhs - M @ x) / d) / d
            new = np.linalg.norm((rhs - M @ (x + dx)) / d)
            if not new < res:
                break
            x, res = x + dx, new
        return x

    return solve


def _log_svr(X):
    s = np.sort(np.abs(np.linalg.eigvalsh(X)))
    return np.inf if s[-2] <= 0 else float(np.log10(s[-1] / s[-2]))


def _max_step(X, dX):
    """Largest alpha with ``X + alpha dX`` psd (``X`` positive definite)."""
    L = np.linalg.cholesky(X)
    Li = sla.solve_triangular(L, np.eye(len(X)), lower=True)
    lam = np.linalg.eigvalsh(_sym(Li @ dX @ Li.T))[0]
    return np.inf if lam >= 0 else -1.0 / lam


def _polish_rank1(op, C, b, X, y, iters=30):
    """Candidate rank-one KKT points ``(x, y')`` near a stalled iterate.

    Newton on ``A(x x^T) = b``, ``(C - A*(y)) x = 0`` from the leading
    eigenpair of ``X``; least-squares steps cope with the non-unique
    multipliers of redundant constraints. Besides the Newton multipliers, the
    smallest change of ``y`` with ``(C - A*(y')) x = 0`` is offered, which
    tends to keep the psd margin of the iterate. Whether ``C - A*(y')`` is psd
    is for the caller to check.
    """
    w, U = np.linalg.eigh(X)
    x = np.sqrt(max(w[-1], 0.0)) * U[:, -1]
    yn = y
    best, res = (x, y), np.inf
    for _ in range(iters):
        B = op.columns(x)
        S = C - op.adjoint(yn)
        F = np.concatenate([B.T @ x - b, S @ x])
        r = np.linalg.norm(F)
        if not r < 0.5 * res:
            if r < res:
                best = (x, yn)
            break
        best, res = (x, yn), r
        J = np.block([[2.0 * B.T, np.zeros((len(b), len(b)))], [S, -B]])
        step = np.linalg.lstsq(J, -F, rcond=None)[0]
        x, yn = x + step[: len(x)], yn + step[len(x):]
    x, yn = best
    B = op.columns(x)
    ym = y + np.linalg.lstsq(B, (C - op.adjoint(y)) @ x, rcond=None)[0]
    return [(x, yn), (x, ym)]


def _solve_scaled(p: SdpProblem, o: SolverOptions, unit: Descale | None = None) -> SdpSolution:
    """Interior-point iterations on ``p``.

    ``unit`` maps ``p`` back to the caller's problem. The primal residual is
    measured in the caller's rows; gap and dual residual use the normalised
    cost (unit max-abs entry), which makes them independent of the cost unit.
    """
    t0 = time.perf_counter()
    n, m = p.n, p.m
    op = _Operator(p)
    # rounding in the HKM product X dS S^-1 grows like 1/mu; projecting dX
    # back onto A(dX) = rp keeps it out of the primal residual
    gram = sla.cho_factor(op.gram())
    C = p.C.toarray()
    b = p.b
    normA = np.array([sp.linalg.norm(M) for M in p.A])
    normC = np.linalg.norm(C)
    rs = np.ones(m) if unit is None else unit.row_scale
    norm_b0 = np.linalg.norm(rs * b)
    # infeasible start in the style of SDPT3
    xi = max(10.0, np.sqrt(n), n * np.max((1.0 + np.abs(b)) / (1.0 + normA)))
    eta = max(10.0, np.sqrt(n), normA.max(), normC)
    X = xi * np.eye(n)
    S = eta * np.eye(n)
    y = np.zeros(m)

    history = []
    trace = []
    best = None
    status = MAX_ITER
    it = 0

    def measures(X, y, S):
        pobj = float(np.sum(C * X))
        dobj = float(b @ y)
        rp = b - op.apply(X)
        Rd = C - op.adjoint(y) - S
        gap = abs(pobj - dobj) / (1.0 + abs(pobj) + abs(dobj))
        pinf = np.linalg.norm(rs * rp) / (1.0 + norm_b0)
        dinf = np.linalg.norm(Rd) / (1.0 + normC)
        return pobj, dobj, rp, Rd, gap, pinf, dinf

    for it in range(1, o.max_iter + 1):
        pobj, dobj, rp, Rd, gap, pinf, dinf = measures(X, y, S)
        history.append(gap)
        trace.append((pobj, dobj, pinf, dinf))
        score = max(gap / o.gap_tol, pinf / o.feas_tol, dinf / o.feas_tol)
        if best is None or score < 0.9 * best[0]:
            best = (score, X.copy(), y.copy(), S.copy(), it - 1)
        elif best[0] < STALL_SCORE and it - 1 - best[4] > STALL_ITERS:
            log.debug("iteration %d: no progress since iteration %d", it, best[4])
            status = NUMERICAL_FAILURE
            break
        if gap <= o.gap_tol and pinf <= o.feas_tol and dinf <= o.feas_tol:
            status = OPTIMAL
            break
        try:
            mu = np.sum(X * S) / n
            Sinv = _sym(np.linalg.inv(S))
            M = op.schur(X, Sinv)
            base = b + op.apply(_sym(X @ Rd @ Sinv))
            schur_solve = _factor(M)

            def direction(sigma_mu, corr=None):
                H = sigma_mu * Sinv - X
                if corr is not None:
                    H = H - _sym(corr @ Sinv)
                dy = schur_solve(base - op.apply(X + H))
                dS = _sym(Rd - op.adjoint(dy))
                dX = _sym(H - X @ dS @ Sinv)
                dX += op.adjoint(sla.cho_solve(gram, rp - op.apply(dX)))
                return dX, dy, dS

            # predictor
            dXa, dya, dSa = direction(0.0)
            ap = min(1.0, o.step_fraction * _max_step(X, dXa))
            ad = min(1.0, o.step_fraction * _max_step(S, dSa))
            mu_aff = np.sum((X + ap * dXa) * (S + ad * dSa)) / n
            sigma = min(1.0, (mu_aff / mu) ** 3)
            # corrector
            dX, dy, dS = direction(sigma * mu, dXa @ dSa)
            ap = min(1.0, o.step_fraction * _max_step(X, dX))
            ad = min(1.0, o.step_fraction * _max_step(S, dS))
        except (np.linalg.LinAlgError, sla.LinAlgError, ValueError, FloatingPointError) as exc:
            log.debug("iteration %d: %s", it, exc)
            status = NUMERICAL_FAILURE
            break
        if not np.isfinite(ap * ad) or max(ap, ad) < 1e-12:
            log.debug("iteration %d: step lengths %.1e, %.1e", it, ap, ad)
            status = NUMERICAL_FAILURE
            break
        log.debug("iteration %d: mu %.2e sigma %.2e steps %.3f %.3f", it, mu, sigma, ap, ad)
        X = _sym(X + ap * dX)
        y = y + ad * dy
        S = _sym(S + ad * dS)
    else:
        it = o.max_iter

    polished = False
    if status != OPTIMAL:
        # fall back on the best iterate seen
        score, X, y, S, it_best = best
        if o.polish and n > 1 and _log_svr(X) >= o.polish_svr:
            try:
                for x, yp in _polish_rank1(op, C, b, X, y):
                    w, V = np.linalg.eigh(C - op.adjoint(yp))
                    Xp, Sp = np.outer(x, x), _sym((V * np.maximum(w, 0.0)) @ V.T)
                    _, _, _, _, gap, pinf, dinf = measures(Xp, yp, Sp)
                    new = max(gap / o.gap_tol, pinf / o.feas_tol, dinf / o.feas_tol)
                    log.debug("rank-one polish: score %.2e -> %.2e", score, new)
                    if new < score:
                        score, X, y, S, polished = new, Xp, yp, Sp, True
                if polished and score <= 1.0:
                    status = OPTIMAL
            except (np.linalg.LinAlgError, ValueError) as exc:
                log.debug("rank-one polish failed: %s", exc)
    pobj, dobj, rp, Rd, gap, pinf, dinf = measures(X, y, S)
    return SdpSolution(
        X=X,
        y=y,
        S=S,
        primal_objective=pobj,
        dual_objective=dobj,
        iterations=it,
        status=status,
        gap=gap,
        primal_infeasibility=pinf,
        dual_infeasibility=dinf,
        gap_history=history,
        trace=trace,
        time_s=time.perf_counter() - t0,
        polished=polished,
    )


def solve(p: SdpProblem, o: SolverOptions | None = None) -> SdpSolution:
    """Solve ``p``; statuses are ``optimal``, ``max-iter`` or ``numerical-failure``.

    When the internal tolerances cannot be met but the iterate still satisfies
    the solution contract (gap 1e-7, residual 1e-8) the status is ``optimal``.
    """
    o = o or SolverOptions()
    if o.scaling:
        ps, ds = scale(p)
        sol = ds.solution(_solve_scaled(ps, o, ds), p)
    else:
        sol = _solve_scaled(p, o)
    if sol.status != OPTIMAL:
        if sol.gap <= CONTRACT_GAP and sol.primal_infeasibility <= CONTRACT_FEAS:
            log.info("accepting iterate at contract tolerance (status was %s)", sol.status)
            sol.status = OPTIMAL
        else:
            log.warning(
                "SDP solve ended with %s: gap %.2e, primal infeasibility %.2e",
                sol.status,
                sol.gap,
                sol.primal_infeasibility,
            )
    return sol


# ---------------------------------------------------------------------------
# SDPA sparse format
# ---------------------------------------------------------------------------


def _fmt(v):
    return repr(float(v))


def export_sdpa(p: SdpProblem, path) -> None:
    """Write ``p`` in SDPA sparse format (one block, upper triangle, 1-based).

    SDPA-format solvers maximise ``F_0 . Y`` subject to ``F_i . Y = c_i``, so
    the cost is written as ``F_0 = -C`` with ``F_i = A_i`` and ``c = b``. The
    optimal value reported by such a solver is the negated SDP value.
    """
    lines = [f"{p.m} = mDIM", "1 = nBLOCK", f"{p.n} = bLOCKsTRUCT"]
    lines.append(" ".join(_fmt(v) for v in p.b))
    for k, M in enumerate((-p.C, *p.A)):
        coo = sp.triu(M).tocoo()
        order = np.lexsort((coo.col, coo.row))
        for i, j, v in zip(coo.row[order], coo.col[order], coo.data[order]):
            lines.append(f"{k} 1 {i + 1} {j + 1} {_fmt(v)}")
    Path(path).write_text("\n".join(lines) + "\n")


def import_sdpa(path) -> SdpProblem:
    raw = [ln.split('"')[0].split("*")[0].strip() for ln in Path(path).read_text().splitlines()]
    raw = [ln for ln in raw if ln]

    def head(ln):
        return ln.replace(",", " ").replace("{", " ").replace("}", " ").split()

    m = int(head(raw[0])[0])
    nblocks = int(head(raw[1])[0])
    if nblocks != 1:
        raise ValueError("only single-block SDPA files are supported")
    n = abs(int(head(raw[2])[0]))
    b = np.array([float(t) for t in head(raw[3])[:m]])
    entries = [[[], [], []] for _ in range(m + 1)]
    for ln in raw[4:]:
        k, _, i, j, v = ln.split()
        e = entries[int(k)]
        i, j, v = int(i) - 1, int(j) - 1, float(v)
        e[0].append(i)
        e[1].append(j)
        e[2].append(v)
        if i != j:
            e[0].append(j)
            e[1].append(i)
            e[2].append(v)
    mats = [sp.csr_matrix((e[2], (e[0], e[1])), shape=(n, n)) for e in entries]
    return SdpProblem(-mats[0], mats[1:], b)
