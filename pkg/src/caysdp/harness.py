"""Monte-Carlo sweeps over noise levels and single-instance runs.

Each trial simulates an instance, solves the SDP relaxation, certifies it and
runs the local solver from a random start, from the groundtruth and from the
extracted estimate. Trials own their random streams, derived from
``(seed, level index, trial index)``, so results do not depend on scheduling.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import certify as cert
from . import localsolve as ls
from . import problems as pb
from . import qcqp
from . import sdp

log = logging.getLogger(__name__)

RESULT_SCHEMA = 1
GLOBAL_TOL = 1e-5

DEFAULT_SIZE = {
    "rotation_averaging": 10,
    "pose_averaging": 10,
    "discrete_trajectory": 8,
    "continuous_trajectory": 9,
}
ALIASES = {
    "rotation": "rotation_averaging",
    "rot": "rotation_averaging",
    "pose": "pose_averaging",
    "discrete": "discrete_trajectory",
    "continuous": "continuous_trajectory",
}


def problem_kind(name):
    kind = ALIASES.get(name, name)
    if kind not in DEFAULT_SIZE:
        raise ValueError(f"unknown problem {name!r}; choose from {sorted(DEFAULT_SIZE)}")
    return kind


def simulate(kind, size, sigma, seed):
    sim = pb.SIMULATORS[kind]
    if kind in ("rotation_averaging", "pose_averaging"):
        return sim(M=size, sigma=sigma, seed=seed)
    return sim(K=size, sigma=sigma, seed=seed)


@dataclass
class SweepConfig:
    problem: str = "rotation_averaging"
    size: int | None = None
    sigmas: list = field(default_factory=lambda: [0.0, 0.1, 0.2])
    trials: int = 20
    seed: int = 0
    redundant: object = None  # None/"all", "none", or a list of family names
    force_redundant: bool = False  # allow dropping the compactness family
    local_inits: int = 1
    workers: int = 1
    sdp_options: dict = field(default_factory=dict)
    gn_options: dict = field(default_factory=dict)
    out: str | None = None

    def __post_init__(self):
        self.problem = problem_kind(self.problem)
        if self.size is None:
            self.size = DEFAULT_SIZE[self.problem]
        self.sigmas = [float(s) for s in np.atleast_1d(self.sigmas)]
        if not self.sigmas:
            raise ValueError("noise grid must be nonempty")
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if self.local_inits < 1:
            raise ValueError("local_inits must be at least 1")

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    def to_dict(self):
        return asdict(self)


@dataclass
class TrialRecord:
    problem: str
    size: int
    sigma: float
    level: int
    trial: int
    seed: int
    sdp_status: str = ""
    sdp_iterations: int = 0
    log_svr: float = math.nan
    rank1: bool = False
    det_ok: bool = False
    sdp_value: float = math.nan
    extracted_cost: float = math.nan
    cert_gap: float = math.nan
    extraction_error: float = math.nan
    local_random_cost: float = math.nan
    local_random_converged: bool = False
    local_found_global: bool = False
    local_gt_cost: float = math.nan
    local_extracted_cost: float = math.nan
    n_constraints: int = 0
    n_pruned: int = 0
    t_build_ms: float = math.nan
    t_sdp_ms: float = math.nan
    t_local_ms: float = math.nan
    error: str = ""

    @property
    def failed(self):
        return bool(self.error)


COLUMNS = [f.name for f in fields(TrialRecord)]
TIMING_COLUMNS = ("t_build_ms", "t_sdp_ms", "t_local_ms")


def _ms(t0):
    return 1e3 * (time.perf_counter() - t0)


def _trial_seed(seed, level, trial):
    return np.random.SeedSequence([seed, level, trial])


def evaluate(problem, groundtruth, rec: TrialRecord, init_rng, families=None, force=False,
             sdp_options=None, gn_options=None, local_inits=1, keep=None):
    """Run the global and local pipelines on one instance, filling ``rec``.

    ``keep`` (a dict) receives the intermediate objects when given.
    """
    gn_opts = ls.GnOptions(**(gn_options or {}))
    t0 = time.perf_counter()
    q = qcqp.build(problem, families, force)
    relaxed = sdp.relax(q)
    rec.t_build_ms = _ms(t0)
    rec.n_constraints = relaxed.m
    rec.n_pruned = len(relaxed.pruned)
    t0 = time.perf_counter()
    sol = sdp.solve(relaxed, sdp.SolverOptions(**(sdp_options or {})))
    rec.t_sdp_ms = _ms(t0)
    rec.sdp_status = sol.status
    rec.sdp_iterations = sol.iterations
    rec.sdp_value = sol.primal_objective
    errors = []
    certificate = None
    try:
        certificate = cert.certify(problem, sol, q)
        rec.log_svr = certificate.log_svr
        rec.rank1 = certificate.rank1 and sol.status == sdp.OPTIMAL
        rec.det_ok = certificate.det_ok
        rec.extracted_cost = certificate.extracted_cost
        rec.cert_gap = certificate.gap
        if groundtruth is not None:
            rec.extraction_error = pb.estimate_error(problem, certificate.estimate, groundtruth)
    except (ValueError, np.linalg.LinAlgError) as exc:
        rec.log_svr = cert.log_svr(sol.X)
        errors.append(f"extraction: {exc}")

    t0 = time.perf_counter()
    best = None
    for _ in range(local_inits):
        try:
            r = ls.solve_local(problem, ls.random_init(problem, init_rng), gn_opts)
        except (ValueError, np.linalg.LinAlgError) as exc:
            errors.append(f"local: {exc}")
            continue
        if best is None or r.cost < best.cost:
            best = r
    if best is not None:
        rec.local_random_cost = best.cost
        rec.local_random_converged = best.converged
        rec.local_found_global = bool(
            (best.cost - rec.sdp_value) / (1.0 + abs(rec.sdp_value)) <= GLOBAL_TOL
        )
    if groundtruth is not None:
        try:
            rec.local_gt_cost = ls.solve_local(problem, groundtruth, gn_opts).cost
        except (ValueError, np.linalg.LinAlgError) as exc:
            errors.append(f"local-gt: {exc}")
    if certificate is not None and np.isfinite(certificate.extracted_cost):
        try:
            rec.local_extracted_cost = ls.solve_local(problem, certificate.estimate, gn_opts).cost
        except (ValueError, np.linalg.LinAlgError) as exc:
            errors.append(f"local-extracted: {exc}")
    rec.t_local_ms = _ms(t0)
    if sol.status != sdp.OPTIMAL:
        errors.append(f"sdp: {sol.status}")
    rec.error = "; ".join(errors)
    if keep is not None:
        keep.update(qcqp=q, relaxed=relaxed, solution=sol, certificate=certificate, local=best)
    return rec


def run_trial(cfg: SweepConfig, level: int, trial: int) -> TrialRecord:
    sigma = cfg.sigmas[level]
    seq = _trial_seed(cfg.seed, level, trial)
    sim_seq, init_seq = seq.spawn(2)
    rec = TrialRecord(cfg.problem, cfg.size, sigma, level, trial, cfg.seed)
    try:
        problem, gt = simulate(cfg.problem, cfg.size, sigma, sim_seq)
        evaluate(
            problem,
            gt,
            rec,
            np.random.Generator(np.random.Philox(init_seq)),
            cfg.redundant,
            cfg.force_redundant,
            cfg.sdp_options,
            cfg.gn_options,
            cfg.local_inits,
        )
    except Exception as exc:  # a failed trial is recorded, never fatal
        log.exception("trial %d at sigma=%g failed", trial, sigma)
        rec.error = f"{type(exc).__name__}: {exc}"
    return rec


def _run_packed(args):
    cfg, level, trial = args
    return run_trial(cfg, level, trial)


def run_sweep(cfg: SweepConfig):
    """All trials over the noise grid; returns ``(records, summary)``."""
    jobs = [(cfg, lv, t) for lv in range(len(cfg.sigmas)) for t in range(cfg.trials)]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            records = list(pool.map(_run_packed, jobs))
    else:
        records = [_run_packed(j) for j in jobs]
    records.sort(key=lambda r: (r.level, r.trial))
    return records, summarize(records)


# ---------------------------------------------------------------------------
# aggregation and output
# ---------------------------------------------------------------------------


def quartiles(values):
    """``(Q1, median, Q3)`` by the median-of-halves rule.

    The data are split into a lower and an upper half; for an odd count the
    median itself belongs to neither half.
    """
    x = np.sort(np.asarray(values, dtype=float))
    n = len(x)
    if n == 0:
        return (math.nan,) * 3
    if n == 1:
        return (float(x[0]),) * 3
    h = n // 2
    lower, upper = x[:h], x[n - h :]
    return float(np.median(lower)), float(np.median(x)), float(np.median(upper))


def summarize(records):
    rows = []
    levels = sorted({(r.level, r.sigma) for r in records})
    for level, sigma in levels:
        rs = [r for r in records if r.level == level]
        ok = [r for r in rs if np.isfinite(r.log_svr)]
        q1, med, q3 = quartiles([r.log_svr for r in ok])
        n = len(rs)
        rows.append(
            {
                "sigma": sigma,
                "trials": n,
                "failed": sum(r.failed for r in rs),
                "rank1_fraction": sum(r.rank1 for r in rs) / n,
                "local_global_fraction": sum(r.local_found_global for r in rs) / n,
                "local_converged_fraction": sum(r.local_random_converged for r in rs) / n,
                "log_svr_min": min((r.log_svr for r in ok), default=math.nan),
                "log_svr_q1": q1,
                "log_svr_median": med,
                "log_svr_q3": q3,
                "log_svr_max": max((r.log_svr for r in ok), default=math.nan),
            }
        )
    return rows


def _jsonable(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None if math.isnan(v) else ("inf" if v > 0 else "-inf")
    if isinstance(v, (np.floating, np.integer, np.bool_)):
        return _jsonable(v.item())
    return v


def _from_json(v, kind):
    if v is None and kind is float:
        return math.nan
    if v in ("inf", "-inf") and kind is float:
        return float(v)
    return v


def records_to_json(records, summary=None):
    return {
        "schema": RESULT_SCHEMA,
        "columns": COLUMNS,
        "records": [{k: _jsonable(v) for k, v in asdict(r).items()} for r in records],
        "summary": [{k: _jsonable(v) for k, v in row.items()} for row in (summary or [])],
    }


def records_from_json(doc):
    types = {f.name: f.type for f in fields(TrialRecord)}
    out = []
    for d in doc["records"]:
        kw = {k: _from_json(v, float if types[k] in ("float", float) else None) for k, v in d.items()}
        out.append(TrialRecord(**kw))
    return out, doc.get("summary", [])


def emit_results(records, path, fmt="csv", summary=None):
    """Write records as CSV (column order ``COLUMNS``) or JSON."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if fmt == "csv":
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(COLUMNS)
            for r in records:
                w.writerow([_csv_value(getattr(r, c)) for c in COLUMNS])
    elif fmt == "json":
        doc = records_to_json(records, summary if summary is not None else summarize(records))
        path.write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")
    else:
        raise ValueError("format must be 'csv' or 'json'")
    return path


def _csv_value(v):
    if isinstance(v, bool):
        return int(v)
    if isinstance(v, float):
        return repr(v)
    return v


def load_results(path):
    return records_from_json(json.loads(Path(path).read_text()))


# ---------------------------------------------------------------------------
# single runs
# ---------------------------------------------------------------------------


def run_single(problem, groundtruth=None, mode="both", seed=0, out_dir=None, families=None,
               force=False, sdpa=False, sdp_options=None, gn_options=None):
    """Run one instance. ``mode`` is ``local``, ``global`` or ``both``.

    Artifacts written to ``out_dir`` (when given): ``record.json``,
    ``certificate.json`` (global modes), ``problem.dat-s`` (if ``sdpa``) and
    ``trajectory.csv`` for trajectory problems.
    """
    if mode not in ("local", "global", "both"):
        raise ValueError("mode must be local, global or both")
    rec = TrialRecord(problem.kind, problem.size, math.nan, 0, 0, int(seed))
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), 0, 0]).spawn(2)[1]))
    keep = {}
    if mode in ("global", "both"):
        evaluate(problem, groundtruth, rec, rng, families, force, sdp_options, gn_options, keep=keep)
        if mode == "global":
            rec.local_random_cost = math.nan
            rec.local_random_converged = False
            rec.local_found_global = False
    else:
        gn_opts = ls.GnOptions(**(gn_options or {}))
        t0 = time.perf_counter()
        r = ls.solve_local(problem, ls.random_init(problem, rng), gn_opts)
        rec.local_random_cost, rec.local_random_converged = r.cost, r.converged
        if groundtruth is not None:
            rec.local_gt_cost = ls.solve_local(problem, groundtruth, gn_opts).cost
        rec.t_local_ms = _ms(t0)
        keep["local"] = r
    artifacts = dict(keep)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        rdoc = {k: _jsonable(v) for k, v in asdict(rec).items()}
        (out / "record.json").write_text(json.dumps(rdoc, indent=1, sort_keys=True) + "\n")
        c = keep.get("certificate")
        if c is not None:
            cdoc = {k: _jsonable(v) for k, v in c.to_dict().items()}
            (out / "certificate.json").write_text(json.dumps(cdoc, indent=1, sort_keys=True) + "\n")
        if sdpa:
            relaxed = keep.get("relaxed") or sdp.relax(qcqp.build(problem, families, force))
            sdp.export_sdpa(relaxed, out / "problem.dat-s")
        est = c.estimate if c is not None else getattr(keep.get("local"), "estimate", None)
        if isinstance(est, pb.TrajectoryEstimate):
            write_trajectory_csv(est, out / "trajectory.csv")
    return rec, artifacts


def write_trajectory_csv(est: pb.TrajectoryEstimate, path):
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["k", "x", "y", "z"] + [f"C{i}{j}" for i in range(3) for j in range(3)])
        for k, T in enumerate(est.poses):
            w.writerow([k, *map(repr, T[:3, 3]), *map(repr, T[:3, :3].ravel())])
