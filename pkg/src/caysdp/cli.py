"""Command line entry point: ``caysdp {gen,solve,export-sdpa,sweep}``.

Exit codes: 0 success, 2 some sweep trials failed, 1 fatal error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import harness, problems as pb, qcqp, sdp

log = logging.getLogger("caysdp")


def _families(arg):
    if arg is None or arg == "all":
        return None
    if arg == "none":
        return []
    return [f.strip() for f in arg.split(",") if f.strip()]


def _sigmas(arg):
    return [float(s) for s in str(arg).split(",") if s.strip()]


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--problem", default="rotation_averaging",
                        help="rotation_averaging | pose_averaging | discrete_trajectory | continuous_trajectory")
    common.add_argument("--sigma", default="0.1", help="noise level (comma list for sweep)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--k", type=int, default=None, help="trajectory length K")
    common.add_argument("--m", type=int, default=None, help="number of measurements M")
    common.add_argument("--redundant", default=None,
                        help="comma list of redundant families, 'all' or 'none'")
    common.add_argument("--allow-noncompact", action="store_true",
                        help="let --redundant drop the compactness family")
    common.add_argument("--config", default=None, help="JSON file whose keys override flags")
    common.add_argument("--out", default=None)
    common.add_argument("-v", "--verbose", action="store_true")
    # settable from the config file only
    common.set_defaults(sdp_options=None, gn_options=None)

    p = argparse.ArgumentParser(prog="caysdp", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", parents=[common], help="simulate an instance and write it as JSON")

    s = sub.add_parser("solve", parents=[common], help="solve one instance (file or simulated)")
    s.add_argument("input", nargs="?", help="problem JSON written by 'gen'")
    s.add_argument("--mode", choices=["local", "global", "both"], default="both")
    s.add_argument("--sdpa", action="store_true", help="also export the relaxation")

    e = sub.add_parser("export-sdpa", parents=[common], help="write the SDP relaxation in SDPA format")
    e.add_argument("input", nargs="?", help="problem JSON written by 'gen'")

    w = sub.add_parser("sweep", parents=[common], help="Monte-Carlo tightness sweep")
    w.add_argument("--trials", type=int, default=20)
    w.add_argument("--workers", type=int, default=1)
    w.add_argument("--local-inits", type=int, default=1)
    return p


def _apply_config(args):
    """Overlay the keys of ``--config`` onto the parsed flags."""
    if not args.config:
        return args
    cfg = json.loads(Path(args.config).read_text())
    for key, val in cfg.items():
        attr = {"sigmas": "sigma"}.get(key, key).replace("-", "_")
        if attr == "size":
            kind = harness.problem_kind(cfg.get("problem", args.problem))
            attr = "k" if kind.endswith("trajectory") else "m"
        if isinstance(val, list):
            val = ",".join(str(v) for v in val)
        elif isinstance(val, dict) and attr not in ("sdp_options", "gn_options"):
            raise ValueError(f"config key {key!r} must not be an object")
        if not hasattr(args, attr):
            raise ValueError(f"unknown config key {key!r}")
        setattr(args, attr, val)
    return args


def _size(args, kind):
    if kind.endswith("trajectory"):
        return args.k or harness.DEFAULT_SIZE[kind]
    return args.m or harness.DEFAULT_SIZE[kind]


def _instance(args):
    if getattr(args, "input", None):
        return pb.load_problem(args.input)
    kind = harness.problem_kind(args.problem)
    sigmas = _sigmas(args.sigma)
    if len(sigmas) != 1:
        raise ValueError("a single --sigma is needed here")
    return harness.simulate(kind, _size(args, kind), sigmas[0], args.seed)


def cmd_gen(args):
    problem, gt = _instance(args)
    out = args.out or f"{problem.kind}.json"
    pb.save_problem(problem, out, gt)
    print(out)
    return 0


def cmd_solve(args):
    problem, gt = _instance(args)
    rec, _ = harness.run_single(
        problem,
        gt,
        mode=args.mode,
        seed=args.seed,
        out_dir=args.out,
        families=_families(args.redundant),
        force=args.allow_noncompact,
        sdpa=args.sdpa,
        sdp_options=args.sdp_options,
        gn_options=args.gn_options,
    )
    print(json.dumps({k: harness._jsonable(v) for k, v in rec.__dict__.items()}, indent=1))
    return 1 if rec.error else 0


def cmd_export(args):
    problem, _ = _instance(args)
    relaxed = sdp.relax(qcqp.build(problem, _families(args.redundant), args.allow_noncompact))
    out = args.out or f"{problem.kind}.dat-s"
    sdp.export_sdpa(relaxed, out)
    print(out)
    return 0


def cmd_sweep(args):
    cfg = harness.SweepConfig(
        problem=args.problem,
        size=args.k if harness.problem_kind(args.problem).endswith("trajectory") else args.m,
        sigmas=_sigmas(args.sigma),
        trials=args.trials,
        seed=args.seed,
        redundant=_families(args.redundant),
        force_redundant=args.allow_noncompact,
        local_inits=args.local_inits,
        workers=args.workers,
        sdp_options=args.sdp_options or {},
        gn_options=args.gn_options or {},
        out=args.out,
    )
    records, summary = harness.run_sweep(cfg)
    stem = Path(args.out or f"sweep_{cfg.problem}")
    harness.emit_results(records, stem.with_suffix(".csv"), "csv")
    harness.emit_results(records, stem.with_suffix(".json"), "json", summary)
    cols = ["sigma", "trials", "failed", "rank1_fraction", "local_global_fraction", "log_svr_median"]
    print("  ".join(f"{c:>21}" for c in cols))
    for row in summary:
        print("  ".join(f"{row[c]:>21.4g}" if isinstance(row[c], float) else f"{row[c]:>21}" for c in cols))
    return 2 if any(r.failed for r in records) else 0


COMMANDS = {"gen": cmd_gen, "solve": cmd_solve, "export-sdpa": cmd_export, "sweep": cmd_sweep}


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args = _apply_config(args)
        return COMMANDS[args.command](args)
    except Exception as exc:
        log.error("%s: %s", type(exc).__name__, exc)
        if args.verbose:
            raise
        return 1


if __name__ == "__main__":
    sys.exit(main())
