"""Rotation averaging: local solver versus certified SDP solution.

Run: python3 demos/02_rotation_averaging.py
"""

import json
from pathlib import Path

from caysdp import certify, harness, qcqp, sdp
from caysdp import localsolve as ls
from caysdp import problems as pb
from caysdp.noise import make_rng

# A recorded instance on which a randomly started local solve gets trapped.
fixture = Path(__file__).resolve().parents[1] / "tests" / "fixtures" / "witnesses.json"
w = next(x for x in json.loads(fixture.read_text())["witnesses"] if x["problem"] == "rotation_averaging")
problem, C_true = harness.simulate(w["problem"], w["size"], w["sigma"], w["seed"])

q = qcqp.build(problem)
relaxed = sdp.relax(q)
sol = sdp.solve(relaxed)
cert = certify.certify(problem, sol, q)
print(f"SDP: status {sol.status}, {sol.iterations} iterations, value {sol.value:.6f}")
print(f"certificate: log SVR {cert.log_svr:.2f}, rank1 {cert.rank1}, extraction cost {cert.extracted_cost:.6f}")

trapped = ls.solve_local(problem, ls.random_init(problem, make_rng(w["init_seed"])), ls.GnOptions(**w["gn_options"]))
print(f"local solve from a random start: cost {trapped.cost:.3f}, converged {trapped.converged}")
print(f"local solve from the groundtruth: cost {ls.solve_local(problem, C_true).cost:.6f}")
print("the certified value is a lower bound on every local cost:", cert.sdp_value <= trapped.cost)
print("extraction error vs groundtruth:", pb.estimate_error(problem, cert.estimate, C_true))
