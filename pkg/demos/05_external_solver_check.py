"""Cross-check an exported SDPA file without trusting the embedded solver.

The file is parsed here on its own, under the SDPA convention
``max F0.Y  s.t.  Fi.Y = ci, Y psd`` whose dual is
``min c^T z  s.t.  sum_i z_i Fi - F0 psd``. The embedded solution (X, y)
maps to Y = X and z = -y; the script checks feasibility of both and that the
two objectives agree, which certifies optimality for the file's data. It then
solves the file with an external solver through cvxpy (not a package
dependency; install it separately) and reports its status and value.
Run: python3 demos/05_external_solver_check.py
"""

import tempfile
import warnings
from pathlib import Path

import numpy as np

from caysdp import qcqp, sdp
from caysdp import problems as pb


def read_sdpa(path):
    lines = [ln for ln in Path(path).read_text().splitlines() if ln.strip()]
    m, n = int(lines[0].split()[0]), int(lines[2].split()[0])
    c = np.array(lines[3].split(), dtype=float)
    F = np.zeros((m + 1, n, n))
    for ln in lines[4:]:
        k, _, i, j, v = ln.split()
        F[int(k), int(i) - 1, int(j) - 1] = F[int(k), int(j) - 1, int(i) - 1] = float(v)
    return F, c


problem, _ = pb.simulate_rotation_averaging(M=10, sigma=0.1, seed=0)
relaxed = sdp.relax(qcqp.build(problem))
sol = sdp.solve(relaxed)

with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "ra.dat-s"
    sdp.export_sdpa(relaxed, path)
    F, c = read_sdpa(path)

Y, z = sol.X, -sol.y
primal = float(np.sum(F[0] * Y))
dual = float(c @ z)
Z = np.tensordot(z, F[1:], axes=1) - F[0]
residual = max(abs(np.sum(F[i] * Y) - c[i - 1]) for i in range(1, len(F)))
print(f"embedded solver ({sol.status}): SDP value {sol.value:.10f}")
print(f"  from the file: max |Fi.Y - ci| = {residual:.1e}, min eig Y = {np.linalg.eigvalsh(Y)[0]:.1e}")
print(f"  dual slack min eig = {np.linalg.eigvalsh(Z)[0]:.1e} (max {np.linalg.eigvalsh(Z)[-1]:.1e})")
print(f"  -F0.Y = {-primal:.10f}, -c.z = {-dual:.10f}, difference {abs(primal - dual):.1e}")

try:
    import cvxpy as cp
except ImportError:  # pragma: no cover
    raise SystemExit("cvxpy is not installed; skipping the external solve")

Yv = cp.Variable(F.shape[1:], symmetric=True)
cons = [Yv >> 0] + [cp.trace(F[i] @ Yv) == c[i - 1] for i in range(1, len(F))]
ext = cp.Problem(cp.Maximize(cp.trace(F[0] @ Yv)), cons)
solver = cp.CLARABEL if "CLARABEL" in cp.installed_solvers() else cp.SCS
with warnings.catch_warnings():
    warnings.simplefilter("ignore")
    ext.solve(solver=solver)
print(f"external solver {solver} ({ext.status}): {-ext.value:.10f} (negated SDPA optimum)")
print(f"  relative difference {abs(sol.value + ext.value) / (1 + abs(sol.value)):.1e}")
print(f"  its min eig Y = {np.linalg.eigvalsh(Yv.value)[0]:.1e}")
