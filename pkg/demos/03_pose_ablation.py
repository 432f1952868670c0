"""Effect of the redundant constraints on tightness for pose averaging.

Runs a small sweep per configuration; increase ``TRIALS`` for smoother curves.
Without any redundant rows the relaxation is loose and the solver often ends
without converging; such trials count as not rank-1.
Run: python3 demos/03_pose_ablation.py
"""

import logging

from caysdp import harness

logging.getLogger("caysdp.sdp").setLevel(logging.ERROR)

TRIALS = 10
SIGMAS = [0.1, 0.5, 1.0]
configs = {
    "all families": dict(redundant="all"),
    "compactness only": dict(redundant=[]),
    "no redundant rows": dict(redundant=[], force_redundant=True),
}
print(f"rank-1 fraction over {TRIALS} trials")
print(f"{'configuration':>20}" + "".join(f"  sigma={s:<4}" for s in SIGMAS))
for name, kw in configs.items():
    cfg = harness.SweepConfig(problem="pose_averaging", sigmas=SIGMAS, trials=TRIALS, seed=1, **kw)
    _, summary = harness.run_sweep(cfg)
    print(f"{name:>20}" + "".join(f"  {row['rank1_fraction']:10.2f}" for row in summary)
          + f"   (failed solves: {sum(row['failed'] for row in summary)})")
