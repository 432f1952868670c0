"""Cayley-map rotation and pose estimation with certifiable SDP relaxations.

Modules:

* ``liegroup``   SO(3)/SE(3) operators, Cayley maps and Jacobians
* ``noise``      Cayley-map noise models and exp/cay moment matching
* ``problems``   the four estimation problems: data, simulation, costs
* ``qcqp``       homogenised QCQP formulations with redundant constraints
* ``sdp``        standard-form SDP, interior-point solver, SDPA files
* ``certify``    rank-1 certificates and estimate extraction
* ``localsolve`` Gauss-Newton local solvers
* ``harness``    Monte-Carlo sweeps and single-instance runs
"""

from . import certify, harness, liegroup, localsolve, noise, problems, qcqp, sdp

__version__ = "0.1.0"

__all__ = ["certify", "harness", "liegroup", "localsolve", "noise", "problems", "qcqp", "sdp"]
