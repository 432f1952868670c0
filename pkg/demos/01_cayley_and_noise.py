"""Cayley map basics and moment matching of the noise model.

Run: python3 demos/01_cayley_and_noise.py
"""

import numpy as np

from caysdp import liegroup as lg
from caysdp import noise

phi = np.array([0.4, -1.2, 2.0])
C = lg.cay_so3(phi)
print("cay(phi) is a rotation:", lg.is_rotation(C))
print("angle  :", lg.rotation_angle(C), " 2 atan(|phi|/2):", 2 * np.arctan(np.linalg.norm(phi) / 2))
print("inverse round trip error:", np.abs(lg.cay_inv_so3(C) - phi).max())

# The Cayley coordinates are not exponential coordinates: the same rotation
# has a different coordinate vector, and the map saturates at the angle pi.
print("|log(C)| =", np.linalg.norm(lg.log_so3(C)), " |cay^-1(C)| =", np.linalg.norm(phi))

print("\nangle std of the induced rotation noise (target sigma_1)")
print(" sigma_1   first-order   second-order")
for s1 in (0.1, 0.2, 0.5):
    first = noise.numeric_angle_std(noise.AngleDensity("cay", s1))
    second = noise.numeric_angle_std(noise.AngleDensity("cay", noise.sigma_exp_to_cay(s1)))
    print(f" {s1:7.2f}   {first:11.5f}   {second:12.5f}")

rng = noise.make_rng(0)
draws = np.array([lg.cay_inv_so3(noise.perturb_rotation(np.eye(3), 0.04 * np.eye(3), rng)) for _ in range(20000)])
print("\nsample covariance of Cayley-coordinate noise (target 0.04 I):")
print(np.round(np.cov(draws.T), 4))
