"""Gaussian-like noise on SO(3)/SE(3) through the Cayley map.

Also holds the tools used to compare exponential-coordinate and
Cayley-coordinate rotation distributions (covariance moment matching and
densities on the rotation angle).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import integrate

from . import liegroup as lg

_EDGE = 1e-9


def make_rng(seed):
    """Counter-based generator; the same seed always yields the same stream.

    ``seed`` may be an int, a sequence of ints, or a ``numpy.random.SeedSequence``.
    """
    if isinstance(seed, np.random.Generator):
        return seed
    if not isinstance(seed, np.random.SeedSequence):
        seed = np.random.SeedSequence(seed)
    return np.random.Generator(np.random.Philox(seed))


@dataclass(frozen=True)
class LieGaussian:
    """Distribution ``cay(eps^) @ mean`` with ``eps ~ N(0, cov)``.

    ``mapping`` selects the map used to push samples onto the group; ``"cay"``
    is the estimation model, ``"exp"`` is kept for comparisons.
    """

    mean: np.ndarray
    cov: np.ndarray
    mapping: str = "cay"

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float)
        cov = np.asarray(self.cov, dtype=float)
        dim = {(3, 3): 3, (4, 4): 6}.get(mean.shape)
        if dim is None:
            raise ValueError("mean must be a 3x3 rotation or 4x4 pose")
        if cov.shape != (dim, dim):
            raise ValueError(f"covariance must be {dim}x{dim}")
        if np.max(np.abs(cov - cov.T)) > 1e-12:
            raise ValueError("covariance must be symmetric")
        np.linalg.cholesky(cov)
        if self.mapping not in ("cay", "exp"):
            raise ValueError("mapping must be 'cay' or 'exp'")
        if self.mapping == "exp" and dim == 6:
            raise ValueError("exp mapping is only provided for rotations")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def dim(self):
        return self.cov.shape[0]


def _draw(model, rng):
    L = np.linalg.cholesky(model.cov)
    return L @ rng.standard_normal(model.dim)


def sample_rotation(model: LieGaussian, seed) -> np.ndarray:
    if model.dim != 3:
        raise ValueError("sample_rotation needs a 3x3 model")
    rng = make_rng(seed)
    eps = _draw(model, rng)
    left = lg.cay_so3(eps) if model.mapping == "cay" else lg.exp_so3(eps)
    return left @ model.mean


def sample_pose(model: LieGaussian, seed) -> np.ndarray:
    if model.dim != 6:
        raise ValueError("sample_pose needs a 6x6 model")
    rng = make_rng(seed)
    return lg.cay_se3(_draw(model, rng)) @ model.mean


def perturb_rotation(C, cov, rng):
    """Left-perturb ``C`` by Cayley noise drawn from ``rng`` (shared stream)."""
    eps = np.linalg.cholesky(cov) @ rng.standard_normal(3)
    return lg.cay_so3(eps) @ C


def perturb_pose(T, cov, rng):
    eps = np.linalg.cholesky(cov) @ rng.standard_normal(6)
    return lg.cay_se3(eps) @ T


# ---------------------------------------------------------------------------
# moment matching between exp and cay coordinates
# ---------------------------------------------------------------------------


def cov_exp_to_cay(cov_exp):
    """Second-order Cayley covariance matching an exponential-coordinate one.

    ``S2 = S1 + (tr(S1) I + 2 S1) S1 / 6``
    """
    S1 = np.asarray(cov_exp, dtype=float)
    if S1.shape != (3, 3) or np.max(np.abs(S1 - S1.T)) > 1e-12:
        raise ValueError("covariance must be a symmetric 3x3 matrix")
    if np.min(np.linalg.eigvalsh(S1)) < -1e-12:
        raise ValueError("covariance must be positive semidefinite")
    S2 = S1 + (np.trace(S1) * np.eye(3) + 2.0 * S1) @ S1 / 6.0
    return 0.5 * (S2 + S2.T)


def sigma_exp_to_cay(sigma1):
    """One-axis version of :func:`cov_exp_to_cay`: ``sqrt(s^2 + s^4 / 2)``."""
    return float(np.sqrt(sigma1**2 + 0.5 * sigma1**4))


@dataclass(frozen=True)
class AngleDensity:
    """Density of the rotation angle when the axis is held fixed."""

    mapping: str
    sigma: float

    def __post_init__(self):
        if self.mapping not in ("exp", "cay"):
            raise ValueError("mapping must be 'exp' or 'cay'")
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")


def angle_density(d: AngleDensity, angle):
    angle = np.asarray(angle, dtype=float)
    s2 = d.sigma**2
    norm = 1.0 / np.sqrt(2.0 * np.pi * s2)
    if d.mapping == "exp":
        return norm * np.exp(-0.5 * angle**2 / s2)
    if np.any(np.abs(angle) >= np.pi):
        raise ValueError("Cayley angle density is defined on (-pi, pi) only")
    half = 0.5 * angle
    z = 2.0 * np.tan(half)
    return norm * np.exp(-0.5 * z**2 / s2) / np.cos(half) ** 2


def _limits(d):
    if d.mapping == "exp":
        return -np.inf, np.inf
    return -np.pi + _EDGE, np.pi - _EDGE


def angle_density_mass(d: AngleDensity):
    lo, hi = _limits(d)
    val, _ = integrate.quad(lambda a: angle_density(d, a), lo, hi, epsabs=1e-13, epsrel=1e-12, limit=200)
    return val


def numeric_angle_std(d: AngleDensity):
    """Standard deviation of the angle, by adaptive quadrature."""
    lo, hi = _limits(d)
    var, _ = integrate.quad(
        lambda a: a * a * angle_density(d, a), lo, hi, epsabs=1e-14, epsrel=1e-10, limit=200
    )
    return float(np.sqrt(var))
