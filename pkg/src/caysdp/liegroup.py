"""SO(3) / SE(3) primitives built around the Cayley map.

Vectors in ``R^6`` are always ordered ``(rho, phi)``: translational block
first, rotational block second.
"""

from __future__ import annotations

import numpy as np

ORTHO_TOL = 1e-9
# rotation angles closer than this to pi make (C + I) numerically singular
PI_MARGIN = 1e-6


class SingularCayleyError(ValueError):
    """Raised when the Cayley map or its inverse hits a singular factor."""


# ---------------------------------------------------------------------------
# hat / vee operators
# ---------------------------------------------------------------------------


def hat_so3(v):
    """Skew-symmetric matrix ``v^`` such that ``hat_so3(v) @ w == cross(v, w)``."""
    v = np.asarray(v, dtype=float)
    return np.array(
        [
            [0.0, -v[2], v[1]],
            [v[2], 0.0, -v[0]],
            [-v[1], v[0], 0.0],
        ]
    )


def vee_so3(M, tol=ORTHO_TOL):
    M = np.asarray(M, dtype=float)
    if M.shape != (3, 3):
        raise ValueError(f"expected 3x3 matrix, got {M.shape}")
    if np.max(np.abs(M + M.T)) > tol:
        raise ValueError("matrix is not skew-symmetric")
    return np.array([M[2, 1], M[0, 2], M[1, 0]])


def hat_se3(xi):
    """4x4 matrix ``[[phi^, rho], [0, 0]]``."""
    xi = np.asarray(xi, dtype=float)
    out = np.zeros((4, 4))
    out[:3, :3] = hat_so3(xi[3:])
    out[:3, 3] = xi[:3]
    return out


def vee_se3(M, tol=ORTHO_TOL):
    M = np.asarray(M, dtype=float)
    if M.shape != (4, 4):
        raise ValueError(f"expected 4x4 matrix, got {M.shape}")
    if np.max(np.abs(M[3])) > tol:
        raise ValueError("bottom row of an se(3) element must be zero")
    return np.concatenate([M[:3, 3], vee_so3(M[:3, :3], tol)])


def curly_hat(xi):
    """6x6 matrix ``[[phi^, rho^], [0, phi^]]``."""
    xi = np.asarray(xi, dtype=float)
    out = np.zeros((6, 6))
    P = hat_so3(xi[3:])
    out[:3, :3] = P
    out[3:, 3:] = P
    out[:3, 3:] = hat_so3(xi[:3])
    return out


def curly_vee(M, tol=ORTHO_TOL):
    M = np.asarray(M, dtype=float)
    if M.shape != (6, 6):
        raise ValueError(f"expected 6x6 matrix, got {M.shape}")
    if np.max(np.abs(M[3:, :3])) > tol or np.max(np.abs(M[:3, :3] - M[3:, 3:])) > tol:
        raise ValueError("matrix does not have the ad(se(3)) block pattern")
    return np.concatenate([vee_so3(M[:3, 3:], tol), vee_so3(M[3:, 3:], tol)])


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------


def is_rotation(C, tol=ORTHO_TOL):
    C = np.asarray(C, dtype=float)
    if C.shape != (3, 3) or not np.all(np.isfinite(C)):
        return False
    if np.linalg.norm(C @ C.T - np.eye(3)) > tol:
        return False
    return abs(np.linalg.det(C) - 1.0) <= tol


def is_pose(T, tol=ORTHO_TOL):
    T = np.asarray(T, dtype=float)
    if T.shape != (4, 4):
        return False
    if not np.array_equal(T[3], [0.0, 0.0, 0.0, 1.0]):
        return False
    return is_rotation(T[:3, :3], tol) and bool(np.all(np.isfinite(T[:3, 3])))


def check_rotation(C, tol=ORTHO_TOL):
    if not is_rotation(C, tol):
        raise ValueError("not a valid rotation matrix")
    return np.asarray(C, dtype=float)


def check_pose(T, tol=ORTHO_TOL):
    if not is_pose(T, tol):
        raise ValueError("not a valid pose matrix")
    return np.asarray(T, dtype=float)


def make_pose(C, r):
    T = np.eye(4)
    T[:3, :3] = C
    T[:3, 3] = r
    return T


def pose_inv(T):
    C = T[:3, :3]
    return make_pose(C.T, -C.T @ T[:3, 3])


# ---------------------------------------------------------------------------
# exponential map (only used for comparisons against the Cayley map)
# ---------------------------------------------------------------------------


def exp_so3(phi):
    phi = np.asarray(phi, dtype=float)
    angle = np.linalg.norm(phi)
    P = hat_so3(phi)
    if angle < 1e-8:
        return np.eye(3) + P + 0.5 * P @ P
    return (
        np.eye(3)
        + np.sin(angle) / angle * P
        + (1.0 - np.cos(angle)) / angle**2 * P @ P
    )


def rotation_angle(C):
    c = np.clip(0.5 * (np.trace(C) - 1.0), -1.0, 1.0)
    return float(np.arccos(c))


def log_so3(C):
    C = np.asarray(C, dtype=float)
    angle = rotation_angle(C)
    if np.pi - angle < PI_MARGIN:
        raise SingularCayleyError("log_so3 is ill-conditioned near angle pi")
    skew = 0.5 * (C - C.T)
    if angle < 1e-8:
        return vee_so3(skew, tol=np.inf)
    return vee_so3(skew, tol=np.inf) * angle / np.sin(angle)


# ---------------------------------------------------------------------------
# Cayley maps
# ---------------------------------------------------------------------------


def _cay(A):
    n = A.shape[0]
    I = np.eye(n)
    try:
        return np.linalg.solve(I - 0.5 * A, I + 0.5 * A)
    except np.linalg.LinAlgError as exc:
        raise SingularCayleyError("I - A/2 is singular") from exc


def _cay_inv(M, check=True):
    n = M.shape[0]
    I = np.eye(n)
    P = M + I
    # (M - I)(M + I)^-1 == solve((M + I)^T, (M - I)^T)^T
    if check and np.linalg.cond(P) > 1e12:
        raise SingularCayleyError("M + I is singular (rotation angle near pi)")
    return 2.0 * np.linalg.solve(P.T, (M - I).T).T


def cay_so3(phi):
    """Rotation ``(I - phi^/2)^-1 (I + phi^/2)``; angle is ``2 atan(|phi|/2)``.

    Evaluated in the closed form ``I + 4 / (4 + |phi|^2) (phi^ + phi^ phi^ / 2)``.
    """
    phi = np.asarray(phi, dtype=float)
    P = hat_so3(phi)
    return np.eye(3) + (4.0 / (4.0 + phi @ phi)) * (P + 0.5 * P @ P)


def cay_inv_so3(C):
    """``vee(2 (C - I)(C + I)^-1) = 2 vee(C - C^T) / (1 + tr C)`` for a rotation."""
    C = np.asarray(C, dtype=float)
    if np.pi - rotation_angle(C) < PI_MARGIN:
        raise SingularCayleyError("Cayley inverse undefined at rotation angle pi")
    S = C - C.T
    return 2.0 * np.array([S[2, 1], S[0, 2], S[1, 0]]) / (1.0 + np.trace(C))


def cay_se3(xi):
    xi = np.asarray(xi, dtype=float)
    A = np.eye(3) - 0.5 * hat_so3(xi[3:])
    T = np.eye(4)
    T[:3, :3] = cay_so3(xi[3:])
    T[:3, 3] = np.linalg.solve(A, xi[:3])
    return T


def cay_inv_se3(T):
    T = np.asarray(T, dtype=float)
    phi = cay_inv_so3(T[:3, :3])
    rho = (np.eye(3) - 0.5 * hat_so3(phi)) @ T[:3, 3]
    return np.concatenate([rho, phi])


def cay_adj(xi):
    """Cayley map of ``xi`` into Ad(SE(3)). Not equal to ``adjoint(cay_se3(xi))``."""
    return _cay(curly_hat(xi))


def cay_inv_adj(Tad):
    Tad = np.asarray(Tad, dtype=float)
    return curly_vee(_cay_inv(Tad), tol=1e-6)


def adjoint(T):
    T = np.asarray(T, dtype=float)
    C = T[:3, :3]
    out = np.zeros((6, 6))
    out[:3, :3] = C
    out[3:, 3:] = C
    out[:3, 3:] = hat_so3(T[:3, 3]) @ C
    return out


# ---------------------------------------------------------------------------
# Cayley Jacobians
# ---------------------------------------------------------------------------


def jac_cay_so3_inv(phi):
    phi = np.asarray(phi, dtype=float)
    return np.eye(3) - 0.5 * hat_so3(phi) + 0.25 * np.outer(phi, phi)


def jac_cay_so3(phi):
    phi = np.asarray(phi, dtype=float)
    return (np.eye(3) + 0.5 * hat_so3(phi)) / (1.0 + 0.25 * phi @ phi)


def jac_cay_se3_inv(xi):
    """Inverse left Jacobian of the SE(3) Cayley map.

    Compounding: ``cay(d^) cay(xi^) ~= cay((J^-1 d + xi)^)`` for small ``d``.
    """
    xi = np.asarray(xi, dtype=float)
    rho, phi = xi[:3], xi[3:]
    lam = np.zeros((6, 6))
    lam[:3, 3:] = hat_so3(phi) @ hat_so3(rho)
    lam[3:, 3:] = np.outer(phi, phi)
    return np.eye(6) - 0.5 * curly_hat(xi) + 0.25 * lam


def jac_cay_se3(xi):
    return np.linalg.inv(jac_cay_se3_inv(xi))


# ---------------------------------------------------------------------------
# projection
# ---------------------------------------------------------------------------


def project_to_so3(M):
    """Nearest rotation to ``M`` in Frobenius norm (SVD with det correction)."""
    M = np.asarray(M, dtype=float)
    U, s, Vt = np.linalg.svd(M)
    if s[-1] <= 1e-12 * max(s[0], 1e-300):
        raise ValueError("matrix is rank deficient; projection is not unique")
    D = np.eye(3)
    D[2, 2] = np.sign(np.linalg.det(U @ Vt))
    return U @ D @ Vt


def random_rotation(rng, max_angle=np.pi):
    """Axis uniform on the sphere, angle uniform on ``[0, max_angle]``."""
    axis = rng.standard_normal(3)
    axis /= np.linalg.norm(axis)
    angle = rng.uniform(0.0, max_angle)
    return exp_so3(angle * axis)
