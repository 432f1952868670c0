import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.spatial.transform import Rotation

from caysdp import liegroup as lg

from conftest import random_phi, random_xi

vec3 = st.lists(st.floats(-10, 10), min_size=3, max_size=3).map(np.array)


def test_hat_so3_examples():
    assert np.array_equal(lg.hat_so3([0, 0, 0]), np.zeros((3, 3)))
    np.testing.assert_array_equal(
        lg.hat_so3([1, 2, 3]), [[0, -3, 2], [3, 0, -1], [-2, 1, 0]]
    )


@given(vec3, vec3)
def test_hat_is_cross_product(v, w):
    np.testing.assert_allclose(lg.hat_so3(v) @ w, np.cross(v, w), atol=1e-12)


def test_vee_round_trips(rng):
    for _ in range(100):
        v = rng.standard_normal(3)
        xi = rng.standard_normal(6)
        np.testing.assert_allclose(lg.vee_so3(lg.hat_so3(v)), v)
        np.testing.assert_allclose(lg.vee_se3(lg.hat_se3(xi)), xi)
        np.testing.assert_allclose(lg.curly_vee(lg.curly_hat(xi)), xi)


def test_vee_rejects_bad_patterns():
    with pytest.raises(ValueError):
        lg.vee_so3(np.eye(3))
    M = lg.hat_se3(np.ones(6))
    M[3, 0] = 1.0
    with pytest.raises(ValueError):
        lg.vee_se3(M)
    A = lg.curly_hat(np.ones(6))
    A[4, 0] = 1e-6
    with pytest.raises(ValueError):
        lg.curly_vee(A)


def test_hat_se3_layout():
    rho, phi = np.array([1.0, 2, 3]), np.array([0.4, 0.5, 0.6])
    M = lg.hat_se3(np.r_[rho, 0, 0, 0])
    assert np.array_equal(M[:3, :3], np.zeros((3, 3)))
    A = lg.curly_hat(np.r_[rho, phi])
    np.testing.assert_array_equal(A[:3, :3], lg.hat_so3(phi))
    np.testing.assert_array_equal(A[3:, 3:], lg.hat_so3(phi))
    np.testing.assert_array_equal(A[:3, 3:], lg.hat_so3(rho))
    assert not A[3:, :3].any()


def test_exp_against_scipy_rotvec(rng):
    assert np.array_equal(lg.exp_so3(np.zeros(3)), np.eye(3))
    np.testing.assert_allclose(
        lg.exp_so3([np.pi / 2, 0, 0]), [[1, 0, 0], [0, 0, -1], [0, 1, 0]], atol=1e-15
    )
    for _ in range(20):
        phi = random_phi(rng, 3.0)
        np.testing.assert_allclose(lg.exp_so3(phi), Rotation.from_rotvec(phi).as_matrix(), atol=1e-12)


def test_exp_log_round_trip(rng):
    for _ in range(100):
        C = lg.exp_so3(random_phi(rng, 3.0))
        np.testing.assert_allclose(lg.exp_so3(lg.log_so3(C)), C, atol=1e-10)
    with pytest.raises(lg.SingularCayleyError):
        lg.log_so3(np.diag([1.0, -1.0, -1.0]))


def test_cay_so3_examples():
    assert np.array_equal(lg.cay_so3(np.zeros(3)), np.eye(3))
    np.testing.assert_allclose(lg.cay_so3([2.0, 0, 0]), lg.exp_so3([np.pi / 2, 0, 0]), atol=1e-15)
    np.testing.assert_allclose(lg.cay_inv_so3(lg.exp_so3([np.pi / 2, 0, 0])), [2.0, 0, 0], atol=1e-14)
    assert np.array_equal(lg.cay_inv_so3(np.eye(3)), np.zeros(3))
    with pytest.raises(lg.SingularCayleyError):
        lg.cay_inv_so3(np.diag([1.0, -1.0, -1.0]))


def test_cay_so3_matches_generic_matrix_cayley(rng):
    for _ in range(50):
        phi = random_phi(rng, 10.0)
        A = lg.hat_so3(phi)
        ref = np.linalg.solve(np.eye(3) - A / 2, np.eye(3) + A / 2)
        np.testing.assert_allclose(lg.cay_so3(phi), ref, atol=1e-12)
        np.testing.assert_allclose(lg.cay_inv_so3(ref), phi, rtol=1e-9, atol=1e-10)


def test_cay_angle_relation_and_validity(rng):
    for _ in range(100):
        phi = random_phi(rng, 20.0)
        C = lg.cay_so3(phi)
        assert np.linalg.norm(C @ C.T - np.eye(3)) < 1e-12
        assert abs(np.linalg.det(C) - 1.0) < 1e-12
        assert abs(lg.rotation_angle(C) - 2 * np.arctan(np.linalg.norm(phi) / 2)) < 1e-10


@given(vec3, vec3)
def test_group_closure(p1, p2):
    C = lg.cay_so3(p1) @ lg.cay_so3(p2)
    assert np.linalg.norm(C @ C.T - np.eye(3)) < 1e-12


def test_cay_se3_examples(rng):
    assert np.array_equal(lg.cay_se3(np.zeros(6)), np.eye(4))
    rho = np.array([1.0, -2.0, 0.5])
    np.testing.assert_array_equal(lg.cay_se3(np.r_[rho, 0, 0, 0]), lg.make_pose(np.eye(3), rho))
    for _ in range(100):
        xi = random_xi(rng)
        T = lg.cay_se3(xi)
        assert lg.is_pose(T)
        np.testing.assert_allclose(lg.cay_inv_se3(T), xi, atol=1e-10)


def test_cay_se3_matches_generic_matrix_cayley(rng):
    # oracle: the textbook (I - A/2)^-1 (I + A/2) on the 4x4 algebra element
    for _ in range(20):
        xi = random_xi(rng)
        A = lg.hat_se3(xi)
        ref = np.linalg.inv(np.eye(4) - A / 2) @ (np.eye(4) + A / 2)
        np.testing.assert_allclose(lg.cay_se3(xi), ref, atol=1e-12)


def test_cay_adj(rng):
    assert np.allclose(lg.cay_adj(np.zeros(6)), np.eye(6))
    xi = np.array([0.3, -0.2, 0.5, 0.4, 0.1, -0.7])
    A = lg.cay_adj(xi)
    assert np.allclose(A[:3, :3], A[3:, 3:]) and not np.any(np.abs(A[3:, :3]) > 1e-14)
    assert not np.allclose(A, lg.adjoint(lg.cay_se3(xi)))
    rot = np.r_[0, 0, 0, 0.4, 0.1, -0.7]
    np.testing.assert_allclose(lg.cay_adj(rot), lg.adjoint(lg.cay_se3(rot)), atol=1e-14)
    for _ in range(100):
        xi = random_xi(rng)
        np.testing.assert_allclose(lg.cay_inv_adj(lg.cay_adj(xi)), xi, atol=1e-10)


def test_adjoint(rng):
    assert np.array_equal(lg.adjoint(np.eye(4)), np.eye(6))
    r = np.array([1.0, 2, 3])
    np.testing.assert_array_equal(
        lg.adjoint(lg.make_pose(np.eye(3), r)), np.block([[np.eye(3), lg.hat_so3(r)], [np.zeros((3, 3)), np.eye(3)]])
    )
    for _ in range(50):
        T1, T2 = lg.cay_se3(random_xi(rng)), lg.cay_se3(random_xi(rng))
        np.testing.assert_allclose(lg.adjoint(T1 @ T2), lg.adjoint(T1) @ lg.adjoint(T2), atol=1e-10)


def test_conjugation_identity(rng):
    # T cay(eps^) T^-1 = cay((Ad(T) eps)^)
    for _ in range(20):
        T = lg.cay_se3(random_xi(rng, 2.0))
        eps = random_xi(rng, 1.0)
        lhs = T @ lg.cay_se3(eps) @ lg.pose_inv(T)
        np.testing.assert_allclose(lhs, lg.cay_se3(lg.adjoint(T) @ eps), atol=1e-10)


def test_jac_so3_closed_forms(rng):
    assert np.array_equal(lg.jac_cay_so3_inv(np.zeros(3)), np.eye(3))
    assert np.array_equal(lg.jac_cay_so3(np.zeros(3)), np.eye(3))
    np.testing.assert_allclose(lg.jac_cay_so3_inv([2.0, 0, 0]), [[2, 0, 0], [0, 1, 1], [0, -1, 1]])
    for _ in range(100):
        phi = random_phi(rng)
        np.testing.assert_allclose(lg.jac_cay_so3(phi) @ lg.jac_cay_so3_inv(phi), np.eye(3), atol=1e-10)
        np.testing.assert_allclose(
            lg.jac_cay_so3_inv(phi) @ phi, (1 + phi @ phi / 4) * phi, atol=1e-12
        )


def _richardson(compose, exact, delta):
    r1 = np.linalg.norm(compose(delta) - exact(delta))
    r2 = np.linalg.norm(compose(delta / 2) - exact(delta / 2))
    return r1 / r2


def test_jac_so3_compounding_is_second_order(rng):
    for _ in range(10):
        phi = random_phi(rng, 2.0)
        d = 1e-3 * rng.standard_normal(3)
        ratio = _richardson(
            lambda dd: lg.cay_so3(dd) @ lg.cay_so3(phi),
            lambda dd: lg.cay_so3(lg.jac_cay_so3_inv(phi) @ dd + phi),
            d,
        )
        assert abs(ratio - 4.0) < 0.4


def test_jac_se3(rng):
    assert np.array_equal(lg.jac_cay_se3_inv(np.zeros(6)), np.eye(6))
    for _ in range(10):
        xi = random_xi(rng, 2.0)
        assert not lg.jac_cay_se3_inv(xi)[3:, :3].any()
        d = 1e-3 * rng.standard_normal(6)
        ratio = _richardson(
            lambda dd: lg.cay_se3(dd) @ lg.cay_se3(xi),
            lambda dd: lg.cay_se3(lg.jac_cay_se3_inv(xi) @ dd + xi),
            d,
        )
        assert abs(ratio - 4.0) < 0.4


def test_project_to_so3(rng):
    C = lg.cay_so3([0.3, -1.0, 2.0])
    np.testing.assert_allclose(lg.project_to_so3(C), C, atol=1e-14)
    np.testing.assert_allclose(lg.project_to_so3(2 * C), C, atol=1e-14)
    with pytest.raises(ValueError):
        lg.project_to_so3(np.diag([1.0, 1.0, 0.0]))
    M = rng.standard_normal((3, 3))
    R = lg.project_to_so3(M)
    assert lg.is_rotation(R)
    samples = Rotation.random(10_000, random_state=1).as_matrix()
    best = np.min(np.linalg.norm(samples - M, axis=(1, 2)))
    assert np.linalg.norm(R - M) <= best + 1e-12


def test_validation():
    assert lg.is_rotation(np.eye(3))
    assert not lg.is_rotation(np.diag([1.0, 1.0, -1.0]))
    assert not lg.is_pose(np.eye(3))
    T = np.eye(4)
    T[3, 0] = 1e-3
    assert not lg.is_pose(T)
    with pytest.raises(ValueError):
        lg.check_rotation(2 * np.eye(3))
