import numpy as np
import pytest
from conftest import KINDS, random_estimate, small_problem

from caysdp import liegroup as lg
from caysdp import localsolve as ls
from caysdp import problems as pb


@pytest.mark.parametrize("kind", KINDS)
def test_noiseless_groundtruth_has_zero_cost(kind):
    p, gt = small_problem(kind, sigma=0.0, size=5)
    assert pb.cost(p, gt) <= 1e-18


@pytest.mark.parametrize("kind", KINDS)
def test_simulation_is_deterministic(kind):
    a, ga = small_problem(kind, sigma=0.3, seed=11)
    b, gb = small_problem(kind, sigma=0.3, seed=11)
    assert a.to_dict() == b.to_dict()
    assert pb.groundtruth_to_list(ga) == pb.groundtruth_to_list(gb)
    c, _ = small_problem(kind, sigma=0.3, seed=12)
    assert a.to_dict() != c.to_dict()


@pytest.mark.parametrize("kind", KINDS)
def test_serialisation_round_trip(kind, tmp_path):
    p, gt = small_problem(kind, sigma=0.2)
    path = tmp_path / "p.json"
    pb.save_problem(p, path, gt)
    q, gq = pb.load_problem(path)
    assert type(q) is type(p)
    assert q.to_dict() == p.to_dict()
    assert pb.cost(q, gq) == pb.cost(p, gt)


def test_unknown_schema_rejected():
    with pytest.raises(ValueError):
        pb.problem_from_dict({"kind": "nope"})
    with pytest.raises(ValueError):
        pb.problem_from_dict({"kind": "rotation_averaging", "version": 99})


def test_validation():
    with pytest.raises(ValueError):
        pb.RotationAveragingProblem(np.eye(3)[None], -np.eye(3)[None])
    with pytest.raises(ValueError):
        pb.RotationAveragingProblem(2 * np.eye(3)[None], np.eye(3)[None])
    T = np.eye(4)[None].repeat(2, 0)
    W = np.eye(6)[None].repeat(2, 0)
    with pytest.raises(ValueError):
        pb.ContinuousTrajectoryProblem(np.array([0.0, 0.0]), (0,), T[:1], W[:1])
    with pytest.raises(ValueError):
        pb.ContinuousTrajectoryProblem(np.array([0.0, 1.0]), (), T[:0], W[:0])
    with pytest.raises(ValueError):
        pb.weight_from_sigma(-1.0, 3)


def test_rotation_single_term_closed_form():
    Cm = lg.cay_so3([0.2, -0.4, 0.1])
    p = pb.RotationAveragingProblem(Cm[None], np.eye(3)[None])
    for x in (-2.0, 0.3, 1.7):
        C = lg.cay_so3([x, 0, 0]) @ Cm
        assert pb.cost(p, C) == pytest.approx(x**2, rel=1e-12)


def test_rotation_two_measurement_grid_oracle():
    # both measurements about the same axis: the problem is one dimensional
    axis = np.array([0.0, 0.0, 1.0])
    p = pb.RotationAveragingProblem(
        np.array([lg.cay_so3(0.0 * axis), lg.cay_so3(1.2 * axis)]),
        np.array([np.eye(3), 3.0 * np.eye(3)]),
    )
    grid = np.linspace(-1.0, 3.0, 40001)
    vals = [pb.cost(p, lg.cay_so3(t * axis)) for t in grid]
    t_grid = grid[int(np.argmin(vals))]
    res = ls.gn_rotation_averaging(p, np.eye(3))
    t_gn = lg.cay_inv_so3(res.estimate) @ axis
    assert res.converged
    assert abs(t_gn - t_grid) <= 2 * (grid[1] - grid[0])


def test_discrete_two_pose_hand_case():
    xi = np.array([0.3, -0.2, 0.5, 0.1, 0.2, -0.3])
    Wa = np.array([np.eye(6), np.diag(np.arange(1.0, 7.0))])
    Wr = np.diag([2.0, 1, 1, 3, 1, 1])[None]
    p = pb.DiscreteTrajectoryProblem(np.array([np.eye(4)] * 2), Wa, np.eye(4)[None], Wr)
    est = pb.TrajectoryEstimate(np.array([np.eye(4), lg.cay_se3(xi)]))
    expected = xi @ Wr[0] @ xi + xi @ Wa[1] @ xi
    assert pb.cost(p, est) == pytest.approx(expected, rel=1e-12)


def test_continuous_constant_velocity_is_prior_null_space():
    w = np.array([0.5, 0.1, -0.2, 0.05, 0.1, 0.2])
    times = np.array([0.0, 0.7, 1.5, 3.0])
    poses = [np.eye(4)]
    for k in range(3):
        poses.append(lg.cay_se3((times[k + 1] - times[k]) * w) @ poses[-1])
    p = pb.ContinuousTrajectoryProblem(times, (0,), poses[0][None], np.eye(6)[None], prior_twist=w)
    _, e0, es = pb.continuous_residuals(p, np.array(poses), np.tile(w, (4, 1)))
    np.testing.assert_allclose(e0, 0.0, atol=1e-15)
    np.testing.assert_allclose(np.concatenate(es), 0.0, atol=1e-12)
    assert pb.cost(p, pb.TrajectoryEstimate(np.array(poses), np.tile(w, (4, 1)))) < 1e-20


def test_continuous_cost_needs_twists():
    p, gt = small_problem("continuous_trajectory")
    with pytest.raises(ValueError):
        pb.cost(p, pb.TrajectoryEstimate(gt.poses))


def test_wnoa_Q_examples(rng):
    I = np.eye(6)
    np.testing.assert_allclose(pb.wnoa_Q(0, 1, I), np.block([[I / 3, I / 2], [I / 2, I]]))
    np.testing.assert_allclose(pb.wnoa_Q(1, 3, I), np.block([[8 / 3 * I, 2 * I], [2 * I, 2 * I]]))
    for dt in rng.uniform(1e-3, 10.0, 100):
        np.linalg.cholesky(pb.wnoa_Q(0.0, dt, I))
    with pytest.raises(ValueError):
        pb.wnoa_Q(1.0, 1.0, I)


@pytest.mark.parametrize("kind", ["rotation_averaging", "pose_averaging"])
def test_cost_invariant_to_measurement_order(kind, rng):
    p, _ = small_problem(kind, sigma=0.4, size=6)
    perm = rng.permutation(6)
    q = type(p)(p.measurements[perm], p.weights[perm])
    for _ in range(5):
        est = random_estimate(p, rng)
        assert pb.cost(q, est) == pytest.approx(pb.cost(p, est), rel=1e-12)


@pytest.mark.parametrize("kind", KINDS)
def test_cost_increases_along_rays_from_noiseless_minimiser(kind, rng):
    p, gt = small_problem(kind, sigma=0.0, size=4)
    d = rng.standard_normal(sum(ls._dims(p)))
    d /= np.linalg.norm(d)
    vals = [pb.cost(p, ls.retract(p, gt, t * d)) for t in np.linspace(0.0, 0.5, 11)]
    assert vals[0] < 1e-18
    assert np.all(np.diff(vals) > 0)


def test_noiseless_measurements_are_exact():
    p, C = pb.simulate_rotation_averaging(M=4, sigma=0.0, seed=2)
    for Cm in p.measurements:
        np.testing.assert_array_equal(Cm, C)
    p, gt = pb.simulate_discrete(K=3, sigma=0.0, seed=2)
    for k in range(2):
        np.testing.assert_allclose(p.rel_measurements[k], gt.poses[k + 1] @ lg.pose_inv(gt.poses[k]))


def test_discrete_groundtruth_spacing():
    _, gt = pb.simulate_discrete(K=6, sigma=0.0, seed=0)
    gaps = np.linalg.norm(np.diff(gt.poses[:, :3, 3], axis=0), axis=1)
    assert np.all(gaps > 0)
    # consecutive poses are one length unit apart in the increment frame
    for k in range(5):
        rel = gt.poses[k + 1] @ lg.pose_inv(gt.poses[k])
        assert np.linalg.norm(rel[:3, 3]) == pytest.approx(1.0)


def test_continuous_default_measurement_pattern():
    p, _ = pb.simulate_continuous(K=9, sigma=0.1)
    assert p.meas_indices == (0, 4, 8)


def test_residual_statistics_match_covariance():
    sigma = 0.1
    p, T = pb.simulate_pose_averaging(M=20000, sigma=sigma, seed=5)
    xi = np.array([lg.cay_inv_se3(Tm @ lg.pose_inv(T)) for Tm in p.measurements])
    S = np.cov(xi.T)
    assert np.linalg.norm(S - sigma**2 * np.eye(6)) / np.linalg.norm(sigma**2 * np.eye(6)) < 0.05
