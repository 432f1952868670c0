import numpy as np
import pytest

from caysdp import liegroup as lg
from caysdp import noise

N_MC = 100_000


def test_make_rng_is_deterministic():
    a = noise.make_rng(7).standard_normal(5)
    b = noise.make_rng(7).standard_normal(5)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, noise.make_rng(8).standard_normal(5))
    g = noise.make_rng(1)
    assert noise.make_rng(g) is g


def test_lie_gaussian_validation():
    with pytest.raises(ValueError):
        noise.LieGaussian(np.eye(3), np.eye(6))
    with pytest.raises(ValueError):
        noise.LieGaussian(np.eye(3), np.array([[1.0, 0.1, 0], [0, 1, 0], [0, 0, 1]]))
    with pytest.raises(np.linalg.LinAlgError):
        noise.LieGaussian(np.eye(3), -np.eye(3))
    with pytest.raises(ValueError):
        noise.LieGaussian(np.eye(4), np.eye(6), mapping="exp")


def test_tiny_covariance_returns_mean():
    C = lg.cay_so3([0.1, 0.2, -0.3])
    out = noise.sample_rotation(noise.LieGaussian(C, 1e-20 * np.eye(3)), seed=3)
    np.testing.assert_allclose(out, C, atol=1e-8)
    T = lg.cay_se3([1.0, 2, 3, 0.1, 0.2, -0.3])
    out = noise.sample_pose(noise.LieGaussian(T, 1e-20 * np.eye(6)), seed=3)
    np.testing.assert_allclose(out, T, atol=1e-8)


def test_sampling_determinism():
    m = noise.LieGaussian(np.eye(3), 0.1 * np.eye(3))
    assert np.array_equal(noise.sample_rotation(m, 5), noise.sample_rotation(m, 5))
    m6 = noise.LieGaussian(np.eye(4), 0.1 * np.eye(6))
    assert np.array_equal(noise.sample_pose(m6, 5), noise.sample_pose(m6, 5))


def _moments(draw):
    x = np.array(draw)
    return x.mean(axis=0), np.cov(x.T)


def test_rotation_sample_statistics():
    C = lg.cay_so3([0.3, -0.2, 1.0])
    cov = np.diag([0.04, 0.01, 0.09]) + 0.005
    rng = noise.make_rng(2024)
    mean, S = _moments([lg.cay_inv_so3(noise.perturb_rotation(C, cov, rng) @ C.T) for _ in range(N_MC)])
    sd = np.sqrt(np.diag(cov))
    assert np.all(np.abs(mean) <= 4 * sd / np.sqrt(N_MC))
    assert np.linalg.norm(S - cov) / np.linalg.norm(cov) < 0.05


def test_pose_sample_statistics():
    T = lg.cay_se3([1.0, -1.0, 0.5, 0.3, -0.2, 1.0])
    cov = 0.02 * np.eye(6) + 0.005
    rng = noise.make_rng(99)
    mean, S = _moments(
        [lg.cay_inv_se3(noise.perturb_pose(T, cov, rng) @ lg.pose_inv(T)) for _ in range(N_MC)]
    )
    sd = np.sqrt(np.diag(cov))
    assert np.all(np.abs(mean) <= 4 * sd / np.sqrt(N_MC))
    assert np.linalg.norm(S - cov) / np.linalg.norm(cov) < 0.05


def test_cov_exp_to_cay_examples():
    eps = 1e-9
    out = noise.cov_exp_to_cay(np.diag([0.25, 0.0, 0.0]) + eps * np.eye(3))
    assert out[0, 0] == pytest.approx(0.25 + 0.5 * 0.25**2, abs=1e-8)
    assert out[0, 0] == pytest.approx(noise.sigma_exp_to_cay(0.5) ** 2, abs=1e-8)
    assert np.array_equal(noise.cov_exp_to_cay(np.zeros((3, 3))), np.zeros((3, 3)))
    s2 = 0.09
    np.testing.assert_allclose(noise.cov_exp_to_cay(s2 * np.eye(3)), (s2 + 5 / 6 * s2**2) * np.eye(3))
    with pytest.raises(ValueError):
        noise.cov_exp_to_cay(-np.eye(3))


def test_cov_correction_is_psd(rng):
    for _ in range(50):
        B = rng.standard_normal((3, 3))
        S1 = B @ B.T
        w = np.linalg.eigvalsh(noise.cov_exp_to_cay(S1) - S1)
        assert w.min() >= -1e-12


def test_angle_density_values():
    d = noise.AngleDensity("exp", 1.0)
    assert noise.angle_density(d, 0.0) == pytest.approx(1 / np.sqrt(2 * np.pi))
    c = noise.AngleDensity("cay", 0.7)
    grid = np.linspace(-3.0, 3.0, 41)
    np.testing.assert_allclose(noise.angle_density(c, grid), noise.angle_density(c, -grid))
    with pytest.raises(ValueError):
        noise.angle_density(c, np.pi)
    with pytest.raises(ValueError):
        noise.AngleDensity("cay", 0.0)


@pytest.mark.parametrize("sigma", [0.2, 0.5, 1.0])
def test_cay_density_normalised(sigma):
    assert noise.angle_density_mass(noise.AngleDensity("cay", sigma)) == pytest.approx(1.0, abs=1e-6)


def test_cay_density_is_pushforward_of_gaussian():
    # oracle: histogram of 2 atan(z / 2) with z ~ N(0, sigma^2)
    sigma = 0.8
    z = np.random.default_rng(0).normal(0.0, sigma, 400_000)
    hist, edges = np.histogram(2 * np.arctan(z / 2), bins=40, range=(-2.5, 2.5), density=True)
    hist *= np.mean((np.abs(2 * np.arctan(z / 2)) <= 2.5))
    mid = 0.5 * (edges[1:] + edges[:-1])
    np.testing.assert_allclose(hist, noise.angle_density(noise.AngleDensity("cay", sigma), mid), atol=0.01)


def test_numeric_std():
    assert noise.numeric_angle_std(noise.AngleDensity("exp", 0.3)) == pytest.approx(0.3, rel=1e-5)
    s1 = 0.5
    second = noise.numeric_angle_std(noise.AngleDensity("cay", noise.sigma_exp_to_cay(s1)))
    first = noise.numeric_angle_std(noise.AngleDensity("cay", s1))
    assert abs(second - s1) / s1 < 0.02
    assert abs(first - s1) > abs(second - s1)


@pytest.mark.parametrize("s1", [0.1, 0.2, 0.5])
def test_moment_matching_direction(s1):
    second = noise.numeric_angle_std(noise.AngleDensity("cay", noise.sigma_exp_to_cay(s1)))
    first = noise.numeric_angle_std(noise.AngleDensity("cay", s1))
    assert abs(second - s1) <= abs(first - s1)
