import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from desknav.errors import ContractError
from desknav.kinematics import OdometryIncrement, OdometryNoise, Pose2D
from desknav.localization import (
    GaussianPrior, LikelihoodField, LikelihoodFieldModel, ParticleSet, UniformPrior,
    effective_sample_size, estimate, init_particles, measurement_update, motion_update,
    resample, systematic_indices,
)
from desknav.world import LaserScan, ScanParams, ray_cast

ZERO = OdometryNoise(0.0, 0.0, 0.0)


def _pset(poses, weights):
    return ParticleSet(np.asarray(poses, dtype=float), np.asarray(weights, dtype=float))


def test_uniform_init_in_free_space(asym_room):
    ps = init_particles(100, asym_room.static_grid, UniformPrior(), np.random.default_rng(0))
    assert len(ps) == 100 and np.all(ps.weights == 0.01)
    grid = asym_room.static_grid
    free = grid.free_mask()
    for x, y, _ in ps.poses:
        assert free[grid.cell_of(x, y)]


def test_gaussian_init_zero_sigma(asym_room):
    pose = Pose2D(1.0, 2.0, 0.5)
    ps = init_particles(20, asym_room.static_grid, GaussianPrior(pose), np.random.default_rng(0))
    assert np.all(ps.poses == np.array([1.0, 2.0, 0.5]))


def test_init_rejects_empty_set(asym_room):
    with pytest.raises(ContractError):
        init_particles(0, asym_room.static_grid, UniformPrior(), np.random.default_rng(0))


def test_zero_motion_leaves_set_unchanged():
    ps = _pset([[1, 2, 0.3], [0, 0, -1]], [0.4, 0.6])
    out = motion_update(ps, OdometryIncrement(0, 0, 0), ZERO, np.random.default_rng(0))
    assert np.array_equal(out.poses, ps.poses) and np.array_equal(out.weights, ps.weights)


def test_translation_follows_particle_heading():
    ps = _pset([[0, 0, math.pi / 2]], [1.0])
    out = motion_update(ps, OdometryIncrement(1.0, 0.0, 0.0), ZERO, np.random.default_rng(0))
    assert out.poses[0] == pytest.approx([0.0, 1.0, math.pi / 2], abs=1e-12)


def test_noisy_motion_is_reproducible():
    ps = _pset(np.zeros((50, 3)), np.full(50, 0.02))
    noise = OdometryNoise(0.01, 0.01, 0.01)
    inc = OdometryIncrement(0.1, 0.0, 0.05)
    a = motion_update(ps, inc, noise, np.random.default_rng(7))
    b = motion_update(ps, inc, noise, np.random.default_rng(7))
    assert np.array_equal(a.poses, b.poses)
    assert len(np.unique(a.poses[:, 0])) == 50


def _noiseless_scan(world, pose):
    return ray_cast(world, pose, ScanParams(), 0.0)


def test_true_pose_outweighs_offset_pose(asym_room):
    true = Pose2D(1.2, 1.0, 0.3)
    scan = _noiseless_scan(asym_room, true)
    ps = _pset([[1.2, 1.0, 0.3], [2.2, 1.0, 0.3]], [0.5, 0.5])
    out = measurement_update(ps, scan, asym_room.static_grid)
    assert out.weights[0] > out.weights[1]
    assert out.weights.sum() == pytest.approx(1.0, abs=1e-9)


def test_identical_particles_identical_weights(asym_room):
    scan = _noiseless_scan(asym_room, Pose2D(2, 1, 0))
    ps = _pset([[1.5, 1.5, 0.2], [1.5, 1.5, 0.2], [2.5, 1.0, 1.0]], [1 / 3] * 3)
    out = measurement_update(ps, scan, asym_room.static_grid)
    assert out.weights[0] == out.weights[1]


def test_zero_hit_weight_gives_equal_weights(asym_room):
    rng = np.random.default_rng(3)
    params = ScanParams()
    scan = LaserScan(rng.uniform(0.1, 3.5, params.beam_count), np.ones(params.beam_count, bool), params)
    ps = init_particles(30, asym_room.static_grid, UniformPrior(), rng)
    out = measurement_update(ps, scan, asym_room.static_grid, LikelihoodFieldModel(z_hit=0.0, z_rand=1.0))
    assert np.allclose(out.weights, 1 / 30, rtol=0, atol=1e-15)


def test_underflow_resets_to_uniform(asym_room):
    scan = _noiseless_scan(asym_room, Pose2D(2, 1, 0))
    ps = ParticleSet(np.zeros((4, 3)) + [2, 1, 0], np.zeros(4), normalized=False)
    out = measurement_update(ps, scan, asym_room.static_grid)
    assert out.weight_reset
    assert np.all(out.weights == 0.25)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 40), st.integers(0, 2**31))
def test_count_preserved_and_normalized(n, seed):
    rng = np.random.default_rng(seed)
    params = ScanParams(beam_count=60)
    scan = LaserScan(rng.uniform(0.2, 3.0, 60), rng.random(60) < 0.8, params)
    grid = LikelihoodField(np.full((20, 20), 0.3), 0.2, Pose2D(), np.argwhere(np.ones((20, 20))))
    ps = init_particles(n, grid, UniformPrior(), rng)
    ps = motion_update(ps, OdometryIncrement(0.1, 0.0, 0.1), OdometryNoise(0.01, 0.01, 0.01), rng)
    ps = measurement_update(ps, scan, grid)
    assert abs(ps.weights.sum() - 1.0) <= 1e-9
    assert len(resample(ps, rng)) == n


def test_resample_single_winner():
    ps = _pset([[0, 0, 0], [1, 1, 1], [2, 2, 2]], [0.0, 1.0, 0.0])
    out = resample(ps, np.random.default_rng(0))
    assert np.all(out.poses == [1, 1, 1]) and np.all(out.weights == 1 / 3)


def test_uniform_weights_survive_intact():
    w = np.full(5, 0.2)
    for offset in (0.0, 0.3, 0.999):
        assert sorted(systematic_indices(w, offset)) == [0, 1, 2, 3, 4]


def test_resample_rejects_unnormalized():
    with pytest.raises(ContractError):
        resample(_pset([[0, 0, 0]] * 2, [0.7, 0.7]), np.random.default_rng(0))


def test_resample_size_over_many_trials():
    rng = np.random.default_rng(11)
    for _ in range(1000):
        n = int(rng.integers(1, 30))
        w = rng.random(n)
        ps = _pset(np.zeros((n, 3)), w / w.sum())
        assert len(resample(ps, rng)) == n


def test_systematic_offspring_is_unbiased():
    # average offspring over a fine, uniform sweep of the stratum offset
    w = np.array([0.05, 0.3, 0.15, 0.4, 0.1])
    n = len(w)
    offsets = (np.arange(20000) + 0.5) / 20000
    counts = np.zeros(n)
    for u in offsets:
        c = np.bincount(systematic_indices(w, u), minlength=n)
        assert np.all(np.abs(c - n * w) <= 1.0 + 1e-12)
        counts += c
    assert counts / len(offsets) == pytest.approx(n * w, abs=1e-3)


@pytest.mark.parametrize("w,expected", [([0.5, 0.5], 2.0), ([1.0, 0.0], 1.0), ([0.1] * 10, 10.0)])
def test_effective_sample_size(w, expected):
    assert effective_sample_size(_pset(np.zeros((len(w), 3)), w)) == pytest.approx(expected)


def test_estimate_identical_particles():
    est = estimate(_pset([[1, 2, 0.5]] * 4, [0.25] * 4))
    assert (est.mean.x, est.mean.y, est.mean.theta) == pytest.approx((1, 2, 0.5))
    assert np.allclose(est.covariance, 0)


def test_circular_mean_wraps_to_pi():
    est = estimate(_pset([[0, 0, 3.0], [0, 0, -3.0]], [0.5, 0.5]))
    assert abs(est.mean.theta) == pytest.approx(math.pi)
    assert est.covariance[2, 2] == pytest.approx((math.pi - 3.0) ** 2)


def test_weighted_x_mean():
    est = estimate(_pset([[0, 0, 0], [1, 0, 0]], [0.25, 0.75]))
    assert est.mean.x == pytest.approx(0.75)


def test_covariance_is_psd():
    rng = np.random.default_rng(5)
    w = rng.random(50)
    est = estimate(_pset(rng.normal(size=(50, 3)), w / w.sum()))
    assert np.array_equal(est.covariance, est.covariance.T)
    assert np.linalg.eigvalsh(est.covariance).min() >= -1e-12
