"""
Particle filter localization in an asymmetric room
==================================================

A robot wanders a 4 x 4 m room with a few blocks. The filter starts from a
loose Gaussian around the initial pose and tracks the robot from noisy
odometry and a noisy laser.
"""
import math

import numpy as np

from desknav.kinematics import OdometryNoise, Pose2D, Twist2D, integrate_pose, noisy_odometry, pose_delta
from desknav.localization import GaussianPrior, MonteCarloLocalizer, effective_sample_size
from desknav.world import ScanParams, check_collision, load_world, ray_cast

room = load_world({"world": {"bounds": [0, 0, 4, 4], "resolution": 0.05, "walls": [
    [0, 0, 4, 0.1], [0, 3.9, 4, 4], [0, 0, 0.1, 4], [3.9, 0, 4, 4],
    [2.6, 2.6, 3.9, 3.0], [3.4, 2.0, 3.9, 3.0], [0.1, 0.1, 0.8, 0.6], [1.5, 1.8, 1.8, 2.1]]}})

noise = OdometryNoise(0.01, 0.01, 0.01)
scan_params = ScanParams(range_noise_sigma=0.01)
rng = np.random.default_rng(0)

pose = Pose2D(1.0, 1.2, 0.3)
mcl = MonteCarloLocalizer(room.static_grid, 500, GaussianPrior(pose, 0.5, math.pi / 12), noise, rng)
print(f"start: error {mcl.estimate().mean.distance_to(pose):.3f} m")

for k in range(100):
    nxt = integrate_pose(pose, Twist2D(0.3, 0.4 * math.sin(0.05 * k)), 0.1)
    if check_collision(room, nxt, 0.15, 0.0):
        nxt = integrate_pose(pose, Twist2D(0.0, 1.0), 0.1)  # turn away from the wall
    odom = noisy_odometry(pose_delta(pose, nxt), noise, rng)
    pose = nxt
    est = mcl.step(odom, ray_cast(room, pose, scan_params, 0.0, rng))
    if k % 20 == 19:
        sd = np.sqrt(np.diag(est.covariance))
        print(f"step {k + 1:3d}: error {est.mean.distance_to(pose):.3f} m, "
              f"sd x/y/theta {sd.round(3)}, ESS {effective_sample_size(mcl.particles):.0f}")
