"""
Driving arcs with a differential-drive base
===========================================

Wheel rates map to a body twist, and a constant twist integrates to an exact
circular arc. Short steps and one long step land on the same pose.
"""
import math

import numpy as np

from desknav.kinematics import (
    Pose2D, RobotParams, Twist2D, WheelRates, body_twist_from_wheels, integrate_pose,
    wheels_from_body_twist,
)

robot = RobotParams(wheel_radius=0.05, wheel_base=0.2)

# right wheel twice as fast as the left: forward speed plus a left turn
twist = body_twist_from_wheels(WheelRates(v_r=2.0, v_l=1.0), robot)
print("twist from wheels:", twist)
print("and back again:   ", wheels_from_body_twist(twist, robot))

# a quarter circle of radius 2/pi, taken in one step and in 100 steps
quarter = Twist2D(1.0, math.pi / 2)
one = integrate_pose(Pose2D(), quarter, 1.0)
many = Pose2D()
for _ in range(100):
    many = integrate_pose(many, quarter, 0.01)
print("one step:   ", one)
print("100 steps:  ", many)
print("closed form:", (2 / math.pi, 2 / math.pi, math.pi / 2))

# near w = 0 the straight-line branch takes over without a jump
for w in (1e-3, 1.1e-6, 0.9e-6, 0.0):
    p = integrate_pose(Pose2D(), Twist2D(1.0, w), 1.0)
    print(f"w={w:<8g} x={p.x:.12f} y={p.y:.3e}")

# sweep of arcs at fixed speed
ends = np.array([[*integrate_pose(Pose2D(), Twist2D(0.3, w), 5.0).as_array()] for w in np.linspace(-1, 1, 9)])
print(np.round(ends, 3))
