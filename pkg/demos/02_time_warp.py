"""How far ahead each obstacle is predicted.

The robot sits at the origin heading east. Obstacles at the same distance get
very different warp numbers depending on where they are: the ellipses reach
far ahead of the robot and barely behind it.
"""

import math

from twgrid.time_warp import WarpGeometry, assign_warp

robot = WarpGeometry(0.0, 0.0, 0.0)
print(f"{'bearing':>8} {'dist':>5} {'r_x':>7} {'t':>3} {'steps (equal speed)':>20}")
for bearing in (0, 45, 90, 135, 180):
    for dist in (1.0, 3.0):
        a = math.radians(bearing)
        w = assign_warp(0, robot, (dist * math.cos(a), dist * math.sin(a)), 0.4, 0.4)
        print(f"{bearing:>8} {dist:>5.1f} {w.r_x:>7.3f} {w.t:>3} {w.horizon_steps:>20}")

# a faster obstacle is predicted proportionally fewer steps ahead
for v_obs in (0.2, 0.4, 0.8):
    w = assign_warp(0, robot, (5.0, 0.0), 0.4, v_obs)
    print(f"obstacle speed {v_obs:.1f} m/s -> horizon {w.horizon_steps} steps")
