"""Time-warped grid: elliptical warp bands around the robot.

The band through an obstacle is the ellipse with major axis ``r`` along the
robot heading, minor axis ``r / axis_ratio`` and center pushed
``center_offset * r`` ahead of the robot. Bands are long in front of the
robot and short behind it, so a warp number approximates how many time
units away an obstacle is.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import GoalSwallowed, NoSolution
from .grid import CellClass
from .harmonic import PotentialField

GAUSS_LEVEL = 0.5
SPEED_FLOOR = 0.05   # m/s, keeps the speed ratio finite for near-stationary obstacles


@dataclass(frozen=True)
class WarpGeometry:
    x: float
    y: float
    theta: float
    axis_ratio: float = 4.0
    center_offset: float = 0.9
    spacing: float = 1.0
    r_max: float | None = None


@dataclass(frozen=True)
class WarpAssignment:
    obstacle_id: int
    r_x: float
    t: int
    speed_ratio: float
    horizon_steps: int


def _frame(geom: WarpGeometry, obstacle_pos) -> tuple[float, float]:
    c, s = math.cos(geom.theta), math.sin(geom.theta)
    dx, dy = obstacle_pos[0] - geom.x, obstacle_pos[1] - geom.y
    # ahead-of-robot and lateral offsets; the lateral one does not depend on the center shift
    return c * dx + s * dy, s * dx - c * dy


def warp_radius(geom: WarpGeometry, obstacle_pos) -> float:
    """Major axis of the warp ellipse passing through ``obstacle_pos``.

    Substituting the center into the implicit ellipse leaves the quadratic
    ``(1 - c^2) r^2 + 2 c a r - (a^2 + k^2 b^2) = 0`` in ``r``, with ``a``
    and ``b`` the along-heading and lateral offsets, ``c`` the center offset
    and ``k`` the axis ratio. Its non-negative root is unique for
    ``0 <= c < 1``; the branch is chosen to avoid cancellation.
    """
    a, b = _frame(geom, obstacle_pos)
    c, k = geom.center_offset, geom.axis_ratio
    A = 1.0 - c * c
    B = 2.0 * c * a
    C = a * a + k * k * b * b
    if C == 0.0:
        return 0.0
    disc = math.sqrt(B * B + 4.0 * A * C)
    r = 2.0 * C / (B + disc) if B >= 0.0 else (disc - B) / (2.0 * A)
    if geom.r_max is not None and r > geom.r_max:
        raise NoSolution(f"warp radius {r:.3f} exceeds r_max {geom.r_max:.3f}")
    return r


def ellipse_lhs(geom: WarpGeometry, obstacle_pos, r_x: float) -> float:
    """Left side of the rotated-ellipse equation for a band of major axis ``r_x``."""
    c, s = math.cos(geom.theta), math.sin(geom.theta)
    xc = geom.x + geom.center_offset * r_x * c
    yc = geom.y + geom.center_offset * r_x * s
    dx, dy = obstacle_pos[0] - xc, obstacle_pos[1] - yc
    r_y = r_x / geom.axis_ratio
    return (c * dx + s * dy) ** 2 / r_x**2 + (s * dx - c * dy) ** 2 / r_y**2


def warp_number(r_x: float, geom: WarpGeometry) -> int:
    return max(1, math.ceil(r_x / geom.spacing - 1e-12))


def prediction_horizon(t: int, robot_speed: float, obstacle_speed: float, horizon_max: int = 20) -> int:
    """Kalman steps ahead for warp number ``t``: ``round(t * robot / obstacle speed)``."""
    if robot_speed <= 0:
        raise ValueError("robot_speed must be positive")
    v = robot_speed / max(obstacle_speed, SPEED_FLOOR)
    return int(min(max(math.floor(v * t + 0.5), 0), horizon_max))


def assign_warp(obstacle_id: int, geom: WarpGeometry, obstacle_pos, robot_speed: float,
                obstacle_speed: float, horizon_max: int = 20) -> WarpAssignment:
    r = warp_radius(geom, obstacle_pos)
    t = warp_number(r, geom)
    v = robot_speed / max(obstacle_speed, SPEED_FLOOR)
    return WarpAssignment(obstacle_id, r, t, v,
                          prediction_horizon(t, robot_speed, obstacle_speed, horizon_max))


def footprint_radius(P_pred: np.ndarray, safety_radius: float) -> float:
    """Radius inside which the covariance Gaussian is >= 0.5, or the safety radius if larger."""
    sigma2 = 0.5 * (P_pred[0, 0] + P_pred[1, 1])
    return max(math.sqrt(2.0 * math.log(1.0 / GAUSS_LEVEL) * sigma2), safety_radius)


def footprint_mask(field: PotentialField, x_pred, P_pred: np.ndarray, safety_radius: float) -> np.ndarray:
    spec = field.spec
    radius = footprint_radius(P_pred, safety_radius)
    mask = np.zeros(spec.shape, dtype=bool)
    s = spec.cell_size
    gx = (x_pred[0] - spec.origin[0]) / s - 0.5
    gy = (x_pred[1] - spec.origin[1]) / s - 0.5
    rc = radius / s
    x0, x1 = max(int(math.floor(gx - rc)), 0), min(int(math.ceil(gx + rc)), spec.width_cells - 1)
    y0, y1 = max(int(math.floor(gy - rc)), 0), min(int(math.ceil(gy + rc)), spec.height_cells - 1)
    if x0 > x1 or y0 > y1:
        return mask
    xs = np.arange(x0, x1 + 1)
    ys = np.arange(y0, y1 + 1)
    d2 = ((xs[None, :] - gx) ** 2 + (ys[:, None] - gy) ** 2) * (s * s)
    mask[y0:y1 + 1, x0:x1 + 1] = d2 <= radius * radius + 1e-12
    return mask


def mark_future_obstacle(field: PotentialField, x_pred, P_pred: np.ndarray,
                         safety_radius: float) -> PotentialField:
    """Stamp a predicted obstacle footprint as fixed obstacle cells, in place.

    Goal cells are never overwritten; if the footprint reaches them a
    :class:`GoalSwallowed` warning is issued and the footprint is clipped.
    """
    mask = footprint_mask(field, x_pred, P_pred, safety_radius)
    goal = field.cls == CellClass.GOAL
    if np.any(mask & goal):
        warnings.warn(GoalSwallowed("predicted footprint clipped around the goal"), stacklevel=2)
        mask &= ~goal
    field.set_class(mask, CellClass.OBSTACLE)
    return field
