"""Deterministic discrete-time 2D world: walls, wandering obstacles, a robot and its sensors.

All randomness comes from explicit ``numpy.random.Generator`` objects
backed by the counter-based Philox bit generator, so a (scenario, seed)
pair replays identically on any platform.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

import numpy as np
from numba import njit

from ._jit import CACHE as _CACHE
from .tracking import Detection


def make_rngs(seed: int, n: int = 3) -> list[np.random.Generator]:
    """Independent Philox streams derived from one 64-bit seed."""
    return [np.random.Generator(np.random.Philox(s)) for s in np.random.SeedSequence(seed).spawn(n)]


def wrap_angle(a: float) -> float:
    return (a + math.pi) % (2.0 * math.pi) - math.pi


@dataclass
class RobotState:
    x: float
    y: float
    heading: float
    speed: float = 0.4
    radius: float = 0.25
    max_turn_rate: float = math.radians(90.0)

    @property
    def position(self) -> np.ndarray:
        return np.array([self.x, self.y])


@dataclass
class MovingObstacle:
    x: float
    y: float
    heading: float
    speed: float
    radius: float = 0.25

    @property
    def position(self) -> np.ndarray:
        return np.array([self.x, self.y])


@dataclass(frozen=True)
class MotionConfig:
    heading_noise: float = 0.02
    turn_distance: float = 0.5
    turn_jitter: float = math.radians(20.0)


@dataclass(frozen=True)
class SensorConfig:
    n_rays: int = 360
    max_range: float = 8.0
    sigma_r: float = 0.02
    sigma_z: float = 0.05


@dataclass
class SensorFrame:
    static_hits: np.ndarray
    obstacle_detections: list[Detection]
    tick: int
    origin: np.ndarray | None = None


@dataclass
class WorldState:
    extent: tuple[float, float]
    walls: np.ndarray                 # (m, 4) rows of x0, y0, x1, y1
    obstacles: list[MovingObstacle]
    robot: RobotState
    goal: tuple[float, float]
    goal_radius: float = 0.5
    tick: int = 0
    rng_seed: int = 0
    dt: float = 0.1


class TrialStatus(enum.Enum):
    RUNNING = "running"
    SUCCESS = "success"
    COLLISION = "collision"


def as_walls(segments) -> np.ndarray:
    w = np.asarray(segments, dtype=float).reshape(-1, 4)
    return np.ascontiguousarray(w)


def _ray_hits(origin, directions: np.ndarray, walls: np.ndarray, max_range: float) -> np.ndarray:
    """Matrix ``(rays, walls)`` of hit distances, ``inf`` where a ray misses a wall."""
    d = np.atleast_2d(directions)
    p = walls[:, :2]
    e = walls[:, 2:] - p
    w = p - np.asarray(origin, dtype=float)
    denom = d[:, None, 0] * e[None, :, 1] - d[:, None, 1] * e[None, :, 0]
    with np.errstate(divide="ignore", invalid="ignore"):
        t = (w[None, :, 0] * e[None, :, 1] - w[None, :, 1] * e[None, :, 0]) / denom
        u = (w[None, :, 0] * d[:, None, 1] - w[None, :, 1] * d[:, None, 0]) / denom
    ok = (denom != 0.0) & (t >= 0.0) & (u >= 0.0) & (u <= 1.0) & (t <= max_range)
    return np.where(ok, t, np.inf)


@njit(cache=_CACHE)
def _first_hit(ox, oy, dx, dy, walls, max_range):
    # nearest wall along one ray: (distance, wall index), (inf, -1) on a miss
    best = np.inf
    jb = -1
    for j in range(walls.shape[0]):
        px, py = walls[j, 0], walls[j, 1]
        ex, ey = walls[j, 2] - px, walls[j, 3] - py
        wx, wy = px - ox, py - oy
        denom = dx * ey - dy * ex
        if denom == 0.0:
            continue
        t = (wx * ey - wy * ex) / denom
        u = (wx * dy - wy * dx) / denom
        if t >= 0.0 and u >= 0.0 and u <= 1.0 and t <= max_range and t < best:
            best = t
            jb = j
    return best, jb


@njit(cache=_CACHE)
def _min_point_distance(px, py, walls):
    best = np.inf
    for j in range(walls.shape[0]):
        ax, ay = walls[j, 0], walls[j, 1]
        ex, ey = walls[j, 2] - ax, walls[j, 3] - ay
        L2 = ex * ex + ey * ey
        s = ((px - ax) * ex + (py - ay) * ey) / L2 if L2 > 0.0 else 0.0
        s = min(max(s, 0.0), 1.0)
        d = math.hypot(px - (ax + s * ex), py - (ay + s * ey))
        if d < best:
            best = d
    return best


def ray_segment_distances(origin, directions: np.ndarray, walls: np.ndarray,
                          max_range: float = np.inf) -> np.ndarray:
    """Distance along each unit ray to the nearest wall, ``inf`` when none within range."""
    d = np.atleast_2d(directions)
    if len(walls) == 0:
        return np.full(len(d), np.inf)
    return _ray_hits(origin, d, walls, max_range).min(axis=1)


def point_segment_distance(p, walls: np.ndarray) -> np.ndarray:
    """Euclidean distance from point ``p`` to every wall segment."""
    if len(walls) == 0:
        return np.zeros(0)
    a = walls[:, :2]
    e = walls[:, 2:] - a
    ap = np.asarray(p, dtype=float) - a
    L2 = np.einsum("ij,ij->i", e, e)
    with np.errstate(divide="ignore", invalid="ignore"):
        s = np.where(L2 > 0, np.einsum("ij,ij->i", ap, e) / L2, 0.0)
    s = np.clip(s, 0.0, 1.0)
    q = a + s[:, None] * e
    return np.hypot(*(np.asarray(p, dtype=float) - q).T)


def segment_blocked(a, b, walls: np.ndarray) -> bool:
    """True if segment ``ab`` properly crosses or touches any wall."""
    if len(walls) == 0:
        return False
    ax, ay = float(a[0]), float(a[1])
    dx, dy = float(b[0]) - ax, float(b[1]) - ay
    L = math.hypot(dx, dy)
    if L == 0.0:
        return False
    t, _ = _first_hit(ax, ay, dx / L, dy / L, walls, L)
    return bool(np.isfinite(t))


def min_wall_distance(p, walls: np.ndarray) -> float:
    """Distance from ``p`` to the nearest wall, ``inf`` without walls."""
    if len(walls) == 0:
        return math.inf
    return float(_min_point_distance(float(p[0]), float(p[1]), walls))


def _reflect(heading: float, normal_angle: float) -> float:
    # mirror the direction across the line whose normal is at normal_angle
    return wrap_angle(2.0 * (normal_angle + math.pi / 2.0) - heading)


def step_obstacle(obstacle: MovingObstacle, walls: np.ndarray, dt: float, rng: np.random.Generator,
                  others=(), config: MotionConfig = MotionConfig(),
                  extent: tuple[float, float] | None = None) -> MovingObstacle:
    """Constant-speed wander that turns only near walls and other obstacles."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    h = obstacle.heading
    if config.heading_noise > 0:
        h = wrap_angle(h + rng.normal(0.0, config.heading_noise))
    jitter = rng.uniform(-config.turn_jitter, config.turn_jitter) if config.turn_jitter > 0 else 0.0
    px, py = obstacle.x, obstacle.y
    look = config.turn_distance + obstacle.radius

    def wall_ahead(hd: float) -> float | None:
        # angle of the normal of the first wall within look-ahead, if any
        if len(walls) == 0:
            return None
        t, j = _first_hit(px, py, math.cos(hd), math.sin(hd), walls, look)
        if j < 0:
            return None
        return math.atan2(walls[j, 3] - walls[j, 1], walls[j, 2] - walls[j, 0]) + math.pi / 2.0

    normal = wall_ahead(h)
    if normal is None:
        ch, sh = math.cos(h), math.sin(h)
        for o in others:
            if o is obstacle:
                continue
            rx, ry = o.x - px, o.y - py
            dist = math.hypot(rx, ry)
            if dist == 0.0 or dist > config.turn_distance + obstacle.radius + o.radius:
                continue
            if rx * ch + ry * sh > 0.0:
                normal = math.atan2(ry, rx)
                break
    if normal is not None:
        h = wrap_angle(_reflect(h, normal) + jitter)
        if wall_ahead(h) is not None:
            h = wrap_angle(h + math.pi)

    nx = px + obstacle.speed * dt * math.cos(h)
    ny = py + obstacle.speed * dt * math.sin(h)
    if len(walls) and (min_wall_distance((nx, ny), walls) < obstacle.radius
                       or segment_blocked((px, py), (nx, ny), walls)):
        nx, ny = px, py
        h = wrap_angle(h + math.pi + jitter)
    if extent is not None:
        r = obstacle.radius
        nx = min(max(nx, r), extent[0] - r)
        ny = min(max(ny, r), extent[1] - r)
    return replace(obstacle, x=nx, y=ny, heading=h)


def sense(world: WorldState, config: SensorConfig, rng: np.random.Generator) -> SensorFrame:
    """Laser fan against the walls plus one noisy position fix per visible obstacle."""
    origin = world.robot.position
    ang = world.robot.heading + np.arange(config.n_rays) * (2.0 * math.pi / config.n_rays)
    dirs = np.stack([np.cos(ang), np.sin(ang)], axis=1)
    t = ray_segment_distances(origin, dirs, world.walls, config.max_range)
    noise = rng.normal(0.0, config.sigma_r, size=len(t)) if config.sigma_r > 0 else np.zeros(len(t))
    hit = np.isfinite(t)
    r = np.clip(t[hit] + noise[hit], 0.0, config.max_range)
    hits = origin + dirs[hit] * r[:, None]

    dets = []
    for o in world.obstacles:
        if math.hypot(o.x - origin[0], o.y - origin[1]) > config.max_range:
            continue
        if segment_blocked(origin, (o.x, o.y), world.walls):
            continue
        z = o.position + (rng.normal(0.0, config.sigma_z, size=2) if config.sigma_z > 0 else 0.0)
        dets.append(Detection(np.asarray(z, dtype=float), world.tick))
    return SensorFrame(hits, dets, world.tick, origin)


def step_robot(robot: RobotState, next_waypoint, dt: float) -> RobotState:
    """Turn towards the waypoint at a bounded rate, then advance at constant speed."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    h = robot.heading
    if next_waypoint is not None:
        dx, dy = next_waypoint[0] - robot.x, next_waypoint[1] - robot.y
        if dx != 0.0 or dy != 0.0:
            err = wrap_angle(math.atan2(dy, dx) - h)
            lim = robot.max_turn_rate * dt
            h = wrap_angle(h + min(max(err, -lim), lim))
    return replace(robot, x=robot.x + robot.speed * dt * math.cos(h),
                   y=robot.y + robot.speed * dt * math.sin(h), heading=h)


def check_trial_status(world: WorldState) -> TrialStatus:
    r = world.robot
    if math.hypot(r.x - world.goal[0], r.y - world.goal[1]) <= world.goal_radius:
        return TrialStatus.SUCCESS
    for o in world.obstacles:
        if math.hypot(r.x - o.x, r.y - o.y) < r.radius + o.radius:
            return TrialStatus.COLLISION
    if min_wall_distance((r.x, r.y), world.walls) < r.radius:
        return TrialStatus.COLLISION
    return TrialStatus.RUNNING


def step_world(world: WorldState, rng: np.random.Generator,
               motion: MotionConfig = MotionConfig()) -> WorldState:
    """Advance every obstacle one tick in fixed index order."""
    moved = []
    for i, o in enumerate(world.obstacles):
        others = moved + world.obstacles[i + 1:]
        moved.append(step_obstacle(o, world.walls, world.dt, rng, others, motion, world.extent))
    return replace(world, obstacles=moved, tick=world.tick + 1)
