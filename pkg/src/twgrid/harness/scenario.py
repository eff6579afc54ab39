"""Scenario files: a declarative TOML description of one world.

Schema (all lengths in meters, angles in degrees)::

    name = "office"
    extent = [25.6, 25.6]       # world width, height
    cell_size = 0.1
    dt = 0.1                    # seconds per tick
    time_limit = 0              # ticks; 0 = 5x the straight-line traversal time
    border = true               # add the four outer walls
    walls = [[x0, y0, x1, y1], ...]

    [robot]
    start = [x, y]
    heading = 0.0
    speed = 0.4
    radius = 0.25
    max_turn_rate = 90.0        # deg/s

    [goal]
    position = [x, y]
    radius = 0.5

    [obstacles]
    count = 0                   # randomly placed per seed
    speed = [0.2, 0.5]          # uniform range
    radius = 0.25
    clearance = 2.5             # keep random spawns this far from start and goal
    fixed = [{start = [x, y], heading = 90.0, speed = 0.3}, ...]

    [sensor]    # SensorConfig fields
    [motion]    # MotionConfig fields (heading_noise, turn_jitter in degrees)
    [planner]   # PlannerConfig fields
"""

from __future__ import annotations

import dataclasses
import math
import sys
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path
from typing import Any

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from ..errors import ScenarioInvalid
from ..planner import PlannerConfig
from ..simulator import MotionConfig, SensorConfig, point_segment_distance

BUNDLED = ("map1", "map2", "map3", "map4")


@dataclass(frozen=True)
class ObstacleSpec:
    start: tuple[float, float]
    heading: float                 # radians
    speed: float


@dataclass(frozen=True)
class Scenario:
    name: str
    extent: tuple[float, float]
    walls: tuple[tuple[float, float, float, float], ...]
    start: tuple[float, float]
    start_heading: float           # radians
    goal: tuple[float, float]
    goal_radius: float = 0.5
    robot_speed: float = 0.4
    robot_radius: float = 0.25
    max_turn_rate: float = math.radians(90.0)
    cell_size: float = 0.1
    dt: float = 0.1
    time_limit: int = 0
    obstacles: tuple[ObstacleSpec, ...] = ()
    random_obstacles: int = 0
    obstacle_speed: tuple[float, float] = (0.2, 0.5)
    obstacle_radius: float = 0.25
    clearance: float = 2.5
    sensor: SensorConfig = SensorConfig()
    motion: MotionConfig = MotionConfig()
    planner: PlannerConfig = PlannerConfig()

    @property
    def straight_distance(self) -> float:
        return math.hypot(self.goal[0] - self.start[0], self.goal[1] - self.start[1])

    @property
    def tick_limit(self) -> int:
        if self.time_limit > 0:
            return self.time_limit
        return int(math.ceil(5.0 * self.straight_distance / (self.robot_speed * self.dt)))

    def with_obstacles(self, count: int) -> Scenario:
        """Same world with ``count`` randomly placed obstacles and no fixed ones."""
        return replace(self, obstacles=(), random_obstacles=int(count))


def _pair(v, what: str) -> tuple[float, float]:
    try:
        a, b = v
        return float(a), float(b)
    except (TypeError, ValueError):
        raise ScenarioInvalid(f"{what} must be a pair of numbers, got {v!r}") from None


def _config(cls, table: dict[str, Any] | None, what: str, degrees=()):
    if not table:
        return cls()
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(table) - names
    if unknown:
        raise ScenarioInvalid(f"unknown {what} keys: {sorted(unknown)}")
    vals = {k: (math.radians(v) if k in degrees else v) for k, v in table.items()}
    try:
        return cls(**vals)
    except TypeError as e:
        raise ScenarioInvalid(f"bad {what} table: {e}") from None


def from_mapping(data: dict[str, Any]) -> Scenario:
    known = {"name", "extent", "cell_size", "dt", "time_limit", "border", "walls",
             "robot", "goal", "obstacles", "sensor", "motion", "planner"}
    unknown = set(data) - known
    if unknown:
        raise ScenarioInvalid(f"unknown top-level keys: {sorted(unknown)}")
    try:
        extent = _pair(data.get("extent", (25.6, 25.6)), "extent")
        robot = data["robot"]
        goal = data["goal"]
    except KeyError as e:
        raise ScenarioInvalid(f"missing required table {e}") from None
    walls = []
    for w in data.get("walls", []):
        if len(w) != 4:
            raise ScenarioInvalid(f"wall must be [x0, y0, x1, y1], got {w!r}")
        walls.append(tuple(float(v) for v in w))
    if data.get("border", True):
        W, H = extent
        walls += [(0.0, 0.0, W, 0.0), (W, 0.0, W, H), (W, H, 0.0, H), (0.0, H, 0.0, 0.0)]

    obs = data.get("obstacles", {})
    fixed = tuple(ObstacleSpec(_pair(o["start"], "obstacle start"), math.radians(float(o.get("heading", 0.0))),
                               float(o.get("speed", 0.3))) for o in obs.get("fixed", []))
    try:
        sc = Scenario(
            name=str(data.get("name", "unnamed")),
            extent=extent,
            walls=tuple(walls),
            start=_pair(robot["start"], "robot.start"),
            start_heading=math.radians(float(robot.get("heading", 0.0))),
            goal=_pair(goal["position"], "goal.position"),
            goal_radius=float(goal.get("radius", 0.5)),
            robot_speed=float(robot.get("speed", 0.4)),
            robot_radius=float(robot.get("radius", 0.25)),
            max_turn_rate=math.radians(float(robot.get("max_turn_rate", 90.0))),
            cell_size=float(data.get("cell_size", 0.1)),
            dt=float(data.get("dt", 0.1)),
            time_limit=int(data.get("time_limit", 0)),
            obstacles=fixed,
            random_obstacles=int(obs.get("count", 0)),
            obstacle_speed=_pair(obs.get("speed", (0.2, 0.5)), "obstacles.speed"),
            obstacle_radius=float(obs.get("radius", 0.25)),
            clearance=float(obs.get("clearance", 2.5)),
            sensor=_config(SensorConfig, data.get("sensor"), "sensor"),
            motion=_config(MotionConfig, data.get("motion"), "motion", degrees=("heading_noise", "turn_jitter")),
            planner=_config(PlannerConfig, data.get("planner"), "planner"),
        )
    except KeyError as e:
        raise ScenarioInvalid(f"missing required key {e}") from None
    validate(sc)
    return sc


def validate(sc: Scenario) -> None:
    """Raise :class:`ScenarioInvalid` unless start and goal are inside and off the walls."""
    W, H = sc.extent
    if W <= 0 or H <= 0 or sc.cell_size <= 0 or sc.dt <= 0:
        raise ScenarioInvalid("extent, cell_size and dt must be positive")
    if sc.robot_speed <= 0:
        raise ScenarioInvalid("robot speed must be positive")
    walls = np.array(sc.walls, dtype=float).reshape(-1, 4)
    for label, p in (("start", sc.start), ("goal", sc.goal)):
        if not (0.0 < p[0] < W and 0.0 < p[1] < H):
            raise ScenarioInvalid(f"{label} {p} outside extent {sc.extent}")
        if len(walls) and float(np.min(point_segment_distance(p, walls))) < sc.robot_radius:
            raise ScenarioInvalid(f"{label} {p} overlaps a wall")
    for i, w in enumerate(walls):
        if np.any(w < -1e-9) or w[0] > W + 1e-9 or w[2] > W + 1e-9 or w[1] > H + 1e-9 or w[3] > H + 1e-9:
            raise ScenarioInvalid(f"wall {i} leaves the extent")
    for o in sc.obstacles:
        if o.speed <= 0:
            raise ScenarioInvalid("obstacle speed must be positive")
    lo, hi = sc.obstacle_speed
    if not 0 < lo <= hi:
        raise ScenarioInvalid("obstacles.speed must be an increasing positive range")


def load(path_or_name: str | Path) -> Scenario:
    """Load a scenario file, or a bundled one by name (``map1`` ... ``map4``)."""
    p = Path(path_or_name)
    try:
        if p.suffix == "" and str(path_or_name) in BUNDLED:
            text = resources.files("twgrid.harness.scenarios").joinpath(f"{path_or_name}.toml").read_text()
        else:
            text = p.read_text()
    except OSError as e:
        raise ScenarioInvalid(f"cannot read scenario {path_or_name}: {e}") from None
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as e:
        raise ScenarioInvalid(f"{path_or_name}: {e}") from None
    return from_mapping(data)


def bundled() -> list[Scenario]:
    return [load(n) for n in BUNDLED]
