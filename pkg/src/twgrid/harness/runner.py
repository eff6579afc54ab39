"""Seeded trial and batch execution."""

from __future__ import annotations

import csv
import io
import math
import multiprocessing
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from ..grid import GridSpec
from ..planner import PlannerState, map_update, new_planner, plan_tick
from ..simulator import (MovingObstacle, RobotState, TrialStatus, WorldState, as_walls, check_trial_status,
                         make_rngs, point_segment_distance, sense, step_robot, step_world)
from .metrics import CSV_COLUMNS, Outcome, TrialMetrics, path_length_cm, success_rate, turning_angles_deg
from .scenario import Scenario


@dataclass
class Snapshot:
    """Planner internals at the end of a trial, for rendering."""
    planned_path: np.ndarray
    tracks: np.ndarray
    footprints: list[tuple[float, float, float]]
    static_cells: np.ndarray


@dataclass
class TrialRecord:
    metrics: TrialMetrics
    trajectory: np.ndarray            # (ticks + 1, 3): x, y, heading
    obstacle_paths: np.ndarray        # (ticks + 1, n_obstacles, 2)
    snapshot: Snapshot
    blocked_ticks: int = 0


def spawn_obstacles(sc: Scenario, rng: np.random.Generator) -> list[MovingObstacle]:
    """Fixed obstacles from the scenario plus ``random_obstacles`` placed clear of walls and endpoints."""
    obs = [MovingObstacle(o.start[0], o.start[1], o.heading, o.speed, sc.obstacle_radius) for o in sc.obstacles]
    walls = as_walls(sc.walls)
    W, H = sc.extent
    r = sc.obstacle_radius
    tries = 0
    while len(obs) < len(sc.obstacles) + sc.random_obstacles:
        tries += 1
        if tries > 100000:
            raise RuntimeError("could not place obstacles; scenario too crowded")
        x = rng.uniform(r + 0.2, W - r - 0.2)
        y = rng.uniform(r + 0.2, H - r - 0.2)
        heading = rng.uniform(-math.pi, math.pi)
        speed = rng.uniform(*sc.obstacle_speed)
        if len(walls) and float(np.min(point_segment_distance((x, y), walls))) < r + 0.3:
            continue
        if math.hypot(x - sc.start[0], y - sc.start[1]) < sc.clearance:
            continue
        if math.hypot(x - sc.goal[0], y - sc.goal[1]) < sc.clearance:
            continue
        if any(math.hypot(x - o.x, y - o.y) < 2 * r + 0.3 for o in obs):
            continue
        obs.append(MovingObstacle(x, y, heading, speed, r))
    return obs


def build_world(sc: Scenario, seed: int) -> tuple[WorldState, list[np.random.Generator]]:
    rng_world, rng_motion, rng_sense = make_rngs(seed, 3)
    robot = RobotState(sc.start[0], sc.start[1], sc.start_heading, sc.robot_speed,
                       sc.robot_radius, sc.max_turn_rate)
    world = WorldState(sc.extent, as_walls(sc.walls), spawn_obstacles(sc, rng_world), robot,
                       sc.goal, sc.goal_radius, 0, seed, sc.dt)
    return world, [rng_motion, rng_sense]


def grid_for(sc: Scenario) -> GridSpec:
    return GridSpec.from_extent(sc.extent[0], sc.extent[1], sc.cell_size)


def simulate_trial(sc: Scenario, seed: int) -> TrialRecord:
    """Run sense, map update, plan, move and obstacle steps until a terminal state or the tick limit."""
    world, (rng_motion, rng_sense) = build_world(sc, seed)
    spec = grid_for(sc)
    state = new_planner(spec, sc.goal, sc.goal_radius, sc.planner, sc.dt)
    traj = [(world.robot.x, world.robot.y, world.robot.heading)]
    obs_paths = [[(o.x, o.y) for o in world.obstacles]]
    outcome = Outcome.TIMEOUT
    blocked = 0
    last_wp = None
    status = check_trial_status(world)
    ticks = 0
    while status == TrialStatus.RUNNING and ticks < sc.tick_limit:
        frame = sense(world, sc.sensor, rng_sense)
        map_update(state, frame, world.robot)
        state, wp = plan_tick(state, world.robot)
        if wp is None:
            # blocked: head for the previous waypoint while it is still ahead, else hold the heading
            blocked += 1
            r = world.robot
            if last_wp is not None and math.hypot(last_wp[0] - r.x, last_wp[1] - r.y) > r.speed * sc.dt:
                wp = last_wp
            else:
                last_wp = None
        else:
            last_wp = wp
        world.robot = step_robot(world.robot, wp, sc.dt)
        world = step_world(world, rng_motion, sc.motion)
        ticks += 1
        traj.append((world.robot.x, world.robot.y, world.robot.heading))
        obs_paths.append([(o.x, o.y) for o in world.obstacles])
        status = check_trial_status(world)
    if status == TrialStatus.SUCCESS:
        outcome = Outcome.SUCCESS
    elif status == TrialStatus.COLLISION:
        outcome = Outcome.COLLISION
    traj = np.array(traj)
    angles = turning_angles_deg(traj[:, :2]).tolist() if len(traj) >= 3 else []
    length = path_length_cm(traj[:, :2])
    if outcome == Outcome.SUCCESS:
        # the trial ends inside the goal disk; close the path at the goal point itself
        length += 100.0 * math.hypot(sc.goal[0] - traj[-1, 0], sc.goal[1] - traj[-1, 1])
    metrics = TrialMetrics(sc.name, len(world.obstacles), seed, outcome, length, ticks, angles)
    return TrialRecord(metrics, traj, np.array(obs_paths).reshape(len(traj), -1, 2),
                       _snapshot(state), blocked)


def _snapshot(state: PlannerState) -> Snapshot:
    path = state.current_path.to_world(state.spec) if state.current_path is not None else np.zeros((0, 2))
    tracks = np.array([t.position for t in state.tracks]).reshape(-1, 2)
    fps = [(float(f.center[0]), float(f.center[1]), float(f.radius)) for f in state.footprints]
    return Snapshot(path, tracks, fps, np.argwhere(state.static_map))


def run_trial(sc: Scenario, seed: int) -> TrialMetrics:
    return simulate_trial(sc, seed).metrics


def trajectory_csv(record: TrialRecord) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["tick", "x", "y", "heading"])
    for i, (x, y, h) in enumerate(record.trajectory):
        w.writerow([i, f"{x:.6f}", f"{y:.6f}", f"{h:.6f}"])
    return buf.getvalue()


@dataclass
class SummaryRow:
    scenario: str
    obstacles: int
    trials: int
    success_pct: float
    mean_length_cm: float
    angle_histogram: np.ndarray = field(repr=False)


@dataclass
class BatchReport:
    trials: list[TrialMetrics]
    summary: list[SummaryRow]

    def trials_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for t in self.trials:
            w.writerow(t.csv_row())
        return buf.getvalue()

    def summary_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["scenario", "obstacles", "trials", "success_pct", "mean_length_cm"])
        for s in self.summary:
            w.writerow([s.scenario, s.obstacles, s.trials, repr(s.success_pct), f"{s.mean_length_cm:.3f}"])
        return buf.getvalue()


def _run_one(args) -> TrialMetrics:
    sc, seed = args
    return run_trial(sc, seed)


def run_batch(sc: Scenario, seeds: Sequence[int], obstacle_counts: Sequence[int],
              workers: int = 1, csv_out: str | Path | None = None) -> BatchReport:
    """Every seed at every obstacle count; aggregation is in (count, seed) order."""
    from .metrics import histogram_from_angles

    jobs = [(sc.with_obstacles(n), int(s)) for n in obstacle_counts for s in seeds]
    if workers > 1 and len(jobs) > 1:
        # forking after the OpenMP runtime has started aborts the child
        ctx = multiprocessing.get_context("spawn")
        with ProcessPoolExecutor(max_workers=workers, mp_context=ctx) as ex:
            trials = list(ex.map(_run_one, jobs))
    else:
        trials = [_run_one(j) for j in jobs]
    summary = []
    if seeds:
        for n in obstacle_counts:
            rows = [t for t in trials if t.obstacles == n]
            ok = [t.path_length_cm for t in rows if t.outcome == Outcome.SUCCESS]
            hist = sum((histogram_from_angles(t.turning_angles_deg) for t in rows),
                       np.zeros(36, dtype=int))
            summary.append(SummaryRow(sc.name, int(n), len(rows), success_rate(rows),
                                      float(np.mean(ok)) if ok else math.nan, hist))
    report = BatchReport(trials, summary)
    if csv_out is not None:
        p = Path(csv_out)
        p.write_text(report.trials_csv())
        p.with_name(p.stem + "_summary.csv").write_text(report.summary_csv())
    return report
