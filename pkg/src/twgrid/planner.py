"""Per-tick planning loop: sense, track, warp, stamp, relax, descend, smooth."""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from . import harmonic
from .errors import InvalidStart, NoPath, NoSolution
from .grid import CellClass, GridSpec, PathPolyline, stamp_disks, world_to_cell
from .harmonic import PotentialField, build_index_matrix, extract_path, initialize_field, solve
from .rubber_band import relax_path
from .simulator import RobotState, SensorFrame
from .time_warp import WarpAssignment, WarpGeometry, assign_warp, footprint_mask, footprint_radius
from .tracking import KalmanModel, ObstacleTrack, TrackPolicy, advance, associate, predict, spawn_and_prune, update

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class PlannerConfig:
    sweeps_per_tick: int = 100
    initial_levels: int = 4
    initial_sweeps: int = 200
    initial_max_sweeps: int = 20000
    initial_chunk: int = 500
    tol: float = 0.0
    warm_start: bool = True
    warp_spacing: float = 1.0
    horizon_max: int = 20
    safety_radius: float = 0.6
    inflate_radius: float = 0.3
    rb_iterations: int = 50
    rb_step: float = 0.25
    k_t: float = 1.0
    lookahead_cells: float = 1.0
    gate: float = 0.5
    process_noise: float = 1e-3
    sigma_z: float = 0.05
    max_missed: int = 10
    hit_link_gap: float = 0.35
    workers: int | None = None


@dataclass
class Footprint:
    track_id: int
    center: np.ndarray
    radius: float
    warp: WarpAssignment


@dataclass
class PlannerState:
    spec: GridSpec
    config: PlannerConfig
    goal: np.ndarray
    goal_mask: np.ndarray
    field: PotentialField
    static_map: np.ndarray
    inflated: np.ndarray
    model: KalmanModel
    tracks: list[ObstacleTrack] = field(default_factory=list)
    current_path: PathPolyline | None = None
    footprints: list[Footprint] = field(default_factory=list)
    ticks: int = 0
    ids: Iterator[int] = field(default_factory=itertools.count, repr=False)


def goal_region(spec: GridSpec, goal, radius: float) -> np.ndarray:
    """Cells whose centers lie within ``radius`` of the goal (always includes the goal cell)."""
    X, Y = spec.cell_centers()
    mask = (X - goal[0]) ** 2 + (Y - goal[1]) ** 2 <= radius * radius
    c = world_to_cell(goal, spec)
    mask[c.y, c.x] = True
    return mask


def new_planner(spec: GridSpec, goal, goal_radius: float, config: PlannerConfig = PlannerConfig(),
                dt: float = 0.1, static_cells: np.ndarray | None = None) -> PlannerState:
    goal = np.asarray(goal, dtype=float)
    gmask = goal_region(spec, goal, goal_radius)
    static = np.zeros(spec.shape, dtype=bool) if static_cells is None else static_cells.copy()
    static &= ~gmask
    inflated = np.zeros(spec.shape, dtype=bool)
    if static.any():
        ys, xs = np.nonzero(static)
        stamp_disks(inflated, np.stack([xs, ys], axis=1), config.inflate_radius / spec.cell_size)
    fld = initialize_field(spec, gmask, inflated & ~gmask)
    model = KalmanModel.constant_velocity(dt, config.process_noise, config.sigma_z)
    return PlannerState(spec, config, goal, gmask, fld, static, inflated, model)


def hits_to_cells(hits: np.ndarray, spec: GridSpec, link_gap: float) -> np.ndarray:
    """Mask of cells covered by laser hits, with neighboring hits joined into wall pieces.

    Consecutive hits (in ray order) closer than ``link_gap`` are joined by a
    densely sampled segment; diagonal steps between samples get both side
    cells so the result is 4-connected, like a supercover.
    """
    mask = np.zeros(spec.shape, dtype=bool)
    if len(hits) == 0:
        return mask
    s = spec.cell_size
    g = (hits - np.asarray(spec.origin)) / s
    a, b = g, np.roll(g, -1, axis=0)
    link = np.hypot(*(b - a).T) <= link_gap / s
    if len(hits) == 1:
        link[:] = False
    n_sub = max(int(math.ceil(link_gap / s * 4)), 1)
    f = np.linspace(0.0, 1.0, n_sub + 1)
    seg = a[link, None, :] + (b[link] - a[link])[:, None, :] * f[None, :, None]
    cells = np.floor(seg).astype(np.int64)
    pts = [cells.reshape(-1, 2), np.floor(a).astype(np.int64)]
    if cells.shape[0]:
        p, q = cells[:, :-1, :], cells[:, 1:, :]
        diag = (p[..., 0] != q[..., 0]) & (p[..., 1] != q[..., 1])
        pts.append(np.stack([q[..., 0][diag], p[..., 1][diag]], axis=1))
        pts.append(np.stack([p[..., 0][diag], q[..., 1][diag]], axis=1))
    allp = np.concatenate(pts, axis=0)
    ok = (allp[:, 0] >= 0) & (allp[:, 0] < spec.width_cells) & (allp[:, 1] >= 0) & (allp[:, 1] < spec.height_cells)
    allp = allp[ok]
    mask[allp[:, 1], allp[:, 0]] = True
    return mask


def _robot_cells(state: PlannerState, robot: RobotState) -> np.ndarray:
    spec = state.spec
    mask = np.zeros(spec.shape, dtype=bool)
    q = spec.world_to_grid(robot.position)
    c = np.array([[int(math.floor(q[0] + 0.5)), int(math.floor(q[1] + 0.5))]])
    stamp_disks(mask, c, robot.radius / spec.cell_size)
    return mask & ~state.static_map


def update_tracks(state: PlannerState, frame: SensorFrame) -> None:
    model = state.model
    for t in state.tracks:
        advance(t, model)
    assoc = associate(state.tracks, frame.obstacle_detections, model, state.config.gate)
    for ti, di in assoc.pairs:
        update(state.tracks[ti], model, frame.obstacle_detections[di])
    unmatched = [frame.obstacle_detections[j] for j in assoc.unmatched_detections]
    policy = TrackPolicy(max_missed=state.config.max_missed)
    state.tracks = spawn_and_prune(state.tracks, unmatched, policy, state.ids)


def predicted_footprints(state: PlannerState, robot: RobotState) -> list[tuple[Footprint, np.ndarray]]:
    cfg, spec = state.config, state.spec
    geom = WarpGeometry(robot.x, robot.y, robot.heading, spacing=cfg.warp_spacing,
                        r_max=4.0 * spec.diagonal)
    out = []
    for t in state.tracks:
        # fresh tracks have no velocity estimate; marking them would stamp the current position
        if t.age < 2:
            continue
        try:
            w = assign_warp(t.id, geom, t.position, robot.speed, t.speed, cfg.horizon_max)
        except NoSolution:
            continue
        if w.horizon_steps < 1:
            continue
        x_pred, P_pred = predict(t, state.model, w.horizon_steps)
        fp = Footprint(t.id, x_pred[:2].copy(), footprint_radius(P_pred, cfg.safety_radius), w)
        out.append((fp, footprint_mask(state.field, x_pred[:2], P_pred, cfg.safety_radius)))
    return out


def map_update(state: PlannerState, frame: SensorFrame, robot: RobotState) -> PlannerState:
    """Fuse one sensor frame and rebuild the boundary cells of the field."""
    spec, cfg = state.spec, state.config
    new = hits_to_cells(frame.static_hits, spec, cfg.hit_link_gap) & ~state.static_map & ~state.goal_mask
    if new.any():
        state.static_map |= new
        ys, xs = np.nonzero(new)
        stamp_disks(state.inflated, np.stack([xs, ys], axis=1), cfg.inflate_radius / spec.cell_size)

    update_tracks(state, frame)

    blocked = state.inflated.copy()
    state.footprints = []
    for fp, mask in predicted_footprints(state, robot):
        if np.any(mask & state.goal_mask):
            log.debug("footprint of track %d clipped around the goal", fp.track_id)
        blocked |= mask
        state.footprints.append(fp)
    blocked &= ~state.goal_mask
    blocked &= ~_robot_cells(state, robot)

    fld = state.field
    fld.cls[...] = CellClass.FREE
    fld.set_class(state.goal_mask, CellClass.GOAL)
    fld.set_class(blocked, CellClass.OBSTACLE)
    if not cfg.warm_start:
        fld.phi[fld.cls == CellClass.FREE] = harmonic.FREE_INIT
    # under warm start, cells released by a footprint keep their pinned 1: a
    # local maximum relaxes away harmlessly, whereas a neutral 0.5 next to
    # high-potential neighbors would be a spurious minimum for the descent
    return state


def _descends(fld: PotentialField, start) -> bool:
    try:
        extract_path(build_index_matrix(fld), fld, start)
    except NoPath:
        return False
    return True


def plan_tick(state: PlannerState, robot: RobotState) -> tuple[PlannerState, np.ndarray | None]:
    """Relax the field and return the next world-space waypoint, or None when blocked."""
    spec, cfg = state.spec, state.config
    fld = state.field
    start = world_to_cell(np.clip(robot.position, 0.0, np.array(spec.extent)), spec)
    if fld.cls[start.y, start.x] == CellClass.OBSTACLE:
        m = np.zeros(spec.shape, dtype=bool)
        m[start.y, start.x] = True
        fld.set_class(m, CellClass.FREE, harmonic.FREE_INIT)
    if state.ticks == 0 and cfg.initial_levels > 0:
        harmonic.cascade_initialize(fld, cfg.initial_levels, cfg.initial_sweeps, cfg.workers)
    solve(fld, cfg.sweeps_per_tick, cfg.tol, cfg.workers)
    if state.ticks == 0:
        # before the first move, keep sweeping until descent from the robot reaches the goal
        done = cfg.sweeps_per_tick
        while done < cfg.initial_max_sweeps and not _descends(fld, start):
            n = min(cfg.initial_chunk, cfg.initial_max_sweeps - done)
            solve(fld, n, cfg.tol, cfg.workers)
            done += n
    state.ticks += 1
    idx = build_index_matrix(fld)
    try:
        raw = extract_path(idx, fld, start)
    except (NoPath, InvalidStart):
        state.current_path = None
        return state, None
    path = relax_path(raw, fld, cfg.rb_iterations, cfg.rb_step, cfg.k_t)
    state.current_path = path
    q = spec.world_to_grid(robot.position)
    d = np.hypot(*(path.waypoints - q).T)
    ahead = np.nonzero(d >= cfg.lookahead_cells)[0]
    target = path.waypoints[ahead[0]] if len(ahead) else path.waypoints[-1]
    return state, spec.grid_to_world(target)
