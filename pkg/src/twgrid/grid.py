"""Occupancy-grid geometry shared by the solver, planner and simulator.

Arrays indexed by cell are always laid out ``[y, x]`` (row, column).
Continuous "grid coordinates" put the center of cell ``(x, y)`` at the
point ``(x, y)``; world coordinates are meters.
"""

from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import OutOfBounds

# floor() guard against 0.3 / 0.1 == 2.9999999999999996
_BIN_EPS = 1e-9


class CellIndex(NamedTuple):
    x: int
    y: int


class CellClass(enum.IntEnum):
    FREE = 0
    GOAL = 1
    OBSTACLE = 2


@dataclass(frozen=True)
class GridSpec:
    """Uniform square-cell grid anchored at ``origin`` (corner of cell (0, 0))."""

    width_cells: int
    height_cells: int
    cell_size: float = 0.1
    origin: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if self.width_cells <= 0 or self.height_cells <= 0:
            raise ValueError("grid dimensions must be positive")
        if not self.cell_size > 0:
            raise ValueError("cell_size must be positive")

    @classmethod
    def from_extent(cls, width_m: float, height_m: float, cell_size: float = 0.1,
                    origin: tuple[float, float] = (0.0, 0.0)) -> GridSpec:
        return cls(int(round(width_m / cell_size)), int(round(height_m / cell_size)),
                   cell_size, origin)

    @property
    def shape(self) -> tuple[int, int]:
        """Array shape ``(height, width)``."""
        return (self.height_cells, self.width_cells)

    @property
    def extent(self) -> tuple[float, float]:
        return (self.width_cells * self.cell_size, self.height_cells * self.cell_size)

    @property
    def diagonal(self) -> float:
        return math.hypot(*self.extent)

    def in_bounds(self, c) -> bool:
        return 0 <= c[0] < self.width_cells and 0 <= c[1] < self.height_cells

    def contains(self, p) -> bool:
        w, h = self.extent
        u, v = p[0] - self.origin[0], p[1] - self.origin[1]
        return 0.0 <= u <= w and 0.0 <= v <= h

    def cell_center(self, c) -> np.ndarray:
        return np.array([self.origin[0] + (c[0] + 0.5) * self.cell_size,
                         self.origin[1] + (c[1] + 0.5) * self.cell_size])

    def world_to_grid(self, p) -> np.ndarray:
        """World meters to continuous grid coordinates (cell centers at integers)."""
        p = np.asarray(p, dtype=float)
        return (p - np.asarray(self.origin)) / self.cell_size - 0.5

    def grid_to_world(self, q) -> np.ndarray:
        q = np.asarray(q, dtype=float)
        return (q + 0.5) * self.cell_size + np.asarray(self.origin)

    def cell_centers(self) -> tuple[np.ndarray, np.ndarray]:
        """Meshgrid ``(X, Y)`` of world-space cell centers, each shaped ``self.shape``."""
        xs = self.origin[0] + (np.arange(self.width_cells) + 0.5) * self.cell_size
        ys = self.origin[1] + (np.arange(self.height_cells) + 0.5) * self.cell_size
        return np.meshgrid(xs, ys)


def world_to_cell(p, spec: GridSpec) -> CellIndex:
    """Return the cell containing world point ``p``.

    Cells are half-open ``[i, i + 1)`` in grid units, so a point on a shared
    edge falls in the cell whose lower edge it is. The far edge of the extent
    is folded into the last cell.
    """
    if not spec.contains(p):
        raise OutOfBounds(f"point {tuple(p)} outside grid extent {spec.extent}")
    u = (p[0] - spec.origin[0]) / spec.cell_size
    v = (p[1] - spec.origin[1]) / spec.cell_size
    x = min(int(math.floor(u + _BIN_EPS)), spec.width_cells - 1)
    y = min(int(math.floor(v + _BIN_EPS)), spec.height_cells - 1)
    return CellIndex(x, y)


def rasterize_segment(a, b, spec: GridSpec) -> set[CellIndex]:
    """Supercover of segment ``ab``: every cell whose closed square it touches.

    The result is 4-connected, so a rasterized wall cannot be crossed by a
    4-neighbor walk even where the segment passes exactly through a corner.
    """
    if not spec.contains(a):
        raise OutOfBounds(f"endpoint {tuple(a)} outside grid extent")
    if not spec.contains(b):
        raise OutOfBounds(f"endpoint {tuple(b)} outside grid extent")
    ox, oy = spec.origin
    s = spec.cell_size
    # grid units where cell i spans [i, i + 1]
    x0, y0 = (a[0] - ox) / s, (a[1] - oy) / s
    x1, y1 = (b[0] - ox) / s, (b[1] - oy) / s
    if (x1, y1) < (x0, y0):
        x0, y0, x1, y1 = x1, y1, x0, y0

    cells: set[CellIndex] = set()
    W, H = spec.width_cells, spec.height_cells

    def add_column(i: int, ylo: float, yhi: float) -> None:
        if not 0 <= i < W:
            return
        jlo = max(math.ceil(ylo) - 1, 0)
        jhi = min(math.floor(yhi), H - 1)
        for j in range(jlo, jhi + 1):
            cells.add(CellIndex(i, j))

    if x1 == x0:
        lo, hi = min(y0, y1), max(y0, y1)
        for i in range(math.ceil(x0) - 1, math.floor(x0) + 1):
            add_column(i, lo, hi)
        return cells

    slope = (y1 - y0) / (x1 - x0)
    for i in range(math.ceil(x0) - 1, math.floor(x1) + 1):
        xa, xb = max(x0, float(i)), min(x1, float(i + 1))
        if xa > xb:
            continue
        ya, yb = y0 + (xa - x0) * slope, y0 + (xb - x0) * slope
        add_column(i, min(ya, yb), max(ya, yb))
    return cells


# [+x, -x, +y, -y]; this order is the tie-break order everywhere downstream
NEIGHBOR_OFFSETS = ((1, 0), (-1, 0), (0, 1), (0, -1))


def neighbors4(c, spec: GridSpec) -> list[CellIndex]:
    out = []
    for dx, dy in NEIGHBOR_OFFSETS:
        n = CellIndex(c[0] + dx, c[1] + dy)
        if spec.in_bounds(n):
            out.append(n)
    return out


def cells_to_mask(cells, spec: GridSpec) -> np.ndarray:
    """Boolean ``[y, x]`` mask from an iterable of cells or an existing mask."""
    if isinstance(cells, np.ndarray) and cells.dtype == bool:
        if cells.shape != spec.shape:
            raise ValueError(f"mask shape {cells.shape} != grid shape {spec.shape}")
        return cells.copy()
    mask = np.zeros(spec.shape, dtype=bool)
    for c in cells:
        if not spec.in_bounds(c):
            raise OutOfBounds(f"cell {tuple(c)} outside grid")
        mask[c[1], c[0]] = True
    return mask


@functools.lru_cache(maxsize=64)
def disk_offsets(radius_cells: float) -> np.ndarray:
    """Integer ``(dx, dy)`` offsets whose distance from the origin is <= radius (read-only)."""
    r = int(math.floor(radius_cells + 1e-9))
    d = np.arange(-r, r + 1)
    dx, dy = np.meshgrid(d, d)
    keep = dx * dx + dy * dy <= radius_cells * radius_cells + 1e-9
    out = np.stack([dx[keep], dy[keep]], axis=1)
    out.flags.writeable = False
    return out


def stamp_disks(mask: np.ndarray, centers: np.ndarray, radius_cells: float) -> None:
    """Set ``mask`` True over disks of ``radius_cells`` around integer cell centers."""
    if len(centers) == 0:
        return
    off = disk_offsets(radius_cells)
    pts = (centers[:, None, :] + off[None, :, :]).reshape(-1, 2)
    H, W = mask.shape
    ok = (pts[:, 0] >= 0) & (pts[:, 0] < W) & (pts[:, 1] >= 0) & (pts[:, 1] < H)
    pts = pts[ok]
    mask[pts[:, 1], pts[:, 0]] = True


@dataclass
class PathPolyline:
    """Ordered waypoints in continuous grid coordinates, shape ``(n, 2)``.

    The first waypoint is the robot cell and the last is the goal cell;
    smoothing never moves either.
    """

    waypoints: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))

    def __post_init__(self):
        self.waypoints = np.asarray(self.waypoints, dtype=float).reshape(-1, 2)

    def __len__(self) -> int:
        return len(self.waypoints)

    @classmethod
    def from_cells(cls, cells) -> PathPolyline:
        return cls(np.array([(c[0], c[1]) for c in cells], dtype=float))

    def length(self) -> float:
        """Total length in cell units."""
        if len(self) < 2:
            return 0.0
        return float(np.sum(np.linalg.norm(np.diff(self.waypoints, axis=0), axis=1)))

    def turning_angles(self) -> np.ndarray:
        """Absolute heading change (radians) at each interior vertex."""
        return polyline_turning_angles(self.waypoints)

    def to_world(self, spec: GridSpec) -> np.ndarray:
        return spec.grid_to_world(self.waypoints)


def polyline_turning_angles(points: np.ndarray) -> np.ndarray:
    """Absolute heading change at each interior vertex of a polyline, in radians.

    Zero-length segments inherit the previous segment's heading.
    """
    pts = np.asarray(points, dtype=float)
    if len(pts) < 3:
        return np.zeros(0)
    seg = np.diff(pts, axis=0)
    heading = np.arctan2(seg[:, 1], seg[:, 0])
    still = np.hypot(seg[:, 0], seg[:, 1]) == 0.0
    for i in range(1, len(heading)):
        if still[i]:
            heading[i] = heading[i - 1]
    d = np.diff(heading)
    return np.abs((d + np.pi) % (2 * np.pi) - np.pi)
