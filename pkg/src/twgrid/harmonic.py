"""Harmonic potential over the occupancy grid and its steepest-descent pointers.

Goal cells are pinned at 0, obstacle cells at 1 and cells outside the grid
count as obstacles. Free cells relax towards the mean of their four
neighbors with a red-black (checkerboard) Gauss-Seidel sweep, which keeps
the in-place propagation of a sequential sweep while every cell of one
color can be updated independently. The neighbor sum is always formed as
``(east + west) + (north + south)`` so that mirror-symmetric maps give
bit-symmetric fields.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numba
import numpy as np
from numba import njit, prange

from ._jit import CACHE as _CACHE
from .errors import InvalidStart, NoPath, OverlappingClasses
from .grid import NEIGHBOR_OFFSETS, CellClass, CellIndex, GridSpec, PathPolyline, cells_to_mask

FREE_INIT = 0.5



@njit(cache=_CACHE)
def _row_update_res(t, f, s0, sn, ss, off):
    m = 0.0
    for j in range(1 - off, t.shape[0] - off):
        if f[j]:
            v = ((s0[j + off] + s0[j + off - 1]) + (sn[j] + ss[j])) * 0.25
            d = abs(v - t[j])
            if d > m:
                m = d
            t[j] = v
    return m


@njit(parallel=True, cache=_CACHE)
def _red_black_sweeps(R, B, FR, FB, n, tol):
    """Run up to ``n`` red-black sweeps on the split layout; returns (sweeps, residual).

    ``R``/``B`` hold the padded field's even/odd-parity cells: cell (X, Y) with
    (X + Y) even lives at ``R[Y, X // 2]``, odd ones at ``B[Y, X // 2]``.
    The residual is only measured when ``tol > 0`` or on the last sweep.
    """
    hp, w2 = R.shape
    rowmax = np.zeros((2, hp))
    res = 0.0
    done = 0
    for s in range(n):
        want = tol > 0.0 or s == n - 1
        for color in range(2):
            T = R if color == 0 else B
            S = B if color == 0 else R
            F = FR if color == 0 else FB
            for y in prange(1, hp - 1):
                off = (y + color) & 1
                t = T[y]
                f = F[y]
                s0 = S[y]
                sn = S[y + 1]
                ss = S[y - 1]
                if want:
                    rowmax[color, y] = _row_update_res(t, f, s0, sn, ss, off)
                elif off == 0:
                    for j in range(1, w2):
                        v = ((s0[j] + s0[j - 1]) + (sn[j] + ss[j])) * 0.25
                        t[j] = v if f[j] else t[j]
                else:
                    for j in range(0, w2 - 1):
                        v = ((s0[j + 1] + s0[j]) + (sn[j] + ss[j])) * 0.25
                        t[j] = v if f[j] else t[j]
        done += 1
        if want:
            res = rowmax.max()
            if res < tol:
                break
    return done, res


def _split(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    R = np.empty((a.shape[0], a.shape[1] // 2), dtype=a.dtype)
    B = np.empty_like(R)
    R[0::2], R[1::2] = a[0::2, 0::2], a[1::2, 1::2]
    B[0::2], B[1::2] = a[0::2, 1::2], a[1::2, 0::2]
    return R, B


def _merge(a: np.ndarray, R: np.ndarray, B: np.ndarray) -> None:
    a[0::2, 0::2], a[1::2, 1::2] = R[0::2], R[1::2]
    a[0::2, 1::2], a[1::2, 0::2] = B[0::2], B[1::2]


def set_workers(n: int | None) -> None:
    """Set the number of threads used by the parallel sweep (None = all)."""
    if n is None:
        n = numba.config.NUMBA_NUM_THREADS
    numba.set_num_threads(max(1, min(int(n), numba.config.NUMBA_NUM_THREADS)))


def _padded_width(w: int) -> int:
    # one ring of boundary cells, plus a spare column when needed to make the width even
    return w + 2 + (w & 1)


@dataclass
class PotentialField:
    """Discretized harmonic potential with fixed goal/obstacle cells.

    ``phi`` is a view into a padded buffer whose outer ring is pinned at 1,
    so the grid boundary behaves as a wall. Use :meth:`set_class` rather than
    writing ``cls`` directly so the pinned values stay consistent.
    """

    spec: GridSpec
    cls: np.ndarray
    k: int = 0
    _buf: np.ndarray = field(default=None, repr=False)
    residual: float = float("nan")

    def __post_init__(self):
        if self._buf is None:
            h, w = self.spec.shape
            self._buf = np.ones((h + 2, _padded_width(w)))
            self.phi[...] = FREE_INIT
            self.phi[self.cls == CellClass.GOAL] = 0.0
            self.phi[self.cls == CellClass.OBSTACLE] = 1.0

    @property
    def phi(self) -> np.ndarray:
        return self._buf[1:-1, 1:self.spec.width_cells + 1]

    @property
    def padded_phi(self) -> np.ndarray:
        return self._buf

    def free_mask(self) -> np.ndarray:
        return self.cls == CellClass.FREE

    def goal_mask(self) -> np.ndarray:
        return self.cls == CellClass.GOAL

    def obstacle_mask(self) -> np.ndarray:
        return self.cls == CellClass.OBSTACLE

    def set_class(self, mask: np.ndarray, klass: CellClass, value: float | None = None) -> None:
        """Reclassify cells under ``mask``; free cells get ``value`` (default: unchanged)."""
        self.cls[mask] = klass
        if klass == CellClass.GOAL:
            self.phi[mask] = 0.0
        elif klass == CellClass.OBSTACLE:
            self.phi[mask] = 1.0
        elif value is not None:
            self.phi[mask] = value

    def copy(self) -> PotentialField:
        return PotentialField(self.spec, self.cls.copy(), self.k, self._buf.copy(), self.residual)

    def padded_free(self) -> np.ndarray:
        h, w = self.spec.shape
        free = np.zeros(self._buf.shape, dtype=np.bool_)
        free[1:-1, 1:w + 1] = self.cls == CellClass.FREE
        return free


def initialize_field(spec: GridSpec, goal_cells=(), obstacle_cells=()) -> PotentialField:
    """Goal cells at 0, obstacle cells at 1, everything else at 0.5."""
    goal = cells_to_mask(goal_cells, spec)
    obst = cells_to_mask(obstacle_cells, spec)
    if np.any(goal & obst):
        y, x = np.argwhere(goal & obst)[0]
        raise OverlappingClasses(f"cell {(int(x), int(y))} is both goal and obstacle")
    cls = np.full(spec.shape, CellClass.FREE, dtype=np.int8)
    cls[goal] = CellClass.GOAL
    cls[obst] = CellClass.OBSTACLE
    return PotentialField(spec, cls)


def reset_free(field: PotentialField, value: float = FREE_INIT) -> PotentialField:
    """Clear relaxed values: every free cell back to ``value``."""
    field.phi[field.free_mask()] = value
    return field


def _run_sweeps(field: PotentialField, n: int, tol: float) -> float:
    R, B = _split(field._buf)
    FR, FB = _split(field.padded_free())
    done, res = _red_black_sweeps(R, B, FR, FB, int(n), float(tol))
    _merge(field._buf, R, B)
    field.k += int(done)
    return float(res)


def relax_sweep(field: PotentialField, workers: int | None = None) -> tuple[PotentialField, float]:
    """One red-black Gauss-Seidel sweep, in place.

    Returns the field and the largest absolute change over free cells. The
    result does not depend on the number of worker threads.
    """
    if workers is not None:
        set_workers(workers)
    res = _run_sweeps(field, 1, 0.0)
    return field, res


def relax_sweep_numpy(field: PotentialField) -> tuple[PotentialField, float]:
    """Vectorized numpy red-black sweep; bit-identical to :func:`relax_sweep`."""
    buf = field._buf
    free = field.padded_free()
    yy, xx = np.indices(buf.shape)
    parity = (xx + yy) & 1
    res = 0.0
    for color in (0, 1):
        m = free & (parity == color)
        east, west = np.roll(buf, -1, axis=1), np.roll(buf, 1, axis=1)
        north, south = np.roll(buf, -1, axis=0), np.roll(buf, 1, axis=0)
        v = ((east + west) + (north + south)) * 0.25
        if m.any():
            res = max(res, float(np.max(np.abs(v[m] - buf[m]))))
        buf[m] = v[m]
    field.k += 1
    return field, res


def jacobi_sweep(field: PotentialField) -> tuple[PotentialField, float]:
    """Plain Jacobi sweep (every free cell from the previous iterate)."""
    buf = field._buf
    free = field.padded_free()
    v = np.empty_like(buf)
    v[1:-1, 1:-1] = ((buf[1:-1, 2:] + buf[1:-1, :-2]) + (buf[2:, 1:-1] + buf[:-2, 1:-1])) * 0.25
    res = float(np.max(np.abs(v[free] - buf[free]))) if free.any() else 0.0
    buf[free] = v[free]
    field.k += 1
    return field, res


def solve(field: PotentialField, max_sweeps: int = 100, tol: float = 0.0,
          workers: int | None = None) -> PotentialField:
    """Run sweeps until ``max_sweeps`` or the residual drops below ``tol``.

    ``tol = 0`` never exits early, so the default performs exactly 100 sweeps.
    """
    if max_sweeps <= 0:
        return field
    if workers is not None:
        set_workers(workers)
    field.residual = _run_sweeps(field, max_sweeps, tol)
    return field


@dataclass
class IndexMatrix:
    """Per-cell pointer to the lowest 4-neighbor.

    ``direction[y, x]`` indexes :data:`NEIGHBOR_OFFSETS`; -1 marks goal and
    obstacle cells, which have no successor.
    """

    spec: GridSpec
    direction: np.ndarray

    def next(self, c) -> CellIndex | None:
        d = int(self.direction[c[1], c[0]])
        if d < 0:
            return None
        dx, dy = NEIGHBOR_OFFSETS[d]
        return CellIndex(c[0] + dx, c[1] + dy)


@njit(cache=_CACHE)
def _index_kernel(buf, cls, out):
    h, w = cls.shape
    for y in range(h):
        for x in range(w):
            if cls[y, x] != 0:
                out[y, x] = -1
                continue
            Y, X = y + 1, x + 1
            # order matches NEIGHBOR_OFFSETS; strict < keeps the first minimum on ties
            best = buf[Y, X + 1] if x + 1 < w else np.inf
            d = 0
            v = buf[Y, X - 1] if x > 0 else np.inf
            if v < best:
                best, d = v, 1
            v = buf[Y + 1, X] if y + 1 < h else np.inf
            if v < best:
                best, d = v, 2
            v = buf[Y - 1, X] if y > 0 else np.inf
            if v < best:
                best, d = v, 3
            out[y, x] = d


def build_index_matrix_numpy(field: PotentialField) -> IndexMatrix:
    """Reference implementation of :func:`build_index_matrix` via ``argmin``."""
    phi = field.phi
    h, w = field.spec.shape
    cand = np.full((4, h, w), np.inf)
    cand[0, :, :-1] = phi[:, 1:]    # +x
    cand[1, :, 1:] = phi[:, :-1]    # -x
    cand[2, :-1, :] = phi[1:, :]    # +y
    cand[3, 1:, :] = phi[:-1, :]    # -y
    direction = np.argmin(cand, axis=0).astype(np.int8)   # first minimum wins ties
    direction[field.cls != CellClass.FREE] = -1
    return IndexMatrix(field.spec, direction)


def build_index_matrix(field: PotentialField) -> IndexMatrix:
    """Point every free cell at its lowest 4-neighbor; ties go to the earlier of +x, -x, +y, -y."""
    out = np.empty(field.spec.shape, dtype=np.int8)
    _index_kernel(field._buf, field.cls, out)
    return IndexMatrix(field.spec, out)


_OFFS = np.array(NEIGHBOR_OFFSETS, dtype=np.int64)

# _descend status codes
_REACHED, _TOO_LONG, _DEAD_END, _CYCLE, _HIT = 0, 1, 2, 3, 4


@njit(cache=_CACHE)
def _descend(direction, cls, offs, x, y, max_len, out):
    h, w = cls.shape
    seen = np.zeros((h, w), dtype=np.bool_)
    n = 0
    out[n, 0], out[n, 1] = x, y
    n += 1
    seen[y, x] = True
    while cls[y, x] != 1:
        if n >= max_len:
            return n, _TOO_LONG
        d = direction[y, x]
        if d < 0:
            return n, _DEAD_END
        x += offs[d, 0]
        y += offs[d, 1]
        if seen[y, x]:
            return n, _CYCLE
        if cls[y, x] == 2:
            return n, _HIT
        seen[y, x] = True
        out[n, 0], out[n, 1] = x, y
        n += 1
    return n, _REACHED


def extract_path(idx: IndexMatrix, field: PotentialField, start, max_len: int | None = None) -> PathPolyline:
    """Follow index pointers from ``start`` to the goal.

    Raises :class:`NoPath` on a revisit, a dead end or after ``max_len``
    cells without reaching the goal.
    """
    spec = field.spec
    if max_len is None:
        max_len = spec.width_cells * spec.height_cells
    c = CellIndex(int(start[0]), int(start[1]))
    if not spec.in_bounds(c):
        raise InvalidStart(f"start {tuple(c)} outside grid")
    if field.cls[c.y, c.x] == CellClass.OBSTACLE:
        raise InvalidStart(f"start {tuple(c)} is an obstacle cell")
    out = np.empty((max_len + 1, 2), dtype=np.int64)
    n, status = _descend(idx.direction, field.cls, _OFFS, c.x, c.y, int(max_len), out)
    if status != _REACHED:
        last = tuple(int(v) for v in out[n - 1])
        reason = {_TOO_LONG: f"no goal within {max_len} cells", _DEAD_END: f"dead end at {last}",
                  _CYCLE: f"cycle after {last}", _HIT: f"descent ran into an obstacle after {last}"}
        raise NoPath(reason[status])
    return PathPolyline(out[:n].astype(float))


def coarsen(field: PotentialField) -> PotentialField:
    """Half-resolution copy: a coarse cell is goal if any child is, obstacle if two or more are.

    Cells beyond an odd edge count as obstacle, like the outside of the grid.
    """
    spec = field.spec
    h, w = spec.shape
    H, W = (h + 1) // 2, (w + 1) // 2
    cls = np.full((2 * H, 2 * W), CellClass.OBSTACLE, dtype=np.int8)
    cls[:h, :w] = field.cls
    blocks = cls.reshape(H, 2, W, 2)
    n_obst = np.sum(blocks == CellClass.OBSTACLE, axis=(1, 3))
    any_goal = np.any(blocks == CellClass.GOAL, axis=(1, 3))
    ccls = np.full((H, W), CellClass.FREE, dtype=np.int8)
    ccls[n_obst >= 2] = CellClass.OBSTACLE
    ccls[any_goal] = CellClass.GOAL
    return PotentialField(GridSpec(W, H, 2.0 * spec.cell_size, spec.origin), ccls)


def cascade_initialize(field: PotentialField, levels: int = 4, sweeps: int = 200,
                       workers: int | None = None) -> PotentialField:
    """Coarse-to-fine starting guess: solve a coarser copy first, then sweep.

    Free cells are overwritten with the prolonged coarse solution before
    ``sweeps`` fine sweeps. Only the iterate changes; the fixed point is the
    same harmonic field, reached in far fewer sweeps on large grids.
    """
    h, w = field.spec.shape
    if levels > 0 and min(h, w) >= 16:
        coarse = cascade_initialize(coarsen(field), levels - 1, sweeps, workers)
        up = np.repeat(np.repeat(coarse.phi, 2, axis=0), 2, axis=1)[:h, :w]
        free = field.free_mask()
        field.phi[free] = up[free]
    return solve(field, sweeps, 0.0, workers)
