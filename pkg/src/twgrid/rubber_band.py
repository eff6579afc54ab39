"""Rubber-band smoothing of a descent path over the harmonic potential.

Each interior waypoint feels a spring pull towards its two neighbors and a
potential force that resists moves towards higher potential. A waypoint
moves to whichever of its current position or eight compass candidates
gives the smallest resultant, sweeping the band from start to goal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import SingularPotential
from .grid import PathPolyline
from ._jit import CACHE as _CACHE
from .harmonic import PotentialField

SINGULAR_EPS = 1e-9
_H = math.sqrt(0.5)
COMPASS = np.array([(1.0, 0.0), (_H, _H), (0.0, 1.0), (-_H, _H),
                    (-1.0, 0.0), (-_H, -_H), (0.0, -1.0), (_H, -_H)])


@dataclass(frozen=True)
class ForceBalance:
    tension_prev: np.ndarray
    tension_next: np.ndarray
    potential_force: np.ndarray
    resultant: np.ndarray


def tension(path: PathPolyline, i: int, k_t: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """Zero-rest-length spring pulls on waypoint ``i`` from its two neighbors."""
    if not 0 < i < len(path) - 1:
        raise IndexError(f"waypoint {i} is an endpoint or out of range")
    w = path.waypoints
    return k_t * (w[i - 1] - w[i]), k_t * (w[i + 1] - w[i])


@njit(cache=_CACHE)
def _bilinear(buf, qx, qy):
    # buf is padded by one ring of 1s; grid coord q maps to padded q + 1
    px = min(max(qx + 1.0, 0.0), buf.shape[1] - 1.0)
    py = min(max(qy + 1.0, 0.0), buf.shape[0] - 1.0)
    x0 = min(int(math.floor(px)), buf.shape[1] - 2)
    y0 = min(int(math.floor(py)), buf.shape[0] - 2)
    fx = px - x0
    fy = py - y0
    top = buf[y0, x0] * (1.0 - fx) + buf[y0, x0 + 1] * fx
    bot = buf[y0 + 1, x0] * (1.0 - fx) + buf[y0 + 1, x0 + 1] * fx
    return top * (1.0 - fy) + bot * fy


def interpolate_phi(field: PotentialField, q) -> float:
    """Bilinear potential at grid coordinate ``q`` (cells outside count as 1)."""
    return float(_bilinear(field.padded_phi, float(q[0]), float(q[1])))


def potential_force(field: PotentialField, current, candidate) -> float:
    """Scalar force ``1/(1 - phi(candidate)) - 1/(1 - phi(current))``.

    Positive when the candidate sits higher on the potential. Acting on a
    move it points back along ``current - candidate``.
    """
    pc = interpolate_phi(field, current)
    pn = interpolate_phi(field, candidate)
    if pc >= 1.0 - SINGULAR_EPS or pn >= 1.0 - SINGULAR_EPS:
        raise SingularPotential("phi reaches 1 at the current or candidate position")
    return 1.0 / (1.0 - pn) - 1.0 / (1.0 - pc)


def force_balance(path: PathPolyline, field: PotentialField, i: int, candidate,
                  k_t: float = 1.0) -> ForceBalance:
    """All forces on waypoint ``i`` if it were moved to ``candidate``."""
    if not 0 < i < len(path) - 1:
        raise IndexError(f"waypoint {i} is an endpoint or out of range")
    w = path.waypoints
    cand = np.asarray(candidate, dtype=float)
    t_prev = k_t * (w[i - 1] - cand)
    t_next = k_t * (w[i + 1] - cand)
    move = cand - w[i]
    n = float(np.hypot(*move))
    f_vec = np.zeros(2)
    if n > 0.0:
        f_vec = -potential_force(field, w[i], cand) * move / n
    return ForceBalance(t_prev, t_next, f_vec, f_vec + t_prev + t_next)


@njit(cache=_CACHE)
def _relax_kernel(w, buf, cls, iterations, step, k_t, eps, compass):
    n = w.shape[0]
    h, wd = cls.shape
    for _ in range(iterations):
        moved = False
        for i in range(1, n - 1):
            cx, cy = w[i, 0], w[i, 1]
            pc = _bilinear(buf, cx, cy)
            if pc >= 1.0 - eps:
                continue
            inv_c = 1.0 / (1.0 - pc)
            ax, ay = w[i - 1, 0], w[i - 1, 1]
            bx, by = w[i + 1, 0], w[i + 1, 1]
            rx = k_t * (ax - cx) + k_t * (bx - cx)
            ry = k_t * (ay - cy) + k_t * (by - cy)
            best = math.sqrt(rx * rx + ry * ry)
            best_k = -1
            for k in range(compass.shape[0]):
                ux, uy = compass[k, 0], compass[k, 1]
                qx = cx + step * ux
                qy = cy + step * uy
                gx = int(math.floor(qx + 0.5))
                gy = int(math.floor(qy + 0.5))
                if gx < 0 or gy < 0 or gx >= wd or gy >= h or cls[gy, gx] == 2:
                    continue
                pq = _bilinear(buf, qx, qy)
                if pq >= 1.0 - eps:
                    continue
                f = 1.0 / (1.0 - pq) - inv_c
                tx = k_t * (ax - qx) + k_t * (bx - qx) - f * ux
                ty = k_t * (ay - qy) + k_t * (by - qy) - f * uy
                r = math.sqrt(tx * tx + ty * ty)
                if r < best:
                    best = r
                    best_k = k
            if best_k >= 0:
                w[i, 0] = cx + step * compass[best_k, 0]
                w[i, 1] = cy + step * compass[best_k, 1]
                moved = True
        if not moved:
            # a pass without moves is a fixed point; further passes would repeat it
            break


@njit(cache=_CACHE)
def _resample_kernel(w, cls, max_gap, out):
    h, wd = cls.shape
    out[0, 0], out[0, 1] = w[0, 0], w[0, 1]
    n = 1
    for i in range(w.shape[0] - 1):
        ax, ay = w[i, 0], w[i, 1]
        dx, dy = w[i + 1, 0] - ax, w[i + 1, 1] - ay
        pieces = int(math.ceil(math.sqrt(dx * dx + dy * dy) / max_gap - 1e-12))
        for j in range(1, pieces):
            px = ax + dx * (j / pieces)
            py = ay + dy * (j / pieces)
            gx = int(math.floor(px + 0.5))
            gy = int(math.floor(py + 0.5))
            if 0 <= gx < wd and 0 <= gy < h and cls[gy, gx] == 2:
                continue
            out[n, 0], out[n, 1] = px, py
            n += 1
        out[n, 0], out[n, 1] = w[i + 1, 0], w[i + 1, 1]
        n += 1
    return n


def resample(path: PathPolyline, field: PotentialField, max_gap: float = 1.0) -> PathPolyline:
    """Subdivide segments longer than ``max_gap`` cells; skips points in obstacle cells."""
    w = np.ascontiguousarray(path.waypoints, dtype=float)
    if len(w) < 2:
        return PathPolyline(w.copy())
    gaps = np.hypot(*np.diff(w, axis=0).T)
    cap = len(w) + int(np.sum(np.ceil(gaps / max_gap))) + 1
    out = np.empty((cap, 2))
    n = _resample_kernel(w, field.cls, float(max_gap), out)
    return PathPolyline(out[:n].copy())


def relax_path(path: PathPolyline, field: PotentialField, iterations: int = 50,
               step: float = 0.25, k_t: float = 1.0) -> PathPolyline:
    """Return a smoothed copy of ``path``; endpoints are left bit-identical."""
    if iterations <= 0 or len(path) < 3:
        return PathPolyline(path.waypoints.copy())
    w = np.ascontiguousarray(path.waypoints, dtype=float).copy()
    _relax_kernel(w, field.padded_phi, field.cls, int(iterations), float(step), float(k_t),
                  SINGULAR_EPS, COMPASS)
    return resample(PathPolyline(w), field)
