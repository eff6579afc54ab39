"""Trial outcome records and trajectory statistics."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import TooShort
from ..grid import polyline_turning_angles

BIN_DEG = 5.0
BIN_EDGES = np.arange(0.0, 180.0 + BIN_DEG, BIN_DEG)


class Outcome(str, enum.Enum):
    SUCCESS = "success"
    COLLISION = "collision"
    TIMEOUT = "timeout"


@dataclass
class TrialMetrics:
    """Per-trial summary.

    ``path_length_cm`` is the traversed polyline plus, on success, the short
    leg from the final pose to the goal point.
    """

    scenario: str
    obstacles: int
    seed: int
    outcome: Outcome
    path_length_cm: float
    ticks_elapsed: int
    turning_angles_deg: list[float] = field(default_factory=list, repr=False)

    @property
    def max_turn_deg(self) -> float:
        return max(self.turning_angles_deg, default=0.0)

    def csv_row(self) -> list[str]:
        return [self.scenario, str(self.obstacles), str(self.seed), self.outcome.value,
                f"{self.path_length_cm:.3f}", str(self.ticks_elapsed), f"{self.max_turn_deg:.3f}"]


CSV_COLUMNS = ["scenario", "obstacles", "seed", "outcome", "length_cm", "ticks", "max_turn_deg"]


def path_length_cm(trajectory: np.ndarray) -> float:
    pts = np.asarray(trajectory, dtype=float)
    if len(pts) < 2:
        return 0.0
    return 100.0 * float(np.sum(np.hypot(*np.diff(pts, axis=0).T)))


def turning_angles_deg(trajectory: np.ndarray) -> np.ndarray:
    pts = np.asarray(trajectory, dtype=float)
    if len(pts) < 3:
        raise TooShort("need at least 3 points for a turning angle")
    return np.degrees(polyline_turning_angles(pts))


def turning_angle_histogram(trajectory: np.ndarray) -> np.ndarray:
    """Counts of per-vertex heading change in 5-degree bins over [0, 180]; sums to ``len - 2``.

    Bins are half-open ``[lo, hi)`` except the last, which also holds 180.
    """
    ang = turning_angles_deg(trajectory)
    idx = np.minimum(np.floor(ang / BIN_DEG + 1e-9).astype(int), len(BIN_EDGES) - 2)
    return np.bincount(idx, minlength=len(BIN_EDGES) - 1)


def histogram_from_angles(angles_deg) -> np.ndarray:
    ang = np.asarray(angles_deg, dtype=float)
    idx = np.minimum(np.floor(ang / BIN_DEG + 1e-9).astype(int), len(BIN_EDGES) - 2)
    return np.bincount(idx, minlength=len(BIN_EDGES) - 1)


def is_simple(polyline: np.ndarray, tol: float = 1e-9) -> bool:
    """True if no two non-adjacent segments of the polyline intersect."""
    p = np.asarray(polyline, dtype=float)
    if len(p) < 4:
        return True
    a, b = p[:-1], p[1:]
    lo = np.minimum(a, b)
    hi = np.maximum(a, b)
    order = np.argsort(lo[:, 0], kind="stable")
    for ii, i in enumerate(order):
        for j in order[ii + 1:]:
            if lo[j, 0] > hi[i, 0] + tol:
                break
            if abs(int(i) - int(j)) <= 1:
                continue
            if lo[j, 1] > hi[i, 1] + tol or lo[i, 1] > hi[j, 1] + tol:
                continue
            if _segments_cross(a[i], b[i], a[j], b[j]):
                return False
    return True


def _segments_cross(p1, p2, q1, q2) -> bool:
    def orient(a, b, c):
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
    d1, d2 = orient(q1, q2, p1), orient(q1, q2, p2)
    d3, d4 = orient(p1, p2, q1), orient(p1, p2, q2)
    return (d1 * d2 < 0) and (d3 * d4 < 0)


def success_rate(rows) -> float:
    rows = list(rows)
    if not rows:
        return math.nan
    return 100.0 * sum(r.outcome == Outcome.SUCCESS for r in rows) / len(rows)
