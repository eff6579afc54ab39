"""Constant-velocity Kalman tracking of moving obstacles.

State is ``(x, y, vx, vy)`` in meters and m/s; only position is measured.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterator, NamedTuple, Sequence

import numpy as np

from .errors import SingularInnovation


@dataclass(frozen=True)
class KalmanModel:
    A: np.ndarray
    H: np.ndarray
    Q: np.ndarray
    R: np.ndarray
    dt: float
    # obstacles receive no control input; kept for completeness of the linear model
    B: np.ndarray = field(default_factory=lambda: np.zeros((4, 1)))

    @classmethod
    def constant_velocity(cls, dt: float = 0.1, q: float = 1e-3, sigma_z: float = 0.05) -> KalmanModel:
        A = np.eye(4)
        A[0, 2] = A[1, 3] = dt
        H = np.zeros((2, 4))
        H[0, 0] = H[1, 1] = 1.0
        Q = q * np.diag([dt**4 / 4, dt**4 / 4, dt**2, dt**2])
        R = sigma_z**2 * np.eye(2)
        return cls(A, H, Q, R, dt)


@dataclass
class ObstacleTrack:
    id: int
    x_hat: np.ndarray
    P: np.ndarray
    age: int = 1
    missed: int = 0

    @property
    def position(self) -> np.ndarray:
        return self.x_hat[:2]

    @property
    def velocity(self) -> np.ndarray:
        return self.x_hat[2:]

    @property
    def speed(self) -> float:
        return float(np.hypot(self.x_hat[2], self.x_hat[3]))


@dataclass(frozen=True)
class Detection:
    z: np.ndarray
    tick: int = 0


def _sym(P: np.ndarray) -> np.ndarray:
    return 0.5 * (P + P.T)


def predict(track: ObstacleTrack, model: KalmanModel, steps: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Propagate ``steps`` ticks ahead without touching ``track``."""
    if steps < 1:
        raise ValueError("steps must be >= 1")
    A, Q = model.A, model.Q
    x, P = track.x_hat.copy(), track.P.copy()
    for _ in range(steps):
        x = A @ x
        P = A @ P @ A.T + Q
    return x, _sym(P)


def advance(track: ObstacleTrack, model: KalmanModel) -> ObstacleTrack:
    """Commit a one-tick prediction to ``track`` (the time update of the filter)."""
    track.x_hat, track.P = predict(track, model, 1)
    track.age += 1
    return track


def update(track: ObstacleTrack, model: KalmanModel, z) -> ObstacleTrack:
    """Measurement update in place; ``z`` is a :class:`Detection` or a 2-vector."""
    zv = np.asarray(z.z if isinstance(z, Detection) else z, dtype=float)
    H, R = model.H, model.R
    P = track.P
    S = H @ P @ H.T + R
    try:
        if not np.all(np.isfinite(S)) or np.linalg.cond(S) > 1e14:
            raise np.linalg.LinAlgError
        K = np.linalg.solve(S, H @ P).T   # S symmetric: K = P H^T S^-1
    except np.linalg.LinAlgError:
        raise SingularInnovation("innovation covariance H P H^T + R is singular") from None
    track.x_hat = track.x_hat + K @ (zv - H @ track.x_hat)
    track.P = _sym((np.eye(P.shape[0]) - K @ H) @ P)
    track.missed = 0
    return track


class Association(NamedTuple):
    pairs: list[tuple[int, int]]          # (track index, detection index)
    unmatched_tracks: list[int]
    unmatched_detections: list[int]


def associate(tracks: Sequence[ObstacleTrack], detections: Sequence[Detection],
              model: KalmanModel, gate: float) -> Association:
    """Greedy global nearest-neighbor matching within ``gate`` meters.

    Tracks are expected to hold this tick's prediction. Unmatched tracks have
    their ``missed`` counter incremented.
    """
    if gate <= 0:
        raise ValueError("gate must be positive")
    nt, nd = len(tracks), len(detections)
    if nt and nd:
        pred = np.array([model.H @ t.x_hat for t in tracks])
        meas = np.array([np.asarray(d.z, dtype=float) for d in detections])
        dist = np.linalg.norm(pred[:, None, :] - meas[None, :, :], axis=2)
        # stable sort on (distance, track, detection) keeps ties deterministic
        order = np.lexsort((np.tile(np.arange(nd), nt), np.repeat(np.arange(nt), nd), dist.ravel()))
    else:
        dist, order = np.zeros((nt, nd)), np.zeros(0, dtype=int)
    used_t, used_d, pairs = set(), set(), []
    for flat in order:
        ti, di = divmod(int(flat), nd)
        if dist[ti, di] > gate:
            break
        if ti in used_t or di in used_d:
            continue
        used_t.add(ti)
        used_d.add(di)
        pairs.append((ti, di))
    unmatched_t = [i for i in range(nt) if i not in used_t]
    for i in unmatched_t:
        tracks[i].missed += 1
    return Association(pairs, unmatched_t, [j for j in range(nd) if j not in used_d])


@dataclass(frozen=True)
class TrackPolicy:
    init_var: tuple[float, float, float, float] = (0.25, 0.25, 1.0, 1.0)
    max_missed: int = 10


def spawn_and_prune(tracks: Sequence[ObstacleTrack], unmatched: Sequence[Detection],
                    policy: TrackPolicy = TrackPolicy(),
                    ids: Iterator[int] | None = None) -> list[ObstacleTrack]:
    """New zero-velocity track per unmatched detection; drop stale tracks."""
    if ids is None:
        ids = itertools.count(max((t.id for t in tracks), default=-1) + 1)
    kept = [t for t in tracks if t.missed <= policy.max_missed]
    for d in unmatched:
        z = np.asarray(d.z, dtype=float)
        kept.append(ObstacleTrack(next(ids), np.array([z[0], z[1], 0.0, 0.0]),
                                  np.diag(policy.init_var).astype(float)))
    return kept
