"""SVG rendering of a trial: walls, traversed path, last plan, tracks, footprints, goal.

Output is a deterministic function of the inputs; every coordinate goes
through the same fixed-precision formatter, so two renders of the same
trial are byte-identical.
"""

from __future__ import annotations

from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from .scenario import Scenario

PX_PER_M = 20.0


def _f(v: float) -> str:
    s = f"{v:.2f}"
    return "0.00" if s == "-0.00" else s


def _points(pts, H: float) -> str:
    return " ".join(f"{_f(x * PX_PER_M)},{_f((H - y) * PX_PER_M)}" for x, y in pts)


def render_svg(trajectory, scenario: Scenario, snapshot=None, obstacle_paths=None,
               path: str | Path | None = None) -> str:
    """Return the SVG document as text; also write it to ``path`` when given.

    ``trajectory`` is an ``(n, 2+)`` array of robot positions (extra columns
    are ignored). ``snapshot`` is a runner ``Snapshot`` or None.
    """
    W, H = scenario.extent
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_f(W * PX_PER_M)}" height="{_f(H * PX_PER_M)}" '
        f'viewBox="0 0 {_f(W * PX_PER_M)} {_f(H * PX_PER_M)}">',
        f"<title>{escape(scenario.name)}</title>",
        f'<rect id="frame" x="0" y="0" width="{_f(W * PX_PER_M)}" height="{_f(H * PX_PER_M)}" '
        'fill="white" stroke="black" stroke-width="2"/>',
    ]

    out.append('<g id="walls" stroke="black" stroke-width="3" stroke-linecap="square">')
    for x0, y0, x1, y1 in scenario.walls:
        out.append(f'<line x1="{_f(x0 * PX_PER_M)}" y1="{_f((H - y0) * PX_PER_M)}" '
                   f'x2="{_f(x1 * PX_PER_M)}" y2="{_f((H - y1) * PX_PER_M)}"/>')
    out.append("</g>")

    if obstacle_paths is not None and np.size(obstacle_paths):
        op = np.asarray(obstacle_paths, dtype=float)
        out.append('<g id="obstacle-paths" fill="none" stroke="green" stroke-width="1" stroke-dasharray="4 3">')
        for k in range(op.shape[1]):
            out.append(f'<polyline points="{_points(op[:, k, :], H)}"/>')
        out.append("</g>")

    traj = np.asarray(trajectory, dtype=float).reshape(-1, np.shape(trajectory)[-1] if np.size(trajectory) else 2)
    if len(traj) >= 2:
        out.append(f'<polyline id="traversed" fill="none" stroke="black" stroke-width="2" '
                   f'points="{_points(traj[:, :2], H)}"/>')

    if snapshot is not None:
        if len(snapshot.planned_path) >= 2:
            out.append(f'<polyline id="planned" fill="none" stroke="blue" stroke-width="1.5" '
                       f'points="{_points(snapshot.planned_path, H)}"/>')
        out.append('<g id="footprints" fill="red" fill-opacity="0.25" stroke="red">')
        for cx, cy, r in snapshot.footprints:
            out.append(f'<circle cx="{_f(cx * PX_PER_M)}" cy="{_f((H - cy) * PX_PER_M)}" r="{_f(r * PX_PER_M)}"/>')
        out.append("</g>")
        out.append('<g id="tracks" fill="red">')
        for x, y in np.asarray(snapshot.tracks, dtype=float).reshape(-1, 2):
            s = 0.2 * PX_PER_M
            out.append(f'<rect x="{_f(x * PX_PER_M - s / 2)}" y="{_f((H - y) * PX_PER_M - s / 2)}" '
                       f'width="{_f(s)}" height="{_f(s)}"/>')
        out.append("</g>")

    gx, gy = scenario.goal
    out.append(f'<circle id="goal" cx="{_f(gx * PX_PER_M)}" cy="{_f((H - gy) * PX_PER_M)}" '
               f'r="{_f(scenario.goal_radius * PX_PER_M)}" fill="none" stroke="orange" stroke-width="2"/>')
    out.append("</svg>")
    text = "\n".join(out) + "\n"
    if path is not None:
        Path(path).write_text(text)
    return text
