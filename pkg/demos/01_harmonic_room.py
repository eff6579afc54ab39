"""A harmonic field in a small room, and the path it induces.

A wall with a gap splits a 40x30 grid. The goal sits behind the wall, so the
steepest-descent path has to find the gap. Potentials are printed as a coarse
ASCII shade map (darker is closer to the goal); the path is marked with '*'.
"""

import numpy as np

from twgrid.grid import CellClass, CellIndex, GridSpec, rasterize_segment
from twgrid.harmonic import build_index_matrix, cascade_initialize, extract_path, initialize_field, solve
from twgrid.rubber_band import relax_path

spec = GridSpec(40, 30)
wall = rasterize_segment((2.0, 1.5), (2.0, 3.0), spec)   # leaves a gap below y = 1.5 m
field = initialize_field(spec, goal_cells=[(35, 25)], obstacle_cells=wall)

# a coarse-to-fine start, then plain sweeps until the iterate stops moving
cascade_initialize(field)
solve(field, max_sweeps=50000, tol=1e-12)
print(f"sweeps: {field.k}, last change: {field.residual:.1e}")

idx = build_index_matrix(field)
path = extract_path(idx, field, CellIndex(3, 25))
smooth = relax_path(path, field)
print(f"grid path {path.length():.1f} cells, after the rubber band {smooth.length():.1f} cells")

# far from the goal phi is within 1e-6 of 1, so shade by the depth of 1 - phi
depth = -np.log10(np.maximum(1.0 - field.phi, 1e-16))
shade = "@%#+=-:. "
on_path = {tuple(np.rint(p).astype(int)) for p in path.waypoints}
for y in range(spec.height_cells - 1, -1, -1):
    row = []
    for x in range(spec.width_cells):
        if (x, y) in on_path:
            row.append("*")
        elif field.cls[y, x] == CellClass.OBSTACLE:
            row.append("X")
        elif field.cls[y, x] == CellClass.GOAL:
            row.append("G")
        else:
            row.append(shade[min(len(shade) - 1, int(depth[y, x]))])
    print("".join(row))
