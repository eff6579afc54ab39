"""One seeded trial on a bundled map, saved as SVG and CSV.

Usage: python demos/03_single_trial.py [map] [obstacles] [seed]
"""

import sys
from pathlib import Path

from twgrid.harness import render_svg, simulate_trial
from twgrid.harness.runner import trajectory_csv
from twgrid.harness.scenario import load

name = sys.argv[1] if len(sys.argv) > 1 else "map1"
count = int(sys.argv[2]) if len(sys.argv) > 2 else 4
seed = int(sys.argv[3]) if len(sys.argv) > 3 else 0

sc = load(name).with_obstacles(count)
rec = simulate_trial(sc, seed)
m = rec.metrics
print(f"{name}: {m.outcome.value} after {m.ticks_elapsed} ticks, {m.path_length_cm:.0f} cm, "
      f"largest turn {m.max_turn_deg:.1f} deg, blocked for {rec.blocked_ticks} ticks")

out = Path(f"{name}_{count}obs_seed{seed}")
render_svg(rec.trajectory, sc, rec.snapshot, rec.obstacle_paths, path=out.with_suffix(".svg"))
out.with_suffix(".csv").write_text(trajectory_csv(rec))
print(f"wrote {out}.svg and {out}.csv")
