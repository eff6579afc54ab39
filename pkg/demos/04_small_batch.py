"""A reduced success-rate table: a few seeds per obstacle count on one map.

The full table (four maps, ten seeds, six counts) is what the acceptance test
runs; this version finishes in a couple of minutes.
"""

import sys

from twgrid.harness import run_batch
from twgrid.harness.scenario import load

name = sys.argv[1] if len(sys.argv) > 1 else "map2"
report = run_batch(load(name), seeds=range(4), obstacle_counts=[1, 4, 16])
sys.stdout.write(report.summary_csv())
for t in report.trials:
    if t.outcome.value != "success":
        print(f"  {t.obstacles} obstacles, seed {t.seed}: {t.outcome.value} at tick {t.ticks_elapsed}")
