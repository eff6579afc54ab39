"""Command line entry point: ``twgrid run | batch | validate``.

Exit status is 0 on success and 2 when the scenario cannot be loaded.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from ..errors import ScenarioInvalid
from . import scenario as scenario_mod
from .render import render_svg
from .runner import run_batch, simulate_trial, trajectory_csv

EXIT_SCENARIO = 2


def _counts(text: str) -> list[int]:
    try:
        vals = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not vals or any(v < 0 for v in vals):
        raise argparse.ArgumentTypeError("obstacle counts must be non-negative integers")
    return vals


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="twgrid", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one seeded trial")
    run.add_argument("--scenario", required=True, help="scenario file or bundled name (map1..map4)")
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--obstacles", type=int, default=None, help="override the random obstacle count")
    run.add_argument("--svg-out", type=Path, default=None)
    run.add_argument("--trajectory-out", type=Path, default=None, help="write tick,x,y,heading CSV")

    batch = sub.add_parser("batch", help="run seeds 0..N-1 at each obstacle count")
    batch.add_argument("--scenario", required=True)
    batch.add_argument("--seeds", type=int, default=10, help="number of seeds")
    batch.add_argument("--obstacles", type=_counts, default=[1, 2, 4, 8, 12, 16],
                       help="comma-separated counts, e.g. 1,2,4")
    batch.add_argument("--csv-out", type=Path, default=None)
    batch.add_argument("--workers", type=int, default=1, help="worker processes")

    val = sub.add_parser("validate", help="check scenario files")
    val.add_argument("scenarios", nargs="+")
    return p


def _cmd_run(args) -> int:
    sc = scenario_mod.load(args.scenario)
    if args.obstacles is not None:
        sc = sc.with_obstacles(args.obstacles)
    rec = simulate_trial(sc, args.seed)
    m = rec.metrics
    print(f"{sc.name} seed={m.seed} obstacles={m.obstacles} outcome={m.outcome.value} "
          f"ticks={m.ticks_elapsed} length_cm={m.path_length_cm:.1f} max_turn_deg={m.max_turn_deg:.2f}")
    if args.svg_out is not None:
        render_svg(rec.trajectory, sc, rec.snapshot, rec.obstacle_paths, path=args.svg_out)
    if args.trajectory_out is not None:
        args.trajectory_out.write_text(trajectory_csv(rec))
    return 0


def _cmd_batch(args) -> int:
    sc = scenario_mod.load(args.scenario)
    if args.seeds < 0:
        print("twgrid: --seeds must be non-negative", file=sys.stderr)
        return 1
    report = run_batch(sc, list(range(args.seeds)), args.obstacles, workers=args.workers,
                       csv_out=args.csv_out)
    sys.stdout.write(report.summary_csv())
    return 0


def _cmd_validate(args) -> int:
    status = 0
    for name in args.scenarios:
        try:
            sc = scenario_mod.load(name)
        except ScenarioInvalid as e:
            print(f"{name}: invalid: {e}", file=sys.stderr)
            status = EXIT_SCENARIO
            continue
        print(f"{name}: ok ({sc.name}, {len(sc.walls)} walls, tick limit {sc.tick_limit})")
    return status


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    handler = {"run": _cmd_run, "batch": _cmd_batch, "validate": _cmd_validate}[args.command]
    try:
        return handler(args)
    except ScenarioInvalid as e:
        print(f"twgrid: {e}", file=sys.stderr)
        return EXIT_SCENARIO


if __name__ == "__main__":
    sys.exit(main())
