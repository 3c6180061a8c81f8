#!/usr/bin/env python3
"""
probepath command line.

Subcommands:
  - gen-scene: sample a SceneSpec JSON into node / MP CSV files
  - matrix:    build the inspection time matrix and write it as CSV
  - solve:     solve a matrix CSV with one solver
  - plan:      full pipeline, writes the report JSON (and optionally CSV / OBJ)
  - compare:   SA / GA / ACO over a seed set on a matrix CSV
  - export:    convert a report JSON to json / csv / obj
  - tui:       browse a report JSON

Settings come from --config, then PROBEPATH_CONFIG in the environment or .env;
--seed / --workers override PROBEPATH_SEED / PROBEPATH_WORKERS.
Exit codes: 0 success, 1 input error, 2 internal invariant violation.
"""
import argparse
import json
import logging
import sys

from probepath.config import load_settings
from probepath.errors import InvariantViolation, ProbePathError
from probepath.pipeline import EXPORT_FORMATS, compare_solvers, export_plan, load_inputs, load_report, run_plan
from probepath.scene import generate_scene, load_scene_spec, save_mps_csv, save_nodes_csv
from probepath.timing import build_time_matrix, load_matrix_csv, save_matrix_csv
from probepath.tsp import SOLVERS, solve_accessible

logger = logging.getLogger("probepath")


def _add_inputs(p: argparse.ArgumentParser) -> None:
    p.add_argument("--nodes", help="Node cloud file (CSV x,y,z or JSON)")
    p.add_argument("--mps", help="Measurement point CSV (id,x,y,z,I,J,K)")
    p.add_argument("--scene", help="SceneSpec JSON; generated with --seed")


def _parse_args(argv=None) -> argparse.Namespace:
    parser = argparse.ArgumentParser(
        prog="probepath",
        description="Collision-free, time-minimal probe inspection path planning",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="Debug logging")
    parser.add_argument("--config", default=None, help="Config JSON (overrides PROBEPATH_CONFIG)")
    parser.add_argument("--seed", type=int, default=None, help="Seed (overrides PROBEPATH_SEED)")
    parser.add_argument("--workers", type=int, default=None,
                        help="Matrix build threads (overrides PROBEPATH_WORKERS)")
    subparsers = parser.add_subparsers(dest="command")

    p = subparsers.add_parser("gen-scene", help="Generate a synthetic scene from a SceneSpec.")
    p.add_argument("spec", help="SceneSpec JSON")
    p.add_argument("--nodes-out", required=True)
    p.add_argument("--mps-out", required=True)

    p = subparsers.add_parser("matrix", help="Build the inspection time matrix.")
    _add_inputs(p)
    p.add_argument("--out", required=True, help="Matrix CSV to write")

    p = subparsers.add_parser("solve", help="Solve a matrix CSV.")
    p.add_argument("matrix", help="Matrix CSV")
    p.add_argument("--solver", choices=sorted(SOLVERS), default="sa")
    p.add_argument("--json", action="store_true", help="Print the tour as JSON")

    p = subparsers.add_parser("plan", help="Run the full planning pipeline.")
    _add_inputs(p)
    p.add_argument("--solver", choices=sorted(SOLVERS), default="sa")
    p.add_argument("--out", required=True, help="Report JSON to write")
    p.add_argument("--csv", help="Also write the program CSV")
    p.add_argument("--obj", help="Also write the trajectory OBJ")
    p.add_argument("--compare-seeds", type=int, default=0,
                   help="Add an SA/GA/ACO comparison over this many seeds")

    p = subparsers.add_parser("compare", help="Compare SA, GA and ACO on a matrix CSV.")
    p.add_argument("matrix", help="Matrix CSV")
    p.add_argument("--seeds", type=int, default=5, help="Number of seeds (default: %(default)s)")
    p.add_argument("--json", action="store_true")

    p = subparsers.add_parser("export", help="Convert a report JSON.")
    p.add_argument("report", help="Report JSON")
    p.add_argument("--format", choices=EXPORT_FORMATS, required=True)
    p.add_argument("--out", required=True)

    p = subparsers.add_parser("tui", help="Browse a report JSON in the Textual viewer.")
    p.add_argument("report", help="Report JSON")

    if argv is None:
        argv = sys.argv[1:]
    if not argv:
        parser.print_help(sys.stderr)
        sys.exit(1)
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_help(sys.stderr)
        sys.exit(1)
    return args


def _run(args: argparse.Namespace) -> None:
    settings = load_settings(args.config, seed=args.seed, workers=args.workers)
    cfg = settings.plan

    if args.command == "gen-scene":
        cloud, mps = generate_scene(load_scene_spec(args.spec), seed=cfg.seed, clearance=cfg.clearance)
        save_nodes_csv(cloud, args.nodes_out)
        save_mps_csv(mps, args.mps_out)
        print(f"{len(cloud)} nodes, {len(mps)} MPs")

    elif args.command == "matrix":
        cloud, mps = load_inputs(cfg, args.nodes, args.mps, args.scene)
        T = build_time_matrix(mps, cloud, cfg)
        save_matrix_csv(T, args.out)
        print(f"{T.m + 1}x{T.m + 1} matrix written to {args.out}")

    elif args.command == "solve":
        solution = solve_accessible(load_matrix_csv(args.matrix, cfg.a_inf), args.solver, settings.solver)
        tour = solution.tour
        result = {"solver": tour.solver, "seed": tour.seed, "order": tour.ids(solution.matrix),
                  "total_time": tour.total_time, "tainted": tour.tainted,
                  "inaccessible": solution.excluded}
        if args.json:
            print(json.dumps(result, indent=2))
        else:
            print(f"{tour.solver}: {tour.total_time:.3f} s{' (tainted)' if tour.tainted else ''}")
            print("order: " + " ".join(result["order"]))
            if solution.excluded:
                print("inaccessible: " + " ".join(solution.excluded))

    elif args.command == "plan":
        cloud, mps = load_inputs(cfg, args.nodes, args.mps, args.scene)
        seeds = list(range(cfg.seed, cfg.seed + args.compare_seeds)) if args.compare_seeds > 0 else None
        report = run_plan(cloud, mps, settings, args.solver, compare_seeds=seeds)
        export_plan(report, "json", args.out)
        if args.csv:
            export_plan(report, "csv", args.csv)
        if args.obj:
            export_plan(report, "obj", args.obj)
        print(f"{len(report.tour_ids)} MPs, {report.total_time:.3f} s "
              f"({report.smp_count} SMPs, {report.rotation_count} rotations, "
              f"{len(report.inaccessible)} inaccessible)")

    elif args.command == "compare":
        T = load_matrix_csv(args.matrix, cfg.a_inf)
        rows = compare_solvers(T, settings.solver, list(range(cfg.seed, cfg.seed + args.seeds)))
        if args.json:
            print(json.dumps([row.__dict__ for row in rows], indent=2))
        else:
            for row in rows:
                print(f"{row.solver}\t{row.best:.3f}\t{row.median:.3f}\t{row.wall_time:.2f}")

    elif args.command == "export":
        export_plan(load_report(args.report), args.format, args.out)

    elif args.command == "tui":
        from probepath.tui import PlanViewer
        PlanViewer(load_report(args.report)).run()


def main(argv=None):
    """Entry point of the `probepath` console script."""
    args = _parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        _run(args)
    except InvariantViolation as e:
        print(f"Error: {e}", file=sys.stderr)
        sys.exit(2)
    except (ProbePathError, OSError) as e:
        sys.exit(f"Error: {e}")


if __name__ == "__main__":
    main()
