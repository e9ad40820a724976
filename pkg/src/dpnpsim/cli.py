"""Command-line interface.

  dpnpsim run CONFIG [--out DIR]     advance and write snapshots/monitors/
                                     bounds/summary into the output directory
  dpnpsim check CONFIG               advance without writing and print one
                                     PASS/FAIL line per runtime monitor
  dpnpsim mms CASE [--grids LIST]    convergence study for one manufactured
                                     case ("16,32,64" or "16x8,32x16")
  dpnpsim bounds CONFIG [--csv]      evaluate the a-priori constants for a
                                     configuration without running it

Exit codes: 0 success, 2 configuration violations (printed one per line),
1 runtime failure (solver/fixed-point breakdown or failed check).
"""

import argparse
import sys

from . import mms as mms_mod
from . import runner
from .bounds import BoundsEvaluator
from .config import ConfigError, load_config
from .gummel import GummelError
from .linalg import SolverError


def _parse_grids(text):
    grids = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "x" in part:
            nx, ny = part.split("x", 1)
            grids.append((int(nx), int(ny)))
        else:
            grids.append(int(part))
    if not grids:
        raise ValueError("empty grid list")
    return grids


def _load(path):
    try:
        return load_config(path)
    except OSError as exc:
        print("cannot read %s: %s" % (path, exc), file=sys.stderr)
        return None
    except ConfigError as exc:
        for v in exc.violations:
            print(v, file=sys.stderr)
        return None


def _cmd_run(args):
    cfg = _load(args.config)
    if cfg is None:
        return 2
    try:
        out = runner.run(cfg, out_dir=args.out)
    except (GummelError, SolverError) as exc:
        print("run failed: %s" % exc, file=sys.stderr)
        return 1
    s = out.summary
    print("wrote %d files to %s" % (len(out.files), out.out_dir))
    print(
        "steps: %d   sweeps: %d   halvings: %d   monitors: %s   wall: %.3fs"
        % (
            s["steps"],
            s["total_sweeps"],
            s["total_halvings"],
            "ok" if s["all_monitors_ok"] else "FAILED",
            s["wall_time_s"],
        )
    )
    return 0


def _cmd_check(args):
    cfg = _load(args.config)
    if cfg is None:
        return 2
    try:
        ok, lines = runner.check(cfg)
    except (GummelError, SolverError) as exc:
        print("check failed: %s" % exc, file=sys.stderr)
        return 1
    for line in lines:
        print(line)
    return 0 if ok else 1


def _cmd_mms(args):
    try:
        grids = _parse_grids(args.grids)
    except ValueError as exc:
        print("bad grid list %r: %s" % (args.grids, exc), file=sys.stderr)
        return 2
    table = mms_mod.run_mms(args.case, grids)
    print(table.text())
    if args.csv:
        with open(args.csv, "w", encoding="utf-8", newline="\n") as fh:
            for row in table.csv_rows():
                fh.write(",".join(row) + "\n")
        print("wrote %s" % args.csv)
    return 0


def _cmd_bounds(args):
    cfg = _load(args.config)
    if cfg is None:
        return 2
    ev = BoundsEvaluator(cfg.grid, cfg.params, cfg.schedule, cfg.initial, cfg.params.T_end)
    ledger = ev.ledger()
    print(runner.bounds_text(ledger), end="")
    if args.csv:
        print()
        for row in runner.bounds_csv_rows(ledger):
            print(",".join(row))
    return 0


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="dpnpsim",
        description="Finite-volume simulator for two-species electrodiffusion in a porous medium.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="advance a configuration and write output files")
    p_run.add_argument("config", help="path to a JSON configuration")
    p_run.add_argument("--out", help="output directory (overrides output.directory)")
    p_run.set_defaults(func=_cmd_run)

    p_check = sub.add_parser("check", help="advance and print one PASS/FAIL line per monitor")
    p_check.add_argument("config", help="path to a JSON configuration")
    p_check.set_defaults(func=_cmd_check)

    p_mms = sub.add_parser("mms", help="manufactured-solution convergence study")
    p_mms.add_argument("case", choices=mms_mod.CASES)
    p_mms.add_argument("--grids", default="16,32,64", help="comma list: '16,32,64' or '16x8,32x16'")
    p_mms.add_argument("--csv", help="also write the table to this CSV file")
    p_mms.set_defaults(func=_cmd_mms)

    p_bounds = sub.add_parser("bounds", help="evaluate the a-priori constants for a configuration")
    p_bounds.add_argument("config", help="path to a JSON configuration")
    p_bounds.add_argument("--csv", action="store_true", help="also print the table as CSV")
    p_bounds.set_defaults(func=_cmd_bounds)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
