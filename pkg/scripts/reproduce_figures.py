#!/usr/bin/env python3
"""Run the shipped scenarios end to end through the CLI.

Each scenario writes its full output tree (records, injection
schedules, snapshots, report.json) under ./out/<name>.  Pass names to
run a subset; the default runs all three.  fig2 is the slow one, a few
minutes of wall clock.
"""

import argparse
import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), os.pardir, "src"))

from pifsim.cli import main as pifsim_main

SCENARIO_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)),
                            os.pardir, "scenarios")
ALL = ("free", "fig4", "fig2")


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("names", nargs="*", default=list(ALL),
                        help=f"scenarios to run (default: {' '.join(ALL)})")
    parser.add_argument("--dt", type=float, default=None,
                        help="override the step size everywhere")
    args = parser.parse_args()
    for name in args.names or ALL:
        path = os.path.join(SCENARIO_DIR, f"{name}.cfg")
        if not os.path.isfile(path):
            print(f"no such scenario: {name}", file=sys.stderr)
            return 2
        print(f"== {name} ==")
        argv = ["run", path]
        if args.dt is not None:
            argv += ["--dt", str(args.dt)]
        rc = pifsim_main(argv)
        if rc != 0:
            return rc
    return 0


if __name__ == "__main__":
    sys.exit(main())
