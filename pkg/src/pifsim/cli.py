"""Command-line front end.

Exit codes: 0 success, 2 invalid input or configuration, 3 unexpected
internal failure, 4 a protocol-stage failure (empty record, no decay
within the horizon, deconvolution blow-up, nondeterministic outputs).
The compare subcommand instead follows diff conventions: 0 identical,
1 different, 2 unreadable.
"""

from __future__ import annotations

import argparse
import filecmp
import math
import os
import shutil
import sys
import traceback

from .errors import ProtocolError, ValidationError
from .greens import impulse_response
from .protocols import run_pif, run_trm
from .reporting import export_run, write_table
from .scenario import apply_overrides, load_scenario, realize, \
    write_effective_cfg
from .signals import EnergyGrid, to_energy

def _tree_files(root: str) -> list[str]:
    if not os.path.isdir(root):
        raise ValidationError(f"not a directory: {root}")
    out = []
    for base, dirs, files in os.walk(root):
        dirs.sort()
        for name in sorted(files):
            out.append(os.path.relpath(os.path.join(base, name), root))
    return out


def _diff_trees(dir_a: str, dir_b: str) -> str | None:
    """First difference between two output trees, or None."""
    files_a = _tree_files(dir_a)
    files_b = _tree_files(dir_b)
    if files_a != files_b:
        only_a = sorted(set(files_a) - set(files_b))
        only_b = sorted(set(files_b) - set(files_a))
        return f"file sets differ (only left: {only_a}, only right: {only_b})"
    for rel in files_a:
        if not filecmp.cmp(os.path.join(dir_a, rel),
                           os.path.join(dir_b, rel), shallow=False):
            return f"content differs: {rel}"
    return None


def _execute_run(scn, out_dir: str):
    model, packet, cfg = realize(scn)
    runs = ("pif", "trm") if scn.protocol == "both" else (scn.protocol,)
    reports = []
    for name in runs:
        driver = run_pif if name == "pif" else run_trm
        reports.append(driver(model, packet, cfg))
    merged = export_run(out_dir, scn, model, reports)
    write_effective_cfg(os.path.join(out_dir, "effective.cfg"), scn, model)
    return model, reports, merged


def cmd_run(args) -> int:
    scn = load_scenario(args.scenario)
    scn = apply_overrides(scn, dt=args.dt, eta=args.eta,
                          threshold=args.threshold, protocol=args.protocol,
                          out_dir=args.out_dir)
    model, reports, merged = _execute_run(scn, scn.out_dir)
    if args.seedless_check:
        check_dir = scn.out_dir.rstrip("/\\") + ".check"
        _execute_run(scn, check_dir)
        mismatch = _diff_trees(scn.out_dir, check_dir)
        shutil.rmtree(check_dir)
        if mismatch is not None:
            raise ProtocolError(f"repeat run not byte-identical: {mismatch}")
        print("seedless check: outputs byte-identical across two runs")
    for report in reports:
        payload = merged["runs"][report.protocol]
        if report.degenerate:
            print(f"{report.protocol}: degenerate (empty packet)")
            continue
        print(f"{report.protocol}: window [{report.window.t1:g}, "
              f"{report.window.tR:g}]  fidelity {payload['echo_fidelity']:.6f}"
              f"  reversal max {payload['reversal_error_max']:.3e}"
              f"  v {payload['initial_velocity']:+.4f} -> "
              f"{payload['echo_velocity']:+.4f}")
    print(f"wrote {scn.out_dir}")
    return 0


def cmd_greens(args) -> int:
    scn = load_scenario(args.scenario)
    scn = apply_overrides(scn, dt=args.dt, eta=args.eta,
                          out_dir=args.out_dir)
    model, _, _ = realize(scn)
    dt = scn.dt
    t_max = args.t_max if args.t_max is not None else scn.t_horizon
    steps = round(t_max / dt)
    eta = scn.eta if scn.eta is not None else model.units.hbar / t_max
    grid = EnergyGrid.conjugate(dt, steps, scn.pad_factor, eta)
    kernel = impulse_response(model, model.probe,
                              t_max=(grid.n_points - 1) * dt, dt=dt)
    spectrum = to_energy(kernel, grid)
    os.makedirs(scn.out_dir, exist_ok=True)
    write_table(os.path.join(scn.out_dir, "greens_kernel.csv"), "t,re,im",
                 zip(kernel.times[:steps + 1],
                     kernel.samples.real[:steps + 1],
                     kernel.samples.imag[:steps + 1]))
    ldos = -spectrum.values.imag / math.pi
    write_table(os.path.join(scn.out_dir, "greens_spectrum.csv"),
                 "eps,re,im,ldos",
                 zip(grid.energies, spectrum.values.real,
                     spectrum.values.imag, ldos))
    print(f"probe site {model.probe}, band [{model.band_min:g}, "
          f"{model.band_max:g}], eta {eta:g}")
    print(f"wrote {scn.out_dir}")
    return 0


def cmd_compare(args) -> int:
    try:
        mismatch = _diff_trees(args.dir_a, args.dir_b)
    except (ValidationError, OSError) as exc:
        print(f"compare error: {exc}", file=sys.stderr)
        return 2
    if mismatch is not None:
        print(mismatch)
        return 1
    print("identical")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pifsim",
        description="Time reversal of wave packets on a tight-binding "
                    "chain via inverse-filtered point injection.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a reversal scenario")
    run.add_argument("scenario", help="scenario .cfg file")
    run.add_argument("--dt", type=float, default=None)
    run.add_argument("--eta", type=float, default=None)
    run.add_argument("--threshold", type=float, default=None)
    run.add_argument("--protocol", choices=("pif", "trm", "both"),
                     default=None)
    run.add_argument("--out-dir", default=None)
    run.add_argument("--seedless-check", action="store_true",
                     help="run twice and require byte-identical outputs")
    run.set_defaults(func=cmd_run)

    greens = sub.add_parser(
        "greens", help="probe Green's function of a scenario's chain")
    greens.add_argument("scenario", help="scenario .cfg file")
    greens.add_argument("--dt", type=float, default=None)
    greens.add_argument("--eta", type=float, default=None)
    greens.add_argument("--t-max", type=float, default=None)
    greens.add_argument("--out-dir", default=None)
    greens.set_defaults(func=cmd_greens)

    compare = sub.add_parser(
        "compare", help="byte-compare two output directories")
    compare.add_argument("dir_a")
    compare.add_argument("dir_b")
    compare.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ProtocolError as exc:
        print(f"protocol failure: {exc}", file=sys.stderr)
        return 4
    except Exception:
        traceback.print_exc()
        return 3


if __name__ == "__main__":
    sys.exit(main())
