"""Deterministic run outputs: CSV tables and a JSON report.

Every file is reproducible byte for byte from the same inputs: floats
are written as %.17g (round-trip exact), JSON keys are sorted, line
endings are LF, and nothing records wall-clock time.
"""

from __future__ import annotations

import json
import math
import os

import numpy as np

from . import metrics
from .lattice import ChainModel
from .protocols import ProtocolReport
from .scenario import Scenario, effective_dict
from .signals import InjectionSchedule, ProbeRecord

_F = "%.17g"


def write_table(path: str, header: str, rows) -> None:
    lines = [header]
    lines.extend(",".join(_F % v for v in row) for row in rows)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _num(x: float | None):
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return None
    return x


def write_record_csv(path: str, record: ProbeRecord) -> None:
    t = record.times
    write_table(path, "t,re,im",
                 zip(t, record.samples.real, record.samples.imag))


def write_schedule_csv(path: str, schedule: InjectionSchedule) -> None:
    # samples act at step midpoints
    t = schedule.t0 + (np.arange(len(schedule)) + 0.5) * schedule.dt
    write_table(path, "t,re,im",
                 zip(t, schedule.samples.real, schedule.samples.imag))


def write_snapshots_csv(path: str, model: ChainModel,
                        snapshots) -> None:
    region = np.full(model.n_sites, 1.0)
    region[:model.probe] = 0.0
    region[model.probe + 1:] = 2.0
    sites = np.arange(model.n_sites, dtype=float)
    rows = []
    for t, f in snapshots:
        amp = f.amplitudes
        dens = np.abs(amp) ** 2
        rows.extend(zip(np.full(model.n_sites, t), sites,
                        amp.real, amp.imag, dens, region))
    write_table(path, "t,site,re,im,density,region", rows)


def report_payload(report: ProtocolReport) -> dict:
    """JSON-ready summary of one protocol run."""
    if report.degenerate:
        return {"protocol": report.protocol, "degenerate": True,
                "trm_c": _num(report.trm_c)}
    errs = [e for _, e in report.reversal_error_series]
    correlation = metrics.probe_echo_correlation(
        report.record, report.probe_series, report.window)
    return {
        "protocol": report.protocol,
        "degenerate": False,
        "window": {
            "t1": report.window.t1,
            "tR": report.window.tR,
            "duration": report.window.duration,
            "threshold": report.window.threshold,
        },
        "eta": report.eta,
        "grid": {
            "n_points": report.grid.n_points,
            "spacing": report.grid.spacing,
            "eps_min": report.grid.eps_min,
            "eps_max": report.grid.eps_max,
        },
        "echo_fidelity": _num(report.echo_fidelity),
        "initial_velocity": _num(report.initial_velocity),
        "echo_velocity": _num(report.echo_velocity),
        "reversal_error_max": max(errs),
        "reversal_error_final": errs[-1],
        "probe_shape_correlation": _num(correlation),
        "record_peak": float(np.max(np.abs(report.record.samples))),
        "injection_peak": float(np.max(np.abs(report.injection.samples))),
        "out_of_window_fraction": report.injection.out_of_window_fraction,
        "trm_c": _num(report.trm_c),
    }


def _mandatory_steps(report: ProtocolReport,
                     extras: tuple[float, ...]) -> set[int]:
    dt = report.record.dt
    nR = round(report.window.tR / dt)
    n1 = round(report.window.t1 / dt)
    keep = {0, n1, nR, 2 * nR - n1, 2 * nR}
    keep.update(round(t / dt) for t in extras)
    return keep


def export_run(out_dir: str, scn: Scenario, model: ChainModel,
               reports: list[ProtocolReport]) -> dict:
    """Write all per-protocol tables plus the merged report.json.

    Snapshot profiles are exported for the mandatory instants (start,
    window edges, their mirrors, the echo) and any scenario extras; the
    per-pair reversal errors summarize the rest.
    """
    os.makedirs(out_dir, exist_ok=True)
    merged = {"scenario": effective_dict(scn, model), "runs": {}}
    for report in reports:
        p = report.protocol
        merged["runs"][p] = report_payload(report)
        if report.degenerate:
            continue
        write_record_csv(os.path.join(out_dir, f"{p}_forward_record.csv"),
                         report.record)
        write_schedule_csv(os.path.join(out_dir, f"{p}_injection.csv"),
                           report.injection)
        series = report.probe_series
        write_table(os.path.join(out_dir, f"{p}_probe_series.csv"),
                     "t,re,im,density",
                     zip(series.times, series.samples.real,
                         series.samples.imag, np.abs(series.samples) ** 2))
        write_table(os.path.join(out_dir, f"{p}_reversal_error.csv"),
                     "delta_t,relative_error", report.reversal_error_series)
        write_table(os.path.join(out_dir, f"{p}_outer_density.csv"),
                     "t,outer_density", report.outer_density_series)
        keep = _mandatory_steps(report, scn.snapshot_times)
        dt = report.record.dt
        by_step = {round(t / dt): (t, f) for t, f in report.snapshots}
        chosen = [by_step[k] for k in sorted(keep) if k in by_step]
        write_snapshots_csv(os.path.join(out_dir, f"{p}_snapshots.csv"),
                            model, chosen)
    path = os.path.join(out_dir, "report.json")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(merged, fh, sort_keys=True, indent=2)
        fh.write("\n")
    return merged
