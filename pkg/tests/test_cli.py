"""Command-line surface: exit codes, output trees, reproducibility."""

import json
import os

import numpy as np
import pytest

from conftest import MINI_CFG, run_cli

EXPECTED_FILES = [
    "report.json", "effective.cfg",
    "pif_forward_record.csv", "pif_injection.csv", "pif_probe_series.csv",
    "pif_reversal_error.csv", "pif_outer_density.csv", "pif_snapshots.csv",
]


def tree_bytes(root):
    out = {}
    for base, _, files in os.walk(root):
        for f in files:
            full = os.path.join(base, f)
            out[os.path.relpath(full, root)] = open(full, "rb").read()
    return out


def test_run_exits_cleanly_and_reports(mini_run):
    assert "pif:" in mini_run["stdout"]
    assert "wrote" in mini_run["stdout"]
    for name in EXPECTED_FILES + ["trm_forward_record.csv"]:
        assert os.path.isfile(os.path.join(mini_run["out"], name)), name


def test_report_carries_both_protocols(mini_run):
    report = mini_run["report"]
    runs = report["runs"]
    assert set(runs) == {"pif", "trm"}
    assert runs["pif"]["echo_fidelity"] > 0.99
    assert runs["trm"]["echo_fidelity"] < runs["pif"]["echo_fidelity"]
    assert runs["pif"]["reversal_error_max"] < 0.05
    win = runs["pif"]["window"]
    assert 0.0 <= win["t1"] < win["tR"]
    assert win["duration"] == pytest.approx(win["tR"] - win["t1"])


def test_csv_outputs_parse_as_numbers(mini_run):
    rec = np.loadtxt(os.path.join(mini_run["out"], "pif_forward_record.csv"),
                     delimiter=",", skiprows=1)
    assert rec.shape[1] == 3
    assert rec[0, 0] == 0.0
    snaps = np.loadtxt(os.path.join(mini_run["out"], "pif_snapshots.csv"),
                       delimiter=",", skiprows=1)
    assert snaps.shape[1] == 6
    assert set(np.unique(snaps[:, 5])) <= {0.0, 1.0, 2.0}


def test_effective_config_reproduces_the_run(mini_run, tmp_path):
    # replaying the pinned effective.cfg from a different cwd must give
    # a byte-identical report
    eff = os.path.join(mini_run["out"], "effective.cfg")
    proc = run_cli(["run", eff], cwd=str(tmp_path))
    assert proc.returncode == 0, proc.stderr
    replay = tmp_path / "out" / "mini"
    a = open(os.path.join(mini_run["out"], "report.json"), "rb").read()
    b = open(replay / "report.json", "rb").read()
    assert a == b


def test_seedless_check_passes_and_cleans_up(mini_cfg, tmp_path):
    proc = run_cli(["run", mini_cfg, "--seedless-check"], cwd=str(tmp_path))
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "out" / "mini").is_dir()
    assert not (tmp_path / "out" / "mini.check").exists()


def test_out_dir_and_protocol_overrides(mini_cfg, tmp_path):
    proc = run_cli(["run", mini_cfg, "--protocol", "trm",
                    "--out-dir", "elsewhere"], cwd=str(tmp_path))
    assert proc.returncode == 0, proc.stderr
    names = os.listdir(tmp_path / "elsewhere")
    assert "trm_forward_record.csv" in names
    assert not any(n.startswith("pif_") for n in names)


def test_missing_scenario_exits_2(tmp_path):
    proc = run_cli(["run", "nowhere.cfg"], cwd=str(tmp_path))
    assert proc.returncode == 2
    assert proc.stderr.strip() != ""


def test_invalid_config_exits_2(tmp_path):
    bad = tmp_path / "bad.cfg"
    bad.write_text(MINI_CFG + "\n[mystery]\nx = 1\n")
    proc = run_cli(["run", str(bad)], cwd=str(tmp_path))
    assert proc.returncode == 2


def test_unresolved_cavity_exits_4(tmp_path):
    # a horizon too short to certify the cavity quiet is a protocol
    # failure, not a usage error
    cut = MINI_CFG.replace("t_horizon = 280", "t_horizon = 60")
    cfg = tmp_path / "short.cfg"
    cfg.write_text(cut)
    proc = run_cli(["run", str(cfg)], cwd=str(tmp_path))
    assert proc.returncode == 4
    assert proc.stderr.strip() != ""


def test_compare_distinguishes_trees(tmp_path):
    a = tmp_path / "a"
    b = tmp_path / "b"
    a.mkdir()
    b.mkdir()
    (a / "x.csv").write_text("1,2,3\n")
    (b / "x.csv").write_text("1,2,3\n")
    assert run_cli(["compare", str(a), str(b)],
                   cwd=str(tmp_path)).returncode == 0
    (b / "x.csv").write_text("1,2,4\n")
    assert run_cli(["compare", str(a), str(b)],
                   cwd=str(tmp_path)).returncode == 1
    assert run_cli(["compare", str(a), str(tmp_path / "missing")],
                   cwd=str(tmp_path)).returncode == 2


def test_greens_command_exports_kernel_and_spectrum(mini_cfg, tmp_path):
    proc = run_cli(["greens", mini_cfg, "--out-dir", "g"], cwd=str(tmp_path))
    assert proc.returncode == 0, proc.stderr
    kern = np.loadtxt(tmp_path / "g" / "greens_kernel.csv",
                      delimiter=",", skiprows=1)
    spec = np.loadtxt(tmp_path / "g" / "greens_spectrum.csv",
                      delimiter=",", skiprows=1)
    assert kern.shape[1] == 3
    # the kernel starts at -i/hbar
    assert kern[0, 1] == 0.0 and kern[0, 2] == -1.0
    assert spec.shape[1] == 4
    # completeness: the spectral weight at the probe integrates to one
    spacing = spec[1, 0] - spec[0, 0]
    assert abs(float(spec[:, 3].sum()) * spacing - 1.0) < 1e-3
