"""Shared fixtures and the acceptance summary hook.

The two scenario fixtures are session scoped because they are the
expensive runs: ``fig2_tree`` drives the CLI end to end twice (the
determinism check needs two complete processes), ``fig4_set`` holds the
dt refinement set.  Fast unit tests use the mini scenario, a shrunken
leaky cavity that runs in about a second.
"""

from __future__ import annotations

import json
import os
import shutil
import subprocess
import sys
import time

import pytest

REPO = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
SCENARIO_DIR = os.path.join(REPO, "scenarios")

MINI_CFG = """\
[scenario]
name = mini
protocol = both

[lattice]
wall = 50
barriers = 25:28:0.3

[packet]
center = -25
sigma = 4
k0 = 1.3

[stepper]
dt = 0.05
t_horizon = 280

[protocol]
threshold = 1e-7
occupancy_bound = 1e-9

[outputs]
dir = out/mini
"""


def scenario_path(name: str) -> str:
    return os.path.join(SCENARIO_DIR, name + ".cfg")


def run_cli(args, cwd):
    return subprocess.run([sys.executable, "-m", "pifsim", *args],
                          cwd=cwd, capture_output=True, text=True)


@pytest.fixture(scope="session")
def mini_cfg(tmp_path_factory):
    path = tmp_path_factory.mktemp("mini") / "mini.cfg"
    path.write_text(MINI_CFG)
    return str(path)


@pytest.fixture(scope="session")
def mini_run(mini_cfg, tmp_path_factory):
    """One CLI run of the mini scenario; several tests read its outputs."""
    cwd = tmp_path_factory.mktemp("mini_run")
    proc = run_cli(["run", mini_cfg], cwd=str(cwd))
    assert proc.returncode == 0, proc.stderr
    out = cwd / "out" / "mini"
    report = json.loads((out / "report.json").read_text())
    return {"cwd": str(cwd), "out": str(out), "report": report,
            "stdout": proc.stdout}


@pytest.fixture(scope="session")
def fig2_tree(tmp_path_factory):
    """Two complete CLI runs of the shipped fig2 scenario in one cwd.

    The first output tree is snapshotted before the second run
    overwrites it, so the determinism criterion can byte-compare the
    trees while the physics criteria read either copy.
    """
    cwd = tmp_path_factory.mktemp("fig2")
    cfg = scenario_path("fig2")
    proc1 = run_cli(["run", cfg], cwd=str(cwd))
    assert proc1.returncode == 0, proc1.stderr
    live = cwd / "out" / "fig2"
    first = cwd / "run1"
    shutil.copytree(live, first)
    proc2 = run_cli(["run", cfg], cwd=str(cwd))
    assert proc2.returncode == 0, proc2.stderr
    report = json.loads((live / "report.json").read_text())
    return {"first": str(first), "second": str(live), "report": report}


@pytest.fixture(scope="session")
def fig4_set():
    """PIF runs of fig4 at dt = 0.04, 0.02, 0.01 plus the TRM run.

    Only the three PIF runs are timed: they are the refinement study
    whose wall-clock budget is asserted.
    """
    from pifsim.protocols import run_pif, run_trm
    from pifsim.scenario import apply_overrides, load_scenario, realize

    scn = load_scenario(scenario_path("fig4"))
    pif = {}
    t0 = time.monotonic()
    for dt in (0.04, 0.02, 0.01):
        model, packet, cfg = realize(apply_overrides(scn, dt=dt))
        pif[dt] = run_pif(model, packet, cfg)
    elapsed = time.monotonic() - t0
    model, packet, cfg = realize(scn)
    return {"pif": pif, "trm": run_trm(model, packet, cfg),
            "refinement_seconds": elapsed}


# ------------------------------------------------------------- summary

_RESULTS: dict[int, tuple[str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "acceptance(num, label): graded end-to-end criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    num, label = marker.args
    if rep.when == "call":
        status = {"passed": "PASS", "failed": "FAIL",
                  "skipped": "SKIP"}[rep.outcome]
        _RESULTS[num] = (label, status)
    elif rep.when == "setup" and rep.outcome != "passed":
        _RESULTS[num] = (label, "FAIL" if rep.outcome == "failed" else "SKIP")


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_RESULTS):
        label, status = _RESULTS[num]
        terminalreporter.write_line(f"criterion {num:2d}: {status}  {label}")
