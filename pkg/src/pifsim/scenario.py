"""Scenario files: INI descriptions of a chain + packet + protocol run.

A scenario names everything a run needs.  Positions are written
relative to the probe site so the same file works at any padding; the
lattice is auto-sized from the horizon unless n_sites/probe are pinned.

Sizing rule for the open side: a front leaving the probe leftward at
t = 0 returns no earlier than 2 L_pad / v_max, so L_pad >= v_max *
t_horizon keeps every left-wall reflection out of [0, 2 tR] for any
tR <= t_horizon.  A 50-site margin absorbs dispersive tails.
"""

from __future__ import annotations

import configparser
import math
import os
from dataclasses import dataclass, replace

from .errors import ValidationError
from .lattice import ChainModel, PotentialProfile, UnitSystem, build_chain
from .protocols import ProtocolConfig
from .wavefield import WaveField, gaussian_packet

_PAD_MARGIN = 50

_KNOWN_KEYS = {
    "scenario": {"name", "protocol"},
    "lattice": {"wall", "barriers", "n_sites", "probe"},
    "packet": {"center", "sigma", "k0"},
    "stepper": {"dt", "t_horizon"},
    "greens": {"eta", "pad_factor"},
    "protocol": {"threshold", "guard", "trm_c", "occupancy_bound",
                 "window", "reversal_samples", "out_of_window_bound"},
    "outputs": {"dir", "snapshots"},
}
_PROTOCOLS = ("pif", "trm", "both")


@dataclass(frozen=True)
class Scenario:
    """Parsed scenario; offsets are probe-relative until realize()."""

    name: str
    protocol: str
    wall: int | None
    n_sites: int | None
    probe: int | None
    barriers: tuple[tuple[int, int, float], ...]
    center: int
    sigma: float
    k0: float
    dt: float
    t_horizon: float
    eta: float | None
    pad_factor: int
    threshold: float
    guard: float
    trm_c: float
    occupancy_bound: float
    window: tuple[float, float] | None
    reversal_samples: int
    out_of_window_bound: float
    out_dir: str
    snapshot_times: tuple[float, ...]

    def __post_init__(self):
        if self.protocol not in _PROTOCOLS:
            raise ValidationError(
                f"protocol {self.protocol!r}; expected one of {_PROTOCOLS}")
        if (self.n_sites is None) != (self.probe is None):
            raise ValidationError("n_sites and probe must be pinned together")
        if self.n_sites is None and self.wall is None:
            raise ValidationError("lattice needs wall (or n_sites + probe)")


def _parse_triple(text: str) -> tuple[int, int, float]:
    parts = text.split(":")
    if len(parts) != 3:
        raise ValidationError(f"barrier {text!r}; expected start:end:height")
    return int(parts[0]), int(parts[1]), float(parts[2])


def _parse_list(text: str) -> list[str]:
    return [p.strip() for p in text.split(",") if p.strip()]


def load_scenario(path: str) -> Scenario:
    if not os.path.isfile(path):
        raise ValidationError(f"scenario file not found: {path}")
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"),
                                   interpolation=None)
    cp.optionxform = str
    try:
        cp.read(path)
    except configparser.Error as exc:
        raise ValidationError(f"cannot parse {path}: {exc}") from exc
    for section in cp.sections():
        if section not in _KNOWN_KEYS:
            raise ValidationError(f"unknown section [{section}] in {path}")
        for key in cp[section]:
            if key not in _KNOWN_KEYS[section]:
                raise ValidationError(
                    f"unknown key {key!r} in [{section}] of {path}")

    def get(section, key, conv, default=None, required=False):
        if cp.has_option(section, key) and cp.get(section, key).strip() != "":
            try:
                return conv(cp.get(section, key).strip())
            except (ValueError, ValidationError) as exc:
                raise ValidationError(
                    f"bad value for {key} in [{section}]: {exc}") from exc
        if required:
            raise ValidationError(f"missing required key {key} in [{section}]")
        return default

    stem = os.path.splitext(os.path.basename(path))[0]
    name = get("scenario", "name", str, default=stem)
    window_text = get("protocol", "window", str)
    window = None
    if window_text is not None:
        parts = window_text.split(":")
        if len(parts) != 2:
            raise ValidationError(f"window {window_text!r}; expected t1:tR")
        window = (float(parts[0]), float(parts[1]))
    barriers = tuple(_parse_triple(p)
                     for p in _parse_list(get("lattice", "barriers", str,
                                              default="")))
    snapshots = tuple(float(p)
                      for p in _parse_list(get("outputs", "snapshots", str,
                                               default="")))
    return Scenario(
        name=name,
        protocol=get("scenario", "protocol", str, default="pif"),
        wall=get("lattice", "wall", int),
        n_sites=get("lattice", "n_sites", int),
        probe=get("lattice", "probe", int),
        barriers=barriers,
        center=get("packet", "center", int, required=True),
        sigma=get("packet", "sigma", float, required=True),
        k0=get("packet", "k0", float, required=True),
        dt=get("stepper", "dt", float, required=True),
        t_horizon=get("stepper", "t_horizon", float, required=True),
        eta=get("greens", "eta", float),
        pad_factor=get("greens", "pad_factor", int, default=4),
        threshold=get("protocol", "threshold", float, default=1e-8),
        guard=get("protocol", "guard", float, default=50.0),
        trm_c=get("protocol", "trm_c", float, default=1.0),
        occupancy_bound=get("protocol", "occupancy_bound", float,
                            default=1e-12),
        window=window,
        reversal_samples=get("protocol", "reversal_samples", int, default=17),
        out_of_window_bound=get("protocol", "out_of_window_bound", float,
                                default=1e-4),
        out_dir=get("outputs", "dir", str, default=os.path.join("out", stem)),
        snapshot_times=snapshots,
    )


def apply_overrides(scn: Scenario, dt: float | None = None,
                    eta: float | None = None, threshold: float | None = None,
                    protocol: str | None = None,
                    out_dir: str | None = None) -> Scenario:
    """Command-line overrides; None leaves the scenario value alone."""
    kwargs = {}
    if dt is not None:
        kwargs["dt"] = dt
    if eta is not None:
        kwargs["eta"] = eta
    if threshold is not None:
        kwargs["threshold"] = threshold
    if protocol is not None:
        kwargs["protocol"] = protocol
    if out_dir is not None:
        kwargs["out_dir"] = out_dir
    return replace(scn, **kwargs) if kwargs else scn


def realize(scn: Scenario) -> tuple[ChainModel, WaveField, ProtocolConfig]:
    """Build the chain, the packet, and the protocol knobs."""
    units = UnitSystem()
    if scn.n_sites is not None:
        n_sites, probe = scn.n_sites, scn.probe
        if scn.wall is not None and n_sites != probe + scn.wall + 1:
            raise ValidationError(
                f"n_sites={n_sites} inconsistent with probe={probe} "
                f"+ wall={scn.wall} + 1")
    else:
        pad = math.ceil(units.v_max * scn.t_horizon) + _PAD_MARGIN
        probe = pad
        n_sites = pad + scn.wall + 1
    segments = tuple((probe + b0, probe + b1, h) for b0, b1, h in scn.barriers)
    profile = PotentialProfile(segments=segments)
    model = build_chain(n_sites, probe, profile, units)
    packet = gaussian_packet(model, probe + scn.center, scn.sigma, scn.k0)
    cfg = ProtocolConfig(
        dt=scn.dt, t_horizon=scn.t_horizon, threshold=scn.threshold,
        guard=scn.guard, eta=scn.eta, pad_factor=scn.pad_factor,
        trm_c=scn.trm_c, occupancy_bound=scn.occupancy_bound,
        window=scn.window, reversal_samples=scn.reversal_samples,
        out_of_window_bound=scn.out_of_window_bound,
        extra_snapshots=scn.snapshot_times)
    return model, packet, cfg


def effective_dict(scn: Scenario, model: ChainModel) -> dict:
    """Fully resolved parameters, for embedding in reports."""
    return {
        "name": scn.name,
        "protocol": scn.protocol,
        "lattice": {
            "n_sites": model.n_sites,
            "probe": model.probe,
            "barriers": [list(b) for b in scn.barriers],
        },
        "packet": {"center": scn.center, "sigma": scn.sigma, "k0": scn.k0},
        "stepper": {"dt": scn.dt, "t_horizon": scn.t_horizon},
        "greens": {"eta": scn.eta, "pad_factor": scn.pad_factor},
        "protocol_cfg": {
            "threshold": scn.threshold,
            "guard": scn.guard,
            "trm_c": scn.trm_c,
            "occupancy_bound": scn.occupancy_bound,
            "window": list(scn.window) if scn.window else None,
            "reversal_samples": scn.reversal_samples,
            "out_of_window_bound": scn.out_of_window_bound,
        },
        "outputs": {"dir": scn.out_dir,
                    "snapshots": list(scn.snapshot_times)},
    }


def write_effective_cfg(path: str, scn: Scenario, model: ChainModel) -> None:
    """Round-trippable scenario with the derived sizes pinned."""
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    cp["scenario"] = {"name": scn.name, "protocol": scn.protocol}
    lattice = {
        "n_sites": str(model.n_sites),
        "probe": str(model.probe),
        "barriers": ", ".join(f"{b0}:{b1}:{h:.17g}"
                              for b0, b1, h in scn.barriers),
    }
    if scn.wall is not None:
        lattice["wall"] = str(scn.wall)
    cp["lattice"] = lattice
    cp["packet"] = {"center": str(scn.center), "sigma": f"{scn.sigma:.17g}",
                    "k0": f"{scn.k0:.17g}"}
    cp["stepper"] = {"dt": f"{scn.dt:.17g}",
                     "t_horizon": f"{scn.t_horizon:.17g}"}
    greens = {"pad_factor": str(scn.pad_factor)}
    if scn.eta is not None:
        greens["eta"] = f"{scn.eta:.17g}"
    cp["greens"] = greens
    protocol = {
        "threshold": f"{scn.threshold:.17g}",
        "guard": f"{scn.guard:.17g}",
        "trm_c": f"{scn.trm_c:.17g}",
        "occupancy_bound": f"{scn.occupancy_bound:.17g}",
        "reversal_samples": str(scn.reversal_samples),
        "out_of_window_bound": f"{scn.out_of_window_bound:.17g}",
    }
    if scn.window is not None:
        protocol["window"] = f"{scn.window[0]:.17g}:{scn.window[1]:.17g}"
    cp["protocol"] = protocol
    cp["outputs"] = {"dir": scn.out_dir,
                     "snapshots": ", ".join(f"{t:.17g}"
                                            for t in scn.snapshot_times)}
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        cp.write(fh)
