"""End-to-end reversal protocols: forward recording, spectral
construction of the injection, and the echo run.

PIF builds the injection by dividing the reversed target's energy
representation pointwise by the probe's retarded Green's function; TRM
re-emits the conjugated mirror of the record's outgoing portion scaled
by a constant c.  Both share the recording pass, the transforms, and
the echo metrics, so the two runs differ only in the spectral
normalization step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import metrics
from .errors import DeconvolutionError, ValidationError
from .evolve import StepperConfig, evolve
from .greens import impulse_response
from .lattice import ChainModel
from .signals import (EnergyGrid, InjectionSchedule, ProbeRecord,
                      RecordingWindow, SpectralSignal, detect_window,
                      reversed_target, to_energy, to_time)
from .wavefield import WaveField, norm

# eta t_max at which the recorded kernel is cut off; exp(-12) keeps the
# truncated tail below the divisor's discretization error
_KERNEL_DECAY = 12.0


@dataclass(frozen=True)
class ProtocolConfig:
    """Knobs shared by the PIF and TRM drivers.

    eta = None ties the broadening to the detected window (hbar/T_rec).
    window, when set, pins (t1, tR) instead of detecting them -- the
    scenario anchor for refinement studies, where re-detection at each
    dt would jitter the comparison.
    """

    dt: float
    t_horizon: float
    threshold: float = 1e-8
    guard: float = 50.0
    eta: float | None = None
    pad_factor: int = 4
    trm_c: float = 1.0
    occupancy_bound: float = 1e-12
    window: tuple[float, float] | None = None
    reversal_samples: int = 17
    out_of_window_bound: float = 1e-4
    blowup_factor: float = 1e6
    extra_snapshots: tuple[float, ...] = ()

    def __post_init__(self):
        if self.t_horizon <= 0:
            raise ValidationError("t_horizon must be positive")
        if not 0.0 < self.threshold < 1.0:
            raise ValidationError(f"threshold={self.threshold} outside (0, 1)")
        if self.pad_factor < 1:
            raise ValidationError("pad_factor must be at least 1")
        if self.eta is not None and self.eta <= 0:
            raise ValidationError("eta override must be positive")
        if self.reversal_samples < 1:
            raise ValidationError("need at least one reversal sample")
        if self.window is not None and not self.window[0] < self.window[1]:
            raise ValidationError("pinned window must have t1 < tR")


@dataclass
class ProtocolReport:
    """Everything one reversal run produced."""

    protocol: str
    window: RecordingWindow | None
    eta: float
    grid: EnergyGrid | None
    record: ProbeRecord | None
    injection: InjectionSchedule | None
    snapshots: tuple[tuple[float, WaveField], ...]
    forward_snapshots: tuple[tuple[float, WaveField], ...]
    reversal_error_series: tuple[tuple[float, float], ...]
    echo_fidelity: float
    initial_velocity: float
    echo_velocity: float
    outer_density_series: tuple[tuple[float, float], ...]
    probe_series: ProbeRecord | None
    initial: WaveField
    trm_c: float | None = None
    degenerate: bool = False


def _cavity_mass(model: ChainModel, f: WaveField) -> float:
    return float(np.sum(np.abs(f.amplitudes[model.probe + 1:]) ** 2))


def run_forward(model: ChainModel, packet: WaveField, cfg: ProtocolConfig,
                t_end: float | None = None,
                snapshot_times: tuple[float, ...] = ()
                ) -> tuple[ProbeRecord, tuple[tuple[float, WaveField], ...]]:
    """Free forward evolution with the probe recording.

    The cavity must start empty: the packet's probability at x > x_s is
    checked against cfg.occupancy_bound before anything runs.
    """
    occupancy = _cavity_mass(model, packet)
    if occupancy > cfg.occupancy_bound:
        raise ValidationError(
            f"initial cavity occupancy {occupancy:.3e} exceeds bound "
            f"{cfg.occupancy_bound:.1e}")
    result = evolve(model, packet, StepperConfig(dt=cfg.dt),
                    t_end=t_end if t_end is not None else cfg.t_horizon,
                    record_site=model.probe, snapshot_times=snapshot_times)
    return result.record, result.snapshots


def _pinned_window(cfg: ProtocolConfig) -> RecordingWindow:
    t1 = round(cfg.window[0] / cfg.dt) * cfg.dt
    tR = round(cfg.window[1] / cfg.dt) * cfg.dt
    if tR > cfg.t_horizon + 1e-9:
        raise ValidationError("pinned tR lies beyond t_horizon")
    return RecordingWindow(t1=t1, tR=tR, threshold=cfg.threshold)


def _delta_steps(M: int, samples: int) -> list[int]:
    # candidate reversal checkpoints at fixed fractions of the window
    if samples == 1:
        fracs = [0.5]
    else:
        fracs = [0.1 + 0.8 * i / (samples - 1) for i in range(samples)]
    steps = sorted({min(max(round(f * M), 1), M - 1) for f in fracs})
    return steps


def _kept_steps(candidates: list[int], masses: dict[int, float]) -> list[int]:
    # the reversal metric is relative: comparing against a mirrored state
    # whose cavity is threshold-empty divides silencing noise by escaped
    # emptiness, so only checkpoints retaining at least half the peak
    # cavity mass count as samples
    top = max(masses.values())
    kept = [k for k in candidates if masses[k] >= 0.5 * top]
    return kept if kept else [max(candidates, key=lambda k: masses[k])]


def _outgoing_portion(record: ProbeRecord, window: RecordingWindow
                      ) -> ProbeRecord:
    """The record with everything before its escaping signal zeroed.

    A plain mirror should re-emit what left the cavity, not the entrance:
    replaying the conjugated entrance launches a second copy of the exit
    passage on top of the one the reversed cavity produces by itself.
    The cut falls at the end of the last sub-threshold quiet stretch
    (lasting at least a tenth of the window) that precedes the record's
    final signal; a record whose entrance never separates from the
    escape is returned whole.
    """
    dt = record.dt
    n1 = round((window.t1 - record.t0) / dt)
    nR = round((window.tR - record.t0) / dt)
    d = np.abs(record.samples[n1:nR + 1]) ** 2
    cut = window.threshold * float(np.max(d))
    above = np.nonzero(d >= cut)[0]
    quiet = d[:above[-1] + 1] < cut
    min_run = max(1, (nR - n1) // 10)
    gate = 0
    run = 0
    for i, q in enumerate(quiet):
        run = run + 1 if q else 0
        if run >= min_run:
            gate = i + 1
    if gate == 0:
        return record
    samples = record.samples.copy()
    samples[:n1 + gate] = 0.0
    return ProbeRecord(site=record.site, t0=record.t0, dt=dt,
                       samples=samples)


def _degenerate_report(protocol: str, packet: WaveField,
                       trm_c: float | None) -> ProtocolReport:
    return ProtocolReport(
        protocol=protocol, window=None, eta=float("nan"), grid=None,
        record=None, injection=None, snapshots=(), forward_snapshots=(),
        reversal_error_series=(), echo_fidelity=float("nan"),
        initial_velocity=float("nan"), echo_velocity=float("nan"),
        outer_density_series=(), probe_series=None, initial=packet,
        trm_c=trm_c, degenerate=True)


def _run_protocol(model: ChainModel, packet: WaveField, cfg: ProtocolConfig,
                  protocol: str) -> ProtocolReport:
    dt = cfg.dt
    s = model.probe
    trm_c = cfg.trm_c if protocol == "trm" else None
    if norm(packet) == 0.0:
        return _degenerate_report(protocol, packet, trm_c)

    # steps 2-3: record the escaping packet, fix the window
    if cfg.window is not None:
        window = _pinned_window(cfg)
    else:
        probe_rec, _ = run_forward(model, packet, cfg)
        window = detect_window(probe_rec, cfg.threshold, cfg.guard)
    nR = round(window.tR / dt)
    n1 = round(window.t1 / dt)
    M = nR - n1
    candidates = _delta_steps(M, cfg.reversal_samples)
    mirror_times = tuple((nR - k) * dt for k in candidates)
    extras = tuple(cfg.extra_snapshots)
    fwd_times = (0.0, window.t1) + mirror_times + (window.tR,) \
        + tuple(t for t in extras if 0.0 <= t <= window.tR)
    record, fwd_snaps = run_forward(model, packet, cfg, t_end=window.tR,
                                    snapshot_times=fwd_times)
    state_tR = fwd_snaps[-1][1]
    by_fwd = {round(t / dt): f for t, f in fwd_snaps}
    delta_steps = _kept_steps(
        candidates, {k: _cavity_mass(model, by_fwd[nR - k])
                     for k in candidates})

    # step 1 + step 4: spectral target over the window, normalized
    T_rec = window.duration
    eta = cfg.eta if cfg.eta is not None else model.units.hbar / T_rec
    grid = EnergyGrid.conjugate(dt, M, cfg.pad_factor, eta)
    target = reversed_target(record, window, grid)
    if protocol == "pif":
        # the kernel transform truncates at exp(-eta t_max); running the
        # response out to eta t_max = _KERNEL_DECAY and alias-folding
        # onto the conjugate circle keeps that truncation below the
        # discretization error of the divisor
        n_kernel = math.ceil(_KERNEL_DECAY / (eta * dt)) + 1
        kernel = impulse_response(model, s, t_max=(n_kernel - 1) * dt, dt=dt)
        g_hat = to_energy(kernel, grid).values
        eps = grid.energies
        # the recorded kernel lives on integer steps while the source
        # acts at midpoints; the half-step factor and the implicit
        # midpoint amplitude (1 + w^2)^(-1/2) realign the two grids
        w = 0.5 * dt * (eps + 1j * eta)
        divisor = g_hat * np.exp(1j * w) / np.sqrt(1.0 + w * w)
        chi_hat = np.zeros_like(target.values)
        band = (eps >= model.band_min - model.units.V) \
            & (eps <= model.band_max + model.units.V)
        chi_hat[band] = target.values[band] / divisor[band]
    else:
        outgoing = reversed_target(_outgoing_portion(record, window),
                                   window, grid)
        chi_hat = cfg.trm_c * outgoing.values
    schedule = to_time(SpectralSignal(grid, chi_hat), window, site=s,
                       out_of_window_bound=cfg.out_of_window_bound)
    peak_rec = float(np.max(np.abs(record.samples)))
    peak_chi = float(np.max(np.abs(schedule.samples))) if len(schedule) else 0.0
    if peak_chi > cfg.blowup_factor * peak_rec:
        raise DeconvolutionError(
            f"injection peak {peak_chi:.3e} exceeds {cfg.blowup_factor:.0e} x "
            f"recorded peak {peak_rec:.3e}")

    # step 5: inject from the actual tR state and follow through 2 tR
    outer_steps = sorted({round(k * M / 8) for k in range(1, 9)})
    t_inj_end = window.tR + M * dt
    inj_times = tuple((nR + k) * dt for k in delta_steps) \
        + tuple((nR + k) * dt for k in outer_steps) \
        + (t_inj_end,) \
        + tuple(t for t in extras if window.tR < t <= t_inj_end)
    first = evolve(model, state_tR, StepperConfig(dt=dt),
                   t_end=t_inj_end, schedule=schedule,
                   record_site=s, snapshot_times=inj_times)
    second = evolve(model, first.final, StepperConfig(dt=dt),
                    t_end=2 * window.tR, record_site=s,
                    snapshot_times=(2 * window.tR,)
                    + tuple(t for t in extras
                            if t_inj_end < t < 2 * window.tR))
    probe_samples = np.concatenate([first.record.samples,
                                    second.record.samples[1:]])
    probe_series = ProbeRecord(site=s, t0=window.tR, dt=dt,
                               samples=probe_samples)
    snapshots = tuple(fwd_snaps) + tuple(first.snapshots) \
        + tuple(second.snapshots)

    # metrics over the mirror pairs and the echo
    by_time = {round(t / dt): f for t, f in snapshots}
    pairs = []
    for k in delta_steps:
        pairs.append((k * dt, by_time[nR - k], by_time[nR + k]))
    reversal = metrics.cavity_reversal_error(model, pairs)
    echo_state = by_time[2 * nR]
    fidelity = metrics.echo_fidelity(echo_state, packet)
    mask = metrics.support_mask(packet)
    v0 = metrics.centroid_velocity(model, packet, dt, mask=mask)
    v_echo = metrics.centroid_velocity(model, echo_state, dt, mask=mask)
    outer = [(window.tR, metrics.outer_density(model, state_tR))]
    for k in outer_steps:
        outer.append(((nR + k) * dt,
                      metrics.outer_density(model, by_time[nR + k])))
    return ProtocolReport(
        protocol=protocol, window=window, eta=eta, grid=grid, record=record,
        injection=schedule, snapshots=snapshots, forward_snapshots=fwd_snaps,
        reversal_error_series=reversal, echo_fidelity=fidelity,
        initial_velocity=v0, echo_velocity=v_echo,
        outer_density_series=tuple(outer), probe_series=probe_series,
        initial=packet, trm_c=trm_c)


def run_pif(model: ChainModel, packet: WaveField,
            cfg: ProtocolConfig) -> ProtocolReport:
    """Record, deconvolve by G^R_{ss}(eps), and re-inject."""
    return _run_protocol(model, packet, cfg, "pif")


def run_trm(model: ChainModel, packet: WaveField,
            cfg: ProtocolConfig) -> ProtocolReport:
    """Baseline mirror: re-inject c * conj of the mirrored record.

    Only the outgoing portion of the record is mirrored (see
    _outgoing_portion); when entrance and escape overlap at the probe
    the whole window is re-emitted.  No spectral division happens
    either way.
    """
    return _run_protocol(model, packet, cfg, "trm")
