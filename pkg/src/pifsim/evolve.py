"""Time evolution under the chain Hamiltonian with an optional point
source, via the unitary Crank-Nicolson (implicit midpoint) scheme:

    (I + i dt H / 2) psi^{n+1} = (I - i dt H / 2) psi^n - i dt chi_mid e_s

The source sample chi_mid is taken at the step midpoint, keeping the
scheme second order in dt.  Source-free stepping is a Cayley transform
of H and therefore exactly norm-preserving up to roundoff.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import ValidationError
from .lattice import ChainModel
from .signals import InjectionSchedule, ProbeRecord
from .wavefield import WaveField


@dataclass(frozen=True)
class StepperConfig:
    """Step size and optional source site; scheme is fixed."""

    dt: float
    source_site: int | None = None
    scheme: str = "crank-nicolson"

    def __post_init__(self):
        # dt cap keeps the per-step phase error below 1e-4 over the band
        if not 0.0 < self.dt <= 0.1:
            raise ValidationError(f"dt={self.dt}; need 0 < dt <= 0.1")
        if self.scheme != "crank-nicolson":
            raise ValidationError(f"unknown scheme {self.scheme!r}")


@dataclass(frozen=True)
class EvolveResult:
    final: WaveField
    record: ProbeRecord | None
    snapshots: tuple[tuple[float, WaveField], ...]


class CrankNicolson:
    """Precomputed Thomas factorization of one chain + dt pair."""

    def __init__(self, model: ChainModel, cfg: StepperConfig):
        self.model = model
        self.cfg = cfg
        dt = cfg.dt
        hbar = model.units.hbar
        V = model.units.V
        alpha = 1.0 + 0.5j * dt * model.site_energies / hbar
        self.beta = np.complex128(-0.5j * dt * V / hbar)
        self.b_diag = 1.0 - 0.5j * dt * model.site_energies / hbar
        self.q = -self.beta
        n = model.n_sites
        denom = np.empty(n, np.complex128)
        self.mult = np.empty(n, np.complex128)
        denom[0] = alpha[0]
        self.mult[0] = 0.0
        for j in range(1, n):
            self.mult[j] = self.beta / denom[j - 1]
            denom[j] = alpha[j] - self.beta * self.mult[j]
        if np.any(denom == 0.0):
            raise ValidationError("singular Crank-Nicolson system")
        self.rdenom = 1.0 / denom
        self._source_scale = -1j * dt / hbar

    def run(self, psi: np.ndarray, n_steps: int,
            chi: np.ndarray | None = None, source_site: int | None = None,
            probe: int | None = None) -> np.ndarray | None:
        """Advance psi in place by n_steps; optionally record a site.

        chi holds the raw midpoint source samples for each step (the
        -i dt scaling is applied here).  Returns the probe record
        (one sample per step, taken after the step) or None.
        """
        record = np.empty(n_steps if probe is not None else 0, np.complex128)
        probe_idx = probe if probe is not None else -1
        if chi is None:
            _kernels.cn_steps_free(psi, self.b_diag, self.q, self.beta,
                                   self.mult, self.rdenom, n_steps, record,
                                   probe_idx)
        else:
            if len(chi) != n_steps:
                raise ValidationError(
                    f"schedule has {len(chi)} samples for {n_steps} steps")
            if source_site is None or not 0 < source_site < self.model.n_sites - 1:
                raise ValidationError("source site must be strictly interior")
            scaled = np.ascontiguousarray(self._source_scale * chi,
                                          dtype=np.complex128)
            _kernels.cn_steps_source(psi, self.b_diag, self.q, self.beta,
                                     self.mult, self.rdenom, scaled,
                                     source_site, record, probe_idx)
        return record if probe is not None else None


def step(model: ChainModel, field: WaveField, cfg: StepperConfig,
         source_value: complex | None = None) -> WaveField:
    """Advance a single Crank-Nicolson step."""
    if len(field) != model.n_sites:
        raise ValidationError("field length does not match chain")
    if source_value is not None and cfg.source_site is None:
        raise ValidationError("source value given but no source site set")
    cn = CrankNicolson(model, cfg)
    psi = field.amplitudes.astype(np.complex128, copy=True)
    if source_value is None:
        cn.run(psi, 1)
    else:
        cn.run(psi, 1, chi=np.array([source_value], np.complex128),
               source_site=cfg.source_site)
    return WaveField(psi, field.time_stamp + cfg.dt)


def _snap_steps(times, t0: float, dt: float, n_steps: int) -> list[int]:
    steps = []
    for t in times:
        k = round((t - t0) / dt)
        steps.append(min(max(k, 0), n_steps))
    return steps


def evolve(model: ChainModel, field: WaveField, cfg: StepperConfig,
           t_end: float, schedule: InjectionSchedule | None = None,
           record_site: int | None = None,
           snapshot_times: tuple[float, ...] = ()) -> EvolveResult:
    """Run repeated steps with observers.

    The probe record, when requested, includes the initial instant, so
    its samples sit on t0, t0+dt, ..., t_end.  Snapshot instants snap
    to the nearest grid point.  A schedule must live on the same grid
    and start where the field starts.
    """
    if len(field) != model.n_sites:
        raise ValidationError("field length does not match chain")
    dt = cfg.dt
    t0 = field.time_stamp
    n_steps = round((t_end - t0) / dt)
    if n_steps < 0 or abs((t_end - t0) - n_steps * dt) > 1e-9 * dt:
        raise ValidationError(
            f"t_end={t_end} is not on the dt grid starting at {t0}")
    chi = None
    source_site = None
    if schedule is not None:
        if abs(schedule.dt - dt) > 1e-12 * dt:
            raise ValidationError("schedule dt does not match stepper dt")
        if abs(schedule.t0 - t0) > 1e-9 * dt:
            raise ValidationError("schedule does not start with the field")
        if len(schedule) < n_steps:
            raise ValidationError(
                f"schedule has {len(schedule)} samples for {n_steps} steps")
        chi = schedule.samples[:n_steps]
        source_site = schedule.site
    cn = CrankNicolson(model, cfg)
    psi = field.amplitudes.astype(np.complex128, copy=True)
    record = np.empty(n_steps + 1, np.complex128) if record_site is not None \
        else None
    if record is not None:
        record[0] = psi[record_site]
    snap_steps = _snap_steps(snapshot_times, t0, dt, n_steps)
    snapshots: list[tuple[float, WaveField]] = []
    boundaries = sorted(set(snap_steps) | {0, n_steps})
    done = 0
    for k in boundaries:
        if k > done:
            seg = cn.run(psi, k - done,
                         chi=chi[done:k] if chi is not None else None,
                         source_site=source_site, probe=record_site)
            if record is not None:
                record[done + 1:k + 1] = seg
            done = k
        for snap in snap_steps:
            if snap == k:
                snapshots.append((t0 + k * dt, WaveField(psi.copy(), t0 + k * dt)))
                break
    probe_record = None
    if record_site is not None:
        probe_record = ProbeRecord(site=record_site, t0=t0, dt=dt,
                                   samples=record)
    return EvolveResult(final=WaveField(psi, t0 + n_steps * dt),
                        record=probe_record, snapshots=tuple(snapshots))
