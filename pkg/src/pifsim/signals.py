"""Probe-site time series, recording-window detection, and the damped
time<->energy transforms used by the reversal protocols.

Conventions
-----------
All signals live on the stepper grid (spacing dt); nothing here
resamples.  Energy-domain signals carry a broadening eta > 0: the
analysis transforms damp by exp(-eta t) (retarded prescription) and the
synthesis transform undamps by exp(+eta t).  On a DFT-conjugate grid
the two directions invert each other exactly, including the damping,
which is what makes the mirrored-record identities below hold to
machine precision rather than to quadrature accuracy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (DeconvolutionError, EmptySignalError, NoDecayError,
                     ValidationError)

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class ProbeRecord:
    """Complex amplitude at one site, uniformly sampled from t0."""

    site: int
    t0: float
    dt: float
    samples: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.dt <= 0:
            raise ValidationError(f"record dt={self.dt}; must be positive")
        self.samples.setflags(write=False)

    def __len__(self) -> int:
        return self.samples.shape[0]

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(len(self))


@dataclass(frozen=True)
class RecordingWindow:
    """Support window (t1, tR) of the probe record; T_rec = tR - t1."""

    t1: float
    tR: float
    threshold: float

    def __post_init__(self):
        if not self.t1 < self.tR:
            raise ValidationError(f"window has t1={self.t1} >= tR={self.tR}")

    @property
    def duration(self) -> float:
        return self.tR - self.t1


@dataclass(frozen=True)
class InjectionSchedule:
    """Source amplitude chi(t) at one site on the stepper grid.

    samples[m] drives step m of an evolution starting at t0, i.e. it is
    consumed at the midpoint t0 + (m + 1/2) dt.  out_of_window_fraction
    reports the energy share that the synthesis placed beyond the
    window before truncation.
    """

    site: int
    t0: float
    dt: float
    samples: np.ndarray = field(repr=False)
    out_of_window_fraction: float = 0.0

    def __post_init__(self):
        if self.dt <= 0:
            raise ValidationError(f"schedule dt={self.dt}; must be positive")
        self.samples.setflags(write=False)

    def __len__(self) -> int:
        return self.samples.shape[0]


@dataclass(frozen=True)
class EnergyGrid:
    """Uniform energy grid with retarded broadening eta."""

    n_points: int
    eps_min: float
    eps_max: float
    eta: float

    def __post_init__(self):
        if self.n_points < 1:
            raise ValidationError("energy grid needs at least one point")
        if self.n_points > 1 and not self.eps_max > self.eps_min:
            raise ValidationError("energy grid has eps_max <= eps_min")
        if self.eta <= 0:
            raise ValidationError(f"eta={self.eta}; must be positive")

    @property
    def spacing(self) -> float:
        if self.n_points == 1:
            return 0.0
        return (self.eps_max - self.eps_min) / (self.n_points - 1)

    @property
    def energies(self) -> np.ndarray:
        return self.eps_min + self.spacing * np.arange(self.n_points)

    @classmethod
    def conjugate(cls, dt: float, n_window_steps: int, pad_factor: int,
                  eta: float) -> "EnergyGrid":
        """DFT-conjugate grid of a window of n_window_steps steps,
        zero-padded by pad_factor: eps_k = 2 pi k / (L dt)."""
        if n_window_steps < 1 or pad_factor < 1:
            raise ValidationError("conjugate grid needs a nonempty window")
        L = pad_factor * (n_window_steps + 1)
        spacing = TWO_PI / (L * dt)
        return cls(n_points=L, eps_min=0.0, eps_max=(L - 1) * spacing, eta=eta)


@dataclass(frozen=True)
class SpectralSignal:
    """Complex function sampled on an EnergyGrid."""

    grid: EnergyGrid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.values.shape != (self.grid.n_points,):
            raise ValidationError("spectral values do not match grid length")
        self.values.setflags(write=False)


def _dft_length(grid: EnergyGrid, dt: float) -> int | None:
    """Return L when grid is the conjugate grid of step dt, else None."""
    L = grid.n_points
    if L < 2 or grid.eps_min != 0.0:
        return None
    ideal = (L - 1) * (TWO_PI / (L * dt))
    if math.isclose(grid.eps_max, ideal, rel_tol=1e-12, abs_tol=0.0):
        return L
    return None


def _grid_steps(t: float, dt: float, what: str) -> int:
    n = round(t / dt)
    if abs(t - n * dt) > 1e-9 * dt:
        raise ValidationError(f"{what}={t} is not on the dt={dt} grid")
    return n


def _mod_phase(k_factor: int, L: int, sign: float) -> np.ndarray:
    # exp(sign * 2 pi i k*k_factor/L) with the angle reduced in exact
    # integer arithmetic so huge k*k_factor cannot lose precision
    k = np.arange(L, dtype=np.int64)
    red = (k * (k_factor % L)) % L
    return np.exp(sign * 2j * math.pi * red / L)


def to_energy(record: ProbeRecord, grid: EnergyGrid) -> SpectralSignal:
    """Damped half-axis transform of a time record.

    values(eps_k) = dt * sum_n w_n record(t_n) exp(+i (eps_k + i eta) t_n)

    with trapezoid end weights w (1/2 on the first and last sample).
    The half-weight on the t = 0 sample is what removes the O(dt)
    endpoint bias of the plain Riemann sum; with it the transform of a
    damped level matches 1/(eps - E0 + i eta) to O(dt^2).

    On the conjugate grid of the record's dt (and t0 = 0) the sum is
    evaluated by FFT; a record longer than the grid is folded modulo
    the circle first, which is exact there because exp(i eps_k t_n)
    is L-periodic in n.  Any other grid takes the direct vectorized
    path.  All paths are deterministic.
    """
    n = len(record)
    if n < 2:
        raise ValidationError("record too short to transform")
    eta = grid.eta
    dt = record.dt
    w = np.ones(n)
    w[0] = 0.5
    w[-1] = 0.5
    L = _dft_length(grid, dt)
    if L is not None and record.t0 == 0.0:
        damped = record.samples * w * np.exp(-eta * dt * np.arange(n))
        blocks = -(-n // L)
        padded = np.zeros(blocks * L, dtype=np.complex128)
        padded[:n] = damped
        folded = padded.reshape(blocks, L).sum(axis=0)
        values = dt * L * np.fft.ifft(folded)
        return SpectralSignal(grid, values)
    t = record.times
    weighted = record.samples * w * np.exp(-eta * t)
    eps = grid.energies
    values = np.empty(grid.n_points, dtype=np.complex128)
    for lo in range(0, grid.n_points, 128):
        hi = min(lo + 128, grid.n_points)
        values[lo:hi] = np.exp(1j * np.outer(eps[lo:hi], t)) @ weighted
    return SpectralSignal(grid, dt * values)


def detect_window(record: ProbeRecord, threshold: float = 1e-8,
                  guard: float = 50.0) -> RecordingWindow:
    """Locate the support window (t1, tR) of the probe record.

    t1 is the last instant before the density peak still below
    threshold*peak (falling back to the record start when the record
    begins already above threshold).  tR is the first instant after the
    peak at which the density drops below threshold*peak and stays
    below it for the full guard interval.

    Raises EmptySignalError on an all-zero record and NoDecayError when
    no certified tR exists before the record ends -- the symptom of a
    state trapped in the cavity.
    """
    if len(record) == 0:
        raise EmptySignalError("probe record is empty")
    if not 0.0 < threshold < 1.0:
        raise ValidationError(f"threshold={threshold}; need 0 < threshold < 1")
    d = np.abs(record.samples) ** 2
    peak = float(d.max())
    if peak == 0.0:
        raise EmptySignalError("probe record carries no signal")
    cut = threshold * peak
    ipk = int(d.argmax())
    below = d < cut
    pre = np.flatnonzero(below[:ipk + 1])
    i1 = int(pre[-1]) if pre.size else 0
    guard_steps = max(1, round(guard / record.dt))
    # certified quiet stretch: below[m : m + guard_steps + 1] all true
    c = np.concatenate(([0], np.cumsum(below.astype(np.int64))))
    last_start = len(record) - 1 - guard_steps
    if last_start > ipk:
        starts = np.arange(ipk + 1, last_start + 1)
        quiet = (c[starts + guard_steps + 1] - c[starts]) == guard_steps + 1
        hits = np.flatnonzero(quiet)
        if hits.size:
            iR = int(starts[hits[0]])
            return RecordingWindow(t1=record.t0 + i1 * record.dt,
                                   tR=record.t0 + iR * record.dt,
                                   threshold=threshold)
    raise NoDecayError(
        "probe signal never settles below threshold for the guard interval; "
        "possible localized state in the cavity")


def reversed_target(record: ProbeRecord, window: RecordingWindow,
                    grid: EnergyGrid) -> SpectralSignal:
    """Energy representation of the conjugated, time-mirrored record.

    values(eps) = dt * sum_{m=0..M} conj(record(tR - m dt))
                  * exp(+i eps (tR + m dt)) * exp(-eta m dt)

    i.e. the record inside (t1, tR) is conjugated, mirrored about tR,
    phased to begin at tR, and damped relative to tR with the grid's
    eta.  Damping from the window start (not from absolute zero) is
    what lets to_time invert this transform exactly.
    """
    dt = record.dt
    n1 = _grid_steps(window.t1 - record.t0, dt, "window.t1 - record.t0")
    nR = _grid_steps(window.tR - record.t0, dt, "window.tR - record.t0")
    if not 0 <= n1 < nR <= len(record) - 1:
        raise ValidationError("window does not fit inside the record")
    M = nR - n1
    x = np.conj(record.samples[nR - np.arange(M + 1)])
    eta = grid.eta
    L = _dft_length(grid, dt)
    tR_steps = round(window.tR / dt)
    aligned = abs(window.tR - tR_steps * dt) <= 1e-9 * dt
    if L is not None and M + 1 <= L and aligned:
        damped = x * np.exp(-eta * dt * np.arange(M + 1))
        padded = np.zeros(L, dtype=np.complex128)
        padded[:M + 1] = damped
        values = dt * L * np.fft.ifft(padded) * _mod_phase(tR_steps, L, +1.0)
        return SpectralSignal(grid, values)
    tau = dt * np.arange(M + 1)
    weighted = x * np.exp(-eta * tau)
    eps = grid.energies
    values = np.empty(grid.n_points, dtype=np.complex128)
    for lo in range(0, grid.n_points, 128):
        hi = min(lo + 128, grid.n_points)
        block = np.exp(1j * np.outer(eps[lo:hi], tau)) @ weighted
        values[lo:hi] = block * np.exp(1j * eps[lo:hi] * window.tR)
    return SpectralSignal(grid, dt * values)


def to_time(spectral: SpectralSignal, window: RecordingWindow,
            site: int = -1,
            out_of_window_bound: float = 1e-4) -> InjectionSchedule:
    """Synthesize the injection schedule on [tR, tR + T_rec].

    Inverts the conjugate-grid analysis transform exactly:

    x(tau_m) = (spacing / 2 pi) * sum_k values_k
               * exp(-i eps_k (tR + tau_m)) * exp(+eta tau_m)

    then keeps the M in-window samples.  The energy fraction that the
    synthesis placed beyond the window is verified against
    out_of_window_bound before truncation and reported on the schedule;
    exceeding the bound is the deconvolution blow-up symptom.

    The fraction is measured in the damped variables of the transform,
    before the exp(+eta tau) factor.  Any cavity mode with a node at
    the source site puts a near-zero of the divisor next to the
    evaluation contour; the resulting sub-threshold residual rings
    across the padded circle and the undamping factor inflates it by
    exp(eta L dt) at the far end, so the undamped fraction is dominated
    by that amplified residual even when the causal solution is sound.
    The damped fraction stays proportional to the actual silencing
    failure and still diverges on a genuine blow-up.
    """
    grid = spectral.grid
    L = grid.n_points
    if L < 2 or grid.eps_min != 0.0:
        raise ValidationError("spectral signal is not on a conjugate grid")
    dt = TWO_PI / (L * grid.spacing)
    M = round(window.duration / dt)
    if abs(window.duration - M * dt) > 1e-9 * dt or M < 1:
        raise ValidationError(
            "window duration is not on the grid implied by the spectrum")
    if M + 1 > L:
        raise ValidationError("window longer than the spectral transform")
    tR_steps = round(window.tR / dt)
    if abs(window.tR - tR_steps * dt) > 1e-9 * dt:
        raise ValidationError(f"window.tR={window.tR} is off the time grid")
    shifted = spectral.values * _mod_phase(tR_steps, L, -1.0)
    x = np.fft.fft(shifted) * (grid.spacing / TWO_PI)
    total = float(np.sum(np.abs(x) ** 2))
    outside = float(np.sum(np.abs(x[M:]) ** 2))
    fraction = outside / total if total > 0.0 else 0.0
    if fraction > out_of_window_bound:
        raise DeconvolutionError(
            f"out-of-window energy fraction {fraction:.3e} exceeds "
            f"{out_of_window_bound:.1e}; deconvolution likely unstable")
    samples = x[:M] * np.exp(grid.eta * dt * np.arange(M))
    return InjectionSchedule(site=site, t0=window.tR, dt=dt,
                             samples=samples,
                             out_of_window_fraction=fraction)
