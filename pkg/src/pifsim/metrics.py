"""Measurements taken on reversal runs.

Everything here is a pure function of wavefields and records; nothing
mutates its inputs or touches the steppers except centroid_velocity,
which evolves a throwaway copy to estimate the drift direction.
"""

from __future__ import annotations

import numpy as np

from .errors import ValidationError
from .evolve import StepperConfig, evolve
from .lattice import ChainModel
from .signals import ProbeRecord, RecordingWindow
from .wavefield import WaveField, density

_SUPPORT_REL = 1e-8
_SUPPORT_DILATE = 25
_DRIFT_STEPS = 100


def support_mask(field: WaveField, rel: float = _SUPPORT_REL,
                 dilate: int = _SUPPORT_DILATE) -> np.ndarray:
    """Sites where the density exceeds rel * peak, widened by dilate."""
    rho = density(field)
    cut = rel * float(rho.max())
    mask = rho > cut
    if dilate > 0 and mask.any():
        idx = np.flatnonzero(mask)
        lo = max(int(idx[0]) - dilate, 0)
        hi = min(int(idx[-1]) + dilate, mask.size - 1)
        mask[lo:hi + 1] = True
    return mask


def cavity_reversal_error(
        model: ChainModel,
        pairs: list[tuple[float, WaveField, WaveField]],
) -> tuple[tuple[float, float], ...]:
    """Relative mismatch between |psi(tR + dt')> and conj |psi(tR - dt')>
    over the cavity x > x_s, for each (dt', before, after) pair."""
    out = []
    lo = model.probe + 1
    for delta, before, after in pairs:
        ref = np.conj(before.amplitudes[lo:])
        got = after.amplitudes[lo:]
        scale = float(np.linalg.norm(ref))
        err = float(np.linalg.norm(got - ref))
        out.append((delta, err / scale if scale > 0 else float("nan")))
    return tuple(out)


def echo_fidelity(echo: WaveField, initial: WaveField) -> float:
    """Overlap of the echo with the conjugated initial packet,
    |<conj psi_0 | psi>|^2, restricted to the support of the initial
    packet.

    The restriction matters: the injection run starts from psi(tR), so
    debris of the forward field that never returns (the transmitted
    part still travelling outward at 2 tR) coexists with the echo.  It
    lies far outside the initial support and must not dilute the
    normalization there.
    """
    mask = support_mask(initial)
    a = initial.amplitudes[mask]
    b = echo.amplitudes[mask]
    na = float(np.sum(np.abs(a) ** 2))
    nb = float(np.sum(np.abs(b) ** 2))
    if na == 0.0:
        return float("nan")
    if nb == 0.0:
        # nothing returned into the initial support
        return 0.0
    return float(np.abs(np.sum(a * b)) ** 2 / (na * nb))


def outer_density(model: ChainModel, field: WaveField) -> float:
    """Probability on the open side x < x_s."""
    return float(np.sum(density(field)[:model.probe]))


def centroid_velocity(model: ChainModel, field: WaveField, dt: float,
                      mask: np.ndarray | None = None,
                      steps: int = _DRIFT_STEPS) -> float:
    """Drift of the density centroid over a short free evolution.

    The mask pins the averaging region so that low-density debris far
    from the packet cannot swamp the first moment; pass the mask of a
    reference packet to compare velocities on equal footing.
    """
    if mask is None:
        mask = support_mask(field)
    sites = np.arange(len(field), dtype=float)

    def centroid(f: WaveField) -> float:
        w = density(f)[mask]
        total = float(w.sum())
        if total == 0.0:
            return float("nan")
        return float(np.sum(sites[mask] * w) / total)

    c0 = centroid(field)
    moved = evolve(model, field, StepperConfig(dt=dt),
                   t_end=field.time_stamp + steps * dt).final
    return (centroid(moved) - c0) / (steps * dt)


def probe_echo_correlation(record: ProbeRecord, probe_series: ProbeRecord,
                           window: RecordingWindow) -> float:
    """Shape agreement between the mirrored forward probe density and
    the density replayed at the probe during injection."""
    dt = record.dt
    nR = round((window.tR - record.t0) / dt)
    M = round(window.duration / dt)
    if nR >= len(record) or M >= len(probe_series):
        raise ValidationError("records do not cover the recording window")
    k = np.arange(M + 1)
    forward = np.abs(record.samples[nR - k]) ** 2
    replay = np.abs(probe_series.samples[k]) ** 2
    return shape_correlation(forward, replay)


def shape_correlation(x: np.ndarray, y: np.ndarray) -> float:
    """Cosine similarity of two nonnegative sample sequences."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ValueError(f"shape mismatch {x.shape} vs {y.shape}")
    nx = float(np.linalg.norm(x))
    ny = float(np.linalg.norm(y))
    if nx == 0.0 or ny == 0.0:
        return float("nan")
    return float(np.dot(x, y) / (nx * ny))
