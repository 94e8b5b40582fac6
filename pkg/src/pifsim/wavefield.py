"""Instantaneous wave function on the chain and Gaussian packets."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import erfc

from .errors import ValidationError
from .lattice import ChainModel, hamiltonian_matvec


@dataclass(frozen=True)
class WaveField:
    """Complex amplitude per site at one instant."""

    amplitudes: np.ndarray = field(repr=False)
    time_stamp: float = 0.0

    def __post_init__(self):
        self.amplitudes.setflags(write=False)

    def __len__(self) -> int:
        return self.amplitudes.shape[0]


def norm(f: WaveField) -> float:
    return float(np.linalg.norm(f.amplitudes))


def total_probability(f: WaveField) -> float:
    return float(np.sum(np.abs(f.amplitudes) ** 2))


def density(f: WaveField) -> np.ndarray:
    return np.abs(f.amplitudes) ** 2


def overlap(a: WaveField, b: WaveField) -> complex:
    if len(a) != len(b):
        raise ValidationError("overlap of fields with different lengths")
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def conjugate(f: WaveField) -> WaveField:
    """Complex conjugation: the momentum-inverting antiunitary."""
    return WaveField(np.conj(f.amplitudes), f.time_stamp)


def apply_hamiltonian(model: ChainModel, f: WaveField) -> WaveField:
    return WaveField(hamiltonian_matvec(model, f.amplitudes), f.time_stamp)


def gaussian_packet(model: ChainModel, center: int, sigma: float,
                    k0: float) -> WaveField:
    """Normalized Gaussian packet exp(-(j-c)^2/(4 sigma^2)) exp(i k0 j).

    The envelope is truncated only by machine underflow.  Construction
    fails if the lattice edges clip more than 1e-12 of the packet's
    probability, so every shipped packet is effectively interior.
    """
    if not 0 <= center < model.n_sites:
        raise ValidationError(f"packet center {center} outside lattice")
    if sigma <= 0:
        raise ValidationError(f"sigma={sigma}; must be positive")
    # probability clipped by either edge, from the Gaussian tail integral
    clipped = 0.5 * (erfc(center / (sigma * np.sqrt(2.0)))
                     + erfc((model.n_sites - 1 - center) / (sigma * np.sqrt(2.0))))
    if clipped > 1e-12:
        raise ValidationError(
            f"packet support clipped by lattice edge (lost {clipped:.2e})")
    j = np.arange(model.n_sites)
    envelope = np.exp(-((j - center) ** 2) / (4.0 * sigma ** 2))
    psi = envelope * np.exp(1j * k0 * j)
    total = np.sum(np.abs(psi) ** 2)
    return WaveField(psi / np.sqrt(total), 0.0)
