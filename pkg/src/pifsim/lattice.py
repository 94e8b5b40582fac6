"""Tight-binding chain: geometry, potential profile, Hamiltonian.

The chain Hamiltonian is tridiagonal: diagonal E_j = U(x_j) + 2V and
off-diagonal -V on every adjacent pair.  Natural units hbar = a = V = 1
throughout; the UnitSystem dataclass exists so derived quantities (band
edges, maximum group speed) are computed rather than hard-coded.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError


@dataclass(frozen=True)
class UnitSystem:
    """Natural units; hopping V doubles as the energy unit."""

    hbar: float = 1.0
    a: float = 1.0
    V: float = 1.0

    def __post_init__(self):
        if not (self.hbar > 0 and self.a > 0 and self.V > 0):
            raise ValidationError("unit constants must be strictly positive")

    @property
    def v_max(self) -> float:
        """Largest group speed on the lattice, 2Va/hbar."""
        return 2.0 * self.V * self.a / self.hbar


@dataclass(frozen=True)
class PotentialProfile:
    """Piecewise-constant on-site potential U(x_j).

    Segments are (start, end, height) with inclusive site indices and
    height in units of V.  Ends carry a boundary tag; a finite chain
    always terminates in hard walls, and "padded" marks an end whose
    wall is deep enough to stay causally invisible within the run's
    time window.
    """

    segments: tuple[tuple[int, int, float], ...] = ()
    boundaries: tuple[str, str] = ("wall", "wall")

    def __post_init__(self):
        for tag in self.boundaries:
            if tag not in ("wall", "padded"):
                raise ValidationError(f"unknown boundary kind {tag!r}")
        spans = []
        for seg in self.segments:
            if len(seg) != 3:
                raise ValidationError("segment must be (start, end, height)")
            start, end, height = seg
            if start > end:
                raise ValidationError(f"segment ({start}, {end}) is reversed")
            if not math.isfinite(height):
                raise ValidationError("segment height must be finite")
            spans.append((start, end))
        spans.sort()
        for (_, e0), (s1, _) in zip(spans, spans[1:]):
            if s1 <= e0:
                raise ValidationError("potential segments overlap")


@dataclass(frozen=True)
class ChainModel:
    """Immutable chain: site energies plus uniform hopping -V."""

    n_sites: int
    probe: int
    site_energies: np.ndarray = field(repr=False)
    units: UnitSystem = UnitSystem()

    def __post_init__(self):
        self.site_energies.setflags(write=False)

    @property
    def hopping(self) -> float:
        return -self.units.V

    @property
    def band_min(self) -> float:
        return float(self.site_energies.min()) - 2.0 * self.units.V

    @property
    def band_max(self) -> float:
        return float(self.site_energies.max()) + 2.0 * self.units.V


def build_chain(n_sites: int, probe_index: int,
                profile: PotentialProfile | None = None,
                units: UnitSystem = UnitSystem()) -> ChainModel:
    """Assemble the chain with E_j = U(x_j) + 2V and hopping -V."""
    if n_sites < 3:
        raise ValidationError(f"n_sites={n_sites}; need at least 3")
    if not 0 < probe_index < n_sites - 1:
        raise ValidationError(
            f"probe {probe_index} must be strictly interior to 0..{n_sites - 1}")
    profile = profile or PotentialProfile()
    energies = np.full(n_sites, 2.0 * units.V, dtype=np.float64)
    for start, end, height in profile.segments:
        if start < 0 or end >= n_sites:
            raise ValidationError(
                f"segment ({start}, {end}) exceeds lattice 0..{n_sites - 1}")
        energies[start:end + 1] += height * units.V
    return ChainModel(n_sites=n_sites, probe=probe_index,
                      site_energies=energies, units=units)


def hamiltonian_matvec(model: ChainModel, psi: np.ndarray) -> np.ndarray:
    """(H psi)_j = E_j psi_j - V psi_{j-1} - V psi_{j+1}, walls outside."""
    if psi.shape != (model.n_sites,):
        raise ValidationError(
            f"field length {psi.shape} does not match chain {model.n_sites}")
    out = model.site_energies * psi
    V = model.units.V
    out[:-1] -= V * psi[1:]
    out[1:] -= V * psi[:-1]
    return out
