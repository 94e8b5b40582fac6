"""Retarded Green's function of the chain at a site, in time and energy
domains, plus the split-chain Dyson identity used to validate it.

The production route to G^R(eps) is the time-domain one: evolve a unit
impulse, read the probe site, and apply the damped transform
(signals.to_energy).  Direct resolvent solves are kept as the
independent cross-check; the two must agree at matched broadening.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import solve_banded

from .errors import ValidationError
from .evolve import CrankNicolson, StepperConfig
from .lattice import ChainModel
from .signals import ProbeRecord


def impulse_response(model: ChainModel, site: int, t_max: float,
                     dt: float) -> ProbeRecord:
    """Time-domain retarded Green's function at one site.

    Evolves the unit impulse delta_{j,site} source-free and returns

        G^R_{ss}(t_n) = -(i/hbar) <site| U(t_n) |site>,   t_n = n dt,

    sampled on 0 <= t_n <= t_max (the t = 0 sample is -i/hbar).
    G^R(t < 0) vanishes by construction and is not stored.

    Parameters
    ----------
    model : ChainModel
    site : int
        Impulse and readout site.
    t_max : float
        Record horizon; must be a positive grid multiple of dt.
    dt : float
        Stepper resolution for the underlying evolution.
    """
    if not 0 <= site < model.n_sites:
        raise ValidationError(f"site {site} outside lattice")
    if t_max <= 0:
        raise ValidationError(f"t_max={t_max}; must be positive")
    n_steps = round(t_max / dt)
    if n_steps < 1 or abs(t_max - n_steps * dt) > 1e-9 * dt:
        raise ValidationError(f"t_max={t_max} is not on the dt={dt} grid")
    cn = CrankNicolson(model, StepperConfig(dt=dt))
    psi = np.zeros(model.n_sites, np.complex128)
    psi[site] = 1.0
    trace = np.empty(n_steps + 1, np.complex128)
    trace[0] = 1.0
    rec = cn.run(psi, n_steps, probe=site)
    trace[1:] = rec
    hbar = model.units.hbar
    return ProbeRecord(site=site, t0=0.0, dt=dt, samples=-1j * trace / hbar)


def _tridiag_solve(diag: np.ndarray, off: complex, rhs: np.ndarray) -> np.ndarray:
    n = diag.shape[0]
    ab = np.zeros((3, n), np.complex128)
    ab[0, 1:] = off
    ab[1, :] = diag
    ab[2, :-1] = off
    return solve_banded((1, 1), ab, rhs)


def resolvent_element(model: ChainModel, i: int, j: int,
                      epsilon_complex: complex) -> complex:
    """Matrix element [(z - H)^{-1}]_{ij} by direct tridiagonal solve.

    The energy argument must lie in the upper half plane (retarded
    prescription); z = eps + i eta.
    """
    z = complex(epsilon_complex)
    if z.imag <= 0:
        raise ValidationError(f"Im(z)={z.imag}; retarded resolvent needs Im > 0")
    if not (0 <= i < model.n_sites and 0 <= j < model.n_sites):
        raise ValidationError("resolvent indices outside lattice")
    rhs = np.zeros(model.n_sites, np.complex128)
    rhs[j] = 1.0
    # off-diagonal of (z - H) is +V since the hopping is -V
    x = _tridiag_solve(z - model.site_energies.astype(np.complex128),
                       model.units.V, rhs)
    return complex(x[i])


def _half_chain_resolvent_column(model: ChainModel, lo: int, hi: int,
                                 col: int, z: complex) -> np.ndarray:
    """Column of the resolvent of the chain restricted to sites lo..hi
    (inclusive) with the bond beyond the range removed; returned on the
    full lattice with zeros outside the range."""
    diag = z - model.site_energies[lo:hi + 1].astype(np.complex128)
    rhs = np.zeros(hi - lo + 1, np.complex128)
    rhs[col - lo] = 1.0
    x = _tridiag_solve(diag, model.units.V, rhs)
    out = np.zeros(model.n_sites, np.complex128)
    out[lo:hi + 1] = x
    return out


def dyson_check(model: ChainModel, cut: int, epsilon_complex: complex,
                probes: tuple[int, ...] | None = None) -> float:
    """Residual of the split-chain Dyson identity at one energy.

    The bond (cut, cut+1) is removed, decoupling the chain into two
    half chains with resolvent Gbar.  For x right of the cut and any
    x_n left of it the full resolvent must reconnect through the cut
    hopping V_{cut+1,cut} = -V:

        G_{x,x_n} = Gbar_{x,x_n} + Gbar_{x,cut+1} V_{cut+1,cut} G_{cut,x_n}

    (the first term vanishing across the cut), together with the
    closed form G_{x,cut} = Gbar_{x,cut+1} V_{cut+1,cut} G_{cut,cut}.
    Returns the largest absolute residual over the probe set.
    """
    z = complex(epsilon_complex)
    if z.imag <= 0:
        raise ValidationError("Dyson check needs Im(z) > 0")
    n = model.n_sites
    if not 0 <= cut < n - 1:
        raise ValidationError(f"cut bond ({cut}, {cut + 1}) outside lattice")
    V_cut = -model.units.V
    if probes is None:
        right = sorted({cut + 1, cut + 1 + (n - 2 - cut) // 3,
                        cut + 1 + 2 * (n - 2 - cut) // 3, n - 1})
        left = sorted({0, cut // 2, max(cut - 1, 0), cut})
    else:
        right = sorted({x for x in probes if x > cut})
        left = sorted({x for x in probes if x <= cut})
    diag_full = z - model.site_energies.astype(np.complex128)
    # full-chain columns G_{.,x_n} for each left index
    rhs = np.zeros(n, np.complex128)
    g_cols = {}
    for xn in left:
        rhs[:] = 0.0
        rhs[xn] = 1.0
        g_cols[xn] = _tridiag_solve(diag_full, model.units.V, rhs)
    gbar_right = _half_chain_resolvent_column(model, cut + 1, n - 1,
                                              cut + 1, z)
    residual = 0.0
    for xn in left:
        gbar_col = _half_chain_resolvent_column(model, 0, cut, xn, z)
        for x in right:
            lhs = g_cols[xn][x]
            rhs_val = gbar_col[x] + gbar_right[x] * V_cut * g_cols[xn][cut]
            residual = max(residual, abs(lhs - rhs_val))
    # closed form across the cut against the full diagonal element
    g_cut = g_cols.get(cut)
    if g_cut is None:
        rhs[:] = 0.0
        rhs[cut] = 1.0
        g_cut = _tridiag_solve(diag_full, model.units.V, rhs)
    for x in right:
        lhs = g_cut[x]
        rhs_val = gbar_right[x] * V_cut * g_cut[cut]
        residual = max(residual, abs(lhs - rhs_val))
    return residual
