"""Inner Crank-Nicolson stepping loops.

One step solves A psi' = B psi + chi e_s with A = I + i dt H / 2 and
B = I - i dt H / 2 (chi already carries its -i dt factor).  A is
tridiagonal with constant off-diagonal beta, so its Thomas
factorization is precomputed once: mult[j] = beta / denom[j-1],
denom[j] = alpha[j] - beta * mult[j].  No pivoting is needed --
|alpha_j| >= 1 while |beta| = dt V / 2, so the system is strictly
diagonally dominant for every dt the stepper accepts.

The forward sweep builds the right-hand side on the fly and the back
substitution multiplies by precomputed reciprocals; both matter at the
millions-of-steps scale the protocols run at.  The _py mirrors repeat
the arithmetic in the same order so tests can pin the compiled kernels
to plain-Python IEEE semantics bit for bit.
"""

import numba
import numpy as np


@numba.njit(cache=True)
def cn_steps_free(psi, b_diag, q, beta, mult, rdenom, n_steps, record, probe):
    n = psi.shape[0]
    y = np.empty(n, np.complex128)
    for step in range(n_steps):
        y[0] = b_diag[0] * psi[0] + q * psi[1]
        for j in range(1, n - 1):
            y[j] = (b_diag[j] * psi[j] + q * (psi[j - 1] + psi[j + 1])) \
                - mult[j] * y[j - 1]
        y[n - 1] = (b_diag[n - 1] * psi[n - 1] + q * psi[n - 2]) \
            - mult[n - 1] * y[n - 2]
        psi[n - 1] = y[n - 1] * rdenom[n - 1]
        for j in range(n - 2, -1, -1):
            psi[j] = (y[j] - beta * psi[j + 1]) * rdenom[j]
        if probe >= 0:
            record[step] = psi[probe]


@numba.njit(cache=True)
def cn_steps_source(psi, b_diag, q, beta, mult, rdenom, chi, src, record,
                    probe):
    n = psi.shape[0]
    y = np.empty(n, np.complex128)
    for step in range(chi.shape[0]):
        y[0] = b_diag[0] * psi[0] + q * psi[1]
        for j in range(1, n - 1):
            r = b_diag[j] * psi[j] + q * (psi[j - 1] + psi[j + 1])
            if j == src:
                r = r + chi[step]
            y[j] = r - mult[j] * y[j - 1]
        y[n - 1] = (b_diag[n - 1] * psi[n - 1] + q * psi[n - 2]) \
            - mult[n - 1] * y[n - 2]
        psi[n - 1] = y[n - 1] * rdenom[n - 1]
        for j in range(n - 2, -1, -1):
            psi[j] = (y[j] - beta * psi[j + 1]) * rdenom[j]
        if probe >= 0:
            record[step] = psi[probe]


def cn_steps_free_py(psi, b_diag, q, beta, mult, rdenom, n_steps, record,
                     probe):
    n = psi.shape[0]
    y = np.empty(n, np.complex128)
    for step in range(n_steps):
        y[0] = b_diag[0] * psi[0] + q * psi[1]
        for j in range(1, n - 1):
            y[j] = (b_diag[j] * psi[j] + q * (psi[j - 1] + psi[j + 1])) \
                - mult[j] * y[j - 1]
        y[n - 1] = (b_diag[n - 1] * psi[n - 1] + q * psi[n - 2]) \
            - mult[n - 1] * y[n - 2]
        psi[n - 1] = y[n - 1] * rdenom[n - 1]
        for j in range(n - 2, -1, -1):
            psi[j] = (y[j] - beta * psi[j + 1]) * rdenom[j]
        if probe >= 0:
            record[step] = psi[probe]


def cn_steps_source_py(psi, b_diag, q, beta, mult, rdenom, chi, src, record,
                       probe):
    n = psi.shape[0]
    y = np.empty(n, np.complex128)
    for step in range(chi.shape[0]):
        y[0] = b_diag[0] * psi[0] + q * psi[1]
        for j in range(1, n - 1):
            r = b_diag[j] * psi[j] + q * (psi[j - 1] + psi[j + 1])
            if j == src:
                r = r + chi[step]
            y[j] = r - mult[j] * y[j - 1]
        y[n - 1] = (b_diag[n - 1] * psi[n - 1] + q * psi[n - 2]) \
            - mult[n - 1] * y[n - 2]
        psi[n - 1] = y[n - 1] * rdenom[n - 1]
        for j in range(n - 2, -1, -1):
            psi[j] = (y[j] - beta * psi[j + 1]) * rdenom[j]
        if probe >= 0:
            record[step] = psi[probe]
