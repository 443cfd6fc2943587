"""Subsystem distances between fermionic Gaussian states.

A GGE over mode occupations is Gaussian, so an ell-site reduced density
matrix is fully encoded by the 2ell x 2ell Majorana correlation matrix
Gamma_ij = Tr[a_i a_j rho] - delta_ij (purely imaginary, antisymmetric,
Hermitian, eigenvalues in [-1, 1]). Traces of products of two RDMs reduce
to determinants:

    Tr[rho_A rho~_A] = det| (1 + Gamma Gamma~) / 2 |^{1/2},

evaluated in log space so large subsystems do not underflow.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import lu_factor

from .freefermion import BogoliubovTable
from .gge_flow import GridMismatchError, OccupationState


@dataclass(frozen=True)
class CorrelationMatrix:
    ell: int
    gamma: np.ndarray

    def __post_init__(self):
        g = self.gamma
        if g.shape != (2 * self.ell, 2 * self.ell):
            raise ValueError(f"gamma shape {g.shape} does not match ell={self.ell}")
        anti = np.max(np.abs(g + g.T))
        if anti > 1e-10:
            raise ValueError(f"gamma not antisymmetric: |G + G^T| = {anti:.3e}")
        evals = np.linalg.eigvalsh(g)
        if np.max(np.abs(evals)) > 1.0 + 1e-9:
            raise ValueError(f"gamma spectrum leaves [-1, 1]: max |ev| = {np.max(np.abs(evals)):.6f}")


def correlation_matrix(state: OccupationState, table: BogoliubovTable, ell: int) -> CorrelationMatrix:
    """Block-Toeplitz Gamma_A of the GGE with the state's occupations.

    The 2x2 block at (site i, site j) depends only on m = i - j and is built
    from three momentum sums over the grid (tanh(mu/2) = 1 - 2n):

        S(m) = (1/L) sum_q sin(mq) [u_q^2 n_q + v_q^2 (1 - n_{-q})]
        C(m) = (1/L) sum_q cos(mq) [u_q^2 n_q + v_q^2 (1 - n_{-q})]
        F(m) = (1/L) sum_q sin(mq) u_q v_q (1 - n_q - n_{-q})

    giving block [[-2iS, i(2F + delta_{m0} - 2C)], [i(2F - delta_{m0} + 2C), -2iS]]
    in the Majorana ordering (i(c - c^dag), c + c^dag) per site. The S term
    vanishes for occupations symmetric under q -> -q (thermal and anything
    reached from thermal by the flow) but is kept for general states.
    """
    if not np.array_equal(state.grid.q, table.grid.q):
        raise GridMismatchError("state and table live on different grids")
    L = table.grid.L
    if not 1 <= ell <= L:
        raise ValueError(f"subsystem size ell={ell} out of range 1..{L}")
    q = table.grid.q
    neg = table.grid.neg_index
    n = state.n
    h = table.u**2 * n + table.v**2 * (1.0 - n[neg])
    s = table.u * table.v * (1.0 - n - n[neg])
    m = np.arange(1 - ell, ell)
    sin_mq = np.sin(np.outer(m, q))
    cos_mq = np.cos(np.outer(m, q))
    S = sin_mq @ h / L
    C = cos_mq @ h / L
    F = sin_mq @ s / L
    delta = (m == 0).astype(float)
    upper = 2.0 * F + delta - 2.0 * C  # (odd, even) entry / i
    lower = 2.0 * F - delta + 2.0 * C  # (even, odd) entry / i
    gamma = np.zeros((2 * ell, 2 * ell), dtype=complex)
    for bi in range(ell):
        for bj in range(ell):
            k = (bi - bj) + (ell - 1)
            gamma[2 * bi, 2 * bj] = -2.0j * S[k]
            gamma[2 * bi + 1, 2 * bj + 1] = -2.0j * S[k]
            gamma[2 * bi, 2 * bj + 1] = 1.0j * upper[k]
            gamma[2 * bi + 1, 2 * bj] = 1.0j * lower[k]
    return CorrelationMatrix(ell=ell, gamma=gamma)


def _log_half_det(matrix) -> float | None:
    """log det|M/2|^{1/2}; None marks a numerically singular M."""
    dim = matrix.shape[0]
    lu, _ = lu_factor(matrix, check_finite=False)
    diag = np.abs(np.diag(lu))
    if np.any(diag < 1e-14):
        return None
    return 0.5 * (np.sum(np.log(diag)) - dim * np.log(2.0))


def trace_product(ca: CorrelationMatrix, cb: CorrelationMatrix) -> float:
    """Tr[rho_A rho~_A] from the correlation matrices of the two states."""
    if ca.ell != cb.ell:
        raise ValueError(f"subsystem sizes differ: {ca.ell} vs {cb.ell}")
    M = np.eye(2 * ca.ell) + ca.gamma @ cb.gamma
    log_val = _log_half_det(M)
    if log_val is None:
        return 0.0
    value = float(np.exp(log_val))
    if value > 1.0 + 1e-9:
        raise ValueError(f"Tr[rho rho~] = {value} exceeds 1; invalid correlation input")
    return min(value, 1.0)


def purity(c: CorrelationMatrix) -> float:
    return trace_product(c, c)


def normalized_frobenius_gaussian(ca: CorrelationMatrix, cb: CorrelationMatrix) -> float:
    """d = sqrt( Tr[(rho_A - rho~_A)^2] / (Tr[rho_A^2] + Tr[rho~_A^2]) ) in [0, 1]."""
    pa = purity(ca)
    pb = purity(cb)
    cross = trace_product(ca, cb)
    num = max(pa + pb - 2.0 * cross, 0.0)
    return float(np.sqrt(num / (pa + pb)))


def parity_average(observable_even, observable_odd):
    """Arithmetic mean over the two parity sectors (elementwise for arrays)."""
    return 0.5 * (np.asarray(observable_even) + np.asarray(observable_odd))
