"""Dense realizations of the fermion chain for small-L cross-checks.

Jordan-Wigner convention: sigma^z_j = 2 n_j - 1, sigma^+_j = exp(i pi
sum_{l<j} n_l) c^dag_j, i.e. c^dag_j = [prod_{l<j} (-Z_l)] sigma^+_j.
Fourier phase: c_j = e^{-i pi/4} / sqrt(L) sum_q e^{i q j} c_q with 0-based
site labels. Everything here is exponentially expensive and exists to pin
down conventions for the Gaussian and rate-equation code paths.
"""

from __future__ import annotations

import numpy as np

from .freefermion import BogoliubovTable, MomentumGrid, Parity
from .model import PAULI

_SIGMA_MINUS = np.array([[0.0, 0.0], [1.0, 0.0]], dtype=complex)


def annihilation_ops(L: int) -> list[np.ndarray]:
    """Dense c_j with the Jordan-Wigner string of (-Z) on sites left of j."""
    ops = []
    for j in range(L):
        out = np.array([[1.0 + 0.0j]])
        for site in range(L):
            if site < j:
                out = np.kron(out, -PAULI["Z"])
            elif site == j:
                out = np.kron(out, _SIGMA_MINUS)
            else:
                out = np.kron(out, PAULI["I"])
        ops.append(out)
    return ops


def momentum_ops(grid: MomentumGrid, c_ops=None) -> list[np.ndarray]:
    """c_q = e^{+i pi/4} / sqrt(L) sum_j e^{-i q j} c_j."""
    L = grid.L
    if c_ops is None:
        c_ops = annihilation_ops(L)
    phase = np.exp(1.0j * np.pi / 4.0) / np.sqrt(L)
    return [
        phase * sum(np.exp(-1.0j * q * j) * c_ops[j] for j in range(L))
        for q in grid.q
    ]


def bogoliubov_ops(table: BogoliubovTable, c_ops=None) -> list[np.ndarray]:
    """Quasiparticle annihilators d_q = u_q c_q + v_q c^dag_{-q}."""
    cq = momentum_ops(table.grid, c_ops)
    neg = table.grid.neg_index
    return [
        table.u[k] * cq[k] + table.v[k] * cq[neg[k]].conj().T
        for k in range(table.grid.L)
    ]


def mode_number_ops(table: BogoliubovTable, c_ops=None) -> list[np.ndarray]:
    dq = bogoliubov_ops(table, c_ops)
    return [d.conj().T @ d for d in dq]


def fermion_hamiltonian(table: BogoliubovTable, c_ops=None) -> np.ndarray:
    """H = sum_q eps_q (n_q - 1/2) built from dense mode occupations."""
    nq = mode_number_ops(table, c_ops)
    dim = nq[0].shape[0]
    H = np.zeros((dim, dim), dtype=complex)
    for k, n in enumerate(nq):
        H += table.eps[k] * (n - 0.5 * np.eye(dim))
    return H


def fermion_hamiltonian_realspace(L, J, h_z, parity, c_ops=None) -> np.ndarray:
    """Fermionized chain built bond by bond, with the sector boundary twist.

    H = sum_j J (c^dag_j - c_j)(c_{j+1} + c^dag_{j+1}) + h_z (2 n_j - 1),
    closing with c_L = -c_0 in the even (antiperiodic) sector and c_L = +c_0
    in the odd (periodic) one. Independent of the momentum-space route, so
    equality with `fermion_hamiltonian` validates the whole transformation.
    """
    parity = Parity(parity)
    if c_ops is None:
        c_ops = annihilation_ops(L)
    dim = c_ops[0].shape[0]
    H = np.zeros((dim, dim), dtype=complex)
    for j in range(L):
        cj = c_ops[j]
        k = (j + 1) % L
        sign = 1.0
        if k != j + 1:
            sign = -1.0 if parity is Parity.EVEN else 1.0
        ck = sign * c_ops[k]
        H += J * (cj.conj().T - cj) @ (ck + ck.conj().T)
        H += h_z * (2.0 * cj.conj().T @ cj - np.eye(dim))
    return H


def gge_density_matrix(mu, table: BogoliubovTable, c_ops=None) -> np.ndarray:
    """rho = exp(-sum_q mu_q n_q) / Z on the full (unprojected) Fock space."""
    mu = np.asarray(mu, dtype=float)
    nq = mode_number_ops(table, c_ops)
    dim = nq[0].shape[0]
    K = np.zeros((dim, dim), dtype=complex)
    for k, n in enumerate(nq):
        K += mu[k] * n
    w, V = np.linalg.eigh(K)
    boltz = np.exp(-(w - w.min()))
    rho = (V * boltz) @ V.conj().T
    return rho / np.trace(rho).real


def majorana_ops(L: int, c_ops=None) -> list[np.ndarray]:
    """Interleaved Majoranas: index 2j -> i (c_j - c^dag_j), 2j+1 -> c_j + c^dag_j."""
    if c_ops is None:
        c_ops = annihilation_ops(L)
    out = []
    for c in c_ops:
        out.append(1.0j * (c - c.conj().T))
        out.append(c + c.conj().T)
    return out


def correlation_matrix_dense(rho, ell, majoranas=None) -> np.ndarray:
    """Gamma_ij = Tr[a_i a_j rho] - delta_ij on the leftmost ell sites."""
    if majoranas is None:
        L = int(np.log2(rho.shape[0]))
        majoranas = majorana_ops(L)
    a = majoranas[: 2 * ell]
    gamma = np.empty((2 * ell, 2 * ell), dtype=complex)
    for i, ai in enumerate(a):
        for j, aj in enumerate(a):
            gamma[i, j] = np.trace(ai @ aj @ rho)
    gamma -= np.eye(2 * ell)
    return gamma
