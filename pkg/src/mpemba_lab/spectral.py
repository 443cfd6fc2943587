"""Slow-relaxation analysis in the energy-diagonal subspace.

At weak coupling the slow dynamics lives in the span of projectors onto
Hamiltonian eigenstates. Restricted there, the dissipator becomes the real
matrix D_mn = <m| D(|n><n|) |m>, a classical Markov generator (nonnegative
off-diagonal entries, zero column sums). Its slowest decaying mode and the
overlap of initial states with it decide which states relax anomalously
fast, which is the mechanism behind distance-trajectory crossings.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .exact import DistanceKind
from .model import BudgetError

SPECTRAL_BUDGET = 14  # eig of a 2^L x 2^L dense nonsymmetric matrix


@dataclass(frozen=True)
class Eigenbasis:
    energies: np.ndarray
    vectors: np.ndarray  # columns are eigenstates
    labels: dict  # name -> per-state eigenvalue of a commuting diagonal symmetry


def eigenbasis(H, diagonal_symmetries=None, block_symmetries=(),
               degeneracy_tol=1e-9) -> Eigenbasis:
    """Eigenbasis of H with degeneracies resolved by commuting symmetries.

    `diagonal_symmetries` maps names to computational-basis diagonal vectors
    commuting with H (total magnetization, fermion parity); H is
    diagonalized sector by sector so eigenvectors stay symmetry-pure even
    when eigenvalues collide across sectors. `block_symmetries` are dense
    Hermitian operators (spatial reflection) diagonalized inside remaining
    degenerate eigenvalue clusters, which pins down the basis that the
    diagonal projection depends on. Residual degeneracies after both steps
    leave an arbitrary (but deterministic) choice.
    """
    dim = H.shape[0]
    if np.iscomplexobj(H) and not np.any(H.imag):
        H = H.real  # real symmetric path: half the memory and matmul cost
    if not diagonal_symmetries:
        energies, vectors = np.linalg.eigh(H)
        labels = {}
    else:
        names = sorted(diagonal_symmetries)
        key = np.stack([np.asarray(diagonal_symmetries[k]).real for k in names])
        sectors = {}
        for idx in range(dim):
            sectors.setdefault(tuple(np.round(key[:, idx], 9)), []).append(idx)
        energies = np.empty(dim)
        vectors = np.zeros((dim, dim), dtype=H.dtype)
        labels = {k: np.empty(dim) for k in names}
        filled = 0
        for sector_key, idx in sorted(sectors.items()):
            idx = np.array(idx)
            w, v = np.linalg.eigh(H[np.ix_(idx, idx)])
            cols = slice(filled, filled + len(idx))
            energies[cols] = w
            vectors[idx, cols] = v
            for name, value in zip(names, sector_key):
                labels[name][cols] = value
            filled += len(idx)
        order = np.argsort(energies, kind="stable")
        energies = energies[order]
        vectors = vectors[:, order]
        labels = {k: v[order] for k, v in labels.items()}
    for S in block_symmetries:
        vectors = _resolve_degenerate_blocks(energies, vectors, S, degeneracy_tol)
    return Eigenbasis(energies=energies, vectors=vectors, labels=labels)


def _resolve_degenerate_blocks(energies, vectors, S, tol):
    i = 0
    n = len(energies)
    while i < n:
        j = i + 1
        while j < n and energies[j] - energies[j - 1] < tol:
            j += 1
        if j - i > 1:
            block = vectors[:, i:j]
            Sb = block.conj().T @ S @ block
            _, rot = np.linalg.eigh((Sb + Sb.conj().T) / 2)
            vectors[:, i:j] = block @ rot
        i = j
    return vectors


@dataclass(frozen=True)
class ProjectedDissipator:
    D: np.ndarray
    basis: Eigenbasis
    epsilon: float


def projected_dissipator(H, lindblads, eps, diagonal_symmetries=None,
                         block_symmetries=(), basis=None,
                         max_sites=SPECTRAL_BUDGET) -> ProjectedDissipator:
    """D_mn = eps sum_j |<m|L_j|n>|^2 off the diagonal, columns summing to zero."""
    dim = H.shape[0]
    if int(np.log2(dim)) > max_sites:
        raise BudgetError(f"projected dissipator at L={int(np.log2(dim))} exceeds "
                          f"budget {max_sites}")
    if basis is None:
        basis = eigenbasis(H, diagonal_symmetries, block_symmetries)
    V = basis.vectors
    K = np.zeros((dim, dim))
    for L in lindblads:
        # jump operators are few-site and extremely sparse; only the final
        # rotation back into the eigenbasis is a dense product
        Y = sp.csr_matrix(L) @ V
        M = V.conj().T @ Y
        K += (M.real**2 + M.imag**2)
    D = eps * (K - np.diag(K.sum(axis=0)))
    return ProjectedDissipator(D=D, basis=basis, epsilon=float(eps))


@dataclass(frozen=True)
class SlowModePair:
    eigenvalue: complex
    right: np.ndarray
    left: np.ndarray  # normalized so that <left|right> = 1
    degenerate: bool = False


def slow_modes(pd: ProjectedDissipator, k=1, zero_tol=None, degeneracy_tol=1e-10):
    """The k slowest strictly decaying eigenpairs of D plus the steady state.

    Conserved quantities of the dissipator (fermion parity for the
    scattering dissipator on the h_x = 0 chain) make the null space
    degenerate; every eigenvalue with |Re| below `zero_tol` counts as a zero
    mode and is excluded from the decaying list. `steady` is the null-space
    component of the uniform (infinite-temperature) distribution, i.e. the
    state that initial thermal states actually relax to, trace-normalized.
    Right eigenvectors are sign-fixed by their largest-magnitude component;
    left vectors are the matching rows of the inverse eigenvector matrix, so
    biorthonormality holds by construction.
    """
    D = pd.D
    if zero_tol is None:
        zero_tol = 1e-10 * max(pd.epsilon, 1.0)
    evals, V = sla.eig(D)
    if np.max(np.abs(evals.imag)) > 1e-8 * max(np.max(np.abs(evals.real)), 1.0):
        warnings.warn(f"projected dissipator has complex spectrum "
                      f"(max |Im| = {np.max(np.abs(evals.imag)):.3e})")
    order = np.argsort(-evals.real)
    evals, V = evals[order], V[:, order]
    signs = np.sign(V[np.argmax(np.abs(V), axis=0), np.arange(V.shape[1])].real)
    signs[signs == 0] = 1.0
    V = V * signs
    W = np.linalg.inv(V)

    zero = np.abs(evals.real) < zero_tol
    if not np.any(zero):
        raise ValueError(f"no zero mode found: closest eigenvalue "
                         f"{evals[np.argmin(np.abs(evals.real))]:.3e}")
    dim = D.shape[0]
    uniform = np.full(dim, 1.0 / dim)
    steady = np.zeros(dim)
    for i in np.flatnonzero(zero):
        steady += (W[i, :] @ uniform).real * V[:, i].real
    steady = steady / steady.sum()

    decaying = np.flatnonzero(~zero)
    pairs = []
    for rank, i in enumerate(decaying[:k]):
        degenerate = False
        if rank + 1 < len(decaying):
            nxt = decaying[rank + 1]
            degenerate = abs(evals[i].real - evals[nxt].real) < degeneracy_tol
        pairs.append(SlowModePair(
            eigenvalue=complex(evals[i]),
            right=V[:, i],
            left=W[i, :].conj(),
            degenerate=degenerate,
        ))
    return pairs, steady


def slow_overlap(pair: SlowModePair, rho_diag) -> float:
    """||rho_r||_1 * Tr[rho_l^dag rho_init] for a diagonal initial state."""
    rho_diag = np.asarray(rho_diag)
    norm1 = np.sum(np.abs(pair.right))
    return float((norm1 * np.vdot(pair.left, rho_diag)).real)


def thermal_diagonal(basis: Eigenbasis, beta, mu=0.0, label="sz") -> np.ndarray:
    """Diagonal (eigenbasis) weights of exp(-beta H - mu C_label) / Z."""
    log_w = -beta * basis.energies
    if mu:
        if label not in basis.labels:
            raise ValueError(f"basis carries no symmetry label {label!r}")
        log_w = log_w - mu * basis.labels[label]
    log_w -= log_w.max()
    w = np.exp(log_w)
    return w / w.sum()


def diagonal_distance(p, r, kind) -> float:
    """Distances between two states diagonal in the same basis."""
    kind = DistanceKind(kind)
    diff = np.asarray(p) - np.asarray(r)
    if kind is DistanceKind.TRACE:
        return float(np.sum(np.abs(diff)))
    fro = float(np.sqrt(np.sum(diff**2)))
    if kind is DistanceKind.FROBENIUS:
        return fro
    return fro / float(np.sqrt(np.sum(np.square(p)) + np.sum(np.square(r))))


def landscape(H, lindblads, eps, beta_grid, mu_grid=None,
              diagonal_symmetries=None, block_symmetries=(), mu_label="sz",
              max_sites=SPECTRAL_BUDGET):
    """Overlap with the slowest mode and distances to the projected steady
    state over a (beta, mu) grid of initial GGE states.

    Returns a list of rows (beta, mu, overlap, d_trace, d_frob, d_norm); the
    mu direction needs `diagonal_symmetries` to carry `mu_label`.
    """
    pd = projected_dissipator(H, lindblads, eps, diagonal_symmetries,
                              block_symmetries, max_sites=max_sites)
    pairs, steady = slow_modes(pd, k=1)
    slow = pairs[0]
    if mu_grid is None:
        mu_grid = [0.0]
    rows = []
    for mu in mu_grid:
        for beta in beta_grid:
            p = thermal_diagonal(pd.basis, beta, mu, mu_label)
            rows.append((
                float(beta),
                float(mu),
                slow_overlap(slow, p),
                diagonal_distance(p, steady, DistanceKind.TRACE),
                diagonal_distance(p, steady, DistanceKind.FROBENIUS),
                diagonal_distance(p, steady, DistanceKind.NORMALIZED),
            ))
    return rows
