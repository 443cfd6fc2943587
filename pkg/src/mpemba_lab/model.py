"""Spin-chain Hamiltonians and bulk jump operators.

Operators are stored as Pauli strings (complex coefficient times a product of
single-site Paulis) and realized as dense matrices on demand, so the dense and
fermionic code paths share one symbolic source of truth.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex),
    "Y": np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex),
    "Z": np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex),
}

DEFAULT_MAX_DENSE_SITES = 16


class Boundary(str, Enum):
    PERIODIC = "periodic"
    OPEN = "open"


class Family(str, Enum):
    TFIM = "tfim"
    STAGGERED_XXZ = "staggered_xxz"


class BudgetError(ValueError):
    """Requested dense realization exceeds the configured size budget."""


@dataclass(frozen=True)
class PauliTerm:
    """coeff * prod_{(site, p)} sigma^p_site, sites strictly increasing."""

    coeff: complex
    factors: tuple[tuple[int, str], ...]

    def __post_init__(self):
        sites = [s for s, _ in self.factors]
        if sites != sorted(set(sites)):
            raise ValueError("factor sites must be strictly increasing")
        for _, p in self.factors:
            if p not in "XYZ":
                raise ValueError(f"unknown Pauli label {p!r}")

    def shifted(self, offset: int, L: int) -> "PauliTerm":
        factors = tuple(sorted(((s + offset) % L, p) for s, p in self.factors))
        return PauliTerm(self.coeff, factors)


@dataclass(frozen=True)
class SpinChainSpec:
    """Symbolic description of a translationally structured spin-1/2 chain."""

    L: int
    family: Family
    boundary: Boundary
    couplings: dict
    terms: tuple[PauliTerm, ...]

    def __post_init__(self):
        if self.L < 2:
            raise ValueError(f"need at least 2 sites, got L={self.L}")
        for name, value in self.couplings.items():
            if not np.isfinite(value):
                raise ValueError(f"coupling {name} is not finite: {value}")
        if (
            self.family is Family.STAGGERED_XXZ
            and self.boundary is Boundary.PERIODIC
            and self.L % 2
        ):
            raise ValueError("periodic staggering needs even L")


@dataclass(frozen=True)
class LindbladSpec:
    """Bulk jump operators: one two-site template anchored at each site.

    With open boundaries the anchor at the last site is dropped (its template
    has no right neighbor); with periodic boundaries it wraps around.
    """

    L: int
    kind: str
    epsilon: float
    boundary: Boundary
    anchors: tuple[int, ...]
    templates: tuple[tuple[PauliTerm, ...], ...] = field(repr=False)

    def __post_init__(self):
        if self.epsilon < 0:
            raise ValueError(f"epsilon must be >= 0, got {self.epsilon}")
        for anchor, terms in zip(self.anchors, self.templates):
            allowed = {anchor, (anchor + 1) % self.L}
            for term in terms:
                sites = {s for s, _ in term.factors}
                if not sites <= allowed:
                    raise ValueError("jump template extends past sites {j, j+1}")


def _tfim_terms(L, J, h_z, h_x, boundary):
    terms = []
    bonds = range(L) if boundary is Boundary.PERIODIC else range(L - 1)
    for j in bonds:
        if J != 0.0:
            terms.append(PauliTerm(J, tuple(sorted(((j, "X"), ((j + 1) % L, "X"))))))
    for j in range(L):
        if h_z != 0.0:
            terms.append(PauliTerm(h_z, ((j, "Z"),)))
        if h_x != 0.0:
            terms.append(PauliTerm(h_x, ((j, "X"),)))
    return tuple(terms)


def build_tfim(L, J, h_z, h_x, boundary=Boundary.PERIODIC) -> SpinChainSpec:
    """H = sum_j J X_j X_{j+1} + h_z Z_j + h_x X_j."""
    boundary = Boundary(boundary)
    return SpinChainSpec(
        L=L,
        family=Family.TFIM,
        boundary=boundary,
        couplings={"J": float(J), "h_z": float(h_z), "h_x": float(h_x)},
        terms=_tfim_terms(L, float(J), float(h_z), float(h_x), boundary),
    )


def build_staggered_xxz(L, J, delta_even, delta_odd, boundary=Boundary.PERIODIC) -> SpinChainSpec:
    """H = -sum_j [J (X_j X_{j+1} + Y_j Y_{j+1}) + Delta_j Z_j Z_{j+1}].

    Delta_j alternates between delta_even (bonds 0, 2, ...) and delta_odd;
    conserves total magnetization sum_j Z_j by construction.
    """
    boundary = Boundary(boundary)
    J = float(J)
    deltas = (float(delta_even), float(delta_odd))
    terms = []
    bonds = range(L) if boundary is Boundary.PERIODIC else range(L - 1)
    for j in bonds:
        k = (j + 1) % L
        if J != 0.0:
            terms.append(PauliTerm(-J, tuple(sorted(((j, "X"), (k, "X"))))))
            terms.append(PauliTerm(-J, tuple(sorted(((j, "Y"), (k, "Y"))))))
        if deltas[j % 2] != 0.0:
            terms.append(PauliTerm(-deltas[j % 2], tuple(sorted(((j, "Z"), (k, "Z"))))))
    return SpinChainSpec(
        L=L,
        family=Family.STAGGERED_XXZ,
        boundary=boundary,
        couplings={"J": J, "delta_even": deltas[0], "delta_odd": deltas[1]},
        terms=tuple(terms),
    )


def _hop_template():
    # S+_0 S-_1 + S^z_0 + 1/2, with S^a = sigma^a / 2; fermionizes to
    # c^dag_0 (c_1 + c_0) under the Jordan-Wigner convention used throughout.
    return (
        PauliTerm(0.25, ((0, "X"), (1, "X"))),
        PauliTerm(0.25, ((0, "Y"), (1, "Y"))),
        PauliTerm(-0.25j, ((0, "X"), (1, "Y"))),
        PauliTerm(0.25j, ((0, "Y"), (1, "X"))),
        PauliTerm(0.5, ((0, "Z"),)),
        PauliTerm(0.5, ()),
    )


def _raise_template():
    # (1/2) S+_0 (1 - Z_1) + X_0; mixes total-magnetization sectors.
    return (
        PauliTerm(0.25, ((0, "X"),)),
        PauliTerm(0.25j, ((0, "Y"),)),
        PauliTerm(-0.25, ((0, "X"), (1, "Z"))),
        PauliTerm(-0.25j, ((0, "Y"), (1, "Z"))),
        PauliTerm(1.0, ((0, "X"),)),
    )


def _bulk_lindblad(L, kind, epsilon, boundary, template):
    boundary = Boundary(boundary)
    anchors = tuple(range(L)) if boundary is Boundary.PERIODIC else tuple(range(L - 1))
    templates = tuple(
        tuple(term.shifted(j, L) for term in template) for j in anchors
    )
    return LindbladSpec(
        L=L,
        kind=kind,
        epsilon=float(epsilon),
        boundary=boundary,
        anchors=anchors,
        templates=templates,
    )


def build_lindblad_hop(L, epsilon, boundary=Boundary.PERIODIC) -> LindbladSpec:
    """Quasiparticle-scattering dissipator L_j = S+_j S-_{j+1} + S^z_j + 1/2."""
    return _bulk_lindblad(L, "hop", epsilon, boundary, _hop_template())


def build_lindblad_raise(L, epsilon, boundary=Boundary.PERIODIC) -> LindbladSpec:
    """Sector-mixing dissipator L_j = (1/2) S+_j (1 - Z_{j+1}) + X_j."""
    return _bulk_lindblad(L, "raise", epsilon, boundary, _raise_template())


def dense_term(term: PauliTerm, L: int) -> np.ndarray:
    ops = {s: PAULI[p] for s, p in term.factors}
    out = np.array([[term.coeff]])
    for site in range(L):
        out = np.kron(out, ops.get(site, PAULI["I"]))
    return out


def _check_budget(L, max_sites):
    if L > max_sites:
        raise BudgetError(f"dense realization of L={L} exceeds budget of {max_sites} sites")


def dense_operator(spec: SpinChainSpec, max_sites=DEFAULT_MAX_DENSE_SITES) -> np.ndarray:
    """Exact 2^L x 2^L matrix of the Hamiltonian; Hermitian by construction."""
    _check_budget(spec.L, max_sites)
    H = np.zeros((2**spec.L, 2**spec.L), dtype=complex)
    for term in spec.terms:
        H += dense_term(term, spec.L)
    herm_err = np.max(np.abs(H - H.conj().T))
    scale = max(np.max(np.abs(H)), 1.0)
    if herm_err > 1e-12 * scale:
        raise ValueError(f"dense Hamiltonian not Hermitian: |H - H^dag| = {herm_err:g}")
    return H


def dense_lindblad_ops(spec: LindbladSpec, max_sites=DEFAULT_MAX_DENSE_SITES) -> list[np.ndarray]:
    """One dense jump operator per anchor site (coupling rate kept separate)."""
    _check_budget(spec.L, max_sites)
    ops = []
    for terms in spec.templates:
        op = np.zeros((2**spec.L, 2**spec.L), dtype=complex)
        for term in terms:
            op += dense_term(term, spec.L)
        ops.append(op)
    return ops


def total_sz(L: int) -> np.ndarray:
    """sum_j Z_j (total magnetization up to the factor of 2)."""
    out = np.zeros((2**L, 2**L), dtype=complex)
    for j in range(L):
        out += dense_term(PauliTerm(1.0, ((j, "Z"),)), L)
    return out


def parity_operator(L: int) -> np.ndarray:
    """Fermion parity prod_j (-Z_j): +1 on even, -1 on odd fermion number."""
    diag = np.ones(1)
    for _ in range(L):
        diag = np.kron(diag, np.array([-1.0, 1.0]))
    return np.diag(diag).astype(complex)


def reflection_operator(L: int) -> np.ndarray:
    """Site reversal j -> L-1-j as a permutation on the computational basis."""
    dim = 2**L
    source = np.arange(dim)
    target = np.zeros(dim, dtype=int)
    for s in source:
        r = 0
        for k in range(L):
            r |= ((s >> k) & 1) << (L - 1 - k)
        target[s] = r
    R = np.zeros((dim, dim))
    R[target, source] = 1.0
    return R
