"""Quasiparticle diagonalization of the integrable transverse-field chain.

The h_x = 0 chain maps to free fermions (Jordan-Wigner, then Fourier, then a
Bogoliubov rotation). Periodic spin chains split into two fermion-parity
sectors carrying different momentum grids; each grid gets its own table of
transformation coefficients and dispersion.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np


class Parity(str, Enum):
    EVEN = "even"  # antiperiodic fermions, half-integer momenta
    ODD = "odd"  # periodic fermions, integer momenta


class GaplessModeError(ValueError):
    """Some mode energy is below tolerance; u, v are ill-conditioned there."""


@dataclass(frozen=True)
class MomentumGrid:
    L: int
    parity: Parity
    q: np.ndarray

    def __post_init__(self):
        if self.L < 2:
            raise ValueError(f"need L >= 2, got {self.L}")

    @property
    def neg_index(self) -> np.ndarray:
        """Index permutation sending mode q to (2 pi - q) mod 2 pi."""
        k = np.arange(self.L)
        if self.parity is Parity.EVEN:
            return self.L - 1 - k
        return (self.L - k) % self.L


def momentum_grid(L, parity) -> MomentumGrid:
    """Even sector: q = 2 pi (k + 1/2) / L; odd sector: q = 2 pi k / L."""
    parity = Parity(parity)
    k = np.arange(L, dtype=float)
    if parity is Parity.EVEN:
        q = 2.0 * np.pi * (k + 0.5) / L
    else:
        q = 2.0 * np.pi * k / L
    return MomentumGrid(L=L, parity=parity, q=q)


@dataclass(frozen=True)
class BogoliubovTable:
    """Per-mode coefficients (a, b, u, v) and dispersion eps on one grid."""

    grid: MomentumGrid
    J: float
    h_z: float
    a: np.ndarray
    b: np.ndarray
    u: np.ndarray
    v: np.ndarray
    eps: np.ndarray


def bogoliubov(J, h_z, grid: MomentumGrid, gap_tol=1e-10) -> BogoliubovTable:
    """Rotation coefficients for H = sum_q eps_q (n_q - 1/2).

    a_q = 2 (J cos q + h_z), b_q = -2 J sin q, eps_q = sqrt(a_q^2 + b_q^2);
    u_q = (eps_q + a_q) / sqrt(2 eps_q (eps_q + a_q)),
    v_q = b_q / sqrt(2 eps_q (eps_q + a_q)).
    At b = 0 with a < 0 these are 0/0; the continuous limit (u, v) = (0, 1)
    is substituted there.
    """
    q = grid.q
    a = 2.0 * (J * np.cos(q) + h_z)
    b = -2.0 * J * np.sin(q)
    eps = np.hypot(a, b)
    if np.min(eps) < gap_tol:
        worst = q[np.argmin(eps)]
        raise GaplessModeError(
            f"gapless mode at q={worst:.6f} for J={J}, h_z={h_z}: eps={np.min(eps):.3e}"
        )
    # evaluate whichever of (eps + a), (eps - a) is free of cancellation and
    # recover the other through (eps + a)(eps - a) = b^2
    u = np.empty_like(eps)
    v = np.empty_like(eps)
    pos = a >= 0.0
    u[pos] = np.sqrt((eps[pos] + a[pos]) / (2.0 * eps[pos]))
    v[pos] = b[pos] / np.sqrt(2.0 * eps[pos] * (eps[pos] + a[pos]))
    neg = ~pos
    v[neg] = np.sign(b[neg]) * np.sqrt((eps[neg] - a[neg]) / (2.0 * eps[neg]))
    u[neg] = np.abs(b[neg]) / np.sqrt(2.0 * eps[neg] * (eps[neg] - a[neg]))
    # self-paired modes (q = -q mod 2 pi) have b = 0 up to roundoff; with
    # a < 0 the generic forms are 0/0 and the continuous limit is (0, 1)
    flat = (grid.neg_index == np.arange(grid.L)) & (a < 0.0)
    u[flat] = 0.0
    v[flat] = 1.0
    return BogoliubovTable(grid=grid, J=float(J), h_z=float(h_z), a=a, b=b, u=u, v=v, eps=eps)


def energy_density(occupations, table: BogoliubovTable) -> float:
    """<H>/L = (1/L) sum_q eps_q (<n_q> - 1/2)."""
    n = np.asarray(occupations, dtype=float)
    if n.shape != table.eps.shape:
        raise ValueError(f"occupation length {n.shape} does not match grid {table.eps.shape}")
    if np.any(n < -1e-12) or np.any(n > 1.0 + 1e-12):
        raise ValueError("occupations must lie in [0, 1]")
    return float(np.sum(table.eps * (n - 0.5)) / table.grid.L)
