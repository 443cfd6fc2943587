"""Dense small-chain ground truth: Lindblad propagation, GGE states,
partial traces, distances, susceptibilities and the Lagrange-parameter flow.

Everything here scales exponentially in L and exists to (a) provide the
finite-coupling reference dynamics and (b) cross-check the free-fermion and
Gaussian code paths at desk scale.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from enum import Enum

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.integrate import RK45

from .model import BudgetError

DEFAULT_DENSE_BUDGET = 10  # sites; superoperators get big fast


class DistanceKind(str, Enum):
    TRACE = "trace"
    FROBENIUS = "frobenius"
    NORMALIZED = "normalized"


class PropagationError(RuntimeError):
    pass


def assert_density_matrix(rho, trace_tol=1e-10, herm_tol=1e-10, pos_tol=1e-8):
    herm = np.max(np.abs(rho - rho.conj().T))
    if herm > herm_tol:
        raise PropagationError(f"state not Hermitian: {herm:.3e}")
    tr = np.trace(rho).real
    if abs(tr - 1.0) > trace_tol:
        raise PropagationError(f"trace drifted to {tr!r}")
    evals = np.linalg.eigvalsh((rho + rho.conj().T) / 2)
    if evals.min() < -pos_tol:
        raise PropagationError(f"negative eigenvalue {evals.min():.3e}")


@dataclass(frozen=True)
class GGEParams:
    """Lagrange parameters and their (mutually commuting) dense operators."""

    operators: tuple
    lambdas: np.ndarray

    def __post_init__(self):
        lambdas = np.asarray(self.lambdas, dtype=float)
        if len(self.operators) != len(lambdas):
            raise ValueError("one lambda per operator required")
        object.__setattr__(self, "lambdas", lambdas)

    def replace(self, lambdas) -> "GGEParams":
        return GGEParams(operators=self.operators, lambdas=np.asarray(lambdas, float))


def _require_commuting(operators, tol=1e-10):
    for i, A in enumerate(operators):
        scale_a = max(np.max(np.abs(A)), 1.0)
        for B in operators[i + 1:]:
            err = np.max(np.abs(A @ B - B @ A))
            if err > tol * scale_a * max(np.max(np.abs(B)), 1.0):
                raise ValueError(f"operators do not commute: |[C_i, C_j]| = {err:.3e}")


def gge_state(params: GGEParams) -> np.ndarray:
    """rho = exp(-sum_i lambda_i C_i) / Z via eigendecomposition."""
    _require_commuting(params.operators)
    dim = params.operators[0].shape[0]
    K = np.zeros((dim, dim), dtype=complex)
    for lam, C in zip(params.lambdas, params.operators):
        K += lam * C
    w, V = np.linalg.eigh(K)
    boltz = np.exp(-(w - w.min()))
    rho = (V * boltz) @ V.conj().T
    rho /= np.trace(rho).real
    return (rho + rho.conj().T) / 2


def thermal_state(H, beta) -> np.ndarray:
    return gge_state(GGEParams(operators=(H,), lambdas=np.array([beta])))


def dissipator_apply(lindblads, eps, rho) -> np.ndarray:
    """eps sum_j (L rho L^dag - {L^dag L, rho} / 2)."""
    out = np.zeros_like(rho, dtype=complex)
    for L in lindblads:
        LdL = L.conj().T @ L
        out += L @ rho @ L.conj().T - 0.5 * (LdL @ rho + rho @ LdL)
    return eps * out


def liouvillian_apply(H, lindblads, eps, rho) -> np.ndarray:
    """-i [H, rho] + eps sum_j (L rho L^dag - {L^dag L, rho} / 2)."""
    if rho.shape != H.shape:
        raise ValueError(f"shape mismatch: rho {rho.shape} vs H {H.shape}")
    return -1.0j * (H @ rho - rho @ H) + dissipator_apply(lindblads, eps, rho)


def liouvillian_matrix(H, lindblads, eps) -> sp.csr_matrix:
    """Sparse superoperator acting on column-stacked (row-major vec'd) states."""
    dim = H.shape[0]
    I = sp.identity(dim, format="csr", dtype=complex)
    Hs = sp.csr_matrix(H)
    gen = -1.0j * (sp.kron(Hs, I) - sp.kron(I, Hs.T))
    for L in lindblads:
        Ls = sp.csr_matrix(L)
        LdL = sp.csr_matrix(L.conj().T @ L)
        gen = gen + eps * (
            sp.kron(Ls, Ls.conj())
            - 0.5 * (sp.kron(LdL, I) + sp.kron(I, LdL.T))
        )
    return gen.tocsr()


@dataclass(frozen=True)
class DensityTrajectory:
    times: np.ndarray  # physical time
    states: np.ndarray  # (len(times), dim, dim)


@dataclass(frozen=True)
class PropagationControls:
    rtol: float = 1e-9
    atol: float = 1e-12
    check_every: int = 1  # validate every k-th stored state
    trace_tol: float = 1e-9
    herm_tol: float = 1e-9
    pos_tol: float = 1e-7


def propagate(rho0, H, lindblads, eps, t_end, controls=PropagationControls(),
              t_eval=None, method="rk45", max_sites=DEFAULT_DENSE_BUDGET) -> DensityTrajectory:
    """Integrate the master equation, storing states on `t_eval`.

    method "rk45": adaptive Dormand-Prince on the vectorized state with the
    sparse superoperator; "expm": Krylov action of the matrix exponential on
    a uniform grid (exact up to roundoff, better for long horizons). Stored
    states are validated against trace/Hermiticity/positivity tolerances.
    """
    dim = rho0.shape[0]
    L_sites = int(np.log2(dim))
    if L_sites > max_sites:
        raise BudgetError(f"dense propagation at L={L_sites} exceeds budget {max_sites}")
    if t_eval is None:
        t_eval = np.linspace(0.0, float(t_end), 201)
    t_eval = np.asarray(t_eval, dtype=float)
    gen = liouvillian_matrix(H, lindblads, eps)
    y0 = rho0.reshape(-1).astype(complex)

    if method == "expm":
        if not np.allclose(np.diff(t_eval), t_eval[1] - t_eval[0], rtol=1e-12, atol=1e-12):
            raise ValueError("expm propagation needs a uniform t_eval grid")
        flat = spla.expm_multiply(
            gen, y0, start=t_eval[0], stop=t_eval[-1], num=len(t_eval), endpoint=True
        )
        states = flat.reshape(len(t_eval), dim, dim)
    elif method == "rk45":
        rk = RK45(lambda t, y: gen @ y, 0.0, y0, float(t_eval[-1]),
                  rtol=controls.rtol, atol=controls.atol)
        states = np.empty((len(t_eval), dim, dim), dtype=complex)
        next_i = 0
        if t_eval[0] == 0.0:
            states[0] = rho0
            next_i = 1
        while rk.status == "running":
            msg = rk.step()
            if rk.status == "failed":
                raise PropagationError(f"integrator failed at t={rk.t}: {msg}")
            dense = rk.dense_output()
            while next_i < len(t_eval) and t_eval[next_i] <= rk.t + 1e-12:
                states[next_i] = dense(t_eval[next_i]).reshape(dim, dim)
                next_i += 1
        if next_i < len(t_eval):
            raise PropagationError("integration ended before covering t_eval")
    else:
        raise ValueError(f"unknown propagation method {method!r}")

    for i in range(0, len(t_eval), controls.check_every):
        try:
            assert_density_matrix(states[i], controls.trace_tol, controls.herm_tol,
                                  controls.pos_tol)
        except PropagationError as exc:
            raise PropagationError(f"state at t={t_eval[i]:.6g} invalid: {exc}") from exc
    return DensityTrajectory(times=t_eval, states=states)


DIRECT_SOLVE_DIM = 64  # trace-constrained LU is only cheap for tiny chains


def steady_state(H, lindblads, eps, rho0=None, max_sites=DEFAULT_DENSE_BUDGET,
                 residual_tol=1e-9) -> np.ndarray:
    """Null vector of the generator, normalized to unit trace.

    Small chains use a trace-constrained sparse solve; above
    `DIRECT_SOLVE_DIM` the LU fill-in does not fit in memory, so the null
    vector is extracted by Krylov propagation to convergence instead (the
    result is checked against the same residual tolerance either way). When
    the generator conserves fermion parity the null space is degenerate and
    the propagation route weights the sector steady states by the parity
    content of `rho0`.
    """
    dim = H.shape[0]
    if int(np.log2(dim)) > max_sites:
        raise BudgetError(f"steady state at L={int(np.log2(dim))} exceeds budget {max_sites}")
    rho = None
    if dim <= DIRECT_SOLVE_DIM:
        gen = liouvillian_matrix(H, lindblads, eps).tolil()
        # replace the first row by the trace functional over diagonal entries
        trace_row = np.zeros(dim * dim)
        trace_row[:: dim + 1] = 1.0
        gen[0, :] = trace_row
        rhs = np.zeros(dim * dim, dtype=complex)
        rhs[0] = 1.0
        try:
            flat = spla.spsolve(gen.tocsc(), rhs)
            rho = flat.reshape(dim, dim)
            rho = (rho + rho.conj().T) / 2
            rho /= np.trace(rho).real
            if np.linalg.eigvalsh(rho).min() < -1e-8:
                rho = None  # degenerate null space mixed into a non-state
        except Exception as exc:  # singular factorization
            warnings.warn(f"direct steady-state solve failed ({exc}); propagating instead")
            rho = None
    if rho is None:
        rho = _steady_by_propagation(H, lindblads, eps, rho0, residual_tol)
    residual = np.max(np.abs(liouvillian_apply(H, lindblads, eps, rho)))
    if residual > residual_tol:
        raise PropagationError(f"steady-state residual {residual:.3e} above tolerance")
    return rho


def _steady_by_propagation(H, lindblads, eps, rho0, residual_tol, chunk=20.0,
                           max_chunks=100):
    dim = H.shape[0]
    rho = np.eye(dim, dtype=complex) / dim if rho0 is None else rho0.copy()
    gen = liouvillian_matrix(H, lindblads, eps)
    for _ in range(max_chunks):
        flat = spla.expm_multiply(gen, rho.reshape(-1), start=0.0,
                                  stop=chunk / eps, num=2)[-1]
        rho = flat.reshape(dim, dim)
        rho = (rho + rho.conj().T) / 2
        rho /= np.trace(rho).real
        if np.max(np.abs(liouvillian_apply(H, lindblads, eps, rho))) < residual_tol:
            return rho
    raise PropagationError("steady state not reached by propagation")


def partial_trace(rho, start, ell) -> np.ndarray:
    """Marginal on the contiguous block [start, start + ell)."""
    dim = rho.shape[0]
    L = int(np.log2(dim))
    if not (0 <= start and start + ell <= L and ell >= 1):
        raise ValueError(f"invalid block [{start}, {start + ell}) for L={L}")
    d_left, d_mid, d_right = 2**start, 2**ell, 2 ** (L - start - ell)
    r = rho.reshape(d_left, d_mid, d_right, d_left, d_mid, d_right)
    return np.einsum("ambanb->mn", r)


def centered_block(L, ell):
    return (L - ell) // 2


def distance(rho_a, rho_b, kind=DistanceKind.NORMALIZED) -> float:
    """Trace, Frobenius, or normalized-Frobenius distance of two states."""
    kind = DistanceKind(kind)
    diff = rho_a - rho_b
    if kind is DistanceKind.TRACE:
        return float(np.sum(np.abs(np.linalg.eigvalsh((diff + diff.conj().T) / 2))))
    fro2 = max(np.trace(diff @ diff).real, 0.0)
    if kind is DistanceKind.FROBENIUS:
        return float(np.sqrt(fro2))
    denom = np.trace(rho_a @ rho_a).real + np.trace(rho_b @ rho_b).real
    return float(np.sqrt(fro2 / denom))


def susceptibility(params: GGEParams) -> np.ndarray:
    """chi_ij = <C_i C_j> - <C_i><C_j> on the GGE; symmetric positive definite."""
    rho = gge_state(params)
    ops = params.operators
    means = [np.trace(C @ rho).real for C in ops]
    k = len(ops)
    chi = np.empty((k, k))
    for i in range(k):
        for j in range(i, k):
            chi[i, j] = chi[j, i] = np.trace(ops[i] @ ops[j] @ rho).real - means[i] * means[j]
    evals = np.linalg.eigvalsh(chi)
    if evals.min() <= 0:
        raise PropagationError(
            f"susceptibility not positive definite (min eigenvalue {evals.min():.3e}); "
            "the GGE left the interior of its manifold"
        )
    return chi


@dataclass(frozen=True)
class LagrangeTrajectory:
    times: np.ndarray  # rescaled time eps * t
    lambdas: np.ndarray  # (len(times), N_C)


def lagrange_flow(params0: GGEParams, H, lindblads, t_end, t_eval=None,
                  rtol=1e-8, atol=1e-10) -> LagrangeTrajectory:
    """Rescaled-time flow of the Lagrange parameters.

    dlambda_i/d(eps t) = - sum_j chi^{-1}_ij Tr[C_j D rho_lambda] with the
    coupling rate divided out of the dissipator. Requires [H, C_i] = 0.
    """
    for C in params0.operators:
        err = np.max(np.abs(H @ C - C @ H))
        if err > 1e-10 * max(np.max(np.abs(H)), 1.0) * max(np.max(np.abs(C)), 1.0):
            raise ValueError(f"operator does not commute with H: |[H, C]| = {err:.3e}")
    if t_eval is None:
        t_eval = np.linspace(0.0, float(t_end), 201)
    t_eval = np.asarray(t_eval, dtype=float)

    def rhs(t, lam):
        p = params0.replace(lam)
        rho = gge_state(p)
        chi = susceptibility(p)
        drho = dissipator_apply(lindblads, 1.0, rho)
        drift = np.array([np.trace(C @ drho).real for C in p.operators])
        return -np.linalg.solve(chi, drift)

    rk = RK45(rhs, 0.0, params0.lambdas.astype(float), float(t_eval[-1]), rtol=rtol, atol=atol)
    out = np.empty((len(t_eval), len(params0.lambdas)))
    next_i = 0
    if t_eval[0] == 0.0:
        out[0] = params0.lambdas
        next_i = 1
    while rk.status == "running":
        msg = rk.step()
        if rk.status == "failed":
            raise PropagationError(f"Lagrange flow failed at tau={rk.t}: {msg}")
        dense = rk.dense_output()
        while next_i < len(t_eval) and t_eval[next_i] <= rk.t + 1e-12:
            out[next_i] = dense(t_eval[next_i])
            next_i += 1
    if next_i < len(t_eval):
        raise PropagationError("Lagrange flow ended before covering t_eval")
    return LagrangeTrajectory(times=t_eval, lambdas=out)


def gge_residual(rho, params: GGEParams) -> float:
    """Frobenius distance between a propagated state and the GGE at given
    parameters; diagnostic for how far the true state strays off the manifold."""
    return distance(rho, gge_state(params), DistanceKind.FROBENIUS)
