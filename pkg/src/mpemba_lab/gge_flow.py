"""Weak-dissipation flow of quasiparticle occupations.

In the small-coupling limit the density matrix stays a generalized Gibbs
ensemble over mode occupations; the dissipator only moves the occupations.
Their equation of motion in rescaled time tau = eps * t is

    dn_q/dtau = (2/L) sum_q' [ f^s_{q,q'} (1 - n_q) n_q'
                             - f^s_{q',q} n_q (1 - n_q')
                             + f^c_{q,q'} (1 - n_q)(1 - n_q')
                             - f^a_{q,q'} n_q n_q' ],

with nonnegative kernels for scattering (f^s), pair creation (f^c) and pair
annihilation (f^a) specific to the hopping-type dissipator. The coupling
rate never appears here: trajectories depend on it only through tau.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import RK45

from .freefermion import BogoliubovTable, MomentumGrid


class GridMismatchError(ValueError):
    pass


class FlowError(RuntimeError):
    """Integration failed; carries the last accepted state."""

    def __init__(self, message, t=None, n=None):
        super().__init__(message)
        self.t = t
        self.n = n


@dataclass(frozen=True)
class OccupationState:
    """Mode occupations <n_q> on one parity grid; mu_q = log((1-n)/n)."""

    grid: MomentumGrid
    n: np.ndarray

    def __post_init__(self):
        n = np.asarray(self.n, dtype=float)
        if n.shape != (self.grid.L,):
            raise GridMismatchError(f"occupation shape {n.shape} vs grid L={self.grid.L}")
        if np.any(n < -1e-12) or np.any(n > 1.0 + 1e-12):
            raise ValueError("occupations must lie in [0, 1]")
        object.__setattr__(self, "n", np.clip(n, 0.0, 1.0))

    @property
    def mu(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log((1.0 - self.n) / self.n)

    @classmethod
    def from_mu(cls, grid, mu):
        mu = np.asarray(mu, dtype=float)
        return cls(grid=grid, n=1.0 / (1.0 + np.exp(mu)))


def thermal_occupations(beta, table: BogoliubovTable) -> OccupationState:
    """Thermal GGE mu_q = beta * eps_q, i.e. n_q = 1 / (1 + e^{beta eps_q})."""
    if not np.isfinite(beta):
        raise ValueError(f"beta must be finite, got {beta}")
    return OccupationState(grid=table.grid, n=1.0 / (1.0 + np.exp(beta * table.eps)))


@dataclass(frozen=True)
class ScatteringKernels:
    grid: MomentumGrid
    f_s: np.ndarray
    f_c: np.ndarray
    f_a: np.ndarray


def scattering_kernels(table: BogoliubovTable) -> ScatteringKernels:
    """Closed forms of f^s, f^c, f^a on the table's grid (rows q, columns q').

    f^s_{q,q'} = u_q^2 u_q'^2 (1 + cos q') + v_q^2 v_q'^2 (1 + cos q)
               - u_q v_q u_q' v_q' (1 + cos q' + cos q + cos(q + q')),
    f^c_{q,q'} = u_q^2 v_q'^2 (1 + cos q') + v_q^2 u_q'^2 (1 + cos q)
               - u_q v_q u_q' v_q' (1 + cos q' + cos q + cos(q - q')),
    f^a_{q,q'} = f^c with the roles of cos q and cos q' exchanged.
    f^c and f^a are symmetric in (q, q'); all entries are >= 0.
    """
    q = table.grid.q[:, None]
    qp = table.grid.q[None, :]
    u, v = table.u, table.v
    u2q, v2q = (u**2)[:, None], (v**2)[:, None]
    u2p, v2p = (u**2)[None, :], (v**2)[None, :]
    uvq = (u * v)[:, None]
    uvp = (u * v)[None, :]
    cq, cp = np.cos(q), np.cos(qp)
    cross = uvq * uvp
    f_s = u2q * u2p * (1 + cp) + v2q * v2p * (1 + cq) - cross * (1 + cp + cq + np.cos(q + qp))
    pair_cross = cross * (1 + cp + cq + np.cos(q - qp))
    f_c = u2q * v2p * (1 + cp) + v2q * u2p * (1 + cq) - pair_cross
    f_a = u2q * v2p * (1 + cq) + v2q * u2p * (1 + cp) - pair_cross
    for name, f in (("f_s", f_s), ("f_c", f_c), ("f_a", f_a)):
        if np.min(f) < -1e-12:
            raise FlowError(f"kernel {name} has negative entry {np.min(f):.3e}")
    return ScatteringKernels(grid=table.grid, f_s=f_s, f_c=f_c, f_a=f_a)


def occupation_rhs(state, kernels: ScatteringKernels) -> np.ndarray:
    """d<n_q>/d(eps t); `state` may be an OccupationState or a raw vector."""
    n = state.n if isinstance(state, OccupationState) else np.asarray(state, dtype=float)
    if isinstance(state, OccupationState) and state.grid is not kernels.grid:
        if not np.array_equal(state.grid.q, kernels.grid.q):
            raise GridMismatchError("state and kernels live on different grids")
    return _rhs(n, kernels)


def _rhs(n, kernels):
    hole = 1.0 - n
    gain = hole * (kernels.f_s @ n)
    loss = n * (kernels.f_s.T @ hole)
    create = hole * (kernels.f_c @ hole)
    destroy = n * (kernels.f_a @ n)
    return (2.0 / kernels.grid.L) * (gain - loss + create - destroy)


@dataclass(frozen=True)
class FlowControls:
    rtol: float = 1e-8
    atol: float = 1e-10
    clamp_tol: float = 1e-9
    max_step: float = np.inf
    # steady-state detector: sup-norm threshold sustained over a step window
    steady_tol: float = 1e-10
    steady_window: int = 10
    max_time: float = 1e4


@dataclass(frozen=True)
class FlowTrajectory:
    grid: MomentumGrid
    times: np.ndarray
    occupations: np.ndarray  # shape (len(times), L)
    energy_density: np.ndarray | None = field(default=None)

    def __post_init__(self):
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")

    def state(self, i) -> OccupationState:
        return OccupationState(grid=self.grid, n=self.occupations[i])


def _clamp(n, tol, t):
    lo, hi = np.min(n), np.max(n)
    if lo < -tol or hi > 1.0 + tol:
        raise FlowError(
            f"occupations left [0, 1] beyond tolerance at tau={t:.4g}: "
            f"min={lo:.3e}, max={hi:.3e}",
            t=t,
            n=n,
        )
    return np.clip(n, 0.0, 1.0)


def evolve_occupations(state0: OccupationState, t_end, kernels=None, controls=FlowControls(),
                       t_eval=None, table=None) -> FlowTrajectory:
    """Adaptive Dormand-Prince integration of the occupation rate equation.

    Samples on `t_eval` (default: 200 uniform points) via dense output;
    accepted states are clamped to [0, 1] within `controls.clamp_tol` and the
    run aborts on larger excursions. Passing `table` attaches the energy
    density series to the trajectory.
    """
    if kernels is None:
        raise ValueError("kernels are required")
    if t_end <= 0:
        raise ValueError(f"t_end must be positive, got {t_end}")
    if t_eval is None:
        t_eval = np.linspace(0.0, float(t_end), 201)
    t_eval = np.asarray(t_eval, dtype=float)

    fun = lambda t, y: _rhs(y, kernels)
    rk = RK45(fun, 0.0, state0.n.copy(), float(t_end), rtol=controls.rtol,
              atol=controls.atol, max_step=controls.max_step)
    samples = np.empty((len(t_eval), kernels.grid.L))
    if t_eval[0] == 0.0:
        samples[0] = state0.n
        next_i = 1
    else:
        next_i = 0
    while rk.status == "running":
        msg = rk.step()
        if rk.status == "failed":
            raise FlowError(f"step-size underflow: {msg}", t=rk.t, n=rk.y)
        rk.y = _clamp(rk.y, controls.clamp_tol, rk.t)
        dense = rk.dense_output()
        while next_i < len(t_eval) and t_eval[next_i] <= rk.t + 1e-15:
            samples[next_i] = np.clip(dense(t_eval[next_i]), 0.0, 1.0)
            next_i += 1
    if next_i < len(t_eval):
        raise FlowError("integration ended before covering t_eval", t=rk.t, n=rk.y)
    energy = None
    if table is not None:
        energy = np.array([
            np.sum(table.eps * (n - 0.5)) / table.grid.L for n in samples
        ])
    return FlowTrajectory(grid=kernels.grid, times=t_eval, occupations=samples,
                          energy_density=energy)


def steady_state(kernels: ScatteringKernels, state_guess: OccupationState,
                 controls=FlowControls()) -> OccupationState:
    """Fixed point of the rate equation, found by integrating to convergence.

    Convergence requires sup-norm of the rhs below `steady_tol` over
    `steady_window` consecutive accepted steps; a damped fixed-point polish
    runs afterwards while it keeps improving the residual.
    """
    fun = lambda t, y: _rhs(y, kernels)
    rk = RK45(fun, 0.0, state_guess.n.copy(), controls.max_time,
              rtol=controls.rtol, atol=controls.atol)
    quiet = 0
    while rk.status == "running":
        msg = rk.step()
        if rk.status == "failed":
            raise FlowError(f"steady-state integration failed: {msg}", t=rk.t, n=rk.y)
        rk.y = _clamp(rk.y, controls.clamp_tol, rk.t)
        quiet = quiet + 1 if np.max(np.abs(_rhs(rk.y, kernels))) < controls.steady_tol else 0
        if quiet >= controls.steady_window:
            break
    n = np.clip(rk.y, 0.0, 1.0)
    res = np.max(np.abs(_rhs(n, kernels)))
    # damped fixed-point refinement (cheap; keeps n inside [0, 1])
    for _ in range(200):
        if res < 1e-14:
            break
        candidate = np.clip(n + 0.5 * _rhs(n, kernels), 0.0, 1.0)
        cres = np.max(np.abs(_rhs(candidate, kernels)))
        if cres >= res:
            break
        n, res = candidate, cres
    if res > controls.steady_tol:
        raise FlowError(
            f"no steady state within horizon {controls.max_time}: residual {res:.3e}",
            t=rk.t, n=n,
        )
    return OccupationState(grid=kernels.grid, n=n)
