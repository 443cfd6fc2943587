"""Acceptance suite: one test per headline criterion, at stated tolerances.

Each test prints a single PASS/FAIL line (run with -s or read the captured
output) in addition to the usual pytest verdict. The heavy spectral cases
share session-scoped fixtures so each diagonalization runs once.
"""

import time

import numpy as np
import pytest

from mpemba_lab import cli, exact, fermion_dense, gaussian, gge_flow, model, mpemba, spectral
from mpemba_lab.freefermion import Parity, bogoliubov, momentum_grid

from conftest import ptrace_left


def report(name, ok, detail=""):
    print(f"ACCEPTANCE {name}: {'PASS' if ok else 'FAIL'} {detail}".rstrip())
    assert ok, f"{name}: {detail}"


# ---------------------------------------------------------------------- fig3b


def test_fig3b_integrable_crossing(tmp_path):
    t0 = time.time()
    config = cli.parse_config(cli.PRESETS["fig3b"])
    record = cli.run(config, out_dir=tmp_path, jobs=1)
    elapsed = time.time() - t0
    hot, cold = record.trajectories  # betas 0.0 and 0.15
    crossing = record.summary["crossings"][0]
    ok = (
        crossing["crossing"]
        and np.isfinite(crossing["t_mp"])
        and hot.values[0] > cold.values[0]
        and elapsed < 300.0
    )
    report("fig3b-crossing", ok,
           f"t_mp={crossing.get('t_mp')}, d0(hot)={hot.values[0]:.4f}, "
           f"d0(cold)={cold.values[0]:.4f}, {elapsed:.0f}s")


# ----------------------------------------------------------------- fig3c-desk


def test_fig3c_desk_no_crossing(tmp_path):
    t0 = time.time()
    config = cli.parse_config(cli.PRESETS["fig3c-desk"])
    record = cli.run(config, out_dir=tmp_path, jobs=1)
    elapsed = time.time() - t0
    n_pairs = len(record.summary["crossings"])
    ok = (
        n_pairs == 10
        and record.summary["n_crossings"] == 0
        and elapsed < 600.0
    )
    report("fig3c-no-crossing", ok,
           f"{record.summary['n_crossings']} crossings over {n_pairs} pairs, "
           f"{elapsed:.0f}s")


# --------------------------------------------------------- engine consistency


def test_engine_consistency(chain8, hop_jump_ops):
    t0 = time.time()
    L, c = chain8["L"], chain8["c_ops"]
    taus = np.linspace(0.0, 5.0, 26)
    worst_002 = 0.0
    dev_at_2 = {}
    for parity, sector in chain8["sectors"].items():
        tab, kern = sector["table"], sector["kernels"]
        jumps = hop_jump_ops(L, parity, c)
        Hf = fermion_dense.fermion_hamiltonian(tab, c)
        nq_ops = fermion_dense.mode_number_ops(tab, c)
        state0 = gge_flow.thermal_occupations(0.0, tab)
        rho0 = fermion_dense.gge_density_matrix(state0.mu, tab, c)
        flow = gge_flow.evolve_occupations(state0, taus[-1], kern, t_eval=taus)
        for eps in (0.02, 0.2):
            dense = exact.propagate(rho0, Hf, jumps, eps, taus[-1] / eps,
                                    t_eval=taus / eps, method="expm")
            devs = np.array([
                np.max(np.abs(
                    np.array([np.trace(op @ rho).real for op in nq_ops])
                    - flow.occupations[k]))
                for k, rho in enumerate(dense.states)
            ])
            if eps == 0.02:
                worst_002 = max(worst_002, devs.max())
            k2 = int(np.argmin(np.abs(taus - 2.0)))
            dev_at_2[(parity, eps)] = devs[k2]
    elapsed = time.time() - t0
    weaker_closer = all(dev_at_2[(p, 0.02)] < dev_at_2[(p, 0.2)]
                        for p in chain8["sectors"])
    ok = worst_002 <= 0.05 and weaker_closer and elapsed < 600.0
    report("engine-consistency", ok,
           f"max|dn| at eps=0.02: {worst_002:.4f} (<=0.05), "
           f"dev(0.02)<dev(0.2) at eps*t=2: {weaker_closer}, {elapsed:.0f}s")


# ------------------------------------------------------- Gaussian-dense oracle


def test_gaussian_vs_dense_oracle():
    t0 = time.time()
    rng = np.random.default_rng(2024)
    worst = 0.0
    checked = 0
    for L, count in ((6, 20), (8, 20), (10, 10)):
        c = fermion_dense.annihilation_ops(L)
        for parity in (Parity.EVEN, Parity.ODD):
            tab = bogoliubov(0.75, 1.0, momentum_grid(L, parity))
            mus = rng.normal(0.0, 1.0, (count // 2, L))
            states = [gge_flow.OccupationState.from_mu(tab.grid, mu) for mu in mus]
            rhos = [fermion_dense.gge_density_matrix(s.mu, tab, c) for s in states]
            for k in range(len(states)):
                s_a, s_b = states[k], states[(k + 1) % len(states)]
                r_a, r_b = rhos[k], rhos[(k + 1) % len(states)]
                ell = int(rng.integers(1, 5))
                A = ptrace_left(r_a, ell, L)
                B = ptrace_left(r_b, ell, L)
                ca = gaussian.correlation_matrix(s_a, tab, ell)
                cb = gaussian.correlation_matrix(s_b, tab, ell)
                worst = max(worst, abs(gaussian.purity(ca) - np.trace(A @ A).real))
                worst = max(worst, abs(gaussian.trace_product(ca, cb)
                                       - np.trace(A @ B).real))
                worst = max(worst, abs(
                    gaussian.normalized_frobenius_gaussian(ca, cb)
                    - exact.distance(A, B, exact.DistanceKind.NORMALIZED)))
                checked += 1
    elapsed = time.time() - t0
    ok = worst < 1e-8 and checked >= 50 and elapsed < 120.0
    report("gaussian-dense-oracle", ok,
           f"{checked} states, worst |gauss - dense| = {worst:.2e}, {elapsed:.0f}s")


# ------------------------------------------------------------------------ em1


def _em1_locations(L, h_x, out_dir):
    preset = dict(cli.PRESETS["em1" if h_x else "em1-integrable"])
    preset = {**preset, "model": {**preset["model"], "L": L},
              "name": f"{preset['name']}-L{L}"}
    record = cli.run(cli.parse_config(preset), out_dir=out_dir)
    _, rows = record.tables["landscape"]
    rows = np.asarray(rows)
    betas, ov = rows[:, 0], rows[:, 2]
    b_ov = betas[np.argmin(np.abs(ov))]
    mins = [betas[np.argmin(rows[:, i])] for i in (3, 4, 5)]
    return b_ov, mins


@pytest.fixture(scope="module")
def em1_locations(tmp_path_factory):
    out_dir = tmp_path_factory.mktemp("em1")
    out = {}
    for L in (10, 12):
        for tag, h_x in (("chaotic", 0.3), ("integrable", 0.0)):
            out[(tag, L)] = _em1_locations(L, h_x, out_dir)
    return out


def test_em1_chaotic_coincidence(em1_locations):
    gaps = {}
    for L in (10, 12):
        b_ov, mins = em1_locations[("chaotic", L)]
        gaps[L] = [abs(b_ov - m) for m in mins]
    ok = all(g <= 0.01 + 1e-9 for L in (10, 12) for g in gaps[L])
    report("em1-chaotic-coincidence", ok,
           f"gaps L=10: {[f'{g:.3f}' for g in gaps[10]]}, "
           f"L=12: {[f'{g:.3f}' for g in gaps[12]]} (need <= 0.01)")


def test_em1_integrable_separation(em1_locations):
    gaps = {}
    for L in (10, 12):
        b_ov, mins = em1_locations[("integrable", L)]
        gaps[L] = [abs(b_ov - m) for m in mins]
    ok = all(g > 0.02 for L in (10, 12) for g in gaps[L])
    report("em1-integrable-separation", ok,
           f"gaps L=10: {[f'{g:.3f}' for g in gaps[10]]}, "
           f"L=12: {[f'{g:.3f}' for g in gaps[12]]} (need > 0.02)")


# ------------------------------------------------------------------------ em2


def test_em2_interval(tmp_path):
    config = cli.parse_config(cli.PRESETS["em2"])
    record = cli.run(config, out_dir=tmp_path, jobs=1)
    betas = config.experiment["betas"]
    probe = record.summary["probe_time"]
    bad = []
    for entry in record.summary["crossings"]:
        b1, b2 = entry["pair"]
        if 0.0 <= b1 <= 0.15 and 0.0 <= b2 <= 0.15:
            if not (entry["crossing"] and entry["t_mp"] <= probe):
                bad.append((b1, b2))
    inside = [b for b in betas if 0.0 <= b <= 0.15]
    ok = len(bad) == 0 and len(inside) >= 4
    report("em2-interval", ok,
           f"{len(inside)} temperatures in [0, 0.15], uncrossed pairs: {bad}")


# ------------------------------------------------------------------ overshoot


def test_energy_density_overshoot(flow_engine400):
    times = np.linspace(0.0, 20.0, 201)
    traj = flow_engine400.observable_trajectory(0.15, times)
    flag, t_over = mpemba.overshoot_flag(traj, flow_engine400.steady_energy_density())
    ok = flag and t_over is not None and 0.0 < t_over < 20.0
    report("energy-overshoot", ok, f"sign change at eps*t = {t_over}")


# ------------------------------------------------------------- invariant suite


def test_invariant_suite(chain8):
    failures = []

    # Bogoliubov normalization at 1e-12
    for sector in chain8["sectors"].values():
        tab = sector["table"]
        if np.max(np.abs(tab.u**2 + tab.v**2 - 1.0)) > 1e-12:
            failures.append("u^2+v^2")
        for f in (sector["kernels"].f_s, sector["kernels"].f_c, sector["kernels"].f_a):
            if f.min() < -1e-12:
                failures.append("kernel negativity")

    # occupations within [0, 1] along a trajectory
    sector = chain8["sectors"][Parity.EVEN]
    traj = gge_flow.evolve_occupations(
        gge_flow.thermal_occupations(0.15, sector["table"]), 10.0, sector["kernels"])
    if traj.occupations.min() < 0.0 or traj.occupations.max() > 1.0:
        failures.append("occupation bounds")

    # normalized distance within [0, 1]
    rng = np.random.default_rng(5)
    tab = sector["table"]
    for _ in range(10):
        a = gge_flow.OccupationState.from_mu(tab.grid, rng.normal(0, 1, chain8["L"]))
        b = gge_flow.OccupationState.from_mu(tab.grid, rng.normal(0, 1, chain8["L"]))
        d = gaussian.normalized_frobenius_gaussian(
            gaussian.correlation_matrix(a, tab, 3), gaussian.correlation_matrix(b, tab, 3))
        if not 0.0 <= d <= 1.0:
            failures.append("d_L range")

    # propagation invariants at stated tolerances
    L6 = 6
    H = model.dense_operator(model.build_tfim(L6, 0.75, 1.0, 0.3, model.Boundary.OPEN))
    jumps = model.dense_lindblad_ops(model.build_lindblad_hop(L6, 1.0, model.Boundary.OPEN))
    dense = exact.propagate(exact.thermal_state(H, 0.1), H, jumps, 0.2, 10.0,
                            t_eval=np.linspace(0, 10, 11))
    for rho in dense.states:
        try:
            exact.assert_density_matrix(rho, trace_tol=1e-9, herm_tol=1e-9, pos_tol=1e-7)
        except exact.PropagationError as err:
            failures.append(f"propagation invariant: {err}")
            break

    # projected dissipator structure and biorthogonality
    pd = spectral.projected_dissipator(H, jumps, 1.0)
    if np.max(np.abs(pd.D.sum(axis=0))) > 1e-10:
        failures.append("column sums")
    if (pd.D - np.diag(np.diag(pd.D))).min() < -1e-12:
        failures.append("off-diagonal sign")
    pairs, steady = spectral.slow_modes(pd, k=5)
    for i, pi in enumerate(pairs):
        for j, pj in enumerate(pairs):
            if abs(np.vdot(pi.left, pj.right) - (i == j)) > 1e-8:
                failures.append("biorthogonality")
        if abs(spectral.slow_overlap(pi, steady)) > 1e-9:
            failures.append("steady-state overlap")

    report("invariant-suite", not failures, f"violations: {failures or 'none'}")


# ------------------------------------------------------------------------ em3


def test_em3_landscape(tmp_path):
    config = cli.parse_config(cli.PRESETS["em3"])
    record = cli.run(config, out_dir=tmp_path, jobs=1)
    cols, rows = record.tables["landscape"]
    arr = np.asarray(rows)
    sl = arr[np.isclose(arr[:, 1], 0.0)]
    betas, ov = sl[:, 0], sl[:, 2]
    window = (betas > 0.08) & (betas < 0.16)
    sign_change = np.any(np.diff(np.sign(ov[window])) != 0)
    b_star = betas[window][np.argmin(np.abs(ov[window]))]
    ok = bool(sign_change)
    report("em3-landscape", ok,
           f"mu=0 overlap sign change in (0.08, 0.16): {sign_change}, "
           f"|overlap| minimum at beta = {b_star:.2f}")
