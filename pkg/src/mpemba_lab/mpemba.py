"""Experiment orchestration: distance trajectories, crossing detection,
temperature and subsystem-size scans, and persistent run records.

Two engines produce distance-to-steady-state trajectories on a rescaled-time
grid: the free-fermion flow (coupling-independent, any system size) and the
dense master equation (finite coupling, small chains). A crossing of two
trajectories is the operational Mpemba signature; its rescaled time is found
by bracketing plus linear interpolation.
"""

from __future__ import annotations

import csv
import io
import json
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from . import exact, gaussian, gge_flow
from .exact import DistanceKind
from .freefermion import Parity, bogoliubov, momentum_grid
from .model import (
    Family,
    LindbladSpec,
    SpinChainSpec,
    dense_lindblad_ops,
    dense_operator,
)

SCHEMA_VERSION = "mpemba-lab v1"
STARTUP_GUARD = 0.01  # ignore crossings at eps*t below this


@dataclass(frozen=True)
class TrajectoryMeta:
    model: str
    dissipator: str
    engine: str
    beta0: float
    mu0: float = 0.0
    epsilon: float | None = None  # None marks the weak-coupling (flow) limit
    ell: int | None = None
    kind: str = "normalized"
    observable: str | None = None

    def label(self) -> str:
        eps = "gge-limit" if self.epsilon is None else f"eps={self.epsilon:g}"
        return f"{self.model}/{self.dissipator}/{self.engine} beta0={self.beta0:g} {eps}"


@dataclass(frozen=True)
class DistanceTrajectory:
    times: np.ndarray  # rescaled times eps * t
    values: np.ndarray
    meta: TrajectoryMeta

    def __post_init__(self):
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")
        if self.meta.kind == "normalized" and self.meta.observable is None:
            if np.any(self.values < -1e-12) or np.any(self.values > 1.0 + 1e-9):
                raise ValueError("normalized distances must lie in [0, 1]")


class GgeFlowEngine:
    """Weak-coupling trajectories for the integrable chain + hop dissipator.

    Kernels, steady states and steady-state correlation matrices are built
    once per parity sector and shared; scalar observables are averaged over
    the two sectors.
    """

    def __init__(self, model_spec: SpinChainSpec, dissipator: LindbladSpec,
                 controls=gge_flow.FlowControls()):
        if model_spec.family is not Family.TFIM or model_spec.couplings.get("h_x", 0.0) != 0.0:
            raise ValueError("flow engine requires the integrable (h_x = 0) chain")
        if dissipator.kind != "hop":
            raise ValueError(
                "scattering kernels are derived for the hop dissipator only; "
                f"got {dissipator.kind!r}"
            )
        self.spec = model_spec
        self.dissipator = dissipator
        self.controls = controls
        J, h_z = model_spec.couplings["J"], model_spec.couplings["h_z"]
        self.tables = {}
        self.kernels = {}
        self.steady = {}
        for parity in (Parity.EVEN, Parity.ODD):
            table = bogoliubov(J, h_z, momentum_grid(model_spec.L, parity))
            kern = gge_flow.scattering_kernels(table)
            self.tables[parity] = table
            self.kernels[parity] = kern
            self.steady[parity] = gge_flow.steady_state(
                kern, gge_flow.thermal_occupations(0.0, table), controls
            )
        self._steady_gamma = {}

    def meta(self, beta0, ell=None, kind="normalized", observable=None) -> TrajectoryMeta:
        return TrajectoryMeta(
            model=f"tfim(L={self.spec.L})",
            dissipator=self.dissipator.kind,
            engine="gge_flow",
            beta0=float(beta0),
            epsilon=None,
            ell=ell,
            kind=kind,
            observable=observable,
        )

    def steady_gamma(self, parity, ell):
        key = (parity, ell)
        if key not in self._steady_gamma:
            self._steady_gamma[key] = gaussian.correlation_matrix(
                self.steady[parity], self.tables[parity], ell
            )
        return self._steady_gamma[key]

    def occupation_trajectory(self, beta0, times, parity) -> gge_flow.FlowTrajectory:
        table = self.tables[parity]
        return gge_flow.evolve_occupations(
            gge_flow.thermal_occupations(beta0, table),
            times[-1],
            self.kernels[parity],
            self.controls,
            t_eval=times,
            table=table,
        )

    def distance_trajectory(self, beta0, times, ell, kind="normalized") -> DistanceTrajectory:
        if DistanceKind(kind) is not DistanceKind.NORMALIZED:
            raise ValueError("the Gaussian path implements the normalized distance")
        times = np.asarray(times, dtype=float)
        per_sector = []
        for parity in (Parity.EVEN, Parity.ODD):
            table = self.tables[parity]
            traj = self.occupation_trajectory(beta0, times, parity)
            ref = self.steady_gamma(parity, ell)
            per_sector.append(np.array([
                gaussian.normalized_frobenius_gaussian(
                    gaussian.correlation_matrix(traj.state(i), table, ell), ref
                )
                for i in range(len(times))
            ]))
        values = gaussian.parity_average(*per_sector)
        return DistanceTrajectory(times=times, values=values,
                                  meta=self.meta(beta0, ell=ell, kind=kind))

    def observable_trajectory(self, beta0, times, observable="energy_density") -> DistanceTrajectory:
        if observable != "energy_density":
            raise ValueError(f"unknown observable {observable!r}")
        times = np.asarray(times, dtype=float)
        series = []
        for parity in (Parity.EVEN, Parity.ODD):
            traj = self.occupation_trajectory(beta0, times, parity)
            series.append(traj.energy_density)
        values = gaussian.parity_average(*series)
        return DistanceTrajectory(times=times, values=values,
                                  meta=self.meta(beta0, observable=observable))

    def steady_energy_density(self) -> float:
        from .freefermion import energy_density

        return float(gaussian.parity_average(
            energy_density(self.steady[Parity.EVEN].n, self.tables[Parity.EVEN]),
            energy_density(self.steady[Parity.ODD].n, self.tables[Parity.ODD]),
        ))


class ExactEngine:
    """Finite-coupling trajectories from dense master-equation propagation."""

    def __init__(self, model_spec: SpinChainSpec, dissipator: LindbladSpec,
                 controls=exact.PropagationControls(), method="rk45",
                 max_sites=exact.DEFAULT_DENSE_BUDGET):
        if dissipator.epsilon <= 0:
            raise ValueError("exact engine needs a positive coupling rate")
        self.spec = model_spec
        self.dissipator = dissipator
        self.controls = controls
        self.method = method
        self.H = dense_operator(model_spec, max_sites)
        self.jumps = dense_lindblad_ops(dissipator, max_sites)
        self.epsilon = dissipator.epsilon
        self.max_sites = max_sites
        self._steady = None
        self._lock = threading.Lock()

    def meta(self, beta0, mu0=0.0, ell=None, kind="normalized", observable=None):
        return TrajectoryMeta(
            model=f"{self.spec.family.value}(L={self.spec.L})",
            dissipator=self.dissipator.kind,
            engine="exact",
            beta0=float(beta0),
            mu0=float(mu0),
            epsilon=self.epsilon,
            ell=ell,
            kind=kind,
            observable=observable,
        )

    def initial_state(self, beta0, mu0=0.0) -> np.ndarray:
        if mu0:
            from .model import total_sz

            params = exact.GGEParams(
                operators=(self.H, total_sz(self.spec.L)),
                lambdas=np.array([beta0, mu0]),
            )
            return exact.gge_state(params)
        return exact.thermal_state(self.H, beta0)

    @property
    def steady(self) -> np.ndarray:
        with self._lock:
            if self._steady is None:
                self._steady = exact.steady_state(
                    self.H, self.jumps, self.epsilon, max_sites=self.max_sites
                )
            return self._steady

    def _propagate(self, rho0, times):
        # times are rescaled; the integrator runs in physical time
        t_phys = np.asarray(times, dtype=float) / self.epsilon
        return exact.propagate(
            rho0, self.H, self.jumps, self.epsilon, t_phys[-1],
            controls=self.controls, t_eval=t_phys, method=self.method,
            max_sites=self.max_sites,
        )

    def distance_trajectory(self, beta0, times, ell, kind="normalized", mu0=0.0) -> DistanceTrajectory:
        times = np.asarray(times, dtype=float)
        traj = self._propagate(self.initial_state(beta0, mu0), times)
        start = exact.centered_block(self.spec.L, ell)
        ref = exact.partial_trace(self.steady, start, ell)
        values = np.array([
            exact.distance(exact.partial_trace(rho, start, ell), ref, kind)
            for rho in traj.states
        ])
        return DistanceTrajectory(times=times, values=values,
                                  meta=self.meta(beta0, mu0, ell=ell, kind=str(DistanceKind(kind).value)))

    def observable_trajectory(self, beta0, times, observable="energy_density", mu0=0.0):
        if observable != "energy_density":
            raise ValueError(f"unknown observable {observable!r}")
        times = np.asarray(times, dtype=float)
        traj = self._propagate(self.initial_state(beta0, mu0), times)
        values = np.array([
            np.trace(self.H @ rho).real / self.spec.L for rho in traj.states
        ])
        return DistanceTrajectory(times=times, values=values,
                                  meta=self.meta(beta0, mu0, observable=observable))

    def steady_energy_density(self) -> float:
        return float(np.trace(self.H @ self.steady).real / self.spec.L)


@dataclass(frozen=True)
class CrossingResult:
    exists: bool
    t_mp: float | None = None
    bracket: tuple[int, int] | None = None
    residual: float | None = None
    farther_first: bool | None = None  # True when traj_a starts farther out


def _common_grid(traj_a, traj_b):
    if np.array_equal(traj_a.times, traj_b.times):
        return traj_a.times, traj_a.values, traj_b.values
    lo = max(traj_a.times[0], traj_b.times[0])
    hi = min(traj_a.times[-1], traj_b.times[-1])
    if hi <= lo:
        raise ValueError("trajectories do not overlap in time")
    base = traj_a.times[(traj_a.times >= lo) & (traj_a.times <= hi)]
    va = np.interp(base, traj_a.times, traj_a.values)
    vb = np.interp(base, traj_b.times, traj_b.values)
    return base, va, vb


def detect_crossing(traj_a: DistanceTrajectory, traj_b: DistanceTrajectory,
                    guard=STARTUP_GUARD) -> CrossingResult:
    """First sign change of d_a - d_b after the startup guard window.

    The crossing time is linearly interpolated inside the bracketing
    interval; `residual` is the larger |d_a - d_b| at the bracket ends (how
    sharply the crossing is resolved by the sampling grid).
    """
    times, va, vb = _common_grid(traj_a, traj_b)
    diff = va - vb
    farther_first = bool(diff[0] > 0)
    live = times >= guard
    idx = np.flatnonzero(live[:-1] & (np.sign(diff[:-1]) != 0)
                         & (np.sign(diff[1:]) != np.sign(diff[:-1])))
    if len(idx) == 0:
        return CrossingResult(exists=False, farther_first=farther_first)
    i = int(idx[0])
    t_mp = float(np.interp(0.0, sorted((diff[i], diff[i + 1])),
                           [times[i], times[i + 1]] if diff[i] < diff[i + 1]
                           else [times[i + 1], times[i]]))
    return CrossingResult(
        exists=True,
        t_mp=t_mp,
        bracket=(i, i + 1),
        residual=float(max(abs(diff[i]), abs(diff[i + 1]))),
        farther_first=farther_first,
    )


@dataclass(frozen=True)
class TemperatureScan:
    betas: np.ndarray
    trajectories: list
    crossings: dict  # (i, j) -> CrossingResult, i < j
    probe_time: float
    table: np.ndarray  # rows (beta, d_initial, d_probe)


def scan_temperatures(engine, betas, times, ell, probe_time=12.0, kind="normalized",
                      jobs=1) -> TemperatureScan:
    """All-pairs crossing matrix plus the initial-vs-probe-time distance table."""
    times = np.asarray(times, dtype=float)
    if probe_time > times[-1]:
        raise ValueError(f"probe time {probe_time} outside the trajectory grid")
    betas = [float(b) for b in betas]

    def one(beta):
        return engine.distance_trajectory(beta, times, ell, kind)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            trajectories = list(pool.map(one, betas))
    else:
        trajectories = [one(b) for b in betas]
    crossings = {}
    for i in range(len(betas)):
        for j in range(i + 1, len(betas)):
            crossings[(i, j)] = detect_crossing(trajectories[i], trajectories[j])
    table = np.array([
        [beta, traj.values[0], float(np.interp(probe_time, traj.times, traj.values))]
        for beta, traj in zip(betas, trajectories)
    ])
    return TemperatureScan(betas=np.array(betas), trajectories=trajectories,
                           crossings=crossings, probe_time=float(probe_time), table=table)


def scan_subsystem(engine, beta_pair, ells, times, kind="normalized"):
    """Crossing time of one temperature pair as a function of subsystem size.

    Returns rows (ell, t_mp or nan); only meaningful on the flow engine where
    large blocks stay cheap.
    """
    times = np.asarray(times, dtype=float)
    rows = []
    for ell in ells:
        a = engine.distance_trajectory(beta_pair[0], times, int(ell), kind)
        b = engine.distance_trajectory(beta_pair[1], times, int(ell), kind)
        res = detect_crossing(a, b)
        rows.append((int(ell), res.t_mp if res.exists else float("nan")))
    return rows


def overshoot_flag(traj: DistanceTrajectory, steady_value, guard=STARTUP_GUARD):
    """True when (value - steady_value) changes sign at some finite time."""
    live = traj.times >= guard
    diff = traj.values[live] - steady_value
    signs = np.sign(diff)
    idx = np.flatnonzero((signs[:-1] != 0) & (signs[1:] != signs[:-1]))
    if len(idx) == 0:
        return False, None
    i = int(idx[0])
    t = float(np.interp(0.0, sorted((diff[i], diff[i + 1])),
                        sorted((traj.times[live][i], traj.times[live][i + 1]))))
    return True, t


# ---------------------------------------------------------------------------
# persistence: one CSV per trajectory plus a JSON manifest per run directory


def _float_repr(x) -> str:
    return repr(float(x))


def write_trajectory_csv(traj: DistanceTrajectory, path):
    path = Path(path)
    buf = io.StringIO()
    buf.write(f"# {SCHEMA_VERSION}\n")
    meta = {k: v for k, v in asdict(traj.meta).items() if v is not None}
    buf.write(f"# meta: {json.dumps(meta, sort_keys=True)}\n")
    writer = csv.writer(buf, lineterminator="\n")
    column = "d_value" if traj.meta.observable is None else traj.meta.observable
    writer.writerow(["eps_t", column])
    for t, v in zip(traj.times, traj.values):
        writer.writerow([_float_repr(t), _float_repr(v)])
    path.write_text(buf.getvalue())


def read_trajectory_csv(path) -> DistanceTrajectory:
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0].strip() != f"# {SCHEMA_VERSION}":
        raise SchemaVersionError(f"{path}: unsupported schema header "
                                 f"{lines[0] if lines else '<empty>'!r}")
    if not lines[1].startswith("# meta: "):
        raise SchemaVersionError(f"{path}: missing meta line")
    meta = TrajectoryMeta(**json.loads(lines[1][len("# meta: "):]))
    rows = list(csv.reader(lines[2:]))
    header, data = rows[0], rows[1:]
    if header[0] != "eps_t":
        raise SchemaVersionError(f"{path}: unexpected columns {header}")
    times = np.array([float(r[0]) for r in data])
    values = np.array([float(r[1]) for r in data])
    return DistanceTrajectory(times=times, values=values, meta=meta)


class SchemaVersionError(ValueError):
    pass


@dataclass
class RunRecord:
    config: dict
    trajectories: list = field(default_factory=list)
    tables: dict = field(default_factory=dict)  # name -> (columns, 2d array)
    summary: dict = field(default_factory=dict)


def persist_run(record: RunRecord, out_dir) -> Path:
    """Write manifest + one CSV per trajectory/table; returns the directory."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = []
    for i, traj in enumerate(record.trajectories):
        name = f"trajectory_{i:03d}.csv"
        write_trajectory_csv(traj, out / name)
        files.append(name)
    table_files = {}
    for name, (columns, rows) in record.tables.items():
        fname = f"{name}.csv"
        buf = io.StringIO()
        buf.write(f"# {SCHEMA_VERSION}\n")
        buf.write(f"# table: {name}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(columns)
        for row in np.atleast_2d(rows):
            writer.writerow([_float_repr(x) for x in row])
        (out / fname).write_text(buf.getvalue())
        table_files[name] = fname
    manifest = {
        "schema": SCHEMA_VERSION,
        "config": record.config,
        "trajectories": files,
        "tables": table_files,
        "summary": record.summary,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))
    return out


def load_run(run_dir) -> RunRecord:
    run_dir = Path(run_dir)
    manifest = json.loads((run_dir / "manifest.json").read_text())
    if manifest.get("schema") != SCHEMA_VERSION:
        raise SchemaVersionError(
            f"manifest schema {manifest.get('schema')!r} != {SCHEMA_VERSION!r}"
        )
    trajectories = [read_trajectory_csv(run_dir / f) for f in manifest["trajectories"]]
    tables = {}
    for name, fname in manifest.get("tables", {}).items():
        lines = (run_dir / fname).read_text().splitlines()
        rows = list(csv.reader(lines[2:]))
        tables[name] = (rows[0], np.array([[float(x) for x in r] for r in rows[1:]]))
    return RunRecord(config=manifest["config"], trajectories=trajectories,
                     tables=tables, summary=manifest["summary"])
