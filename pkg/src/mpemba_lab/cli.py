"""Command-line frontend: JSON config validation, presets, experiment dispatch.

Exit codes: 0 success, 2 config/validation error, 3 numerical failure.
Outputs per run: trajectory/table CSVs plus a manifest echoing the full
effective configuration, sufficient to rerun the experiment exactly.
"""

from __future__ import annotations

import argparse
import copy
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import jsonschema

from . import exact, model, mpemba, spectral
from .gge_flow import FlowError

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["model", "dissipator", "engine", "experiment"],
    "properties": {
        "name": {"type": "string"},
        "model": {
            "type": "object",
            "additionalProperties": False,
            "required": ["family", "L"],
            "properties": {
                "family": {"enum": ["tfim", "staggered_xxz"]},
                "L": {"type": "integer", "minimum": 2},
                "boundary": {"enum": ["periodic", "open"]},
                "J": {"type": "number"},
                "h_z": {"type": "number"},
                "h_x": {"type": "number"},
                "delta_even": {"type": "number"},
                "delta_odd": {"type": "number"},
            },
        },
        "dissipator": {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind"],
            "properties": {
                "kind": {"enum": ["hop", "raise"]},
                "epsilon": {"type": ["number", "null"], "minimum": 0},
                "gge_limit": {"type": "boolean"},
            },
        },
        "engine": {"enum": ["gge_flow", "exact", "spectral"]},
        "experiment": {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind"],
            "properties": {
                "kind": {"enum": ["trajectory", "crossing", "scan_T", "scan_ell",
                                   "landscape", "observable"]},
                "betas": {"type": "array", "items": {"type": "number"}, "minItems": 1},
                "mus": {"type": "array", "items": {"type": "number"}},
                "mu0": {"type": "number"},
                "ell": {"type": "integer", "minimum": 1},
                "ells": {"type": "array", "items": {"type": "integer", "minimum": 1}},
                "distance": {"enum": ["trace", "frobenius", "normalized"]},
                "probe_time": {"type": "number", "exclusiveMinimum": 0},
                "observable": {"enum": ["energy_density"]},
            },
        },
        "numerics": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "t_end": {"type": "number", "exclusiveMinimum": 0},
                "dt": {"type": "number", "exclusiveMinimum": 0},
                "rtol": {"type": "number", "exclusiveMinimum": 0},
                "atol": {"type": "number", "exclusiveMinimum": 0},
                "propagation": {"enum": ["rk45", "expm"]},
                "exact_budget": {"type": "integer", "minimum": 2},
                "spectral_budget": {"type": "integer", "minimum": 2},
            },
        },
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"dir": {"type": "string"}},
        },
    },
}

MODEL_DEFAULTS = {
    "tfim": {"boundary": "periodic", "J": 0.75, "h_z": 1.0, "h_x": 0.0},
    "staggered_xxz": {"boundary": "periodic", "J": 1.0, "delta_even": 1.6, "delta_odd": 0.8},
}
NUMERICS_DEFAULTS = {
    "t_end": 20.0,
    "dt": 0.05,
    "rtol": 1e-8,
    "atol": 1e-10,
    "propagation": "rk45",
    "exact_budget": exact.DEFAULT_DENSE_BUDGET,
    "spectral_budget": spectral.SPECTRAL_BUDGET,
}


class ConfigError(ValueError):
    pass


class ValidationFailure(SystemExit):
    pass


@dataclass(frozen=True)
class RunConfig:
    name: str
    model: dict
    dissipator: dict
    engine: str
    experiment: dict
    numerics: dict
    output: dict

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "model": self.model,
            "dissipator": self.dissipator,
            "engine": self.engine,
            "experiment": self.experiment,
            "numerics": self.numerics,
            "output": self.output,
        }


def parse_config(document) -> RunConfig:
    """Validate a config document (dict or JSON text) and fill defaults."""
    if isinstance(document, (str, bytes)):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"not valid JSON: {exc}") from exc
    try:
        jsonschema.validate(document, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        path = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"config field {path}: {exc.message}") from exc

    cfg = copy.deepcopy(document)
    family = cfg["model"]["family"]
    model_block = {**MODEL_DEFAULTS[family], **cfg["model"]}
    dis = {"epsilon": None, "gge_limit": False, **cfg["dissipator"]}
    experiment = {"distance": "normalized", "mu0": 0.0, **cfg["experiment"]}
    numerics = {**NUMERICS_DEFAULTS, **cfg.get("numerics", {})}
    output = {"dir": "runs", **cfg.get("output", {})}
    engine = cfg["engine"]

    _check_consistency(model_block, dis, engine, experiment, numerics)
    return RunConfig(
        name=cfg.get("name", "run"),
        model=model_block,
        dissipator=dis,
        engine=engine,
        experiment=experiment,
        numerics=numerics,
        output=output,
    )


def _check_consistency(model_block, dis, engine, experiment, numerics):
    kind = experiment["kind"]
    L = model_block["L"]
    if engine == "gge_flow":
        if model_block["family"] != "tfim" or model_block.get("h_x", 0.0) != 0.0:
            raise ConfigError("gge_flow engine requires the integrable tfim (h_x = 0)")
        if model_block["boundary"] != "periodic":
            raise ConfigError("gge_flow engine requires periodic boundaries")
        if dis["kind"] != "hop":
            raise ConfigError("gge_flow engine supports only the hop dissipator")
        if not dis["gge_limit"] and dis["epsilon"] is not None:
            raise ConfigError("gge_flow is the weak-coupling limit; set gge_limit "
                              "instead of a finite epsilon")
    if engine == "exact":
        if L > numerics["exact_budget"]:
            raise ConfigError(f"exact engine at L={L} exceeds the dense budget "
                              f"{numerics['exact_budget']}")
        if dis["gge_limit"] or dis["epsilon"] is None:
            raise ConfigError("exact engine needs a finite epsilon")
        if dis["epsilon"] <= 0:
            raise ConfigError("exact engine needs epsilon > 0")
    if engine == "spectral":
        if L > numerics["spectral_budget"]:
            raise ConfigError(f"spectral engine at L={L} exceeds the budget "
                              f"{numerics['spectral_budget']}")
        if kind != "landscape":
            raise ConfigError("spectral engine runs the landscape experiment")
    if kind == "landscape" and engine != "spectral":
        raise ConfigError("landscape requires the spectral engine")
    if kind == "scan_ell" and engine != "gge_flow":
        raise ConfigError("scan_ell requires the gge_flow engine")
    if kind in ("trajectory", "crossing", "scan_T", "scan_ell", "observable"):
        if "betas" not in experiment:
            raise ConfigError(f"experiment {kind} needs a betas list")
    if kind == "crossing" and len(experiment["betas"]) < 2:
        raise ConfigError("crossing needs at least two temperatures")
    if kind == "scan_ell":
        if len(experiment["betas"]) != 2:
            raise ConfigError("scan_ell compares exactly two temperatures")
        if "ells" not in experiment:
            raise ConfigError("scan_ell needs an ells list")
    if kind in ("trajectory", "crossing", "scan_T") and "ell" not in experiment:
        raise ConfigError(f"experiment {kind} needs a subsystem size ell")
    if "ell" in experiment and experiment["ell"] > L:
        raise ConfigError(f"subsystem ell={experiment['ell']} exceeds L={L}")


# ---------------------------------------------------------------------------
# presets: the paper scenarios, with dense-budget substitutions where needed

PRESETS = {
    # Mpemba crossing for the integrable chain, weak-coupling limit, L = 400
    "fig3b": {
        "name": "fig3b",
        "model": {"family": "tfim", "L": 400, "J": 0.75, "h_z": 1.0, "h_x": 0.0,
                   "boundary": "periodic"},
        "dissipator": {"kind": "hop", "gge_limit": True},
        "engine": "gge_flow",
        "experiment": {"kind": "crossing", "betas": [0.0, 0.15], "ell": 2},
        "numerics": {"t_end": 20.0, "dt": 0.05},
    },
    # no crossing for the chaotic chain at finite coupling, desk scale L = 8
    "fig3c-desk": {
        "name": "fig3c-desk",
        "model": {"family": "tfim", "L": 8, "J": 0.75, "h_z": 1.0, "h_x": 0.3,
                   "boundary": "open"},
        "dissipator": {"kind": "hop", "epsilon": 0.2},
        "engine": "exact",
        "experiment": {"kind": "crossing", "betas": [0.0, 0.05, 0.1, 0.15, 0.2],
                        "ell": 2},
        "numerics": {"t_end": 20.0, "dt": 0.1},
    },
    # two-conserved-quantity model at finite coupling, desk scale (exploratory)
    "fig4a-desk": {
        "name": "fig4a-desk",
        "model": {"family": "staggered_xxz", "L": 8, "boundary": "open"},
        "dissipator": {"kind": "raise", "epsilon": 0.05},
        "engine": "exact",
        "experiment": {"kind": "crossing", "betas": [0.12, 0.0], "ell": 2},
        "numerics": {"t_end": 20.0, "dt": 0.1},
    },
    # slow-mode overlap vs distances, thermal slice (chaotic chain; the
    # em1-integrable companion below covers the other panel)
    "em1": {
        "name": "em1",
        "model": {"family": "tfim", "L": 12, "h_x": 0.3, "boundary": "periodic"},
        "dissipator": {"kind": "hop", "epsilon": 1.0},
        "engine": "spectral",
        "experiment": {"kind": "landscape",
                        "betas": [round(b, 10) for b in np.arange(-0.5, 0.801, 0.01)]},
    },
    "em1-integrable": {
        "name": "em1-integrable",
        "model": {"family": "tfim", "L": 12, "h_x": 0.0, "boundary": "periodic"},
        "dissipator": {"kind": "hop", "epsilon": 1.0},
        "engine": "spectral",
        "experiment": {"kind": "landscape",
                        "betas": [round(b, 10) for b in np.arange(-0.5, 0.801, 0.01)]},
    },
    # initial vs probe-time distances over a temperature scan
    "em2": {
        "name": "em2",
        "model": {"family": "tfim", "L": 400, "h_x": 0.0, "boundary": "periodic"},
        "dissipator": {"kind": "hop", "gge_limit": True},
        "engine": "gge_flow",
        "experiment": {"kind": "scan_T",
                        "betas": [round(b, 10) for b in np.arange(-1.0, 1.001, 0.05)],
                        "ell": 2, "probe_time": 12.0},
        "numerics": {"t_end": 14.0, "dt": 0.05},
    },
    # overlap/distance landscape for the two-conserved-quantity model
    "em3": {
        "name": "em3",
        "model": {"family": "staggered_xxz", "L": 12, "boundary": "periodic"},
        "dissipator": {"kind": "raise", "epsilon": 1.0},
        "engine": "spectral",
        "experiment": {"kind": "landscape",
                        "betas": [round(b, 10) for b in np.arange(0.0, 0.301, 0.01)],
                        "mus": [round(m, 10) for m in np.arange(-0.4, 0.401, 0.1)]},
    },
}


def _build_model_spec(block) -> model.SpinChainSpec:
    if block["family"] == "tfim":
        return model.build_tfim(block["L"], block["J"], block["h_z"], block["h_x"],
                                model.Boundary(block["boundary"]))
    return model.build_staggered_xxz(block["L"], block["J"], block["delta_even"],
                                     block["delta_odd"], model.Boundary(block["boundary"]))


def _build_dissipator(block, L, boundary) -> model.LindbladSpec:
    eps = 1.0 if block["gge_limit"] else block["epsilon"]
    builder = model.build_lindblad_hop if block["kind"] == "hop" else model.build_lindblad_raise
    return builder(L, eps, model.Boundary(boundary))


def _make_engine(config: RunConfig):
    spec = _build_model_spec(config.model)
    dis = _build_dissipator(config.dissipator, config.model["L"], config.model["boundary"])
    if config.engine == "gge_flow":
        return mpemba.GgeFlowEngine(spec, dis)
    controls = exact.PropagationControls(rtol=config.numerics["rtol"],
                                         atol=config.numerics["atol"])
    return mpemba.ExactEngine(spec, dis, controls=controls,
                              method=config.numerics["propagation"],
                              max_sites=config.numerics["exact_budget"])


def _time_grid(numerics):
    n = int(round(numerics["t_end"] / numerics["dt"]))
    return np.linspace(0.0, numerics["t_end"], n + 1)


def _crossing_summary(res: mpemba.CrossingResult, pair):
    if res.exists:
        return {"pair": pair, "crossing": True, "t_mp": res.t_mp}
    return {"pair": pair, "crossing": False}


def run(config: RunConfig, out_dir=None, jobs=1) -> mpemba.RunRecord:
    """Execute one experiment; returns the record written to disk."""
    out = Path(out_dir if out_dir is not None else config.output["dir"]) / config.name
    record = mpemba.RunRecord(config=config.as_dict())
    kind = config.experiment["kind"]

    if config.engine == "spectral":
        _run_landscape(config, record)
    else:
        engine = _make_engine(config)
        times = _time_grid(config.numerics)
        exp = config.experiment
        if kind in ("trajectory", "crossing"):
            trajs = [engine.distance_trajectory(b, times, exp["ell"], exp["distance"],
                                                 mu0=exp.get("mu0", 0.0))
                     if config.engine == "exact"
                     else engine.distance_trajectory(b, times, exp["ell"], exp["distance"])
                     for b in exp["betas"]]
            record.trajectories.extend(trajs)
            if kind == "crossing":
                crossings = []
                for i in range(len(trajs)):
                    for j in range(i + 1, len(trajs)):
                        res = mpemba.detect_crossing(trajs[i], trajs[j])
                        crossings.append(_crossing_summary(
                            res, [exp["betas"][i], exp["betas"][j]]))
                record.summary["crossings"] = crossings
                found = [c for c in crossings if c["crossing"]]
                record.summary["n_crossings"] = len(found)
        elif kind == "scan_T":
            scan = mpemba.scan_temperatures(engine, exp["betas"], times, exp["ell"],
                                            exp.get("probe_time", 12.0),
                                            exp["distance"], jobs=jobs)
            record.trajectories.extend(scan.trajectories)
            record.tables["em2_scatter"] = (["beta", "d_initial", "d_probe"], scan.table)
            record.summary["crossings"] = [
                _crossing_summary(res, [float(scan.betas[i]), float(scan.betas[j])])
                for (i, j), res in sorted(scan.crossings.items())
            ]
            record.summary["n_crossings"] = sum(
                1 for c in record.summary["crossings"] if c["crossing"])
            record.summary["probe_time"] = scan.probe_time
        elif kind == "scan_ell":
            rows = mpemba.scan_subsystem(engine, exp["betas"], exp["ells"], times,
                                         exp["distance"])
            record.tables["crossing_vs_ell"] = (["ell", "t_mp"], np.array(rows))
            record.summary["pair"] = exp["betas"]
        elif kind == "observable":
            steady = engine.steady_energy_density()
            for b in exp["betas"]:
                traj = engine.observable_trajectory(b, times, exp.get("observable",
                                                                       "energy_density"))
                record.trajectories.append(traj)
                flag, t_over = mpemba.overshoot_flag(traj, steady)
                record.summary.setdefault("overshoot", []).append(
                    {"beta": b, "overshoots": flag, "t": t_over})
            record.summary["steady_value"] = steady
        else:
            raise ConfigError(f"experiment kind {kind!r} not runnable on {config.engine}")

    mpemba.persist_run(record, out)
    return record


def _run_landscape(config: RunConfig, record: mpemba.RunRecord):
    spec = _build_model_spec(config.model)
    H = model.dense_operator(spec, config.numerics["spectral_budget"])
    dis = _build_dissipator(config.dissipator, config.model["L"], config.model["boundary"])
    ops = model.dense_lindblad_ops(dis, config.numerics["spectral_budget"])
    eps = config.dissipator["epsilon"] or 1.0
    syms = {}
    if spec.family is model.Family.STAGGERED_XXZ:
        syms["sz"] = np.diag(model.total_sz(spec.L)).real
    elif config.model.get("h_x", 0.0) == 0.0:
        syms["parity"] = np.diag(model.parity_operator(spec.L)).real
    # basis fixing uses diagonal symmetries only (S^z, fermion parity); see
    # the eigenbasis docstring for the residual freedom in degenerate blocks
    rows = spectral.landscape(H, ops, eps, config.experiment["betas"],
                              config.experiment.get("mus"),
                              diagonal_symmetries=syms or None,
                              max_sites=config.numerics["spectral_budget"])
    record.tables["landscape"] = (
        ["beta", "mu", "overlap", "d_trace", "d_frob", "d_norm"],
        np.array(rows),
    )
    arr = np.array(rows)
    slice0 = arr[arr[:, 1] == 0.0]
    if len(slice0):
        record.summary["overlap_zero_beta"] = float(
            slice0[np.argmin(np.abs(slice0[:, 2])), 0])


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="mpemba-lab",
                                     description="distance-trajectory experiments "
                                                 "for weakly open spin chains")
    parser.add_argument("--config", type=Path, help="JSON run configuration")
    parser.add_argument("--preset", choices=sorted(PRESETS),
                        help="named paper scenario")
    parser.add_argument("--out", type=Path, default=None, help="output directory")
    parser.add_argument("--jobs", type=int, default=1, help="parallel scan workers")
    parser.add_argument("--dry-run", action="store_true",
                        help="validate the configuration and exit")
    args = parser.parse_args(argv)

    if bool(args.config) == bool(args.preset):
        parser.error("exactly one of --config / --preset is required")
    try:
        if args.preset:
            config = parse_config(PRESETS[args.preset])
        else:
            config = parse_config(args.config.read_text())
    except (ConfigError, OSError) as exc:
        print(json.dumps({"error": "validation", "message": str(exc)}), file=sys.stderr)
        return 2

    if args.dry_run:
        print(json.dumps({"valid": True, "effective_config": config.as_dict()}, indent=2))
        return 0

    try:
        record = run(config, out_dir=args.out, jobs=args.jobs)
    except (exact.PropagationError, FlowError) as exc:
        print(json.dumps({"error": "numerical", "message": str(exc)}), file=sys.stderr)
        return 3

    for line in _summary_lines(record):
        print(line)
    return 0


def _summary_lines(record):
    s = record.summary
    lines = [f"run {record.config['name']}: wrote {len(record.trajectories)} "
             f"trajectories, {len(record.tables)} tables"]
    for c in s.get("crossings", []):
        pair = c["pair"]
        if c["crossing"]:
            lines.append(f"  pair beta=({pair[0]:g}, {pair[1]:g}): crossing at "
                         f"eps*t = {c['t_mp']:.4f}")
        else:
            lines.append(f"  pair beta=({pair[0]:g}, {pair[1]:g}): no crossing")
    if "overshoot" in s:
        for o in s["overshoot"]:
            msg = f"overshoots at eps*t = {o['t']:.4f}" if o["overshoots"] else "monotone"
            lines.append(f"  beta={o['beta']:g}: energy density {msg}")
    if "overlap_zero_beta" in s:
        lines.append(f"  slow-mode overlap closest to zero at beta = "
                     f"{s['overlap_zero_beta']:g}")
    return lines


if __name__ == "__main__":
    sys.exit(main())
