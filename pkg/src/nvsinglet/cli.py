"""Declarative experiment runner.

Verbs: run, sweep, presets, validate. A run is described by a preset name
and/or a YAML config file plus command-line overrides; results land in an
output directory as CSV (time series) and JSON (summary). Stdout carries
only the JSON summary; logs go to stderr.

Exit codes: 0 ok, 2 invalid config, 3 solver failure, 4 invariant violation.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import sys
import tempfile
from pathlib import Path

import numpy as np
import yaml

from . import _backend
from .analysis import LeakageError, reduce_to_qubits, standard_observables
from .dynamics import (
    InvariantViolation,
    SolverError,
    StepControl,
    TimeSeries,
    integrate_field_matrix,
    integrate_me,
    mcwf,
    steady_state,
)
from .hilbert import DensityMatrix, StateVector, ValidationError, basis_ket
from .model import (
    ConsistencyError,
    SystemParams,
    Tier,
    ZeroDetuningError,
    build_collapse_ops,
    check_validity,
    effective_params,
    hamiltonian_terms,
    resonance_condition_check,
)
from .presets import PRESETS, get_preset, list_presets

CSV_BASE_COLUMNS = ("t", "F", "P00", "P11", "PT", "PS", "n_c")
CSV_EXTRA_COLUMNS = ("n_c1", "n_c2")
DEFAULT_SEED = 1234


class ConfigError(ValueError):
    pass


SOLVERS = ("me", "mcwf", "steady", "field_matrix")
INITIAL_STATES = ("ket00", "ket11", "ketT", "ketS", "mixed_identity")


@dataclasses.dataclass
class ExperimentConfig:
    name: str = "run"
    params: SystemParams = dataclasses.field(default_factory=SystemParams)
    tier: Tier = Tier.SINGLE_MODE_RWA
    solver: str = "mcwf"
    initial_state: str | list = "ket00"
    t_end: float = 3000.0
    n_samples: int = 2000
    n_traj: int = 50
    seed: int = DEFAULT_SEED
    rtol: float = 1e-8
    atol: float = 1e-10
    outputs: tuple[str, ...] = ("csv", "json")
    sweep: tuple[str, tuple[float, ...]] | None = None
    units: dict = dataclasses.field(default_factory=dict)
    strict: bool = False
    backend: str | None = None

    def validate(self):
        if self.solver not in SOLVERS:
            raise ConfigError(f"unknown solver {self.solver!r}; choose from {SOLVERS}")
        if not isinstance(self.initial_state, list) and \
                self.initial_state not in INITIAL_STATES:
            raise ConfigError(
                f"unknown initial state {self.initial_state!r}; "
                f"choose from {INITIAL_STATES} or give 4 amplitudes")
        if self.t_end <= 0 or self.n_samples < 2:
            raise ConfigError("t_end must be positive and n_samples >= 2")
        if self.solver == "mcwf" and self.n_traj < 1:
            raise ConfigError("n_traj must be >= 1 for mcwf")
        if self.solver == "mcwf" and self.initial_state == "mixed_identity":
            raise ConfigError("mcwf requires a pure initial state")
        if self.solver == "steady" and self.tier in (Tier.FULL_ROTATED,
                                                     Tier.SINGLE_MODE_RWA):
            raise ConfigError("steady solver requires a time-independent tier "
                              "(EffectiveRaman or CollectiveHd)")
        if self.solver == "field_matrix" and self.tier is not Tier.EFFECTIVE_RAMAN:
            raise ConfigError("field_matrix solver works on the EffectiveRaman tier")
        if self.sweep is not None:
            param, values = self.sweep
            if not values:
                raise ConfigError("sweep values must be nonempty")
            if not all(math.isfinite(v) for v in values):
                raise ConfigError("sweep values must be finite")
            if not hasattr(self.params, param):
                raise ConfigError(f"sweep parameter {param!r} is not a SystemParams field")
        for o in self.outputs:
            if o not in ("csv", "json", "summary"):
                raise ConfigError(f"unknown output kind {o!r}")


def _qubit_amplitudes(name_or_amps) -> np.ndarray:
    if isinstance(name_or_amps, list):
        if len(name_or_amps) != 4:
            raise ConfigError("custom initial state needs 4 amplitudes")
        amps = np.array([complex(a[0], a[1]) if isinstance(a, (list, tuple)) else complex(a)
                         for a in name_or_amps])
        n = np.linalg.norm(amps)
        if n == 0:
            raise ConfigError("custom initial state has zero norm")
        return amps / n
    table = {
        "ket00": [1, 0, 0, 0],
        "ket11": [0, 0, 0, 1],
        "ketT": [0, 1 / math.sqrt(2), 1 / math.sqrt(2), 0],
        "ketS": [0, 1 / math.sqrt(2), -1 / math.sqrt(2), 0],
    }
    return np.array(table[name_or_amps], dtype=complex)


def build_initial_state(cfg: ExperimentConfig, layout) -> DensityMatrix | StateVector:
    """Initial state on the tier layout: qubit state (x) vacuum modes."""
    from .analysis import product_to_collective

    if cfg.initial_state == "mixed_identity":
        if layout.labels == ("collective",):
            rho = np.eye(4, dtype=complex) / 4
            return DensityMatrix(layout, rho)
        nv_dim = layout.dim_of("NV1")
        q = np.zeros((nv_dim, nv_dim), dtype=complex)
        q[0, 0] = q[1, 1] = 0.5
        rho = np.kron(np.kron(q, q), _vacuum_matrix(layout))
        return DensityMatrix(layout, rho)

    amps4 = _qubit_amplitudes(cfg.initial_state)
    if layout.labels == ("collective",):
        v = product_to_collective(np.outer(amps4, amps4.conj()))
        # pure state: take the dominant eigenvector (it is rank one)
        evals, vecs = np.linalg.eigh(v)
        return StateVector(layout, vecs[:, -1])
    nv_dim = layout.dim_of("NV1")
    if nv_dim == 3:
        lift = np.zeros((3, 2), dtype=complex)
        lift[0, 0] = lift[1, 1] = 1.0
        qvec = np.kron(lift, lift) @ amps4
    else:
        qvec = amps4
    vac = np.zeros(_mode_dim(layout), dtype=complex)
    vac[0] = 1.0
    return StateVector(layout, np.kron(qvec, vac))


def _mode_dim(layout) -> int:
    dims = [d for lbl, d in layout.subsystems if lbl not in ("NV1", "NV2")]
    return int(np.prod(dims)) if dims else 1


def _vacuum_matrix(layout) -> np.ndarray:
    d = _mode_dim(layout)
    m = np.zeros((d, d), dtype=complex)
    m[0, 0] = 1.0
    return m


# ---------------------------------------------------------------------------
# running


def run_experiment(cfg: ExperimentConfig) -> tuple[TimeSeries | None, dict]:
    """Execute one configured run; returns (time series or None, summary)."""
    cfg.validate()
    p = cfg.params
    eff = effective_params(p)
    validity = check_validity(p)
    resonance = resonance_condition_check(p)
    summary = {
        "name": cfg.name,
        "tier": cfg.tier.value,
        "solver": cfg.solver,
        "seed": cfg.seed,
        "initial_state": cfg.initial_state if isinstance(cfg.initial_state, str)
        else "custom",
        "backend": cfg.backend or _backend.backend_name(),
        "effective_params": eff.as_dict(),
        "validity": validity.as_dict(),
        "resonance_condition": resonance.as_dict(),
    }
    if cfg.units:
        summary["units"] = _si_report(cfg, eff)
    if cfg.strict and not validity.all_pass:
        raise ConfigError("validity checks failed under --strict: "
                          + ", ".join(c.name for c in validity.checks if not c.passes))

    ctrl = StepControl(rtol=cfg.rtol, atol=cfg.atol)

    if cfg.solver == "steady":
        h = hamiltonian_terms(p, cfg.tier)
        cols = build_collapse_ops(p, cfg.tier)
        res = steady_state(h, cols)
        rho2q, leak = reduce_to_qubits(res.rho_ss, strict=False)
        from .analysis import fidelity as fid_fn, populations as pop_fn
        pops = pop_fn(rho2q)
        summary.update({
            "null_dim": res.null_dim,
            "non_unique": res.non_unique,
            "residual": res.residual,
            "smallest_sv": res.smallest_sv,
            "final": {
                "F": fid_fn(rho2q, eff),
                "P00": pops[0], "P11": pops[1], "PT": pops[2], "PS": pops[3],
            },
        })
        return None, summary

    grid = np.linspace(0.0, cfg.t_end, cfg.n_samples)
    snapshot_times = [0.9 * cfg.t_end, cfg.t_end]

    if cfg.solver == "field_matrix":
        amps4 = _qubit_amplitudes(
            cfg.initial_state if cfg.initial_state != "mixed_identity" else "ket00")
        rho00 = (np.eye(4, dtype=complex) / 4
                 if cfg.initial_state == "mixed_identity"
                 else np.outer(amps4, amps4.conj()))
        ts = integrate_field_matrix(eff, p.kappa, rho00, grid, ctrl=ctrl)
    else:
        h = hamiltonian_terms(p, cfg.tier)
        cols = build_collapse_ops(p, cfg.tier)
        obs = standard_observables(h.layout, eff)
        state0 = build_initial_state(cfg, h.layout)
        if cfg.solver == "me":
            rho0 = state0 if isinstance(state0, DensityMatrix) else state0.dm()
            ts = integrate_me(h, cols, rho0, grid, ctrl=ctrl, observables=obs,
                              snapshot_times=snapshot_times, backend=cfg.backend)
        else:
            if isinstance(state0, DensityMatrix):
                raise ConfigError("mcwf requires a pure initial state")
            ts = mcwf(h, cols, state0, grid, n_traj=cfg.n_traj, seed=cfg.seed,
                      ctrl=ctrl, observables=obs, snapshot_times=snapshot_times,
                      backend=cfg.backend)

    summary["final"] = {name: ts.final(name) for name in ts.observables
                        if name in CSV_BASE_COLUMNS + CSV_EXTRA_COLUMNS}
    if "leak_e" in ts.observables:
        summary["leakage"] = {
            "final": ts.final("leak_e"),
            "max": float(ts.observable("leak_e").max()),
            "flagged_samples": int(np.sum(ts.observable("leak_e") >= 0.05)),
        }
    if len(ts.states) >= 2:
        try:
            red = [reduce_to_qubits(s, strict=False)[0].matrix for _, s in ts.states[-2:]]
            summary["stationarity_residual_reduced"] = float(
                np.linalg.norm(red[1] - red[0]))
        except ValueError:
            pass
    summary["meta"] = {k: v for k, v in ts.meta.items()
                       if isinstance(v, (int, float, str, bool))}
    return ts, summary


def _si_report(cfg: ExperimentConfig, eff) -> dict:
    """Unit conversion for reporting only; dynamics always runs in units of g."""
    g_mhz = float(cfg.units.get("g_over_2pi_MHz", 0.0))
    if g_mhz <= 0:
        return {}
    g_rad = 2 * math.pi * g_mhz * 1e6
    return {
        "g_over_2pi_MHz": g_mhz,
        "time_unit_us": 1e6 / g_rad,
        "t_end_us": cfg.t_end * 1e6 / g_rad,
        "kappa_eff_over_2pi_MHz": eff.kappa_eff * g_mhz,
    }


# ---------------------------------------------------------------------------
# artifacts


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_csv(ts: TimeSeries, path: Path):
    """Time-series artifact with the documented column contract."""
    cols = [c for c in CSV_BASE_COLUMNS if c == "t" or c in ts.observables]
    cols += [c for c in CSV_EXTRA_COLUMNS if c in ts.observables]
    stderr_cols = [f"stderr_{c}" for c in cols[1:] if c in ts.stderr] \
        if ts.stderr else []
    lines = [",".join(cols + stderr_cols)]
    for i, t in enumerate(ts.times):
        row = [_fmt(t)]
        row += [_fmt(ts.observables[c][i]) for c in cols[1:]]
        row += [_fmt(ts.stderr[c.removeprefix("stderr_")][i]) for c in stderr_cols]
        lines.append(",".join(row))
    _atomic_write(path, "\n".join(lines) + "\n")


def _atomic_write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.chmod(tmp, 0o644)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_summary(summary: dict, path: Path):
    _atomic_write(path, json.dumps(summary, indent=2, sort_keys=True) + "\n")


# ---------------------------------------------------------------------------
# config assembly


def _config_from_sources(args) -> ExperimentConfig:
    raw = {}
    if args.config:
        with open(args.config) as fh:
            loaded = yaml.safe_load(fh) or {}
        if not isinstance(loaded, dict):
            raise ConfigError("config file must hold a mapping")
        raw.update(loaded)
    preset_name = args.preset or raw.get("preset")
    cfg = ExperimentConfig()
    if preset_name:
        try:
            pr = get_preset(preset_name)
        except KeyError as exc:
            raise ConfigError(str(exc)) from None
        cfg = ExperimentConfig(
            name=pr.name, params=pr.params, tier=pr.tier, solver=pr.solver,
            initial_state=pr.initial_state, t_end=pr.t_end,
            n_samples=pr.n_samples, n_traj=pr.n_traj, sweep=pr.sweep,
            units=dict(pr.units),
        )
    if args.config:
        cfg.name = raw.get("name", Path(args.config).stem if not preset_name else cfg.name)

    if "params" in raw:
        if not isinstance(raw["params"], dict):
            raise ConfigError("params must be a mapping of SystemParams fields")
        try:
            cfg.params = cfg.params.with_overrides(**raw["params"])
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad params override: {exc}") from None
    for key in ("solver", "initial_state", "t_end", "n_samples", "n_traj",
                "seed", "rtol", "atol"):
        if key in raw:
            setattr(cfg, key, raw[key])
    if "tier" in raw:
        cfg.tier = _parse_tier(raw["tier"])
    if "outputs" in raw:
        cfg.outputs = tuple(raw["outputs"])
    if "sweep" in raw:
        sw = raw["sweep"]
        if not isinstance(sw, dict) or "param" not in sw or "values" not in sw:
            raise ConfigError("sweep must be {param: name, values: [...]}")
        cfg.sweep = (str(sw["param"]), tuple(float(v) for v in sw["values"]))
    if "units" in raw:
        cfg.units = dict(raw["units"])

    if args.tier:
        cfg.tier = _parse_tier(args.tier)
    if args.solver:
        cfg.solver = args.solver
    if args.traj is not None:
        cfg.n_traj = args.traj
    if args.seed is not None:
        cfg.seed = args.seed
    if getattr(args, "backend", None):
        cfg.backend = args.backend
    cfg.strict = bool(args.strict)
    return cfg


def _parse_tier(text: str) -> Tier:
    for t in Tier:
        if t.value.lower() == str(text).lower():
            return t
    raise ConfigError(f"unknown tier {text!r}; choose from "
                      + ", ".join(t.value for t in Tier))


def _out_dir(args) -> Path:
    return Path(args.out or os.environ.get("NVSINGLET_OUT", "runs"))


def _log(msg: str):
    print(msg, file=sys.stderr)


# ---------------------------------------------------------------------------
# verbs


def _cmd_run(args) -> int:
    cfg = _config_from_sources(args)
    cfg.sweep = None
    ts, summary = run_experiment(cfg)
    out = _out_dir(args)
    artifacts = {}
    if ts is not None and "csv" in cfg.outputs:
        path = out / f"{cfg.name}.csv"
        write_csv(ts, path)
        artifacts["csv"] = str(path)
    if "json" in cfg.outputs:
        path = out / f"{cfg.name}.summary.json"
        write_summary(summary, path)
        artifacts["json"] = str(path)
    summary["artifacts"] = artifacts
    print(json.dumps(summary, indent=2, sort_keys=True))
    return 0


def _cmd_sweep(args) -> int:
    cfg = _config_from_sources(args)
    if cfg.sweep is None:
        if not args.param or not args.values:
            raise ConfigError("sweep needs --param and --values (or a preset/config "
                              "with a sweep block)")
        cfg.sweep = (args.param, tuple(float(v) for v in args.values.split(",")))
    cfg.validate()
    param, values = cfg.sweep
    out = _out_dir(args)
    rows = []
    for v in values:
        sub = dataclasses.replace(cfg)
        sub.sweep = None
        sub.params = cfg.params.with_overrides(**{param: v})
        sub.name = f"{cfg.name}-{param}-{v:g}"
        _log(f"sweep point {param}={v:g}")
        ts, summary = run_experiment(sub)
        if ts is not None and "csv" in cfg.outputs:
            write_csv(ts, out / f"{sub.name}.csv")
        if "json" in cfg.outputs:
            write_summary(summary, out / f"{sub.name}.summary.json")
        rows.append({"value": v, "name": sub.name, "final": summary.get("final", {})})
    final_f = [r["final"].get("F") for r in rows if "F" in r.get("final", {})]
    table = {
        "sweep_param": param,
        "rows": rows,
        "monotone_nonincreasing_final_F":
            all(a >= b - 1e-9 for a, b in zip(final_f, final_f[1:]))
            if len(final_f) > 1 else None,
    }
    print(json.dumps(table, indent=2, sort_keys=True))
    return 0


def _cmd_presets(args) -> int:
    print(json.dumps(list_presets(), indent=2, sort_keys=True))
    return 0


def _cmd_validate(args) -> int:
    cfg = _config_from_sources(args)
    report = {
        "validity": check_validity(cfg.params).as_dict(),
        "resonance_condition": resonance_condition_check(cfg.params).as_dict(),
        "effective_params": effective_params(cfg.params).as_dict(),
    }
    print(json.dumps(report, indent=2, sort_keys=True))
    if cfg.strict and not report["validity"]["all_pass"]:
        return 2
    return 0


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="nvsinglet",
        description="dissipative two-NV entanglement: experiment runner")
    sub = ap.add_subparsers(dest="verb", required=True)

    def common(sp):
        sp.add_argument("--config", help="YAML config file")
        sp.add_argument("--preset", help="named preset (see `nvsinglet presets`)")
        sp.add_argument("--out", help="output directory (env NVSINGLET_OUT)")
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--strict", action="store_true",
                        help="abort when validity checks fail")
        sp.add_argument("--tier", help="model tier override")
        sp.add_argument("--solver", choices=SOLVERS)
        sp.add_argument("--traj", type=int, default=None, help="mcwf trajectories")
        sp.add_argument("--backend", choices=("cy", "py"),
                        help="force the integration backend")

    rp = sub.add_parser("run", help="execute one configured run")
    common(rp)
    rp.set_defaults(func=_cmd_run)

    swp = sub.add_parser("sweep", help="run a one-parameter batch")
    common(swp)
    swp.add_argument("--param", help="SystemParams field to sweep")
    swp.add_argument("--values", help="comma-separated values")
    swp.set_defaults(func=_cmd_sweep)

    pp = sub.add_parser("presets", help="list named presets")
    pp.set_defaults(func=_cmd_presets)

    vp = sub.add_parser("validate", help="report regime-of-validity margins")
    common(vp)
    vp.set_defaults(func=_cmd_validate)
    return ap


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        return args.func(args)
    except (InvariantViolation, ValidationError, LeakageError) as exc:
        _log(f"invariant violation: {exc}")
        return 4
    except SolverError as exc:
        _log(f"solver failure: {exc}")
        return 3
    except (ConfigError, ConsistencyError, ZeroDetuningError, KeyError,
            ValueError) as exc:
        _log(f"config error: {exc}")
        return 2


if __name__ == "__main__":
    sys.exit(main())
