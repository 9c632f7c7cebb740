"""Compiled vs pure-Python kernel benchmark.

Run as `python -m nvsinglet.benchmarks [--t-end T] [--repeats N]`.
Times the master-equation and trajectory kernels on the standard working
point at three tiers and prints a table with the speedup factors.
"""

from __future__ import annotations

import argparse
import json
import sys
import time

import numpy as np

from . import _backend
from .analysis import standard_observables
from .dynamics import StepControl, integrate_me, mcwf
from .hilbert import basis_ket
from .model import SystemParams, Tier, build_collapse_ops, effective_params, hamiltonian_terms


def _workloads(t_end: float):
    p = SystemParams()
    eff = effective_params(p)
    for tier, solver, traj, ctrl in (
        (Tier.COLLECTIVE_HD, "me", 0, StepControl()),
        (Tier.SINGLE_MODE_RWA, "me", 0, StepControl()),
        (Tier.SINGLE_MODE_RWA, "mcwf", 2, StepControl()),
        (Tier.FULL_ROTATED, "me", 0, StepControl(rtol=1e-6, atol=1e-9)),
    ):
        terms = hamiltonian_terms(p, tier)
        cols = build_collapse_ops(p, tier)
        obs = standard_observables(terms.layout, eff)
        grid = np.linspace(0.0, t_end, 51)
        yield tier, solver, traj, terms, cols, obs, grid, ctrl


def run_benchmark(t_end: float = 20.0, repeats: int = 1) -> list[dict]:
    rows = []
    for tier, solver, traj, terms, cols, obs, grid, ctrl in _workloads(t_end):
        row = {"tier": tier.value, "solver": solver, "dim": terms.layout.dim}
        for be in ("py", "cy"):
            try:
                _backend.get_kernel(be)
            except ImportError:
                row[be] = None
                continue
            best = np.inf
            for _ in range(repeats):
                t0 = time.perf_counter()
                if solver == "me":
                    rho0 = basis_ket(terms.layout, {}).dm()
                    ts = integrate_me(terms, cols, rho0, grid, ctrl=ctrl,
                                      observables=obs, backend=be)
                else:
                    psi0 = basis_ket(terms.layout, {})
                    ts = mcwf(terms, cols, psi0, grid, n_traj=traj, seed=1,
                              ctrl=ctrl, observables=obs, n_workers=1, backend=be)
                best = min(best, time.perf_counter() - t0)
                row["n_steps"] = ts.meta["n_steps"] if solver == "me" else None
            row[be] = best
        if row.get("py") and row.get("cy"):
            row["speedup"] = row["py"] / row["cy"]
        rows.append(row)
    return rows


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description="kernel backend benchmark")
    ap.add_argument("--t-end", type=float, default=20.0)
    ap.add_argument("--repeats", type=int, default=1)
    ap.add_argument("--json", action="store_true", help="machine-readable output")
    args = ap.parse_args(argv)
    rows = run_benchmark(args.t_end, args.repeats)
    if args.json:
        print(json.dumps(rows, indent=2))
        return 0
    print(f"{'tier':18s} {'solver':7s} {'dim':>4s} {'pure[s]':>9s} {'compiled[s]':>12s} {'speedup':>8s}")
    for r in rows:
        py = f"{r['py']:.3f}" if r.get("py") else "-"
        cy = f"{r['cy']:.3f}" if r.get("cy") else "n/a"
        sp = f"{r['speedup']:.1f}x" if r.get("speedup") else "-"
        print(f"{r['tier']:18s} {r['solver']:7s} {r['dim']:4d} {py:>9s} {cy:>12s} {sp:>8s}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
