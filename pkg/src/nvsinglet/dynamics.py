"""Time evolution and steady states.

Entry points:
  integrate_me          direct Lindblad integration (adaptive RK 5(4))
  mcwf                  Monte-Carlo wave-function unraveling over trajectories
  steady_state          Liouvillian null space (dense SVD)
  integrate_field_matrix  photon-number block equations of the effective model
  adiabatic_gap_check   cross-tier deviation report

Rates follow the kappa(2 L rho L^+ - L^+L rho - rho L^+L) convention: the
collapse operators passed in are the sqrt(2 kappa)-scaled jump operators and
are applied in standard Lindblad form.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field as dc_field
from typing import Callable, Sequence

import numpy as np

from . import _backend
from ._kernel_py import SolverError, adaptive_rk45
from .analysis import ObservableSet, TWO_QUBITS, psi_S
from .hilbert import DensityMatrix, Operator, SpaceLayout, StateVector
from .model import TermSeries

__all__ = [
    "StepControl", "TimeSeries", "SteadyStateResult", "GapReport",
    "integrate_me", "mcwf", "steady_state", "liouvillian_matrix",
    "integrate_field_matrix", "adiabatic_gap_check", "SolverError",
    "InvariantViolation",
]


class InvariantViolation(RuntimeError):
    """A state invariant (trace, positivity, population bounds) broke."""


@dataclass(frozen=True)
class StepControl:
    rtol: float = 1e-8
    atol: float = 1e-10
    max_steps: int = 50_000_000

    def scaled(self, rtol=None, atol=None) -> "StepControl":
        return StepControl(rtol or self.rtol, atol or self.atol, self.max_steps)


@dataclass
class TimeSeries:
    """Sampled observables over a time grid, with optional trajectory stats."""

    times: np.ndarray
    observables: dict[str, np.ndarray]
    stderr: dict[str, np.ndarray] = dc_field(default_factory=dict)
    states: list[tuple[float, DensityMatrix]] = dc_field(default_factory=list)
    meta: dict = dc_field(default_factory=dict)

    POPULATION_NAMES = ("F", "P00", "P11", "PT", "PS")

    def observable(self, name: str) -> np.ndarray:
        return self.observables[name]

    def final(self, name: str) -> float:
        return float(self.observables[name][-1])

    def validate_invariants(self, bound_tol: float = 1e-9, sum_tol: float = 1e-6):
        for name in self.POPULATION_NAMES:
            if name not in self.observables:
                continue
            vals = self.observables[name]
            if vals.min() < -bound_tol or vals.max() > 1 + bound_tol:
                raise InvariantViolation(
                    f"{name} leaves [0,1]: range [{vals.min():.3e}, {vals.max():.3e}]"
                )
        pops = [self.observables[n] for n in ("P00", "P11", "PT", "PS")
                if n in self.observables]
        if len(pops) == 4:
            total = sum(pops)
            if np.max(np.abs(total - 1.0)) > sum_tol:
                raise InvariantViolation(
                    f"collective populations sum to {total[np.argmax(np.abs(total-1))]:.8f}"
                )

    def stationarity_residual(self) -> float | None:
        """Frobenius distance between the snapshots at 0.9 t_end and t_end."""
        if len(self.states) < 2:
            return None
        return float(np.linalg.norm(self.states[-1][1].matrix - self.states[-2][1].matrix))


def _as_grid(grid) -> np.ndarray:
    g = np.asarray(grid, dtype=float)
    if g.ndim != 1 or len(g) < 2 or np.any(np.diff(g) <= 0):
        raise ValueError("time grid must be a strictly increasing 1-D array")
    return g


def _empty_obs(n: int):
    return ObservableSet((), (), ())


def _resolve_h(h):
    """Accept TermSeries, a static Operator, or a callable t -> Operator."""
    if isinstance(h, TermSeries):
        return h, None
    if isinstance(h, Operator):
        return TermSeries(h.layout, ((0.0, h.matrix),)), None
    if callable(h):
        return None, h
    raise TypeError(f"cannot interpret Hamiltonian of type {type(h)}")


def _snapshot_indices(grid: np.ndarray, snapshot_times) -> dict[int, float]:
    out = {}
    if snapshot_times is None:
        return out
    for ts in snapshot_times:
        idx = int(np.argmin(np.abs(grid - ts)))
        out[idx] = grid[idx]
    return out


def _hermitize(m: np.ndarray) -> np.ndarray:
    return (m + m.conj().T) / 2


def _solver_state(layout: SpaceLayout, m: np.ndarray,
                  positivity_tol: float = -1e-7) -> DensityMatrix:
    """Validate a raw solver state at integrator tolerance and clip rounding.

    The integrator guarantees positivity only to about -1e-7; eigenvalues
    inside that band are clipped to zero so the strict DensityMatrix
    invariants hold for everything handed to users.
    """
    m = _hermitize(m)
    m = m / np.trace(m).real
    evals, vecs = np.linalg.eigh(m)
    if evals.min() < positivity_tol:
        raise InvariantViolation(
            f"state eigenvalue {evals.min():.3e} below solver tolerance {positivity_tol}"
        )
    if evals.min() < 0.0:
        evals = np.clip(evals, 0.0, None)
        m = (vecs * evals) @ vecs.conj().T
        m = m / np.trace(m).real
    return DensityMatrix(layout, m)


def integrate_me(h, collapse: Sequence[Operator], rho0: DensityMatrix,
                 grid, ctrl: StepControl = StepControl(),
                 observables: ObservableSet | None = None,
                 snapshot_times: Sequence[float] | None = None,
                 backend: str | None = None,
                 check_invariants: bool = True) -> TimeSeries:
    """Integrate drho/dt = -i[H(t),rho] + sum D[L]rho over the grid."""
    grid = _as_grid(grid)
    series, h_callable = _resolve_h(h)
    layout = rho0.layout
    if series is not None and series.layout.dims != layout.dims:
        raise ValueError("Hamiltonian and state layouts disagree")
    for L in collapse:
        if L.layout.dims != layout.dims:
            raise ValueError("collapse operator layout disagrees with the state")

    obs = observables or _empty_obs(layout.dim)
    jumps = _backend.lower_ops(collapse, layout.dim)
    snaps_idx = _snapshot_indices(grid, snapshot_times)
    want_idx = tuple(sorted(set(snaps_idx) | {len(grid) - 1}))

    if h_callable is not None:
        from . import _kernel_py
        res = _kernel_py.evolve_me_callable(
            lambda t: h_callable(t).matrix, list(jumps), rho0.matrix, grid,
            ctrl.rtol, ctrl.atol, list(obs.nums), list(obs.dens),
            snapshot_idx=want_idx, max_steps=ctrl.max_steps)
        used_backend = "py"
    else:
        kern = _backend.get_kernel(backend)
        omegas, hmats = _backend.lower_terms(series)
        res = kern.evolve_me(
            omegas, hmats, jumps, np.ascontiguousarray(rho0.matrix), grid,
            ctrl.rtol, ctrl.atol,
            np.ascontiguousarray(_backend.lower_ops(obs.nums, layout.dim))
            if obs.nums else np.zeros((0, layout.dim, layout.dim), complex),
            _lower_dens(obs.dens, layout.dim),
            snapshot_idx=want_idx, max_steps=ctrl.max_steps)
        used_backend = backend or _backend.backend_name()

    if res["trace_drift"] > 1e-8:
        raise InvariantViolation(f"trace drifted by {res['trace_drift']:.2e} > 1e-8")

    states = [(grid[idx], _solver_state(layout, res["snapshots"][idx]))
              for idx in want_idx]

    series_obs = {name: res["obs"][:, i] for i, name in enumerate(obs.names)}
    ts = TimeSeries(
        times=grid,
        observables=series_obs,
        states=states,
        meta={
            "solver": "me",
            "backend": used_backend,
            "rtol": ctrl.rtol,
            "atol": ctrl.atol,
            "n_steps": res["n_steps"],
            "n_rejected": res["n_rejected"],
            "min_h": res["min_h"],
            "trace_drift": res["trace_drift"],
        },
    )
    if check_invariants and obs.names:
        ts.validate_invariants()
    return ts


def _lower_dens(dens, n):
    """Denumerator stack with an identity sentinel where den is None."""
    out = np.empty((len(dens), n, n), dtype=complex)
    has = np.zeros(len(dens), dtype=np.int8)
    for i, d in enumerate(dens):
        if d is None:
            out[i] = np.eye(n)
            has[i] = 0
        else:
            out[i] = d
            has[i] = 1
    # trace(rho) equals <I> for ME and |psi|^2 for MCWF, so the identity
    # sentinel is exact; the flag array is unused but kept for clarity
    return np.ascontiguousarray(out)


def _traj_seed_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(index,)))


_WORKER_PAYLOAD = {}


def _mcwf_worker_init(payload):
    _WORKER_PAYLOAD["p"] = payload


def _mcwf_run_one(args):
    index, backend = args
    p = _WORKER_PAYLOAD["p"]
    kern = _backend.get_kernel(backend)
    rng = _traj_seed_rng(p["seed"], index)
    res = kern.evolve_mcwf(
        p["omegas"], p["hmats"], p["jumps"], p["psi0"], p["grid"],
        p["rtol"], p["atol"], p["obs_num"], p["obs_den"], rng,
        snapshot_idx=p["snap_idx"], max_steps=p["max_steps"])
    return index, res["obs"], res["snapshots"], res["n_jumps"]


def mcwf(h, jumps: Sequence[Operator], psi0: StateVector, grid,
         n_traj: int, seed: int, ctrl: StepControl = StepControl(),
         observables: ObservableSet | None = None,
         snapshot_times: Sequence[float] | None = None,
         n_workers: int | None = None, backend: str | None = None,
         check_invariants: bool = True) -> TimeSeries:
    """Trajectory-averaged unraveling; reproducible given (seed, n_traj).

    Trajectory i draws its randomness from a stream derived from (seed, i),
    and the reduction runs in trajectory order, so the result is identical
    for any worker count.
    """
    if n_traj < 1:
        raise ValueError("n_traj must be >= 1")
    grid = _as_grid(grid)
    series, h_callable = _resolve_h(h)
    if h_callable is not None:
        raise TypeError("mcwf requires a TermSeries or static Operator Hamiltonian")
    layout = psi0.layout
    if series.layout.dims != layout.dims:
        raise ValueError("Hamiltonian and state layouts disagree")

    obs = observables or _empty_obs(layout.dim)
    omegas, hmats = _backend.lower_terms(series)
    jmats = _backend.lower_ops(jumps, layout.dim)
    snaps_idx = _snapshot_indices(grid, snapshot_times)
    want_idx = tuple(sorted(set(snaps_idx) | {len(grid) - 1}))

    payload = {
        "omegas": omegas, "hmats": hmats, "jumps": jmats,
        "psi0": np.ascontiguousarray(psi0.amplitudes), "grid": grid,
        "rtol": ctrl.rtol, "atol": ctrl.atol,
        "obs_num": np.ascontiguousarray(_backend.lower_ops(obs.nums, layout.dim))
        if obs.nums else np.zeros((0, layout.dim, layout.dim), complex),
        "obs_den": _lower_dens(obs.dens, layout.dim),
        "snap_idx": want_idx, "seed": int(seed), "max_steps": ctrl.max_steps,
    }

    if n_workers is None:
        n_workers = int(os.environ.get("NVSINGLET_WORKERS", "0")) or min(
            n_traj, os.cpu_count() or 1)

    all_obs = np.empty((n_traj, len(grid), len(obs.names), 2))
    snap_acc = {idx: np.zeros((layout.dim, layout.dim), dtype=complex) for idx in want_idx}
    jump_counts = np.empty(n_traj, dtype=int)

    if n_workers <= 1:
        _mcwf_worker_init(payload)
        results = map(_mcwf_run_one, ((i, backend) for i in range(n_traj)))
        for index, ob, snaps, njump in results:
            all_obs[index] = ob
            jump_counts[index] = njump
            for idx, m in snaps.items():
                snap_acc[idx] += m
    else:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=n_workers,
                                 initializer=_mcwf_worker_init,
                                 initargs=(payload,)) as ex:
            for index, ob, snaps, njump in ex.map(
                    _mcwf_run_one, ((i, backend) for i in range(n_traj)),
                    chunksize=max(1, n_traj // (4 * n_workers))):
                all_obs[index] = ob
                jump_counts[index] = njump
                for idx, m in snaps.items():
                    snap_acc[idx] += m

    # ratio-of-means estimator: consistent with the master-equation value of
    # every ratio observable; stderr from first-order error propagation
    num_mean = all_obs[..., 0].mean(axis=0)
    den_mean = all_obs[..., 1].mean(axis=0)
    mean = num_mean / den_mean
    if n_traj > 1:
        resid = (all_obs[..., 0] - mean[None, :, :] * all_obs[..., 1]) / den_mean[None, :, :]
        stderr = resid.std(axis=0, ddof=1) / math.sqrt(n_traj)
    else:
        stderr = np.zeros_like(mean)

    states = [(grid[idx], _solver_state(layout, snap_acc[idx] / n_traj))
              for idx in want_idx]

    ts = TimeSeries(
        times=grid,
        observables={name: mean[:, i] for i, name in enumerate(obs.names)},
        stderr={name: stderr[:, i] for i, name in enumerate(obs.names)},
        states=states,
        meta={
            "solver": "mcwf",
            "backend": backend or _backend.backend_name(),
            "rtol": ctrl.rtol,
            "atol": ctrl.atol,
            "n_traj": n_traj,
            "seed": int(seed),
            "mean_jumps": float(jump_counts.mean()),
        },
    )
    if check_invariants and obs.names:
        ts.validate_invariants(sum_tol=1e-6)
    return ts


# ---------------------------------------------------------------------------
# steady states


def liouvillian_matrix(h: np.ndarray, jumps: Sequence[np.ndarray]) -> np.ndarray:
    """Dense superoperator for row-stacked vec(rho)."""
    d = h.shape[0]
    eye = np.eye(d)
    lsup = -1j * (np.kron(h, eye) - np.kron(eye, h.T))
    for L in jumps:
        ldl = L.conj().T @ L
        lsup += (np.kron(L, L.conj())
                 - 0.5 * np.kron(ldl, eye) - 0.5 * np.kron(eye, ldl.T))
    return lsup


@dataclass(frozen=True)
class SteadyStateResult:
    rho_ss: DensityMatrix
    null_dim: int
    residual: float
    smallest_sv: float

    @property
    def non_unique(self) -> bool:
        return self.null_dim > 1


def steady_state(h, collapse: Sequence[Operator], dim_cap: int = 64,
                 kernel_tol: float = 1e-10) -> SteadyStateResult:
    """Kernel of the vectorized Liouvillian for a time-independent generator."""
    series, h_callable = _resolve_h(h)
    if h_callable is not None or (series is not None and not series.static):
        raise ValueError("steady_state requires a time-independent Hamiltonian")
    layout = series.layout
    d = layout.dim
    if d > dim_cap:
        raise ValueError(f"dimension {d} exceeds the dense-Liouvillian cap {dim_cap}")
    hmat = series.evaluate(0.0)
    jumps = [L.matrix for L in collapse]
    lsup = liouvillian_matrix(hmat, jumps)
    u, s, vh = np.linalg.svd(lsup)
    tol = kernel_tol * s[0]
    null_dim = int(np.sum(s < tol))
    if null_dim == 0:
        raise SolverError(
            f"no Liouvillian kernel at tolerance: smallest singular value {s[-1]:.3e}"
        )
    kernel = vh[len(s) - null_dim:].conj()
    if null_dim == 1:
        rho = kernel[0].reshape(d, d)
    else:
        # non-unique kernel: report the orthogonal projection of the maximally
        # mixed state onto the kernel as a representative fixed point
        target = (np.eye(d, dtype=complex) / d).reshape(-1)
        coeffs = kernel.conj() @ target
        rho = (coeffs @ kernel).reshape(d, d)
    rho = _hermitize(rho)
    tr = np.trace(rho).real
    if abs(tr) < 1e-14:
        raise SolverError("kernel carries no trace; cannot normalize a steady state")
    rho = rho / tr
    residual = float(np.linalg.norm(lsup @ rho.reshape(-1)))
    if residual > 1e-8:
        raise SolverError(f"steady-state residual {residual:.3e} exceeds 1e-8")
    evals, vecs = np.linalg.eigh(rho)
    if evals.min() < -1e-8:
        raise SolverError(f"kernel state has eigenvalue {evals.min():.3e} < -1e-8")
    if evals.min() < 0.0:
        evals = np.clip(evals, 0.0, None)
        rho = (vecs * evals) @ vecs.conj().T
        rho = rho / np.trace(rho).real
    return SteadyStateResult(
        rho_ss=DensityMatrix(layout, rho),
        null_dim=null_dim,
        residual=residual,
        smallest_sv=float(s[-1]),
    )


# ---------------------------------------------------------------------------
# field-matrix block equations of the effective model


def integrate_field_matrix(eff, kappa: float, rho00: np.ndarray, grid,
                           rho01: np.ndarray | None = None,
                           rho11: np.ndarray | None = None,
                           ctrl: StepControl = StepControl(),
                           printed_rates: bool = False) -> TimeSeries:
    """Photon-number block equations of the damped effective Raman model.

    State blocks rho_mn ( <m|rho|n> over the {|0>,|1>} photon subspace ) are
    two-qubit operators. The dissipative coefficients follow the model-wide
    kappa(2 c rho c^+ - ...) convention: feed 2*kappa, coherence decay kappa.
    ``printed_rates=True`` halves them (the literal coefficients printed with
    the block equations, which are internally inconsistent with that
    convention by a factor of two).
    """
    grid = _as_grid(grid)
    g = complex(eff.g_eff)
    gc = np.conj(g)
    feed = kappa if printed_rates else 2.0 * kappa

    sp = np.zeros((4, 4), dtype=complex)  # S+ = |1>_1<0| + |1>_2<0|
    sp[2, 0] = sp[3, 1] = 1.0             # NV1: |1x> <0x|
    sp[1, 0] = sp[3, 2] = 1.0             # NV2: |x1> <x0|
    sm = sp.conj().T

    hd = -(eff.DeltaTilde1 * np.diag([0, 0, 1, 1]).astype(complex)
           + eff.DeltaTilde2 * np.diag([0, 1, 0, 1]).astype(complex)
           + eff.Theta * sp + np.conj(eff.Theta) * sm)

    def fhat(x):
        return -1j * (hd @ x - x @ hd)

    def rhs(t, y):
        r00 = y[0:16].reshape(4, 4)
        r01 = y[16:32].reshape(4, 4)
        r11 = y[32:48].reshape(4, 4)
        r10 = r01.conj().T
        d00 = fhat(r00) - 1j * g * (r01 @ sp) + 1j * gc * (sm @ r10) + feed * r11
        d11 = fhat(r11) - 1j * gc * (r10 @ sm) + 1j * g * (sp @ r01) - feed * r11
        d01 = fhat(r01) - 1j * gc * (r00 @ sm) + 1j * gc * (sm @ r11) - 0.5 * feed * r01
        return np.concatenate([d00.ravel(), d01.ravel(), d11.ravel()])

    if rho00.shape != (4, 4):
        raise ValueError(f"rho00 must be 4x4, got {rho00.shape}")
    r01 = np.zeros((4, 4), complex) if rho01 is None else np.asarray(rho01, complex)
    r11 = np.zeros((4, 4), complex) if rho11 is None else np.asarray(rho11, complex)
    if r01.shape != (4, 4) or r11.shape != (4, 4):
        raise ValueError("field-matrix blocks must all be 4x4 two-qubit operators")
    y0 = np.concatenate([np.asarray(rho00, complex).ravel(), r01.ravel(), r11.ravel()])

    h_max = 2.5 / (2 * np.linalg.norm(hd) + 8 * abs(g) + 3 * feed + 1e-30)
    ys = adaptive_rk45(rhs, y0, grid, ctrl.rtol, ctrl.atol, ctrl.max_steps,
                       h_max=h_max)

    from .analysis import collective_basis_matrix
    bmat = collective_basis_matrix()
    v_psi = psi_S(eff).amplitudes
    names = ("F", "P00", "P11", "PT", "PS", "n_c", "trace")
    vals = np.empty((len(grid), len(names)))
    for i, y in enumerate(ys):
        r00 = y[0:16].reshape(4, 4)
        r11 = y[32:48].reshape(4, 4)
        rn = r00 + r11
        diag = np.real(np.einsum("ik,ij,jk->k", bmat.conj(), rn, bmat))
        vals[i] = (
            float(np.real(v_psi.conj() @ rn @ v_psi)),
            diag[0], diag[2], diag[1], diag[3],
            float(np.real(np.trace(r11))),
            float(np.real(np.trace(rn))),
        )

    rho_n_final = _hermitize(ys[-1][0:16].reshape(4, 4) + ys[-1][32:48].reshape(4, 4))
    rho_n_final = rho_n_final / np.trace(rho_n_final).real
    return TimeSeries(
        times=grid,
        observables={n: vals[:, i] for i, n in enumerate(names)},
        states=[(grid[-1], DensityMatrix(TWO_QUBITS, rho_n_final))],
        meta={"solver": "field_matrix", "printed_rates": printed_rates,
              "rtol": ctrl.rtol, "atol": ctrl.atol},
    )


# ---------------------------------------------------------------------------
# cross-tier comparison


@dataclass(frozen=True)
class GapReport:
    observables: tuple[str, ...]
    max_dev: dict[str, float]
    rms_dev: dict[str, float]
    t_range: tuple[float, float]

    def as_dict(self) -> dict:
        return {
            "t_range": list(self.t_range),
            "max_dev": dict(self.max_dev),
            "rms_dev": dict(self.rms_dev),
        }


def adiabatic_gap_check(ts_a: TimeSeries, ts_b: TimeSeries) -> GapReport:
    """Per-observable max/RMS deviation between two runs (common grid)."""
    lo = max(ts_a.times[0], ts_b.times[0])
    hi = min(ts_a.times[-1], ts_b.times[-1])
    if hi <= lo:
        raise ValueError("time ranges do not overlap")
    mask = (ts_a.times >= lo) & (ts_a.times <= hi)
    tt = ts_a.times[mask]
    common = [n for n in ts_a.observables if n in ts_b.observables]
    max_dev, rms_dev = {}, {}
    for name in common:
        a = ts_a.observables[name][mask]
        b = np.interp(tt, ts_b.times, ts_b.observables[name])
        dev = np.abs(a - b)
        max_dev[name] = float(dev.max())
        rms_dev[name] = float(np.sqrt(np.mean(dev**2)))
    return GapReport(tuple(common), max_dev, rms_dev, (float(lo), float(hi)))
