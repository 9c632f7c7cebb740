"""Pure-Python adaptive integrators: the reference backend.

Implements a Dormand-Prince 5(4) embedded Runge-Kutta pair on
  - the vectorized Lindblad equation  drho/dt = -i[H(t),rho] + sum_m D[L_m]rho
  - the unnormalized no-jump state    dpsi/dt = (-iH(t) - 1/2 sum L^dag L) psi
with H(t) = sum_k exp(i w_k t) H_k (the term list is closed under Hermitian
conjugation, so H(t) is Hermitian at every t).

The compiled backend (_kernel_cy) mirrors this module step for step; both
take identical accept/reject decisions, so results differ only by
floating-point rounding.
"""

from __future__ import annotations

import numpy as np


class SolverError(RuntimeError):
    """Step-size underflow, step budget exhausted, or a zero-norm state."""


# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40])

_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 5.0
_DEFAULT_MAX_STEPS = 50_000_000

# Explicit RK pairs go silently unstable when the step sits past the real-axis
# stability boundary at a near-root of the embedded error polynomial, so the
# step size is capped by a spectral bound on the generator.
_STABILITY_MARGIN = 2.5


def _h_stability_cap(hmats, jumps) -> float:
    hnorm = sum(float(np.linalg.norm(m)) for m in hmats)
    jnorm = sum(float(np.linalg.norm(L)) ** 2 for L in jumps)
    bound = 2.0 * hnorm + 2.0 * jnorm
    return _STABILITY_MARGIN / bound if bound > 0 else np.inf


def _stages(f, t0, y0, f0, h):
    """All seven DP45 stages; stage 7 is f at the 5th-order solution (FSAL)."""
    k = [f0]
    for i in range(1, 7):
        yi = y0 + h * sum(a * k[j] for j, a in enumerate(_A[i]) if a != 0.0)
        k.append(f(t0 + _C[i] * h, yi))
    y1 = yi  # stage-7 argument equals the 5th-order solution
    err = h * sum(e * k[j] for j, e in enumerate(_E) if e != 0.0)
    return y1, err, k[6]


def _error_norm(err, y0, y1, rtol, atol):
    scale = atol + rtol * np.maximum(np.abs(y0), np.abs(y1))
    return float(np.sqrt(np.mean(np.abs(err / scale) ** 2)))


def _initial_step(f, t0, y0, rtol, atol, omega_max, t_span):
    f0 = f(t0, y0)
    scale = atol + rtol * np.abs(y0)
    d0 = np.sqrt(np.mean(np.abs(y0 / scale) ** 2))
    d1 = np.sqrt(np.mean(np.abs(f0 / scale) ** 2))
    h = 0.01 * d0 / d1 if d0 > 1e-8 and d1 > 1e-8 else 1e-6
    if omega_max > 0:
        h = min(h, 0.1 / omega_max)
    return min(h, t_span), f0


class _Stepper:
    """Adaptive DP45 stepping with FSAL reuse and exact landing on targets."""

    def __init__(self, f, t0, y0, rtol, atol, omega_max, t_end, max_steps,
                 h_max=np.inf):
        self.f = f
        self.t = t0
        self.y = y0
        self.rtol = rtol
        self.atol = atol
        self.t_end = t_end
        self.max_steps = max_steps
        self.h_max = h_max
        self.n_steps = 0
        self.n_rejected = 0
        self.min_h = np.inf
        self._last_err = 1.0
        self.h, self.f0 = _initial_step(f, t0, y0, rtol, atol, omega_max, t_end - t0)
        self.h = min(self.h, h_max)

    def attempt(self, h):
        """Try one step of size h; on success advance and return True."""
        y1, err, f_new = _stages(self.f, self.t, self.y, self.f0, h)
        enorm = _error_norm(err, self.y, y1, self.rtol, self.atol)
        if enorm <= 1.0:
            self.t = self.t + h
            self.y = y1
            self.f0 = f_new
            self.n_steps += 1
            self._last_err = enorm
            self.min_h = min(self.min_h, h)
            return True
        self.n_rejected += 1
        factor = max(_MIN_FACTOR, _SAFETY * enorm ** -0.2)
        self.h = h * min(1.0, factor)
        if self.h < 1e-14 * max(1.0, abs(self.t_end)):
            raise SolverError("step size underflow (stiffness)")
        return False

    def grow(self):
        if self._last_err == 0.0:
            self.h *= _MAX_FACTOR
        else:
            self.h *= min(_MAX_FACTOR, max(_MIN_FACTOR, _SAFETY * self._last_err ** -0.2))
        self.h = min(self.h, self.h_max)

    def check_budget(self):
        if self.n_steps + self.n_rejected > self.max_steps:
            raise SolverError("step budget exhausted")

    def step_to(self, t_target):
        while self.t < t_target - 1e-14 * max(1.0, abs(t_target)):
            h = min(self.h, t_target - self.t)
            clamped = h < self.h
            if self.attempt(h) and not clamped:
                self.grow()
            self.check_budget()
        self.t = t_target  # kill accumulated roundoff


def _me_rhs(omegas, hmats, jumps, d0):
    # the commutator must be computed literally: shortcuts of the form
    # -i(P - P^dag) act correctly on Hermitian states only and leave the
    # anti-Hermitian rounding sector undamped (it then grows unboundedly)
    def f(t, rho):
        p = np.zeros_like(rho)
        q = np.zeros_like(rho)
        for w, hk in zip(omegas, hmats):
            c = np.exp(1j * w * t) if w != 0.0 else 1.0
            p += c * (hk @ rho)
            q += c * (rho @ hk)
        out = -1j * (p - q)
        out += d0 @ rho + rho @ d0
        for L in jumps:
            s = L @ rho
            out += s @ L.conj().T
        return out

    return f


def _psi_rhs(omegas, hmats, d0):
    def f(t, y):
        out = d0 @ y
        for w, hk in zip(omegas, hmats):
            c = np.exp(1j * w * t) if w != 0.0 else 1.0
            out += (-1j * c) * (hk @ y)
        return out

    return f


def _half_ldl(jumps, n):
    d0 = np.zeros((n, n), dtype=complex)
    for L in jumps:
        d0 -= 0.5 * (L.conj().T @ L)
    return d0


def _sample_obs(obs_num, obs_den, rho):
    out = np.empty(len(obs_num))
    tr = np.trace(rho).real
    for i, (num, den) in enumerate(zip(obs_num, obs_den)):
        val = np.einsum("ij,ji->", num, rho).real
        d = np.einsum("ij,ji->", den, rho).real if den is not None else tr
        out[i] = val / d if d != 0.0 else np.nan
    return out


def _sample_obs_psi(obs_num, obs_den, psi):
    """Norm-normalized (numerator, denominator) pairs for one trajectory.

    Averaging the pairs across trajectories and dividing afterwards keeps
    ratio observables (e.g. qubit-block renormalized populations) consistent
    with the master-equation estimator; dividing per trajectory would bias
    them whenever the denominator fluctuates between trajectories.
    """
    out = np.empty((len(obs_num), 2))
    nrm = float(np.real(psi.conj() @ psi))
    for i, (num, den) in enumerate(zip(obs_num, obs_den)):
        val = float(np.real(psi.conj() @ (num @ psi)))
        d = float(np.real(psi.conj() @ (den @ psi))) if den is not None else nrm
        out[i, 0] = val / nrm
        out[i, 1] = d / nrm
    return out


def evolve_me(omegas, hmats, jumps, rho0, t_grid, rtol, atol,
              obs_num, obs_den, snapshot_idx=(), max_steps=_DEFAULT_MAX_STEPS):
    """Integrate the master equation, sampling observables on t_grid.

    Each observable is Tr(num rho)/Tr(den rho); den=None divides by Tr(rho).
    Returns a dict with the (n_grid, n_obs) observable array, snapshots at the
    requested grid indices, the final state and stepping statistics.
    """
    n = rho0.shape[0]
    d0 = _half_ldl(jumps, n)
    f = _me_rhs(omegas, hmats, jumps, d0)
    omega_max = float(np.max(np.abs(omegas))) if len(omegas) else 0.0

    obs = np.empty((len(t_grid), len(obs_num)))
    snaps = {}
    st = _Stepper(f, t_grid[0], rho0.astype(complex), rtol, atol, omega_max,
                  t_grid[-1], max_steps, h_max=_h_stability_cap(hmats, jumps))
    tr0 = np.trace(rho0).real
    for gi, tg in enumerate(t_grid):
        if gi > 0:
            st.step_to(tg)
        obs[gi] = _sample_obs(obs_num, obs_den, st.y)
        if gi in snapshot_idx:
            snaps[gi] = st.y.copy()
    return {
        "obs": obs,
        "snapshots": snaps,
        "state_final": st.y,
        "n_steps": st.n_steps,
        "n_rejected": st.n_rejected,
        "min_h": st.min_h,
        "trace_drift": abs(np.trace(st.y).real - tr0),
    }


def evolve_me_callable(h_of_t, jumps, rho0, t_grid, rtol, atol,
                       obs_num, obs_den, snapshot_idx=(), max_steps=_DEFAULT_MAX_STEPS):
    """Master-equation path for an arbitrary matrix-valued H(t) callable."""
    n = rho0.shape[0]
    d0 = _half_ldl(jumps, n)

    def f(t, rho):
        h = h_of_t(t)
        out = -1j * (h @ rho - rho @ h)
        out += d0 @ rho + rho @ d0
        for L in jumps:
            out += (L @ rho) @ L.conj().T
        return out

    obs = np.empty((len(t_grid), len(obs_num)))
    snaps = {}
    st = _Stepper(f, t_grid[0], rho0.astype(complex), rtol, atol, 0.0,
                  t_grid[-1], max_steps,
                  h_max=_h_stability_cap([h_of_t(t_grid[0])], jumps))
    tr0 = np.trace(rho0).real
    for gi, tg in enumerate(t_grid):
        if gi > 0:
            st.step_to(tg)
        obs[gi] = _sample_obs(obs_num, obs_den, st.y)
        if gi in snapshot_idx:
            snaps[gi] = st.y.copy()
    return {
        "obs": obs,
        "snapshots": snaps,
        "state_final": st.y,
        "n_steps": st.n_steps,
        "n_rejected": st.n_rejected,
        "min_h": st.min_h,
        "trace_drift": abs(np.trace(st.y).real - tr0),
    }


def evolve_mcwf(omegas, hmats, jumps, psi0, t_grid, rtol, atol,
                obs_num, obs_den, rng, snapshot_idx=(), jump_time_tol=1e-10,
                max_steps=_DEFAULT_MAX_STEPS):
    """One quantum trajectory: no-jump drift with norm-threshold jumps.

    The RNG is consumed in a fixed order (initial threshold; then per jump:
    channel draw, next threshold), which defines the reproducibility contract
    shared with the compiled backend.
    """
    n = psi0.shape[0]
    d0 = _half_ldl(jumps, n)
    f = _psi_rhs(omegas, hmats, d0)
    omega_max = float(np.max(np.abs(omegas))) if len(omegas) else 0.0

    obs = np.empty((len(t_grid), len(obs_num), 2))
    snaps = {}
    st = _Stepper(f, t_grid[0], psi0.astype(complex), rtol, atol, omega_max,
                  t_grid[-1], max_steps, h_max=_h_stability_cap(hmats, jumps))
    threshold = rng.random()
    jump_times = []
    ldl = [L.conj().T @ L for L in jumps]

    def norm2(y):
        return float(np.real(y.conj() @ y))

    def advance_with_jumps(t_target):
        nonlocal threshold
        while st.t < t_target - 1e-14 * max(1.0, abs(t_target)):
            t_prev, y_prev, f_prev = st.t, st.y.copy(), st.f0
            h = min(st.h, t_target - st.t)
            clamped = h < st.h
            if not st.attempt(h):
                st.check_budget()
                continue
            if not clamped:
                st.grow()
            st.check_budget()
            if norm2(st.y) >= threshold:
                continue
            # jump inside (t_prev, t_prev + h]: bisect the crossing time using
            # single fixed-size steps from the stored pre-step state
            lo, hi = 0.0, h
            y_hi = st.y
            while hi - lo > jump_time_tol:
                mid = 0.5 * (lo + hi)
                y_mid, _, _ = _stages(f, t_prev, y_prev, f_prev, mid)
                if norm2(y_mid) >= threshold:
                    lo = mid
                else:
                    hi, y_hi = mid, y_mid
            t_jump = t_prev + hi
            weights = np.array([float(np.real(y_hi.conj() @ (M @ y_hi))) for M in ldl])
            wsum = weights.sum()
            if wsum <= 0.0:
                raise SolverError("zero-norm state at jump time")
            u = rng.random() * wsum
            m = min(int(np.searchsorted(np.cumsum(weights), u, side="right")),
                    len(jumps) - 1)
            y_new = jumps[m] @ y_hi
            nrm = np.linalg.norm(y_new)
            if nrm == 0.0:
                raise SolverError("zero-norm state after jump")
            st.t, st.y = t_jump, y_new / nrm
            st.f0 = f(st.t, st.y)  # FSAL invalid after the jump
            jump_times.append(t_jump)
            threshold = rng.random()
        st.t = t_target

    for gi, tg in enumerate(t_grid):
        if gi > 0:
            advance_with_jumps(tg)
        obs[gi] = _sample_obs_psi(obs_num, obs_den, st.y)
        if gi in snapshot_idx:
            y = st.y / np.linalg.norm(st.y)
            snaps[gi] = np.outer(y, y.conj())
    return {
        "obs": obs,
        "snapshots": snaps,
        "state_final": st.y,
        "n_steps": st.n_steps,
        "n_rejected": st.n_rejected,
        "min_h": st.min_h,
        "n_jumps": len(jump_times),
        "jump_times": np.array(jump_times),
    }


def adaptive_rk45(f, y0, t_grid, rtol=1e-8, atol=1e-10,
                  max_steps=_DEFAULT_MAX_STEPS, h_max=np.inf):
    """Generic adaptive integration of dy/dt = f(t, y), sampled on t_grid."""
    ys = np.empty((len(t_grid),) + y0.shape, dtype=complex)
    st = _Stepper(f, t_grid[0], y0.astype(complex), rtol, atol, 0.0,
                  t_grid[-1], max_steps, h_max=h_max)
    for gi, tg in enumerate(t_grid):
        if gi > 0:
            st.step_to(tg)
        ys[gi] = st.y
    return ys
