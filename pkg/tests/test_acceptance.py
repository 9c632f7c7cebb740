"""Acceptance suite: one test per criterion, at the stated tolerances.

Each test prints a PASS/FAIL line for its criterion. Two sub-clauses are
known to be unattainable at the canonical working point (the collective
populations window and the |e> leakage bound; see the README results table
for the measured values and the mechanism); their tests assert the stated
numbers anyway and are expected to stay red rather than be weakened.
"""

import math

import numpy as np
import pytest

import nvsinglet as nv
from nvsinglet import StepControl, Tier
from nvsinglet.analysis import ObservableSet, collective_basis_matrix
from nvsinglet.hilbert import Operator, SpaceLayout, annihilation, basis_ket, proj

from conftest import FIG4_GRID, _fig4_problem


def _report(name, ok, detail=""):
    print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")


# ---------------------------------------------------------------------------
# 1. dark-state identity


def test_dark_state_identity():
    rng = np.random.default_rng(2024)
    worst_h = worst_l = 0.0
    checked = 0
    for _ in range(100):
        theta = rng.uniform(-0.05, 0.05)
        dt = rng.uniform(-0.05, 0.05)
        if 2 * theta**2 + dt**2 < 1e-8:
            continue
        eff = nv.EffectiveParams(Theta=theta, g_eff=0.1, DeltaTilde1=dt,
                                 DeltaTilde2=-dt, DeltaTilde=dt, kappa_eff=0.08)
        vc = collective_basis_matrix().conj().T @ nv.psi_S(eff).amplitudes
        hd = np.zeros((4, 4), dtype=complex)
        hd[2, 1] = hd[1, 0] = -math.sqrt(2) * theta
        hd[3, 1] = dt
        hd = hd + hd.conj().T
        le = math.sqrt(eff.kappa_eff) * (proj(4, 2, 1) + proj(4, 1, 0))
        worst_h = max(worst_h, float(np.linalg.norm(hd @ vc)))
        worst_l = max(worst_l, float(np.linalg.norm(le @ vc)))
        checked += 1
    ok = worst_h < 1e-12 and worst_l < 1e-12 and checked >= 95
    _report("dark-state identity",
            ok, f"{checked} pairs, max |H_d psi|={worst_h:.2e}, max |L_e psi|={worst_l:.2e}")
    assert ok


# ---------------------------------------------------------------------------
# 2. steady-state uniqueness


def test_steady_state_uniqueness():
    p = nv.SystemParams()
    h = nv.hamiltonian_terms(p, Tier.COLLECTIVE_HD)
    cols = nv.build_collapse_ops(p, Tier.COLLECTIVE_HD)
    res = nv.steady_state(h, cols)
    rho2q, _ = nv.reduce_to_qubits(res.rho_ss)
    fid = nv.fidelity(rho2q, nv.effective_params(p))
    p0 = p.with_overrides(Sigma1=0.0, Sigma2=0.0)   # DeltaTilde = 0
    res0 = nv.steady_state(nv.hamiltonian_terms(p0, Tier.COLLECTIVE_HD),
                           nv.build_collapse_ops(p0, Tier.COLLECTIVE_HD))
    ok = res.null_dim == 1 and fid > 1 - 1e-9 and res0.null_dim > 1
    _report("steady-state uniqueness", ok,
            f"null_dim={res.null_dim}, F={fid:.12f}; DeltaTilde=0 -> null_dim={res0.null_dim}")
    assert ok


# ---------------------------------------------------------------------------
# 3. Fig.4 reproduction


@pytest.mark.slow
def test_fig4_fidelity_me(me_fig4a, me_fig4b):
    fa, fb = me_fig4a.final("F"), me_fig4b.final("F")
    ok = fa >= 0.99 and fb >= 0.99
    _report("fig4 ME fidelity", ok, f"F_a(3000)={fa:.6f}, F_b(3000)={fb:.6f} (>= 0.99)")
    assert ok


@pytest.mark.slow
def test_fig4_fidelity_mcwf(mcwf_fig4):
    fa = mcwf_fig4["a"].final("F")
    fb = mcwf_fig4["b"].final("F")
    ok = fa >= 0.98 and fb >= 0.98
    _report("fig4 MCWF-50 fidelity", ok, f"F_a={fa:.6f}, F_b={fb:.6f} (>= 0.98)")
    assert ok


@pytest.mark.slow
def test_fig4_populations(me_fig4a, me_fig4b):
    """Known red: the RWA tier's true quasi-steady populations sit at
    P11 ~ 0.359, PS ~ 0.638 (residual common light shift tilts the dark
    state); the stated window came from effective-model arithmetic."""
    rows = []
    ok = True
    for label, ts in (("a", me_fig4a), ("b", me_fig4b)):
        p11, ps = ts.final("P11"), ts.final("PS")
        rows.append(f"{label}: P11={p11:.4f}, PS={ps:.4f}")
        ok &= abs(p11 - 1 / 3) <= 0.02 and abs(ps - 2 / 3) <= 0.02
    _report("fig4 populations (1/3, 2/3) +- 0.02", ok, "; ".join(rows))
    assert ok


@pytest.mark.slow
def test_fig4b_transient_oscillations(me_fig4b):
    # early-time P00 and PT oscillate rapidly with a decaying envelope
    # (measured peaks from |11>: P00 ~ 0.057, PT ~ 0.20)
    t = me_fig4b.times
    early = (t > 0) & (t < 500)
    late = t > 2000
    for name, floor in (("P00", 0.03), ("PT", 0.1)):
        vals = me_fig4b.observable(name)
        swing_early = vals[early].max() - vals[early].min()
        swing_late = vals[late].max() - vals[late].min()
        assert swing_early > 5 * swing_late
        assert vals[early].max() > floor
        window = np.where((t > 0) & (t < 1000))[0]
        d = np.diff(vals[window])
        direction_changes = int(np.sum(np.sign(d[1:]) * np.sign(d[:-1]) < 0))
        assert direction_changes > 50


# ---------------------------------------------------------------------------
# 4. timescale


@pytest.mark.slow
def test_preparation_timescale(me_fig4a):
    f = me_fig4a.observable("F")
    idx = np.argmax(f > 0.95)
    t95 = me_fig4a.times[idx] if f[idx] > 0.95 else math.inf
    ok = 300.0 <= t95 <= 3000.0
    _report("timescale F>0.95", ok, f"first crossing at t={t95:.0f}/g (in [300, 3000])")
    assert ok


# ---------------------------------------------------------------------------
# 5. full-model consistency


@pytest.mark.slow
def test_full_model_consistency(me_full_a, me_fig4a):
    f_full = me_full_a.final("F")
    f_rwa = me_fig4a.final("F")
    dev = abs(f_full - f_rwa)
    ok = dev <= 0.03
    _report("full vs single-mode final fidelity", ok,
            f"full={f_full:.6f}, RWA={f_rwa:.6f}, |dev|={dev:.4f} (<= 0.03)")
    assert ok


@pytest.mark.slow
def test_full_model_leakage(me_full_a):
    """Known red: with no excited-state damping the sudden turn-on leaves
    persistent |e> ringing (interfering Omega and Lambda paths), peaking
    near 4 (Omega/Delta)^2 per NV; < 0.02 throughout is unattainable."""
    leak = me_full_a.observable("leak_e")
    ok = bool(leak.max() < 0.02)
    _report("full-model |e> leakage < 0.02", ok,
            f"max={leak.max():.4f}, final={leak[-1]:.4f}")
    assert ok


# ---------------------------------------------------------------------------
# 6. dephasing boundary


@pytest.mark.slow
def test_dephasing_boundary(me_fig4a, me_dephasing):
    """First clause known red: F saturates at 0.644 for gamma_phi=0.001g
    (singlet decoheres at ~4 gamma_phi, repump runs at ~1/230 g); the
    'negligible' reading of the validity inequality does not survive the
    actual steady state."""
    f0 = me_fig4a.final("F")
    f_small = me_dephasing[0.001].final("F")
    f_large = me_dephasing[0.02].final("F")
    close_ok = abs(f_small - f0) <= 0.02
    drop_ok = f0 - f_large >= 0.15
    _report("dephasing 0.001g within 0.02", close_ok,
            f"F(0)={f0:.4f}, F(0.001)={f_small:.4f}")
    _report("dephasing 0.02g lower by >= 0.15", drop_ok,
            f"F(0.02)={f_large:.4f}")
    assert drop_ok
    assert close_ok


# ---------------------------------------------------------------------------
# 7. variant equivalence


def test_variant_equivalence():
    fiber = nv.SystemParams()
    hop = nv.get_preset("hopping-fig4-equivalent").params
    hf = nv.build_hamiltonian(fiber, Tier.EFFECTIVE_RAMAN).matrix
    hh = nv.build_hamiltonian(hop, Tier.EFFECTIVE_RAMAN).matrix
    mat_dev = float(np.linalg.norm(hf - hh))
    grid = np.linspace(0.0, 1500.0, 301)
    curves = {}
    for name, params in (("fiber", fiber), ("hopping", hop)):
        terms = nv.hamiltonian_terms(params, Tier.EFFECTIVE_RAMAN)
        cols = nv.build_collapse_ops(params, Tier.EFFECTIVE_RAMAN)
        obs = nv.standard_observables(terms.layout, nv.effective_params(params))
        rho0 = basis_ket(terms.layout, {}).dm()
        curves[name] = nv.integrate_me(terms, cols, rho0, grid, observables=obs)
    f_dev = float(np.max(np.abs(curves["fiber"].observable("F")
                                - curves["hopping"].observable("F"))))
    ok = mat_dev < 1e-12 and f_dev < 1e-9
    _report("variant equivalence", ok,
            f"matrix dev={mat_dev:.2e} (<1e-12), fidelity-curve dev={f_dev:.2e} (<1e-9)")
    assert ok


# ---------------------------------------------------------------------------
# 8. solver oracles


def test_solver_oracle_damped_cavity():
    kappa = 0.5
    lay = SpaceLayout([("c", 4)])
    a = annihilation(3)
    h = Operator(lay, np.zeros((4, 4)))
    jump = Operator(lay, math.sqrt(2 * kappa) * a)
    obs = ObservableSet(("n",), (a.conj().T @ a,), (None,))
    rho0 = nv.DensityMatrix(lay, np.diag([0, 1, 0, 0.0]).astype(complex))
    grid = np.linspace(0, 4.0, 81)
    ts = nv.integrate_me(h, [jump], rho0, grid, observables=obs)
    dev = float(np.max(np.abs(ts.observable("n") - np.exp(-2 * kappa * grid))))
    ok = dev < 1e-6
    _report("damped-cavity oracle (ME)", ok, f"max dev={dev:.2e} (<1e-6)")
    assert ok


def test_solver_oracle_rabi():
    omega = 0.7
    lay = SpaceLayout([("q", 2)])
    h = Operator(lay, omega * np.array([[0, 1], [1, 0]], dtype=complex))
    obs = ObservableSet(("Pe",), (proj(2, 1, 1),), (None,))
    grid = np.linspace(0, 10.0, 201)
    ts = nv.integrate_me(h, [], basis_ket(lay, {}).dm(), grid, observables=obs)
    dev = float(np.max(np.abs(ts.observable("Pe") - np.sin(omega * grid) ** 2)))
    ok = dev < 1e-8
    _report("Rabi oracle (ME)", ok, f"max dev={dev:.2e} (<1e-8)")
    assert ok


@pytest.mark.slow
def test_solver_oracle_mcwf_decay():
    kappa = 0.4
    lay = SpaceLayout([("q", 2)])
    h = Operator(lay, np.zeros((2, 2)))
    jump = Operator(lay, math.sqrt(2 * kappa) * proj(2, 0, 1))
    obs = ObservableSet(("Pe",), (proj(2, 1, 1),), (None,))
    grid = np.linspace(0, 4.0, 41)
    ts = nv.mcwf(h, [jump], basis_ket(lay, {"q": 1}), grid, n_traj=2000, seed=77,
                 observables=obs)
    exact = np.exp(-2 * kappa * grid)
    dev = np.abs(ts.observable("Pe") - exact)[1:]
    se = np.maximum(ts.stderr["Pe"][1:], 1e-12)
    worst = float(np.max(dev / se))
    ok = bool(np.all(dev <= 4 * se))
    _report("two-level decay oracle (MCWF, 2000 traj)", ok,
            f"max dev={dev.max():.2e}, worst dev/stderr={worst:.2f} (<=4)")
    assert ok


# ---------------------------------------------------------------------------
# 9. field-matrix reduction


@pytest.mark.slow
def test_field_matrix_reduction():
    p = nv.SystemParams()
    eff = nv.effective_params(p)
    terms = nv.hamiltonian_terms(p, Tier.EFFECTIVE_RAMAN)
    cols = nv.build_collapse_ops(p, Tier.EFFECTIVE_RAMAN)
    obs = nv.standard_observables(terms.layout, eff)
    rho0 = basis_ket(terms.layout, {}).dm()
    ts_me = nv.integrate_me(terms, cols, rho0, FIG4_GRID, observables=obs)
    rho00 = np.zeros((4, 4), dtype=complex)
    rho00[0, 0] = 1.0
    ts_fm = nv.integrate_field_matrix(eff, p.kappa, rho00, FIG4_GRID)
    dev = float(np.max(np.abs(ts_fm.observable("F") - ts_me.observable("F"))))
    ok = dev < 1e-3
    _report("field-matrix vs effective-Raman ME", ok, f"max |dF|={dev:.2e} (<1e-3)")
    assert ok
