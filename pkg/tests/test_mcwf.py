import math

import numpy as np
import pytest

from nvsinglet.analysis import ObservableSet
from nvsinglet.dynamics import StepControl, integrate_me, mcwf
from nvsinglet.hilbert import Operator, SpaceLayout, StateVector, basis_ket, proj
from nvsinglet.model import SystemParams, Tier, build_collapse_ops, hamiltonian_terms

KAPPA = 0.4


def decay_setup():
    lay = SpaceLayout([("q", 2)])
    sminus = proj(2, 0, 1)
    jump = Operator(lay, math.sqrt(2 * KAPPA) * sminus)
    h = Operator(lay, np.zeros((2, 2)))
    pe = ObservableSet(("Pe",), (proj(2, 1, 1),), (None,))
    psi0 = basis_ket(lay, {"q": 1})
    return lay, h, jump, pe, psi0


class TestMCWFBasics:
    def test_no_jumps_equals_schroedinger(self):
        omega = 0.6
        lay = SpaceLayout([("q", 2)])
        sx = np.array([[0, 1], [1, 0]], dtype=complex)
        h = Operator(lay, omega * sx)
        pe = ObservableSet(("Pe",), (proj(2, 1, 1),), (None,))
        grid = np.linspace(0, 8.0, 81)
        ts = mcwf(h, [], basis_ket(lay, {}), grid, n_traj=3, seed=5,
                  observables=pe, n_workers=1)
        assert np.max(np.abs(ts.observable("Pe") - np.sin(omega * grid) ** 2)) < 1e-8
        assert np.max(ts.stderr["Pe"]) < 1e-12

    def test_invalid_trajectory_count(self):
        lay, h, jump, pe, psi0 = decay_setup()
        with pytest.raises(ValueError):
            mcwf(h, [jump], psi0, np.linspace(0, 1, 5), n_traj=0, seed=1)

    def test_two_level_decay_against_analytic(self):
        # binomial error model: mean P_e within 4 stderr of exp(-2 kappa t)
        lay, h, jump, pe, psi0 = decay_setup()
        grid = np.linspace(0, 4.0, 41)
        ts = mcwf(h, [jump], psi0, grid, n_traj=2000, seed=77,
                  observables=pe, n_workers=2)
        exact = np.exp(-2 * KAPPA * grid)
        stderr = np.maximum(ts.stderr["Pe"], 1e-12)
        dev = np.abs(ts.observable("Pe") - exact)
        # skip t=0 where every trajectory starts exactly at |e>
        assert np.all(dev[1:] <= 4 * stderr[1:])
        # binomial prediction for the stderr itself
        expected_se = np.sqrt(exact * (1 - exact) / 2000)
        mid = slice(5, 35)
        assert np.allclose(ts.stderr["Pe"][mid], expected_se[mid], rtol=0.35)

    def test_jump_statistics_recorded(self):
        lay, h, jump, pe, psi0 = decay_setup()
        grid = np.linspace(0, 6.0, 13)
        ts = mcwf(h, [jump], psi0, grid, n_traj=64, seed=3,
                  observables=pe, n_workers=1)
        # each trajectory decays exactly once (no repumping)
        assert ts.meta["mean_jumps"] == pytest.approx(1.0, abs=0.05)


class TestDeterminism:
    def test_worker_count_invariance(self):
        lay, h, jump, pe, psi0 = decay_setup()
        grid = np.linspace(0, 3.0, 31)
        a = mcwf(h, [jump], psi0, grid, n_traj=16, seed=99, observables=pe,
                 n_workers=1)
        b = mcwf(h, [jump], psi0, grid, n_traj=16, seed=99, observables=pe,
                 n_workers=2)
        assert np.array_equal(a.observable("Pe"), b.observable("Pe"))
        assert np.array_equal(a.stderr["Pe"], b.stderr["Pe"])

    def test_seed_changes_result(self):
        lay, h, jump, pe, psi0 = decay_setup()
        grid = np.linspace(0, 3.0, 31)
        a = mcwf(h, [jump], psi0, grid, n_traj=8, seed=1, observables=pe, n_workers=1)
        b = mcwf(h, [jump], psi0, grid, n_traj=8, seed=2, observables=pe, n_workers=1)
        assert not np.array_equal(a.observable("Pe"), b.observable("Pe"))

    def test_rerun_bit_identical(self):
        lay, h, jump, pe, psi0 = decay_setup()
        grid = np.linspace(0, 3.0, 31)
        a = mcwf(h, [jump], psi0, grid, n_traj=8, seed=11, observables=pe, n_workers=2)
        b = mcwf(h, [jump], psi0, grid, n_traj=8, seed=11, observables=pe, n_workers=2)
        assert np.array_equal(a.observable("Pe"), b.observable("Pe"))


class TestMCWFvsME:
    def test_driven_damped_qubit(self):
        # driven + damped: trajectories average to the master equation
        omega = 0.5
        lay = SpaceLayout([("q", 2)])
        sx = np.array([[0, 1], [1, 0]], dtype=complex)
        h = Operator(lay, omega * sx)
        jump = Operator(lay, math.sqrt(2 * 0.1) * proj(2, 0, 1))
        pe = ObservableSet(("Pe",), (proj(2, 1, 1),), (None,))
        grid = np.linspace(0, 12.0, 61)
        rho0 = basis_ket(lay, {}).dm()
        ts_me = integrate_me(h, [jump], rho0, grid, observables=pe)
        ts_mc = mcwf(h, [jump], basis_ket(lay, {}), grid, n_traj=600, seed=21,
                     observables=pe, n_workers=2)
        # the absolute term covers early times where the expected jump count
        # is below one and the empirical stderr collapses to zero
        dev = np.abs(ts_mc.observable("Pe") - ts_me.observable("Pe"))
        assert np.all(dev <= 4.5 * ts_mc.stderr["Pe"] + 2.5 / 600)

    def test_fig4_paper_trajectory_count_default(self):
        from nvsinglet.presets import get_preset
        for name in ("fig4a", "fig4b", "fig5-gamma-0.001"):
            assert get_preset(name).n_traj == 50
            assert get_preset(name).solver == "mcwf"

    def test_mixed_state_rejected(self):
        lay, h, jump, pe, psi0 = decay_setup()
        with pytest.raises(TypeError):
            mcwf(lambda t: h, [jump], psi0, np.linspace(0, 1, 5), n_traj=2, seed=1)
