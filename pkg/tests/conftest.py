"""Shared heavy runs for the acceptance suite (computed once per session)."""

import numpy as np
import pytest

import nvsinglet as nv
from nvsinglet import StepControl, Tier


FIG4_GRID = np.linspace(0.0, 3000.0, 2001)


def _fig4_problem(tier, **overrides):
    p = nv.SystemParams().with_overrides(**overrides) if overrides else nv.SystemParams()
    terms = nv.hamiltonian_terms(p, tier)
    cols = nv.build_collapse_ops(p, tier)
    eff = nv.effective_params(p)
    obs = nv.standard_observables(terms.layout, eff)
    return p, terms, cols, eff, obs


def _me_run(tier, initial, ctrl=StepControl(), **overrides):
    p, terms, cols, eff, obs = _fig4_problem(tier, **overrides)
    rho0 = nv.basis_ket(terms.layout, initial).dm()
    return nv.integrate_me(terms, cols, rho0, FIG4_GRID, ctrl=ctrl,
                           observables=obs, snapshot_times=[2700.0, 3000.0])


@pytest.fixture(scope="session")
def me_fig4a():
    return _me_run(Tier.SINGLE_MODE_RWA, {})


@pytest.fixture(scope="session")
def me_fig4b():
    return _me_run(Tier.SINGLE_MODE_RWA, {"NV1": 1, "NV2": 1})


@pytest.fixture(scope="session")
def mcwf_fig4():
    """MCWF fig4 runs at the package default seed, both initial states."""
    out = {}
    for label, occ in (("a", {}), ("b", {"NV1": 1, "NV2": 1})):
        p, terms, cols, eff, obs = _fig4_problem(Tier.SINGLE_MODE_RWA)
        psi0 = nv.basis_ket(terms.layout, occ)
        out[label] = nv.mcwf(terms, cols, psi0, FIG4_GRID, n_traj=50, seed=1234,
                             observables=obs)
    return out


@pytest.fixture(scope="session")
def me_full_a():
    # the nu = 100 g phases make this the heaviest run of the suite; the
    # tolerance matches the 0.03 comparison budget with two spare decades
    return _me_run(Tier.FULL_ROTATED, {}, ctrl=StepControl(rtol=1e-6, atol=1e-9))


@pytest.fixture(scope="session")
def me_dephasing():
    out = {0.0: None}
    for gphi in (0.001, 0.02):
        out[gphi] = _me_run(Tier.SINGLE_MODE_RWA, {}, gamma_phi=gphi)
    return out
