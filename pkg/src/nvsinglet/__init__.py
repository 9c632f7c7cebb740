"""nvsinglet: driven-dissipative preparation of a two-NV singlet-like state.

Builds the fiber-linked and directly coupled resonator models at four tiers
(full rotated frame, single-mode RWA, effective Raman, collective two-qubit),
integrates their Lindblad dynamics directly or by Monte-Carlo wave-function
unraveling, solves for Liouvillian steady states, and reports fidelity and
collective populations against the analytic dark state.

The hot integration loops run in a compiled extension when available; set
NVSINGLET_BACKEND=py to force the pure-Python reference kernels.
"""

from ._backend import backend_name
from .analysis import (
    COLLECTIVE_BASIS,
    CollectiveBasis,
    LeakageError,
    ObservableSet,
    fidelity,
    populations,
    psi_S,
    reduce_to_qubits,
    standard_observables,
)
from .dynamics import (
    GapReport,
    InvariantViolation,
    SolverError,
    StepControl,
    SteadyStateResult,
    TimeSeries,
    adiabatic_gap_check,
    integrate_field_matrix,
    integrate_me,
    mcwf,
    steady_state,
)
from .hilbert import (
    DensityMatrix,
    LayoutError,
    Operator,
    SpaceLayout,
    StateVector,
    ValidationError,
    annihilation,
    basis_ket,
    expect,
    partial_trace,
    tensor,
)
from .model import (
    ConsistencyError,
    EffectiveParams,
    SystemParams,
    TermSeries,
    Tier,
    ValidityReport,
    Variant,
    ZeroDetuningError,
    build_collapse_ops,
    build_hamiltonian,
    check_validity,
    effective_params,
    hamiltonian_terms,
    mode_transform,
    resonance_condition_check,
)
from .presets import PRESETS, Preset, get_preset, list_presets

__version__ = "0.1.0"
