"""Observables: the target state, fidelity, collective populations.

The collective two-qubit basis is ordered (|00>, |T>, |11>, |S>) with
|T> = (|01> + |10>)/sqrt(2) and |S> = (|01> - |10>)/sqrt(2). The target
stationary state is |psi_S> ~ DeltaTilde |11> + sqrt(2) Theta |S>, a joint
dark state of the collective Hamiltonian and the engineered jump operator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .hilbert import (
    DensityMatrix,
    Operator,
    SpaceLayout,
    StateVector,
    partial_trace_matrix,
    proj,
    tensor,
)

SQRT2 = math.sqrt(2.0)

TWO_QUBITS = SpaceLayout([("NV1", 2), ("NV2", 2)])
COLLECTIVE = SpaceLayout([("collective", 4)])


class LeakageError(ValueError):
    """Excited-state population too large to project out meaningfully."""


def collective_basis_matrix() -> np.ndarray:
    """Columns are |00>, |T>, |11>, |S> in product-basis coordinates."""
    b = np.zeros((4, 4), dtype=complex)
    b[0, 0] = 1.0                       # |00>
    b[1, 1] = b[2, 1] = 1 / SQRT2       # |T>
    b[3, 2] = 1.0                       # |11>
    b[1, 3], b[2, 3] = 1 / SQRT2, -1 / SQRT2  # |S>
    return b


@dataclass(frozen=True)
class CollectiveBasis:
    """The four collective states as product-basis StateVectors."""

    ket00: StateVector
    ketT: StateVector
    ket11: StateVector
    ketS: StateVector

    @classmethod
    def build(cls) -> "CollectiveBasis":
        b = collective_basis_matrix()
        return cls(*(StateVector(TWO_QUBITS, b[:, i]) for i in range(4)))

    def kets(self) -> tuple[StateVector, ...]:
        return (self.ket00, self.ketT, self.ket11, self.ketS)


COLLECTIVE_BASIS = CollectiveBasis.build()


def psi_S(eff) -> StateVector:
    """Target stationary state from (Theta, DeltaTilde); product basis."""
    theta = complex(eff.Theta)
    dt = complex(eff.DeltaTilde)
    norm = math.sqrt(2 * abs(theta) ** 2 + abs(dt) ** 2)
    if norm == 0.0:
        raise ValueError("psi_S undefined for Theta = DeltaTilde = 0")
    amps = (dt * COLLECTIVE_BASIS.ket11.amplitudes
            + SQRT2 * theta * COLLECTIVE_BASIS.ketS.amplitudes) / norm
    return StateVector(TWO_QUBITS, amps)


def fidelity(rho_n: DensityMatrix, eff) -> float:
    """F = <psi_S| rho_N |psi_S> on the two-qubit space."""
    if rho_n.layout.dims != (2, 2):
        raise ValueError(f"fidelity needs a two-qubit state, got dims {rho_n.layout.dims}")
    v = psi_S(eff).amplitudes
    return float(np.real(v.conj() @ rho_n.matrix @ v))


def populations(rho_n: DensityMatrix) -> tuple[float, float, float, float]:
    """(P00, P11, PT, PS): diagonal of rho_N in the collective basis."""
    if rho_n.layout.dims != (2, 2):
        raise ValueError(f"populations needs a two-qubit state, got dims {rho_n.layout.dims}")
    b = collective_basis_matrix()
    diag = np.real(np.einsum("ik,ij,jk->k", b.conj(), rho_n.matrix, b))
    return float(diag[0]), float(diag[2]), float(diag[1]), float(diag[3])


def collective_to_product(rho_coll: np.ndarray) -> np.ndarray:
    b = collective_basis_matrix()
    return b @ rho_coll @ b.conj().T


def product_to_collective(rho_prod: np.ndarray) -> np.ndarray:
    b = collective_basis_matrix()
    return b.conj().T @ rho_prod @ b


def _qubit_block_projector(layout: SpaceLayout) -> np.ndarray:
    """Projector onto both NVs inside span{|0>, |1>}, identity on modes."""
    pq = proj(3, 0, 0) + proj(3, 1, 1)
    return tensor([("NV1", pq), ("NV2", pq)], layout).matrix


def reduce_to_qubits(rho_full: DensityMatrix, leak_threshold: float = 0.05,
                     strict: bool = True) -> tuple[DensityMatrix, float]:
    """Trace out all bosonic modes, project NVs onto {|0>, |1>}, renormalize.

    Returns (two-qubit state, discarded |e> population). Above the threshold
    the projection is no longer meaningful (the adiabatic elimination broke
    down); strict mode raises LeakageError there.
    """
    layout = rho_full.layout
    labels = layout.labels
    if labels[:2] != ("NV1", "NV2"):
        if labels == ("collective",):
            prod = collective_to_product(rho_full.matrix)
            return DensityMatrix(TWO_QUBITS, prod), 0.0
        raise ValueError(f"expected NV1, NV2 leading the layout, got {labels}")

    rho_nv = partial_trace_matrix(rho_full.matrix, layout, ["NV1", "NV2"])
    nv_dim = layout.dim_of("NV1")
    if nv_dim == 2:
        return DensityMatrix(TWO_QUBITS, rho_nv), 0.0

    # project each three-level NV onto its qubit block
    keep = [0, 1, 3, 4]  # (i,j) with i,j in {0,1} flattened over dim 3*3
    block = rho_nv[np.ix_(keep, keep)]
    leak = float(np.real(np.trace(rho_nv) - np.trace(block)))
    if leak >= leak_threshold and strict:
        raise LeakageError(
            f"|e> leakage {leak:.4f} >= {leak_threshold}: adiabatic elimination broke down"
        )
    tr = np.real(np.trace(block))
    if tr <= 0.0:
        raise LeakageError("qubit block has no population left")
    return DensityMatrix(TWO_QUBITS, block / tr), leak


# ---------------------------------------------------------------------------
# observable sets for the dynamics samplers


@dataclass(frozen=True)
class ObservableSet:
    """Named ratio observables Tr(num rho)/Tr(den rho); den=None -> Tr(rho)."""

    names: tuple[str, ...]
    nums: tuple[np.ndarray, ...]
    dens: tuple[np.ndarray | None, ...]

    def evaluate(self, rho: np.ndarray) -> dict[str, float]:
        tr = np.trace(rho).real
        out = {}
        for name, num, den in zip(self.names, self.nums, self.dens):
            d = np.einsum("ij,ji->", den, rho).real if den is not None else tr
            out[name] = float(np.einsum("ij,ji->", num, rho).real / d)
        return out


def standard_observables(layout: SpaceLayout, eff, mode_number_ops: bool = True) -> ObservableSet:
    """F, collective populations, mode occupations and |e> leakage.

    Works on any tier layout: three-level NVs are projected (ratio against
    the qubit-block projector), two-level NVs divide by the trace, and the
    collective layout uses the basis diagonal directly.
    """
    from .hilbert import annihilation  # local import to keep module load light

    names: list[str] = []
    nums: list[np.ndarray] = []
    dens: list[np.ndarray | None] = []
    psi = psi_S(eff)

    if layout.labels == ("collective",):
        bvecs = np.eye(4)
        order = {"P00": 0, "PT": 1, "P11": 2, "PS": 3}
        v = product_to_collective(np.outer(psi.amplitudes, psi.amplitudes.conj()))
        names.append("F"); nums.append(v); dens.append(None)
        for nm in ("P00", "P11", "PT", "PS"):
            m = np.zeros((4, 4), dtype=complex)
            m[order[nm], order[nm]] = 1.0
            names.append(nm); nums.append(m); dens.append(None)
        names.append("n_c"); nums.append(np.zeros((4, 4), dtype=complex)); dens.append(None)
        return ObservableSet(tuple(names), tuple(nums), tuple(dens))

    nv_dim = layout.dim_of("NV1")
    three_level = nv_dim == 3

    def embed_qubit_proj(vec2q: np.ndarray) -> np.ndarray:
        # |v><v| on the two-NV subspace, identity on the modes
        if three_level:
            lift = np.zeros((3, 2), dtype=complex)
            lift[0, 0] = lift[1, 1] = 1.0
            v = np.kron(lift, lift) @ vec2q
        else:
            v = vec2q
        return _pad_modes(np.outer(v, v.conj()), layout)

    den = _qubit_block_projector(layout) if three_level else None

    names.append("F")
    nums.append(embed_qubit_proj(psi.amplitudes))
    dens.append(den)
    basis = COLLECTIVE_BASIS
    for nm, ket in (("P00", basis.ket00), ("P11", basis.ket11),
                    ("PT", basis.ketT), ("PS", basis.ketS)):
        names.append(nm)
        nums.append(embed_qubit_proj(ket.amplitudes))
        dens.append(den)

    if mode_number_ops:
        mode_lbls = [lbl for lbl in layout.labels if lbl not in ("NV1", "NV2")]
        csv_names = ["n_c", "n_c1", "n_c2"]
        for i, lbl in enumerate(mode_lbls[:3]):
            a = annihilation(layout.dim_of(lbl) - 1)
            num_op = tensor([(lbl, a.conj().T @ a)], layout).matrix
            names.append(csv_names[i]); nums.append(num_op); dens.append(None)

    if three_level:
        eye = np.eye(layout.dim, dtype=complex)
        names.append("leak_e")
        nums.append(eye - _qubit_block_projector(layout))
        dens.append(None)

    return ObservableSet(tuple(names), tuple(nums), tuple(dens))


def _pad_modes(two_nv_matrix: np.ndarray, layout: SpaceLayout) -> np.ndarray:
    mode_dims = [d for lbl, d in layout.subsystems if lbl not in ("NV1", "NV2")]
    pad = int(np.prod(mode_dims)) if mode_dims else 1
    return np.kron(two_nv_matrix, np.eye(pad, dtype=complex))
