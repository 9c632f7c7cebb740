"""Operator algebra over labeled composite Hilbert spaces.

Everything is dense and immutable: total dimensions in this project stay
below ~100, so plain complex ndarrays beat any sparse machinery for clarity
and exact testability. Subsystems are addressed by label; the Kronecker
order is the order in which the labels appear in the layout.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

HERMITICITY_TOL = 1e-10      # density matrices
HAMILTONIAN_TOL = 1e-12      # relative Frobenius, Hamiltonians
TRACE_TOL = 1e-9
POSITIVITY_TOL = -1e-8
NORM_TOL = 1e-10


class LayoutError(ValueError):
    """Unknown label, duplicate label, or mismatched dimensions."""


class ValidationError(ValueError):
    """A state or operator violates one of its structural invariants."""


@dataclass(frozen=True)
class SpaceLayout:
    """Ordered list of (label, dim) subsystems defining a tensor space."""

    subsystems: tuple[tuple[str, int], ...]

    def __init__(self, subsystems: Iterable[tuple[str, int]]):
        subs = tuple((str(lbl), int(dim)) for lbl, dim in subsystems)
        labels = [lbl for lbl, _ in subs]
        if len(set(labels)) != len(labels):
            raise LayoutError(f"duplicate subsystem labels in {labels}")
        for lbl, dim in subs:
            if dim < 1:
                raise LayoutError(f"subsystem {lbl!r} has dimension {dim} < 1")
        object.__setattr__(self, "subsystems", subs)

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(lbl for lbl, _ in self.subsystems)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(dim for _, dim in self.subsystems)

    @property
    def dim(self) -> int:
        return int(np.prod(self.dims, dtype=np.int64)) if self.subsystems else 1

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise LayoutError(f"unknown label {label!r}; layout has {self.labels}") from None

    def dim_of(self, label: str) -> int:
        return self.dims[self.index(label)]

    def restricted(self, keep: Sequence[str]) -> "SpaceLayout":
        keep_set = set(keep)
        return SpaceLayout([s for s in self.subsystems if s[0] in keep_set])

    def describe(self) -> dict:
        return {lbl: dim for lbl, dim in self.subsystems}


@dataclass(frozen=True)
class Operator:
    """Dense complex matrix acting on the full space of ``layout``."""

    layout: SpaceLayout
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        d = self.layout.dim
        if m.shape != (d, d):
            raise LayoutError(f"matrix shape {m.shape} does not match layout dim {d}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    def dag(self) -> "Operator":
        return Operator(self.layout, self.matrix.conj().T)

    def is_hermitian(self, tol: float = HAMILTONIAN_TOL) -> bool:
        scale = np.linalg.norm(self.matrix) or 1.0
        return np.linalg.norm(self.matrix - self.matrix.conj().T) <= tol * scale

    def require_hermitian(self, tol: float = HAMILTONIAN_TOL) -> "Operator":
        if not self.is_hermitian(tol):
            raise ValidationError("operator is not Hermitian within tolerance")
        return self

    def __matmul__(self, other: "Operator") -> "Operator":
        _require_same_layout(self.layout, other.layout)
        return Operator(self.layout, self.matrix @ other.matrix)

    def __add__(self, other: "Operator") -> "Operator":
        _require_same_layout(self.layout, other.layout)
        return Operator(self.layout, self.matrix + other.matrix)

    def __sub__(self, other: "Operator") -> "Operator":
        _require_same_layout(self.layout, other.layout)
        return Operator(self.layout, self.matrix - other.matrix)

    def __mul__(self, scalar: complex) -> "Operator":
        return Operator(self.layout, self.matrix * scalar)

    __rmul__ = __mul__


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian, unit-trace, positive (to tolerance) state matrix."""

    layout: SpaceLayout
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        d = self.layout.dim
        if m.shape != (d, d):
            raise LayoutError(f"matrix shape {m.shape} does not match layout dim {d}")
        if np.linalg.norm(m - m.conj().T) > HERMITICITY_TOL * max(np.linalg.norm(m), 1.0):
            raise ValidationError("density matrix is not Hermitian within 1e-10")
        tr = np.trace(m)
        if abs(tr - 1.0) > TRACE_TOL:
            raise ValidationError(f"density matrix trace {tr} differs from 1 beyond 1e-9")
        evals = np.linalg.eigvalsh((m + m.conj().T) / 2)
        if evals.min() < POSITIVITY_TOL:
            raise ValidationError(f"density matrix min eigenvalue {evals.min():.3e} < -1e-8")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @classmethod
    def from_ket(cls, psi: "StateVector") -> "DensityMatrix":
        v = psi.amplitudes
        return cls(psi.layout, np.outer(v, v.conj()))

    def purity(self) -> float:
        return float(np.real(np.trace(self.matrix @ self.matrix)))


@dataclass(frozen=True)
class StateVector:
    """Normalized pure state over ``layout``."""

    layout: SpaceLayout
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.asarray(self.amplitudes, dtype=complex).ravel()
        if v.shape != (self.layout.dim,):
            raise LayoutError(f"amplitude length {v.shape} does not match layout dim {self.layout.dim}")
        n = np.linalg.norm(v)
        if abs(n - 1.0) > NORM_TOL:
            raise ValidationError(f"state norm {n} differs from 1 beyond 1e-10")
        v.setflags(write=False)
        object.__setattr__(self, "amplitudes", v)

    def dm(self) -> DensityMatrix:
        return DensityMatrix.from_ket(self)


def _require_same_layout(a: SpaceLayout, b: SpaceLayout):
    if a.subsystems != b.subsystems:
        raise LayoutError(f"layout mismatch: {a.labels} vs {b.labels}")


# ---------------------------------------------------------------------------
# elementary single-subsystem matrices


def annihilation(cutoff: int) -> np.ndarray:
    """Bosonic lowering matrix on a truncated Fock space {|0>, ..., |cutoff>}.

    Entries sqrt(k) on the superdiagonal; shape (cutoff+1, cutoff+1).
    """
    if cutoff < 1:
        raise ValueError(f"cutoff must be >= 1, got {cutoff}")
    n = cutoff + 1
    a = np.zeros((n, n), dtype=complex)
    ks = np.arange(1, n)
    a[ks - 1, ks] = np.sqrt(ks)
    return a


def ket(dim: int, index: int) -> np.ndarray:
    v = np.zeros(dim, dtype=complex)
    v[index] = 1.0
    return v


def proj(dim: int, i: int, j: int) -> np.ndarray:
    """|i><j| on a single dim-dimensional subsystem."""
    m = np.zeros((dim, dim), dtype=complex)
    m[i, j] = 1.0
    return m


# ---------------------------------------------------------------------------
# tensor embedding


def tensor(ops: Sequence[tuple[str, np.ndarray]], layout: SpaceLayout) -> Operator:
    """Embed single-subsystem matrices into the full space of ``layout``.

    ``ops`` is a list of (label, matrix) pairs acting on distinct labels;
    subsystems not mentioned are filled with identities. The result is the
    Kronecker product taken in layout order.
    """
    by_label: dict[str, np.ndarray] = {}
    for lbl, m in ops:
        if lbl in by_label:
            raise LayoutError(f"label {lbl!r} given twice")
        d = layout.dim_of(lbl)  # raises LayoutError on unknown label
        m = np.asarray(m, dtype=complex)
        if m.shape != (d, d):
            raise LayoutError(f"operator on {lbl!r} has shape {m.shape}, subsystem dim is {d}")
        by_label[lbl] = m

    out = np.ones((1, 1), dtype=complex)
    for lbl, d in layout.subsystems:
        out = np.kron(out, by_label.get(lbl, np.eye(d, dtype=complex)))
    return Operator(layout, out)


def identity(layout: SpaceLayout) -> Operator:
    return Operator(layout, np.eye(layout.dim, dtype=complex))


def basis_ket(layout: SpaceLayout, occupations: dict[str, int]) -> StateVector:
    """Product basis state |n_1 n_2 ...> given per-label occupation indices.

    Labels absent from ``occupations`` default to index 0.
    """
    for lbl in occupations:
        layout.index(lbl)
    v = np.ones(1, dtype=complex)
    for lbl, d in layout.subsystems:
        v = np.kron(v, ket(d, occupations.get(lbl, 0)))
    return StateVector(layout, v)


# ---------------------------------------------------------------------------
# partial trace and expectation values


def _partial_trace_matrix(m: np.ndarray, dims: Sequence[int], keep_idx: Sequence[int]) -> np.ndarray:
    n = len(dims)
    keep_idx = list(keep_idx)
    t = m.reshape(*dims, *dims)
    # trace out discarded axes pairwise, highest original axis first so the
    # remaining row-axis indices stay valid
    for ax in sorted(set(range(n)) - set(keep_idx), reverse=True):
        t = np.trace(t, axis1=ax, axis2=ax + t.ndim // 2)
    d_keep = int(np.prod([dims[i] for i in keep_idx], dtype=np.int64)) if keep_idx else 1
    return t.reshape(d_keep, d_keep)


def partial_trace(rho: DensityMatrix, keep: Sequence[str]) -> DensityMatrix:
    """Trace out every subsystem not in ``keep`` (kept in original order)."""
    if not keep:
        raise LayoutError("keep must name at least one subsystem")
    keep_idx = sorted(rho.layout.index(lbl) for lbl in keep)
    reduced = _partial_trace_matrix(rho.matrix, rho.layout.dims, keep_idx)
    sub = [rho.layout.subsystems[i] for i in keep_idx]
    return DensityMatrix(SpaceLayout(sub), reduced)


def partial_trace_matrix(m: np.ndarray, layout: SpaceLayout, keep: Sequence[str]) -> np.ndarray:
    """Partial trace on a raw matrix (no state validation); used internally."""
    keep_idx = sorted(layout.index(lbl) for lbl in keep)
    return _partial_trace_matrix(m, layout.dims, keep_idx)


def expect(op: Operator, state: DensityMatrix | StateVector) -> complex:
    """Tr(op rho) or <psi|op|psi>; real to 1e-10 for Hermitian op."""
    _require_same_layout(op.layout, state.layout)
    if isinstance(state, StateVector):
        v = state.amplitudes
        return complex(v.conj() @ (op.matrix @ v))
    return complex(np.trace(op.matrix @ state.matrix))
