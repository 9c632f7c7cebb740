import numpy as np
import pytest

from nvsinglet.hilbert import (
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
    proj,
    tensor,
)

SZ = np.diag([-1.0, 1.0]).astype(complex)
SX = np.array([[0, 1], [1, 0]], dtype=complex)


def two_qubits():
    return SpaceLayout([("NV1", 2), ("NV2", 2)])


def random_density(dim, seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = a @ a.conj().T
    return rho / np.trace(rho)


class TestLayout:
    def test_dims_and_labels(self):
        lay = SpaceLayout([("NV1", 3), ("NV2", 3), ("c", 2)])
        assert lay.dim == 18
        assert lay.labels == ("NV1", "NV2", "c")
        assert lay.dim_of("c") == 2

    def test_duplicate_label_rejected(self):
        with pytest.raises(LayoutError):
            SpaceLayout([("a", 2), ("a", 3)])

    def test_unknown_label(self):
        with pytest.raises(LayoutError):
            two_qubits().index("nope")


class TestTensor:
    def test_identity_padding(self):
        lay = two_qubits()
        op = tensor([("NV1", SZ)], lay)
        assert np.allclose(op.matrix, np.kron(SZ, np.eye(2)))

    def test_xx_flips_00_to_11(self):
        lay = two_qubits()
        op = tensor([("NV1", SX), ("NV2", SX)], lay)
        k00 = basis_ket(lay, {}).amplitudes
        k11 = basis_ket(lay, {"NV1": 1, "NV2": 1}).amplitudes
        assert np.allclose(op.matrix @ k00, k11)

    def test_mode_embedding_dimension(self):
        lay = SpaceLayout([("NV1", 3), ("NV2", 3), ("c", 2)])
        op = tensor([("c", annihilation(1))], lay)
        assert op.matrix.shape == (18, 18)

    def test_distinct_labels_required(self):
        lay = two_qubits()
        with pytest.raises(LayoutError):
            tensor([("NV1", SZ), ("NV1", SX)], lay)

    def test_dimension_mismatch(self):
        lay = two_qubits()
        with pytest.raises(LayoutError):
            tensor([("NV1", np.eye(3))], lay)

    def test_sequential_equals_joint_embedding(self):
        lay = SpaceLayout([("a", 2), ("b", 3), ("c", 2)])
        rng = np.random.default_rng(7)
        ma = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        mb = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
        joint = tensor([("a", ma), ("b", mb)], lay)
        seq = tensor([("a", ma)], lay) @ tensor([("b", mb)], lay)
        assert np.linalg.norm(joint.matrix - seq.matrix) < 1e-13


class TestAnnihilation:
    def test_cutoff_one(self):
        assert np.allclose(annihilation(1), [[0, 1], [0, 0]])

    def test_number_eigenvalues(self):
        a = annihilation(2)
        n = a.conj().T @ a
        assert np.allclose(sorted(np.linalg.eigvalsh(n).real), [0, 1, 2])

    def test_truncated_commutator(self):
        # direct matrix computation: [a, a+] = I - (cutoff+1)|cut><cut|
        for cutoff in (1, 2, 5):
            a = annihilation(cutoff)
            comm = a @ a.conj().T - a.conj().T @ a
            expected = np.eye(cutoff + 1, dtype=complex)
            expected[cutoff, cutoff] -= cutoff + 1
            assert np.allclose(comm, expected, atol=1e-14)

    def test_cutoff_below_one(self):
        with pytest.raises(ValueError):
            annihilation(0)


class TestPartialTrace:
    def test_product_state(self):
        lay = SpaceLayout([("A", 2), ("B", 3)])
        ra = random_density(2, 1)
        rb = random_density(3, 2)
        rho = DensityMatrix(lay, np.kron(ra, rb))
        red = partial_trace(rho, ["A"])
        assert red.layout.labels == ("A",)
        assert np.allclose(red.matrix, ra, atol=1e-12)

    def test_bell_state_reduces_to_mixed(self):
        lay = two_qubits()
        v = np.zeros(4, dtype=complex)
        v[0] = v[3] = 1 / np.sqrt(2)
        rho = DensityMatrix(lay, np.outer(v, v.conj()))
        red = partial_trace(rho, ["NV1"])
        assert np.allclose(red.matrix, np.eye(2) / 2, atol=1e-14)

    def test_trace_preserved(self):
        lay = SpaceLayout([("A", 2), ("B", 2), ("C", 3)])
        rho = DensityMatrix(lay, random_density(12, 3))
        red = partial_trace(rho, ["B", "C"])
        assert abs(np.trace(red.matrix) - 1) < 1e-12

    def test_keep_all_is_identity(self):
        lay = SpaceLayout([("A", 2), ("B", 2)])
        rho = DensityMatrix(lay, random_density(4, 4))
        red = partial_trace(rho, ["A", "B"])
        assert np.allclose(red.matrix, rho.matrix)

    def test_unknown_label(self):
        lay = two_qubits()
        rho = DensityMatrix(lay, np.eye(4) / 4)
        with pytest.raises(LayoutError):
            partial_trace(rho, ["X"])

    def test_empty_keep(self):
        lay = two_qubits()
        rho = DensityMatrix(lay, np.eye(4) / 4)
        with pytest.raises(LayoutError):
            partial_trace(rho, [])


class TestExpect:
    def test_vacuum_occupation(self):
        lay = SpaceLayout([("c", 3)])
        a = annihilation(2)
        n = Operator(lay, a.conj().T @ a)
        vac = basis_ket(lay, {})
        assert abs(expect(n, vac)) < 1e-15

    def test_sigma_z_on_one(self):
        lay = SpaceLayout([("q", 2)])
        sz = Operator(lay, proj(2, 1, 1) - proj(2, 0, 0))
        one = basis_ket(lay, {"q": 1})
        assert expect(sz, one) == pytest.approx(1.0)

    def test_identity_expectation(self):
        lay = SpaceLayout([("A", 2), ("B", 3)])
        rho = DensityMatrix(lay, random_density(6, 5))
        eye = Operator(lay, np.eye(6))
        assert expect(eye, rho) == pytest.approx(1.0, abs=1e-12)

    def test_hermitian_gives_real(self):
        lay = SpaceLayout([("A", 4)])
        rng = np.random.default_rng(6)
        m = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        herm = Operator(lay, m + m.conj().T)
        rho = DensityMatrix(lay, random_density(4, 7))
        assert abs(expect(herm, rho).imag) < 1e-10

    def test_layout_mismatch(self):
        op = Operator(SpaceLayout([("A", 2)]), np.eye(2))
        rho = DensityMatrix(SpaceLayout([("B", 2)]), np.eye(2) / 2)
        with pytest.raises(LayoutError):
            expect(op, rho)


class TestStateInvariants:
    def test_trace_enforced(self):
        with pytest.raises(ValidationError):
            DensityMatrix(SpaceLayout([("q", 2)]), np.eye(2))

    def test_hermiticity_enforced(self):
        m = np.array([[0.5, 0.3], [0.0, 0.5]], dtype=complex)
        with pytest.raises(ValidationError):
            DensityMatrix(SpaceLayout([("q", 2)]), m)

    def test_positivity_enforced(self):
        m = np.diag([1.5, -0.5]).astype(complex)
        with pytest.raises(ValidationError):
            DensityMatrix(SpaceLayout([("q", 2)]), m)

    def test_state_norm_enforced(self):
        with pytest.raises(ValidationError):
            StateVector(SpaceLayout([("q", 2)]), np.array([1.0, 1.0]))

    def test_hamiltonian_hermiticity_check(self):
        lay = SpaceLayout([("q", 2)])
        op = Operator(lay, np.array([[0, 1], [0.5, 0]], dtype=complex))
        assert not op.is_hermitian()
        with pytest.raises(ValidationError):
            op.require_hermitian()
