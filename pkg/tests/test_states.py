import unittest

import numpy as np
from hypothesis import given
from hypothesis import strategies as st

from qaoa_qng import states
from qaoa_qng.operators import HamiltonianOperator
from qaoa_qng.states import DensityMatrix, StateVector
from qaoa_qng.util import qaoa_global_options
from tests.utils import QaoaTestCase, angles

X = np.array([[0, 1], [1, 0]], dtype=complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
CNOT = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)


class TestStateVector(QaoaTestCase):
    def test_rejects_unnormalized(self):
        with self.assertRaisesRegex(ValueError, "not normalized"):
            StateVector([1.0, 1.0])

    def test_normalize(self):
        state = StateVector([3.0, 4.0], normalize=True)
        self.assert_allclose(state.probabilities(), [0.36, 0.64])
        self.assertEqual(state.n_qubits, 1)

    def test_zero_vector(self):
        with self.assertRaises(ValueError):
            StateVector([0.0, 0.0], normalize=True)

    def test_dimension_not_power_of_two(self):
        with self.assertRaises(ValueError):
            StateVector([1.0, 0.0, 0.0])

    def test_basis(self):
        state = StateVector.basis(3, 5)
        self.assertEqual(state.dim, 8)
        self.assertEqual(np.argmax(state.probabilities()), 5)
        with self.assertRaises(ValueError):
            StateVector.basis(2, 4)

    def test_overlap_dimension_mismatch(self):
        with self.assertRaisesRegex(ValueError, "dimension mismatch"):
            StateVector.basis(1).overlap(StateVector.basis(2))

    def test_copy_is_independent(self):
        state = StateVector.basis(1)
        other = state.copy()
        other.amplitudes[0] = 0.0
        self.assertEqual(state.amplitudes[0], 1.0)


class TestDensityMatrix(QaoaTestCase):
    def test_from_state(self):
        rho = StateVector([1.0, 1.0], normalize=True).to_density()
        self.assertAlmostEqual(rho.trace(), 1.0)
        self.assertAlmostEqual(rho.purity(), 1.0)

    def test_maximally_mixed(self):
        rho = DensityMatrix.maximally_mixed(2)
        self.assertAlmostEqual(rho.purity(), 0.25)
        self.assert_allclose(rho.probabilities(), [0.25] * 4)

    def test_rejects_bad_trace(self):
        with self.assertRaisesRegex(ValueError, "trace"):
            DensityMatrix(np.eye(2))

    def test_rejects_non_hermitian(self):
        with self.assertRaisesRegex(ValueError, "Hermitian"):
            DensityMatrix([[0.5, 0.1], [0.3, 0.5]])

    def test_rejects_non_square(self):
        with self.assertRaises(ValueError):
            DensityMatrix(np.ones((2, 4)) / 4)

    def test_validate_psd(self):
        rho = DensityMatrix([[1.5, 0.0], [0.0, -0.5]])
        with self.assertRaisesRegex(ValueError, "positive semidefinite"):
            rho.validate()
        good = states.random_density(2, rng=1)
        self.assertIs(good.validate(), good)

    def test_validation_off(self):
        qaoa_global_options["validate"] = False
        rho = DensityMatrix(np.eye(2))
        self.assertAlmostEqual(rho.trace(), 2.0)


class TestKernels(QaoaTestCase):
    def test_targets_msb_convention(self):
        # CNOT with control on targets[0]
        state = StateVector.basis(2, 0b01)  # qubit 0 set
        out = states.apply_unitary(state, CNOT, [0, 1])
        self.assertEqual(np.argmax(out.probabilities()), 0b11)
        out = states.apply_unitary(state, CNOT, [1, 0])
        self.assertEqual(np.argmax(out.probabilities()), 0b01)

    def test_matches_dense_operator(self):
        rng = np.random.default_rng(3)
        psi = states.random_state(3, rng)
        for targets in [(0,), (2,), (0, 2), (2, 1)]:
            with self.subTest(targets=targets):
                u = CNOT if len(targets) == 2 else H
                expected = states.dense_operator(u, targets, 3) @ psi.amplitudes
                out = states.apply_unitary(psi, u, targets)
                self.assert_allclose(out.amplitudes, expected)

    def test_density_agrees_with_pure(self):
        psi = states.random_state(3, 4)
        pure = states.apply_unitary(psi, CNOT, [1, 2])
        mixed = states.apply_unitary(psi.to_density(), CNOT, [1, 2])
        self.assert_allclose(mixed.matrix, pure.to_density().matrix)

    def test_rejects_non_unitary(self):
        with self.assertRaisesRegex(ValueError, "not unitary"):
            states.apply_unitary(StateVector.basis(1), np.ones((2, 2)), [0])

    def test_rejects_bad_targets(self):
        with self.assertRaises(ValueError):
            states.apply_unitary(StateVector.basis(2), X, [2])
        with self.assertRaises(ValueError):
            states.apply_unitary(StateVector.basis(2), CNOT, [1, 1])

    def test_apply_diagonal(self):
        phases = np.exp(1j * np.arange(4))
        psi = states.random_state(2, 5)
        out = states.apply_diagonal(psi, phases)
        self.assert_allclose(out.amplitudes, phases * psi.amplitudes)
        with self.assertRaises(ValueError):
            states.apply_diagonal(psi, phases[:2])

    def test_apply_kraus(self):
        # full bit flip
        rho = StateVector.basis(2, 0).to_density()
        out = states.apply_kraus(rho, [X], [1])
        self.assertAlmostEqual(out.probabilities()[0b10], 1.0)
        with self.assertRaises(TypeError):
            states.apply_kraus(StateVector.basis(1), [X], [0])

    @given(angles)
    def test_unitary_preserves_norm(self, angle):
        u = np.array([[np.cos(angle), -np.sin(angle)], [np.sin(angle), np.cos(angle)]])
        psi = states.random_state(3, 0)
        out = states.apply_unitary(psi, u, [1])
        self.assertAlmostEqual(out.norm(), 1.0, places=12)


class TestMeasures(QaoaTestCase):
    def test_expectation_pure_and_mixed(self):
        h = HamiltonianOperator(2, [(1.0, "ZI"), (0.5, "XX")])
        psi = states.random_state(2, 6)
        dense = h.to_dense()
        expected = np.vdot(psi.amplitudes, dense @ psi.amplitudes).real
        self.assertAlmostEqual(states.expectation(psi, h), expected, places=12)
        self.assertAlmostEqual(states.expectation(psi.to_density(), h), expected, places=12)

    def test_expectation_size_mismatch(self):
        h = HamiltonianOperator(1, [(1.0, "Z")])
        with self.assertRaisesRegex(ValueError, "dimension mismatch"):
            states.expectation(StateVector.basis(2), h)

    def test_fidelity(self):
        plus = StateVector([1.0, 1.0], normalize=True)
        zero = StateVector.basis(1, 0)
        self.assertAlmostEqual(states.fidelity(plus, zero), 0.5)
        self.assertAlmostEqual(states.fidelity(DensityMatrix.maximally_mixed(1), zero), 0.5)
        self.assertEqual(states.fidelity(zero, zero), 1.0)

    @given(st.integers(min_value=0, max_value=100))
    def test_fidelity_in_unit_interval(self, seed):
        rho = states.random_density(2, rank=3, rng=seed)
        psi = states.random_state(2, seed + 1)
        value = states.fidelity(rho, psi)
        self.assertGreaterEqual(value, 0.0)
        self.assertLessEqual(value, 1.0)

    def test_subspace_fidelity(self):
        basis = np.eye(4)[:, :2]
        rho = DensityMatrix.maximally_mixed(2)
        self.assertAlmostEqual(states.subspace_fidelity(rho, basis), 0.5)
        self.assertAlmostEqual(states.subspace_fidelity(StateVector.basis(2, 1), basis), 1.0)

    def test_eigendecompose_descending(self):
        rho = states.random_density(2, rank=2, rng=7)
        values, vectors = states.eigendecompose(rho)
        self.assertTrue(np.all(np.diff(values) <= 1e-12))
        self.assert_allclose(vectors @ np.diag(values) @ vectors.conj().T, rho.matrix, atol=1e-10)
        with self.assertRaises(ValueError):
            states.eigendecompose(np.array([[0.0, 1.0], [0.0, 0.0]]))


if __name__ == "__main__":
    unittest.main()
