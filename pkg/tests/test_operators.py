""" Tests for Pauli-sum operators. The matrix-free application is checked
against explicit Kronecker products built with the qubit-0-is-LSB
convention. """

import unittest
from functools import reduce

import numpy as np

from qaoa_qng import states
from qaoa_qng.operators import HamiltonianOperator, basis_indices
from tests.utils import QaoaTestCase

PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.diag([1.0, -1.0]).astype(complex),
}


def kron_string(string):
    # character k acts on qubit k, qubit 0 is the least significant factor
    return reduce(np.kron, [PAULI[c] for c in reversed(string)])


class TestConstruction(QaoaTestCase):
    def test_terms(self):
        h = HamiltonianOperator(3, [(1, "zzi"), (-0.5, "XII")])
        self.assertEqual(h.terms, [(1.0, "ZZI"), (-0.5, "XII")])
        self.assertEqual(len(h), 2)

    def test_wrong_length(self):
        with self.assertRaisesRegex(ValueError, "does not have length"):
            HamiltonianOperator(2, [(1.0, "ZZZ")])

    def test_bad_character(self):
        with self.assertRaisesRegex(ValueError, "outside IXYZ"):
            HamiltonianOperator(2, [(1.0, "ZA")])

    def test_complex_coefficient(self):
        with self.assertRaises(TypeError):
            HamiltonianOperator(1, [(1j, "Z")])

    def test_basis_indices_read_only(self):
        idx = basis_indices(3)
        self.assertEqual(idx.tolist(), list(range(8)))
        with self.assertRaises(ValueError):
            idx[0] = 1


class TestArithmetic(QaoaTestCase):
    def test_add_and_scale(self):
        a = HamiltonianOperator(2, [(1.0, "ZI")])
        b = HamiltonianOperator(2, [(2.0, "IX")])
        total = 2.0 * (a + b)
        self.assert_allclose(total.to_dense(), 2.0 * (a.to_dense() + b.to_dense()))
        self.assert_allclose((-a).to_dense(), -a.to_dense())

    def test_add_mismatch(self):
        with self.assertRaises(ValueError):
            HamiltonianOperator(1, [(1.0, "Z")]) + HamiltonianOperator(2, [(1.0, "ZZ")])


class TestApplication(QaoaTestCase):
    strings = ["ZII", "IXI", "IIY", "XYZ", "ZZI", "YIY"]

    def test_to_dense_matches_kron(self):
        for string in self.strings:
            with self.subTest(string=string):
                h = HamiltonianOperator(3, [(0.7, string)])
                self.assert_allclose(h.to_dense(), 0.7 * kron_string(string))

    def test_apply_vector_and_matrix(self):
        h = HamiltonianOperator(3, [(0.3, s) for s in self.strings])
        dense = h.to_dense()
        psi = states.random_state(3, 0).amplitudes
        self.assert_allclose(h.apply(psi), dense @ psi)
        m = states.random_density(3, rng=1).matrix
        self.assert_allclose(h.apply(m), dense @ m)

    def test_trace_product(self):
        h = HamiltonianOperator(2, [(1.0, "XY"), (-0.4, "ZZ")])
        m = np.arange(16).reshape(4, 4) + 1j * np.ones((4, 4))
        self.assertAlmostEqual(h.trace_product(m), np.trace(h.to_dense() @ m), places=10)

    def test_diagonal(self):
        h = HamiltonianOperator(2, [(1.0, "ZZ"), (0.5, "XI")])
        self.assertFalse(h.is_diagonal)
        self.assert_allclose(h.diagonal(), [1.0, -1.0, -1.0, 1.0])

    def test_square(self):
        h = HamiltonianOperator(2, [(1.0, "ZZ"), (0.5, "XI")])
        rho = states.random_density(2, rng=2).matrix
        dense = h.to_dense()
        self.assertAlmostEqual(
            h.square().trace_product(rho), np.trace(dense @ dense @ rho), places=10
        )

    def test_apply_dimension_mismatch(self):
        with self.assertRaises(ValueError):
            HamiltonianOperator(2, [(1.0, "ZZ")]).apply(np.ones(8))


if __name__ == "__main__":
    unittest.main()
