import unittest

import numpy as np
import scipy.linalg
from hypothesis import given

from qaoa_qng import ansatz, states
from qaoa_qng.ansatz import QaoaParams
from qaoa_qng.tfim import TfimSpec, build_hc, build_hmix, build_hzz, exact_ground_energy
from tests.utils import QaoaTestCase, angles, theta_vectors


class TestQaoaParams(QaoaTestCase):
    def test_interleaving(self):
        params = QaoaParams([0.1, 0.2, 0.3, 0.4])
        self.assertEqual(params.gammas.tolist(), [0.1, 0.3])
        self.assertEqual(params.betas.tolist(), [0.2, 0.4])
        self.assertEqual(params.generators, ("zz", "mix", "zz", "mix"))

    def test_rejects_odd_length(self):
        with self.assertRaisesRegex(ValueError, "even length"):
            QaoaParams([0.1, 0.2, 0.3])
        with self.assertRaises(ValueError):
            QaoaParams([])

    def test_rejects_nan(self):
        with self.assertRaises(ValueError):
            QaoaParams([0.1, np.nan])

    def test_read_only(self):
        params = QaoaParams.zeros(2)
        with self.assertRaises(ValueError):
            params.theta[0] = 1.0

    def test_from_angles_mismatch(self):
        with self.assertRaises(ValueError):
            QaoaParams.from_angles([0.1], [0.2, 0.3])


class TestEvolution(QaoaTestCase):
    def test_plus_state(self):
        self.assert_allclose(ansatz.prepare_plus(3).probabilities(), np.full(8, 1 / 8))

    def test_matches_matrix_exponentials(self):
        n = 3
        params = QaoaParams([0.3, -0.7, 1.1, 0.4])
        hzz, hmix = build_hzz(n).to_dense(), build_hmix(n).to_dense()
        psi = ansatz.prepare_plus(n).amplitudes
        for gamma, beta in zip(params.gammas, params.betas):
            psi = scipy.linalg.expm(-1j * gamma * hzz) @ psi
            psi = scipy.linalg.expm(-1j * beta * hmix) @ psi
        final, _ = ansatz.evolve(params, n)
        self.assert_allclose(final.amplitudes, psi, atol=1e-10)

    @given(theta_vectors(2))
    def test_gate_decomposition_agrees(self, theta):
        expected, _ = ansatz.evolve(theta, 4)
        actual = ansatz.evolve_gates(theta, 4)
        self.assert_allclose(actual.amplitudes, expected.amplitudes, atol=1e-10)

    def test_circuit_gates(self):
        gates = list(ansatz.circuit_gates(QaoaParams([0.1, 0.2]), 3))
        self.assertEqual(len(gates), 6)
        self.assertEqual([g.kind for g in gates], ["zz"] * 3 + ["rx"] * 3)
        self.assertEqual({g.slot for g in gates[:3]}, {1})
        self.assertAlmostEqual(gates[0].angle, 0.2)
        self.assertAlmostEqual(gates[-1].angle, 0.4)

    def test_trace(self):
        final, trace = ansatz.evolve(QaoaParams([0.1, 0.2, 0.3, 0.4]), 3, keep_trace=True)
        self.assertEqual(len(trace.states), 5)
        self.assertIs(trace.final, final)
        self.assertTrue(trace.is_pure)
        self.assertIsNone(ansatz.evolve(QaoaParams.zeros(1), 3)[1])

    def test_density_evolution_agrees(self):
        params = QaoaParams([0.4, 0.9])
        pure, _ = ansatz.evolve(params, 3)
        mixed, _ = ansatz.evolve(params, 3, initial=ansatz.prepare_plus(3).to_density())
        self.assert_allclose(mixed.matrix, pure.to_density().matrix, atol=1e-12)

    def test_initial_size_mismatch(self):
        with self.assertRaisesRegex(ValueError, "dimension mismatch"):
            ansatz.evolve(QaoaParams.zeros(1), 3, initial=ansatz.prepare_plus(2))

    def test_unknown_generator(self):
        with self.assertRaises(ValueError):
            ansatz.apply_generator(ansatz.prepare_plus(2), "yy", 0.1)


class TestEnergy(QaoaTestCase):
    def test_matches_dense_expectation(self):
        spec = TfimSpec(4, field=0.8)
        params = QaoaParams([0.2, 0.5])
        final, _ = ansatz.evolve(params, 4)
        h = build_hc(spec).to_dense()
        expected = np.vdot(final.amplitudes, h @ final.amplitudes).real
        self.assertAlmostEqual(ansatz.energy(params, spec), expected, places=12)

    @given(angles, angles)
    def test_two_site_landscape(self, gamma, beta):
        # odd in beta around E(gamma, 0) = -2 h cos(4 gamma)
        spec = TfimSpec(2, field=0.5)
        plus = ansatz.energy([gamma, beta], spec)
        minus = ansatz.energy([gamma, -beta], spec)
        self.assertAlmostEqual(plus + minus, -2.0 * np.cos(4 * gamma), places=10)
        bound = 2.0 * np.sqrt(1.25)
        self.assertGreaterEqual(plus, -bound - 1e-12)

    @given(theta_vectors(1))
    def test_periodicity(self, theta):
        spec = TfimSpec(4)
        base = ansatz.energy(theta, spec)
        self.assertAlmostEqual(ansatz.energy(theta + [np.pi / 2, 0.0], spec), base, places=10)
        self.assertAlmostEqual(ansatz.energy(theta + [0.0, np.pi], spec), base, places=10)

    def test_bounded_below_by_ground_energy(self):
        spec = TfimSpec(4)
        e_0 = exact_ground_energy(spec)
        rng = np.random.default_rng(0)
        for _ in range(5):
            theta = rng.uniform(-np.pi, np.pi, 4)
            self.assertGreaterEqual(ansatz.energy(theta, spec), e_0 - 1e-12)

    def test_accuracy(self):
        self.assertAlmostEqual(ansatz.accuracy(-3.0, -4.0), 0.25)
        with self.assertRaises(ValueError):
            ansatz.accuracy(1.0, 0.0)

    def test_energy_of_mixed_initial(self):
        spec = TfimSpec(2)
        rho = states.DensityMatrix.maximally_mixed(2)
        self.assertAlmostEqual(ansatz.energy([0.3, 0.4], spec, initial=rho), 0.0, places=12)


if __name__ == "__main__":
    unittest.main()
