"""
Tests for the public API. These are intentionally simple, more careful
tests of numerics, errors, etc, are done on the lower-level functions.
"""

import math
import unittest

import numpy as np

import qaoa_qng
from qaoa_qng.backends import NoiselessBackend
from qaoa_qng.noise import CalibrationData
from qaoa_qng.states import StateVector
from qaoa_qng.tfim import TfimSpec
from qaoa_qng.util import qaoa_global_options


class TestOptimizeTfim(unittest.TestCase):
    def test_noiseless_two_sites(self):
        result = qaoa_qng.optimize_tfim(
            2, 1, learning_rate=0.02, max_iters=2000, initial_theta=[0.3, 0.5]
        )
        self.assertTrue(result.success)
        self.assertEqual(result.config.gradient_mode, "analytic")
        self.assertEqual(result.config.eps_stop, 1e-12)
        self.assertEqual(result.threshold, 1e-9)
        self.assertAlmostEqual(result.final_energy, -2.0 * math.sqrt(1.25), places=8)

    def test_seeded_start(self):
        a = qaoa_qng.optimize_tfim(3, 1, seed=4, max_iters=2)
        b = qaoa_qng.optimize_tfim(3, 1, seed=4, max_iters=2)
        np.testing.assert_array_equal(a.initial_theta, b.initial_theta)
        np.testing.assert_array_equal(a.energy_trajectory, b.energy_trajectory)

    def test_digital_defaults(self):
        result = qaoa_qng.optimize_tfim(
            2, 1, backend="digital", calibration=CalibrationData.ideal(), seed=1, max_iters=2
        )
        self.assertEqual(result.config.gradient_mode, "finite-difference")
        self.assertEqual(result.config.eps_stop, 1e-8)
        self.assertEqual(result.threshold, 1e-6)

    def test_noiseless_analog_keeps_tight_defaults(self):
        result = qaoa_qng.optimize_tfim(3, 1, backend="analog", seed=1, max_iters=1)
        self.assertEqual(result.config.gradient_mode, "finite-difference")
        self.assertEqual(result.threshold, 1e-9)

    def test_prepared_backend(self):
        backend = NoiselessBackend(TfimSpec(2, field=0.5))
        result = qaoa_qng.optimize_tfim(2, 1, backend=backend, seed=0, max_iters=3)
        self.assertEqual(result.steps_taken, 3)

    def test_bad_initial_theta(self):
        with self.assertRaises(ValueError):
            qaoa_qng.optimize_tfim(3, 2, initial_theta=[0.1, 0.2])


class TestSetValidation(unittest.TestCase):
    def tearDown(self):
        qaoa_qng.set_validation()

    def test_toggle(self):
        qaoa_qng.set_validation(False)
        self.assertFalse(qaoa_global_options["validate"])
        StateVector([1.0, 1.0])
        qaoa_qng.set_validation(True)
        with self.assertRaises(ValueError):
            StateVector([1.0, 1.0])


if __name__ == "__main__":
    unittest.main()
