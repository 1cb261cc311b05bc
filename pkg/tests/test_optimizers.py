import math
import unittest

import numpy as np

from qaoa_qng import experiments, optimizers
from qaoa_qng.ansatz import accuracy
from qaoa_qng.backends import GRADIENT_FD, DigitalNoiseBackend, NoiselessBackend
from qaoa_qng.metric import KIND_FS, MetricMatrix
from qaoa_qng.optimizers import OptimizerConfig, optimize
from qaoa_qng.tfim import TfimSpec, exact_diagonalize
from tests.utils import QaoaTestCase

SPEC = TfimSpec(2, field=0.5)
START = np.array([0.3, 0.5])
GROUND = -2.0 * math.sqrt(1.25)


class TestOptimizerConfig(unittest.TestCase):
    def test_defaults(self):
        config = OptimizerConfig()
        self.assertEqual(config.method, optimizers.METHOD_QNG_FULL)
        self.assertEqual(config.eps_stop, 1e-12)
        self.assertEqual(config.stop_on, optimizers.STOP_ENERGY)

    def test_invalid(self):
        bad = [
            {"method": "adam"},
            {"learning_rate": 0.0},
            {"max_iters": 0},
            {"max_iters": 2.5},
            {"gradient_mode": "parameter-shift"},
            {"stop_on": "gradient"},
            {"pinv_rcond": -1.0},
        ]
        for kwargs in bad:
            with self.subTest(**kwargs):
                with self.assertRaises(ValueError):
                    OptimizerConfig(**kwargs)

    def test_dict_round_trip(self):
        config = OptimizerConfig(method="vanilla", learning_rate=0.05)
        self.assertEqual(OptimizerConfig.from_dict(config.to_dict()), config)
        with self.assertRaises(KeyError):
            OptimizerConfig.from_dict({"momentum": 0.9})


class TestSteps(QaoaTestCase):
    def test_vanilla_step(self):
        self.assert_allclose(optimizers.vanilla_step([1.0, 2.0], [0.5, -1.0], 0.2), [0.9, 2.2])
        with self.assertRaises(ValueError):
            optimizers.vanilla_step([1.0, 2.0], [0.5], 0.2)

    def test_qng_step_uses_fubini_study(self):
        grad = np.array([1.0, 1.0])
        qfim = MetricMatrix(np.diag([4.0, 8.0]))
        self.assert_allclose(optimizers.qng_step([0.0, 0.0], grad, qfim, 0.1), [-0.1, -0.05])
        # plain arrays are taken as g
        self.assert_allclose(
            optimizers.qng_step([0.0, 0.0], grad, np.diag([1.0, 2.0]), 0.1), [-0.1, -0.05]
        )
        fs = MetricMatrix(np.diag([1.0, 2.0]), KIND_FS)
        self.assert_allclose(optimizers.qng_step([0.0, 0.0], grad, fs, 0.1), [-0.1, -0.05])

    def test_qng_step_singular_metric(self):
        step = optimizers.qng_step([0.0, 0.0], [1.0, 1.0], np.diag([1.0, 0.0]), 0.5)
        self.assert_allclose(step, [-0.5, 0.0])

    def test_qng_step_shape_mismatch(self):
        with self.assertRaises(ValueError):
            optimizers.qng_step([0.0, 0.0], [1.0, 1.0], np.eye(3), 0.1)


class TestOptimize(QaoaTestCase):
    def test_all_methods_converge_on_two_sites(self):
        for method in optimizers.METHODS:
            with self.subTest(method=method):
                config = OptimizerConfig(method=method, learning_rate=0.02, max_iters=2000)
                result = optimize(START, SPEC, config)
                self.assertEqual(result.stop_reason, optimizers.CONVERGED)
                self.assertTrue(result.converged)
                self.assertTrue(result.success)
                self.assertAlmostEqual(result.final_energy, GROUND, places=8)
                self.assertAlmostEqual(result.exact_energy, GROUND, places=10)
                self.assertEqual(len(result.energy_trajectory), result.steps_taken + 1)

    def test_max_iters(self):
        result = optimize(START, SPEC, OptimizerConfig(max_iters=3))
        self.assertEqual(result.stop_reason, optimizers.MAX_ITERS)
        self.assertEqual(result.steps_taken, 3)
        self.assertEqual(result.energy_trajectory.shape, (4,))
        self.assertFalse(result.success)
        self.assert_allclose(result.initial_theta, START)

    def test_stop_on_params(self):
        config = OptimizerConfig(learning_rate=0.02, stop_on="params", eps_stop=1e-9)
        result = optimize(START, SPEC, config)
        self.assertTrue(result.converged)
        self.assertLess(result.best_accuracy, 1e-8)

    def test_callback(self):
        seen = []
        optimize(START, SPEC, OptimizerConfig(max_iters=4), callback=lambda *args: seen.append(args))
        self.assertEqual([step for step, _, _ in seen], [1, 2, 3, 4])

    def test_finite_difference_gradient(self):
        config = OptimizerConfig(learning_rate=0.02, gradient_mode=GRADIENT_FD, eps_stop=1e-10)
        result = optimize(START, SPEC, config)
        self.assertLess(result.best_accuracy, 1e-7)

    def test_best_theta(self):
        result = optimize(START, SPEC, OptimizerConfig(max_iters=5))
        self.assertEqual(result.best_energy, float(np.min(result.energy_trajectory)))
        self.assertAlmostEqual(
            NoiselessBackend(SPEC).energy(result.best_theta), result.best_energy, places=12
        )

    def test_accuracy_trajectory(self):
        result = optimize(START, SPEC, OptimizerConfig(max_iters=20))
        acc = result.accuracy_trajectory()
        self.assertEqual(acc.shape, result.energy_trajectory.shape)
        self.assertTrue(np.all(np.diff(acc) <= 0.0))
        self.assertAlmostEqual(acc[-1], result.best_accuracy, places=12)

    def test_backend_mismatch(self):
        with self.assertRaisesRegex(ValueError, "different problem"):
            optimize(START, SPEC, backend=NoiselessBackend(TfimSpec(3)))

    def test_explicit_reference_energy(self):
        result = optimize(START, SPEC, OptimizerConfig(max_iters=2), exact_energy=-10.0)
        self.assertEqual(result.exact_energy, -10.0)
        self.assertFalse(result.success)


class TestGroundStatePreparation(QaoaTestCase):
    """Full-metric QNG at P = N // 2 from random starts."""

    def check_reaches_ground(self, n_qubits, trial):
        spec = TfimSpec(n_qubits, field=0.5)
        depth = n_qubits // 2
        seed = experiments.trial_seed(20230401, n_qubits, depth, trial)
        backend = NoiselessBackend(spec)
        ground = exact_diagonalize(spec)
        result = optimize(experiments.initial_theta(seed, depth), spec, backend=backend)
        self.assertTrue(result.success)
        self.assertLess(result.best_accuracy, 1e-9)
        self.assertGreaterEqual(backend.fidelity(result.best_theta, ground), 1.0 - 1e-9)

    def test_four_sites(self):
        for trial in (0, 1):
            with self.subTest(trial=trial):
                self.check_reaches_ground(4, trial)

    def test_six_sites(self):
        self.check_reaches_ground(6, 0)


class TestNoisyDigitalFloor(QaoaTestCase):
    def test_reference_noise_blocks_ground_state(self):
        spec = TfimSpec(4, field=0.5)
        exact = exact_diagonalize(spec).energy
        seed = experiments.trial_seed(20230401, 4, 2, 0)
        noiseless = optimize(experiments.initial_theta(seed, 2), spec)
        backend = DigitalNoiseBackend(spec)
        floor = accuracy(backend.energy(noiseless.best_theta), exact)
        self.assertGreater(floor, 1e-6)
        for method in optimizers.METHODS:
            with self.subTest(method=method):
                config = OptimizerConfig(
                    method=method, gradient_mode=GRADIENT_FD, max_iters=15, eps_stop=1e-8
                )
                result = optimize(noiseless.best_theta, spec, config, backend, exact_energy=exact)
                self.assertGreater(result.best_accuracy, 1e-6)
                self.assertFalse(result.success)


if __name__ == "__main__":
    unittest.main()
