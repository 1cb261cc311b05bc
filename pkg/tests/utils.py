import unittest

import hypothesis
import numpy as np
from hypothesis import strategies as st

from qaoa_qng.util import qaoa_global_options

hypothesis.settings.register_profile("fast", max_examples=10, deadline=None)
hypothesis.settings.register_profile("thorough", max_examples=100, deadline=None)
hypothesis.settings.load_profile("fast")

angles = st.floats(min_value=-np.pi, max_value=np.pi, allow_nan=False, allow_infinity=False)


def theta_vectors(depth):
    return st.lists(angles, min_size=2 * depth, max_size=2 * depth).map(np.array)


class QaoaTestCase(unittest.TestCase):
    """Base case with array assertions; validation is forced on for every
    test and restored afterwards."""

    def setUp(self):
        self._validate = qaoa_global_options["validate"]
        qaoa_global_options["validate"] = True

    def tearDown(self):
        qaoa_global_options["validate"] = self._validate

    def assert_allclose(self, actual, expected, atol=1e-10, rtol=0.0):
        np.testing.assert_allclose(np.asarray(actual), np.asarray(expected), atol=atol, rtol=rtol)

    def assert_symmetric(self, matrix, atol=1e-9):
        matrix = np.asarray(matrix)
        self.assertLessEqual(np.max(np.abs(matrix - matrix.T)), atol)

    def assert_psd(self, matrix, atol=1e-8):
        values = np.linalg.eigvalsh(0.5 * (matrix + np.conj(matrix).T))
        self.assertGreaterEqual(values[0], -atol)

    def assert_same_state(self, a, b, atol=1e-10):
        """Equal up to a global phase."""
        self.assertAlmostEqual(abs(np.vdot(a.amplitudes, b.amplitudes)), 1.0, delta=atol)
