import math
import unittest

import numpy as np
import pandas as pd
from pandas.testing import assert_series_equal

import qaoa_qng  # noqa: F401


def results_frame():
    return pd.DataFrame(
        {
            "n_qubits": [4] * 6 + [6] * 2,
            "depth": [2, 2, 2, 3, 3, 3, 3, 3],
            "method": ["vanilla", "vanilla", "vanilla", "qng-full", "qng-full", "qng-full", "qng-full", "qng-full"],
            "steps": [100, 300, 5000, 40, 60, None, 80, 120],
            "best_accuracy": [1e-10, 1e-12, 1e-4, 1e-11, 1e-13, math.nan, 1e-10, 1e-8],
            "success": [True, True, False, True, True, False, True, False],
            "fidelity": [0.99, 0.999, 0.8, 0.995, 0.9999, math.nan, 0.97, 0.9],
            "error": ["", "", "", "", "", "RuntimeError: boom", "", ""],
        }
    )


class TestConvergenceSummary(unittest.TestCase):
    def test_with_threshold(self):
        summary = results_frame().qng.convergence_summary(threshold=1e-9)
        row = summary.loc[(4, 2, "vanilla")]
        self.assertEqual(row["trials"], 3)
        self.assertEqual(row["successes"], 2)
        self.assertAlmostEqual(row["rate"], 2 / 3)
        self.assertAlmostEqual(row["mean_steps"], 200.0)

    def test_failed_trials_count_against_rate(self):
        summary = results_frame().qng.convergence_summary(threshold=1e-9)
        row = summary.loc[(4, 3, "qng-full")]
        self.assertEqual(row["trials"], 3)
        self.assertEqual(row["successes"], 2)
        self.assertAlmostEqual(row["mean_steps"], 50.0)

    def test_success_column(self):
        summary = results_frame().qng.convergence_summary()
        self.assertEqual(summary.loc[(6, 3, "qng-full"), "successes"], 1)
        self.assertAlmostEqual(summary.loc[(6, 3, "qng-full"), "rate"], 0.5)

    def test_cell_without_success(self):
        summary = results_frame().qng.convergence_summary(threshold=1e-20)
        self.assertTrue(np.all(summary["successes"] == 0))
        self.assertTrue(summary["mean_steps"].isna().all())


class TestDistributions(unittest.TestCase):
    def test_accuracy_summary(self):
        summary = results_frame().qng.accuracy_summary()
        self.assertEqual(list(summary.columns), ["count", "median", "q25", "q75", "min", "max"])
        # the errored row is dropped
        self.assertEqual(summary.loc[(4, 3, "qng-full"), "count"], 2)
        self.assertEqual(summary.loc[(4, 2, "vanilla"), "median"], 1e-10)
        self.assertEqual(summary.loc[(4, 2, "vanilla"), "max"], 1e-4)

    def test_fidelity_summary(self):
        summary = results_frame().qng.fidelity_summary()
        self.assertEqual(summary.loc[(4, 2, "vanilla"), "median"], 0.99)
        self.assertEqual(summary.loc[(6, 3, "qng-full"), "max"], 0.97)

    def test_best_depth(self):
        df = pd.DataFrame(
            {
                "n_qubits": [4, 4, 4, 4],
                "depth": [1, 1, 2, 2],
                "method": ["qng-full"] * 4,
                "best_accuracy": [0.1, 0.2, 0.01, 0.02],
                "fidelity": [0.7, 0.8, 0.95, 0.9],
            }
        )
        expected = pd.Series(
            [2],
            index=pd.MultiIndex.from_tuples([(4, "qng-full")], names=["n_qubits", "method"]),
            name="depth",
            dtype=np.int64,
        )
        assert_series_equal(df.qng.best_depth(), expected)

    def test_missing_columns(self):
        with self.assertRaisesRegex(AttributeError, "lacks columns"):
            pd.DataFrame({"n_qubits": [4]}).qng
        df = results_frame().drop(columns="fidelity")
        with self.assertRaisesRegex(AttributeError, "fidelity"):
            df.qng.fidelity_summary()


if __name__ == "__main__":
    unittest.main()
