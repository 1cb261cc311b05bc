import contextlib
import io
import json
import os
import tempfile
import unittest
from pathlib import Path
from unittest import mock

from qaoa_qng import cli

MANIFEST = """
protocol = "convergence"
n_range = [2]
depth_rule = "explicit"
depths = [1]
trials = 1
master_seed = 5

[optimizer.vanilla]
max_iters = 50
[optimizer.qng-diag]
max_iters = 50
[optimizer.qng-full]
max_iters = 50
"""


class TestMain(unittest.TestCase):
    def setUp(self):
        self._tmp = tempfile.TemporaryDirectory()
        self.tmp = Path(self._tmp.name)
        self.manifest = self.tmp / "smoke.toml"
        self.manifest.write_text(MANIFEST)

    def tearDown(self):
        self._tmp.cleanup()

    def call(self, *argv):
        out, err = io.StringIO(), io.StringIO()
        with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
            code = cli.main(list(argv))
        return code, out.getvalue(), err.getvalue()

    def test_validate(self):
        code, out, _ = self.call("validate", str(self.manifest))
        self.assertEqual(code, 0)
        self.assertEqual(
            out.strip(), "smoke: convergence on noiseless, 1 (N, P) cells x 3 methods x 1 trials"
        )

    def test_run_and_replay(self):
        results = self.tmp / "results"
        code, out, _ = self.call("run", str(self.manifest), "--out", str(results))
        self.assertEqual(code, 0)
        self.assertIn(f"wrote {results / 'smoke.csv'}", out)
        self.assertTrue((results / "smoke.json").exists())

        code, out, _ = self.call("replay", str(results / "smoke.json"))
        self.assertEqual(code, 0)
        self.assertEqual(out.strip(), "replayed 3 records: all match")

        payload = json.loads((results / "smoke.json").read_text())
        payload["records"][1]["steps"] += 1
        (results / "smoke.json").write_text(json.dumps(payload))
        code, out, _ = self.call("replay", str(results / "smoke.json"))
        self.assertEqual(code, 1)
        self.assertIn("1 differ", out)

    def test_seed_override_and_format(self):
        results = self.tmp / "seeded"
        code, _, _ = self.call(
            "run", str(self.manifest), "--out", str(results), "--seed", "9", "--format", "json"
        )
        self.assertEqual(code, 0)
        self.assertFalse((results / "smoke.csv").exists())
        payload = json.loads((results / "smoke.json").read_text())
        self.assertEqual(payload["master_seed"], 9)

    def test_output_dir_from_environment(self):
        with mock.patch.dict(os.environ, {cli.OUTPUT_DIR_ENV: str(self.tmp / "env")}):
            self.assertEqual(cli.output_dir(None), self.tmp / "env")
            self.assertEqual(cli.output_dir("explicit"), Path("explicit"))
        with mock.patch.dict(os.environ, {cli.OUTPUT_DIR_ENV: ""}):
            self.assertEqual(cli.output_dir(None), Path("results"))

    def test_errors_return_two(self):
        code, _, err = self.call("validate", str(self.tmp / "missing.toml"))
        self.assertEqual(code, 2)
        self.assertTrue(err.startswith("error:"))
        bad = self.tmp / "bad.toml"
        bad.write_text('protocol = "convergence"\nbackend = "photonic"\n')
        code, _, _ = self.call("validate", str(bad))
        self.assertEqual(code, 2)

    def test_usage_errors_exit(self):
        with contextlib.redirect_stderr(io.StringIO()):
            with self.assertRaises(SystemExit):
                cli.main(["launch"])


if __name__ == "__main__":
    unittest.main()
