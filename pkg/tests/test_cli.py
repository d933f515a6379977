import contextlib
import io
import json
import os
import tempfile
from pathlib import Path
from unittest import TestCase, mock

import numpy as np

from parea import artifacts
from parea.cli import main
from parea.constants import OUT_DIR_ENV


class CliTestCase(TestCase):
    def setUp(self):
        self._tmp = tempfile.TemporaryDirectory()
        self.tmp = Path(self._tmp.name)

    def tearDown(self):
        self._tmp.cleanup()

    def run_cli(self, *argv, out="out"):
        args = list(argv) + ["-q"]
        if out is not None:
            args += ["--out", str(self.tmp / out)]
        stdout, stderr = io.StringIO(), io.StringIO()
        with contextlib.redirect_stdout(stdout), contextlib.redirect_stderr(stderr):
            code = main(args)
        self.stdout, self.stderr = stdout.getvalue(), stderr.getvalue()
        return code


class TestSolve(CliTestCase):
    def test_zero_problem(self):
        self.assertEqual(self.run_cli("solve", "--problem", "zero", "--n", "8"), 0)
        u = artifacts.read_field_csv(self.tmp / "out" / "zero" / "solve" / "u.csv")
        self.assertLessEqual(np.abs(u.values).max(), 1e-10)
        self.assertIn("converged=True", self.stdout)

    def test_not_converged(self):
        self.assertEqual(self.run_cli("solve", "--n", "9", "--max-iter", "1", "--pgm"), 2)
        root = self.tmp / "out" / "example-4.1" / "solve"
        summary = json.loads((root / "summary.json").read_text())
        self.assertFalse(summary["converged"])
        self.assertEqual(summary["config"]["max_iter"], 1)
        self.assertTrue((root / "u.pgm").exists())

    def test_bad_settings(self):
        self.assertEqual(self.run_cli("solve", "--problem", "torus"), 1)
        self.assertIn("torus", self.stderr)
        self.assertEqual(self.run_cli("solve", "--n", "5", "--tol", "2"), 1)
        self.assertEqual(self.run_cli("solve", "--no-such-flag"), 1)
        self.assertEqual(self.run_cli("frobnicate"), 1)

    def test_config_file(self):
        config = self.tmp / "settings.json"
        config.write_text(json.dumps({"n": 7, "max_iter": 1, "out_dir": str(self.tmp / "from-file")}))
        self.assertEqual(self.run_cli("solve", "--config", str(config), out=None), 2)
        self.assertTrue((self.tmp / "from-file" / "example-4.1" / "solve" / "u.csv").exists())
        self.assertEqual(self.run_cli("solve", "--config", str(config), "--max-iter", "5000"), 0)
        summary = json.loads((self.tmp / "out" / "example-4.1" / "solve" / "summary.json").read_text())
        self.assertEqual(summary["grid"]["nx"], 7)

    def test_environment_out_dir(self):
        with mock.patch.dict(os.environ, {OUT_DIR_ENV: str(self.tmp / "env")}):
            self.assertEqual(self.run_cli("solve", "--problem", "zero", "--n", "4", out=None), 0)
        self.assertTrue((self.tmp / "env" / "zero" / "solve" / "summary.json").exists())

    def test_unknown_config_key(self):
        config = self.tmp / "settings.json"
        config.write_text(json.dumps({"resolution": 7}))
        self.assertEqual(self.run_cli("solve", "--config", str(config)), 1)

    def test_manifest_problem(self):
        self.assertEqual(self.run_cli("export", "--problem", "radial", "--n", "6"), 0)
        manifest = self.tmp / "out" / "radial" / "export" / "problem" / "problem.json"
        self.assertEqual(self.run_cli("solve", "--problem", str(manifest), out="again"), 0)
        self.assertTrue((self.tmp / "again" / "radial" / "solve" / "u.csv").exists())


class TestExperiment(CliTestCase):
    def test_deterministic_output(self):
        argv = ["experiment", "--n", "9", "--deltas", "0.01", "0.03", "--seeds", "0", "1"]
        self.assertEqual(self.run_cli(*argv, out="first"), 0)
        self.assertIn("median_rel_l2_err", self.stdout)
        self.assertEqual(self.run_cli(*argv, "--jobs", "2", out="second"), 0)
        first = (self.tmp / "first" / "example-4.1" / "experiment" / "stability.csv").read_bytes()
        second = (self.tmp / "second" / "example-4.1" / "experiment" / "stability.csv").read_bytes()
        self.assertEqual(first, second)

    def test_zero_delta(self):
        code = self.run_cli("experiment", "--n", "9", "--deltas", "0", "--seeds", "0",
                            "--reference", "zero-noise", "--histories")
        self.assertEqual(code, 0)
        root = self.tmp / "out" / "example-4.1" / "experiment"
        summary = json.loads((root / "stability.json").read_text())
        self.assertEqual(len(summary["rows"]), 1)
        self.assertEqual(summary["fits"], [])
        self.assertTrue((root / "history_delta0_seed0.csv").exists())


class TestDiagnose(CliTestCase):
    def test_fresh_solve_with_twin(self):
        code = self.run_cli("diagnose", "--n", "15", "--twin-delta", "0.035", "--num-iso", "3")
        self.assertEqual(code, 0)
        root = self.tmp / "out" / "example-4.1" / "diagnose"
        report = json.loads((root / "diagnose.json").read_text())
        self.assertIn("g_field", report["twin"])
        self.assertIn("gap", report["feasibility"])
        for name in ("J_magnitude.pgm", "sigma.pgm", "mask.pgm", "G_magnitude.pgm", "polylines.csv"):
            self.assertTrue((root / name).exists(), name)

    def test_from_solve_output(self):
        self.assertEqual(self.run_cli("solve", "--n", "15"), 0)
        solved = self.tmp / "out" / "example-4.1" / "solve"
        self.assertEqual(self.run_cli("diagnose", "--input", str(solved), out="diag"), 0)
        report = json.loads((self.tmp / "diag" / "example-4.1" / "diagnose" / "diagnose.json").read_text())
        self.assertNotIn("twin", report)
        self.assertEqual(report["admissibility"]["mask_fraction"], 0.0)

    def test_zero_problem(self):
        self.assertEqual(self.run_cli("diagnose", "--problem", "zero", "--n", "6"), 0)
        report = json.loads((self.tmp / "out" / "zero" / "diagnose" / "diagnose.json").read_text())
        self.assertIn("FULL_MASK", report["admissibility"]["flags"])

    def test_missing_input(self):
        self.assertEqual(self.run_cli("diagnose", "--input", str(self.tmp / "nowhere")), 1)


class TestExport(CliTestCase):
    def test_export(self):
        self.assertEqual(self.run_cli("solve", "--n", "9", out="solved"), 0)
        solved = self.tmp / "solved" / "example-4.1" / "solve"
        self.assertEqual(self.run_cli("export", "--n", "9", "--input", str(solved)), 0)
        root = self.tmp / "out" / "example-4.1" / "export"
        for name in ("problem/problem.json", "a.pgm", "H.pgm", "F_magnitude.pgm", "hypotheses.json",
                     "u.pgm", "polylines.csv", "manifest.json"):
            self.assertTrue((root / name).exists(), name)
        hypotheses = json.loads((root / "hypotheses.json").read_text())
        self.assertTrue(hypotheses["smallness_holds"])
