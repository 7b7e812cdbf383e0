"""
Flagforge — Tests for the management commands (generate, count, bound, experiment, verify).
"""

import csv
import io
import json
import tempfile
from pathlib import Path

from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase


def run(*args) -> str:
    out = io.StringIO()
    call_command(*args, stdout=out)
    return out.getvalue()


class GenerateAndCountCommandTests(SimpleTestCase):
    """generate writes a family; count reads it back."""

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.family = Path(self.tmp.name) / "bundle.json"
        run("generate", "--kind", "bundle", "--param", "N=4", "--param", "b=2", "--out", str(self.family))

    def test_files_written(self):
        self.assertTrue(self.family.exists())
        predicted = json.loads((Path(self.tmp.name) / "bundle.predicted.json").read_text())
        self.assertEqual(predicted["flags"], "8")
        self.assertEqual(predicted["kind"], "bundle")

    def test_count(self):
        self.assertEqual(run("count", "--in", str(self.family)).splitlines()[0], "8")

    def test_count_bruteforce(self):
        self.assertEqual(run("count", "--in", str(self.family), "--bruteforce").splitlines()[0], "8")

    def test_profile(self):
        output = run("count", "--in", str(self.family), "--profile")
        self.assertEqual(output.splitlines()[1:], ["k,l,lines", "2,2,2"])

    def test_split(self):
        output = run("count", "--in", str(self.family), "--split", "1")
        self.assertIn("heavy: 2 flats, 8 flags", output)
        self.assertIn("prefix_light: 0 flats, 0 flags", output)

    def test_missing_file(self):
        with self.assertRaises(CommandError):
            run("count", "--in", str(Path(self.tmp.name) / "absent.json"))

    def test_invalid_parameters(self):
        out = str(Path(self.tmp.name) / "x.json")
        with self.assertRaises(CommandError):
            run("generate", "--kind", "bundle", "--param", "N=5", "--param", "b=2", "--out", out)
        with self.assertRaises(CommandError):
            run("generate", "--kind", "bundle", "--param", "x=1", "--out", out)


class BoundCommandTests(SimpleTestCase):
    """One CSV row per call."""

    def test_pl34(self):
        (row,) = csv.DictReader(io.StringIO(run("bound", "pl34", "--arg", "m=16", "--arg", "n=16")))
        self.assertAlmostEqual(float(row["value"]), 64.0)
        self.assertEqual(row["inputs"], "m=16;n=16")

    def test_flags(self):
        (row,) = csv.DictReader(io.StringIO(run("bound", "flags", "--arg", "sizes=8,8")))
        self.assertAlmostEqual(float(row["value"]), 32.0)

    def test_restricted_bound_reports_threshold(self):
        args = ("--arg", "p=100", "--arg", "l=10", "--arg", "s=100", "--arg", "b=2")
        (row,) = csv.DictReader(io.StringIO(run("bound", "flags3d-restricted", *args)))
        self.assertAlmostEqual(float(row["value"]), 40.0)
        alternatives = dict(pair.split("=") for pair in row["alternatives"].split(";"))
        self.assertAlmostEqual(float(alternatives["threshold"]), 2000 ** 0.25)
        self.assertAlmostEqual(float(alternatives["b^2 |L|"]), 40.0)

    def test_missing_argument(self):
        with self.assertRaises(CommandError):
            run("bound", "st", "--arg", "m=16")


class ExperimentCommandTests(SimpleTestCase):
    """CSV sweeps are reproducible."""

    ARGS = ("experiment", "--kind", "bundle", "--fixed", "b=3", "--point", "N=12", "--point", "N=24",
            "--workers", "1", "--seed", "4")

    def test_counts(self):
        rows = list(csv.DictReader(io.StringIO(run(*self.ARGS))))
        self.assertEqual([row["count"] for row in rows], ["36", "72"])
        self.assertEqual([row["seed"] for row in rows], ["4", "5"])

    def test_output_is_byte_identical(self):
        self.assertEqual(run(*self.ARGS), run(*self.ARGS))

    def test_fit(self):
        self.assertIn("slope=1.0000", run(*self.ARGS, "--fit", "N"))

    def test_out_file(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "report.csv"
            run(*self.ARGS, "--out", str(path))
            self.assertEqual(path.read_text(encoding="utf-8"), run(*self.ARGS))

    def test_invalid_point(self):
        with self.assertRaises(CommandError):
            run("experiment", "--kind", "bundle", "--point", "N=12")


class VerifyCommandTests(SimpleTestCase):
    """Suite report."""

    def test_grammar(self):
        self.assertIn("grammar: ok", run("verify", "--scope", "grammar", "--instances", "1"))

    def test_several_scopes(self):
        output = run("verify", "--scope", "legendrian", "--scope", "oracle", "--instances", "5", "--seed", "3")
        self.assertIn("legendrian: ok", output)
        self.assertIn("oracle: ok", output)
