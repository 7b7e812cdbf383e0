"""
Flagforge — Tests for the experiment harness, exponent fitting and self-checks.
"""

from django.test import SimpleTestCase

from core.exceptions import FitError, FlagforgeError
from core.services.experiments import (
    ExperimentRow,
    fit_exponent,
    resolve,
    run_experiment,
    run_point,
    verify_suite,
)

BUNDLE_SCHEDULE = [{"N": 12, "b": 3}, {"N": 24, "b": 3}, {"N": 48, "b": 3}]


def synthetic_rows(pairs):
    return [
        ExperimentRow(index=i, kind="synthetic", parameters={"x": x}, seed=0, sizes=(x,), count=count)
        for i, (x, count) in enumerate(pairs)
    ]


class RunExperimentTests(SimpleTestCase):
    """Schedule points come back in order with exact counts."""

    def test_bundle_sweep(self):
        rows = run_experiment("bundle", BUNDLE_SCHEDULE, seed=0, workers=1)
        self.assertEqual([row.count for row in rows], [36, 72, 144])
        self.assertEqual([row.index for row in rows], [0, 1, 2])
        self.assertEqual([row.seed for row in rows], [0, 1, 2])
        for row in rows:
            self.assertEqual(row.primary_bound, "flags3d-restricted")
            self.assertAlmostEqual(row.measured_constant, row.count / row.dominant_value)
            self.assertIn("flags", row.bounds)

    def test_pool_keeps_schedule_order(self):
        sequential = run_experiment("bundle", BUNDLE_SCHEDULE, seed=3, workers=1)
        parallel = run_experiment("bundle", BUNDLE_SCHEDULE, seed=3, workers=2)
        self.assertEqual([row.count for row in parallel], [row.count for row in sequential])
        self.assertEqual([row.index for row in parallel], [0, 1, 2])

    def test_planar_rows_use_the_incidence_bound(self):
        (row,) = run_experiment("elekes", [{"k": 2, "l": 2}], workers=1)
        self.assertEqual(row.count, 16)
        self.assertEqual(row.primary_bound, "st")

    def test_legendrian_rows(self):
        (row,) = run_experiment("legendrian", [{"g": 2, "r": 2}], workers=1)
        self.assertEqual(row.primary_bound, "legendrian")
        self.assertIn("gk", row.bounds)

    def test_random_points_are_reproducible(self):
        schedule = [{"d": 3, "dims": (0, 1, 2), "size": 6}] * 2
        first = run_experiment("random", schedule, seed=9, workers=1)
        second = run_experiment("random", schedule, seed=9, workers=1)
        self.assertEqual([row.count for row in first], [row.count for row in second])

    def test_over_cap_point_is_skipped(self):
        row = run_point("bundle", {"N": 12, "b": 3}, seed=0, cap=5)
        self.assertTrue(row.skipped)
        self.assertIsNone(row.count)
        self.assertIn("cap", row.note)

    def test_empty_schedule(self):
        with self.assertRaises(FlagforgeError):
            run_experiment("bundle", [], workers=1)


class FitExponentTests(SimpleTestCase):
    """Log-log least squares."""

    def test_three_halves(self):
        fit = fit_exponent(synthetic_rows([(16, 64), (81, 729), (256, 4096)]), "x")
        self.assertAlmostEqual(fit.slope, 1.5, places=9)
        self.assertAlmostEqual(fit.r_squared, 1.0, places=9)
        self.assertEqual(fit.points, 3)

    def test_constant_data(self):
        fit = fit_exponent(synthetic_rows([(2, 10), (4, 10), (8, 10)]), "x")
        self.assertAlmostEqual(fit.slope, 0.0, places=9)

    def test_bundle_is_linear(self):
        rows = run_experiment("bundle", BUNDLE_SCHEDULE, workers=1)
        self.assertAlmostEqual(fit_exponent(rows, "N").slope, 1.0, places=9)
        self.assertAlmostEqual(fit_exponent(rows, "flats").slope, 1.0, places=9)

    def test_needs_two_distinct_points(self):
        with self.assertRaises(FitError):
            fit_exponent(synthetic_rows([(16, 64)]), "x")
        with self.assertRaises(FitError):
            fit_exponent(synthetic_rows([(16, 64), (16, 70)]), "x")

    def test_skipped_rows_are_ignored(self):
        rows = synthetic_rows([(16, 64), (81, 729), (256, 4096)])
        rows[2].skipped = True
        self.assertEqual(fit_exponent(rows, "x").points, 2)

    def test_resolve(self):
        (row,) = synthetic_rows([(5, 7)])
        row.bounds = {"st": 12.0}
        row.predicted = {"flags": 7}
        self.assertEqual(resolve(row, "size:0"), 5.0)
        self.assertEqual(resolve(row, "param:x"), 5.0)
        self.assertEqual(resolve(row, "bound:st"), 12.0)
        self.assertEqual(resolve(row, "predicted:flags"), 7.0)
        self.assertEqual(resolve(row, lambda r: 3.0), 3.0)
        with self.assertRaises(FitError):
            resolve(row, "nope:x")


class VerifySuiteTests(SimpleTestCase):
    """Self-checks pass on the real engine and catch a broken one."""

    def test_all_suites_pass(self):
        report = verify_suite(seed=0, instances=5)
        failures = {result.name: result.failures for result in report.results if not result.passed}
        self.assertEqual(failures, {})
        self.assertTrue(report.passed)

    def test_other_seeds(self):
        for seed in (1, 2, 3):
            self.assertTrue(verify_suite(["grammar", "legendrian", "oracle"], seed=seed, instances=10).passed)

    def test_broken_predicate_fails_the_oracle(self):
        report = verify_suite(["oracle"], seed=0, instances=20, predicate=lambda outer, inner: True)
        self.assertFalse(report.passed)

    def test_unknown_scope(self):
        with self.assertRaises(FlagforgeError):
            verify_suite(["nope"])


class FullScaleSelfCheckTests(SimpleTestCase):
    """Self-checks at the instance counts used to sign off a release."""

    def assertSuitePasses(self, scope, instances, minimum_checked):
        (result,) = verify_suite([scope], seed=0, instances=instances).results
        self.assertEqual(result.failures, [])
        self.assertGreaterEqual(result.checked, minimum_checked)

    def test_oracle_on_two_hundred_instances(self):
        self.assertSuitePasses("oracle", 200, 200)

    def test_split_identity_on_fifty_instances(self):
        self.assertSuitePasses("eqsum", 50, 50)

    def test_duality_on_fifty_instances(self):
        self.assertSuitePasses("duality", 50, 50)

    def test_section_on_thirty_instances(self):
        self.assertSuitePasses("section", 30, 30)

    def test_legendrian_laws(self):
        self.assertSuitePasses("legendrian", 500, 600)
