"""
Flagforge — Property-based tests for the geometric predicates and the counting oracle.
"""

from unittest import skipUnless

from django.conf import settings
from django.test import SimpleTestCase
from hypothesis import HealthCheck, given, settings as hypothesis_settings, strategies as st

from core.services.constructions import random_family
from core.services.counting import count_flags_bruteforce, count_flags_dp, degree_split
from core.services.experiments import fit_exponent, run_experiment
from core.services.geometry import (
    Line3,
    Plane3,
    contains,
    dual_of_plane,
    dual_of_point,
    flat_from_points,
    is_legendrian,
    join,
    meet,
)

PROPERTY_SETTINGS = hypothesis_settings(max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])

small = st.integers(min_value=-3, max_value=3)
points_3d = st.tuples(small, small, small)


@st.composite
def flats_3d(draw):
    """Span of one to three small integer points."""
    return flat_from_points(draw(st.lists(points_3d, min_size=1, max_size=3)))


@st.composite
def families(draw):
    """Seeded random layered family with small levels."""
    ambient = draw(st.integers(min_value=2, max_value=4))
    dims = draw(st.lists(st.integers(min_value=0, max_value=ambient), min_size=2, max_size=3, unique=True))
    size = draw(st.integers(min_value=1, max_value=6))
    seed = draw(st.integers(min_value=0, max_value=2**31 - 1))
    return random_family(ambient, sorted(dims), size, seed).family


class ContainmentOrderProperties(SimpleTestCase):
    """contains is a partial order; join and meet bound it."""

    @PROPERTY_SETTINGS
    @given(flats_3d())
    def test_reflexive(self, flat):
        self.assertTrue(contains(flat, flat))

    @PROPERTY_SETTINGS
    @given(flats_3d(), flats_3d())
    def test_antisymmetric(self, first, second):
        if contains(first, second) and contains(second, first):
            self.assertEqual(first, second)

    @PROPERTY_SETTINGS
    @given(flats_3d(), flats_3d(), flats_3d())
    def test_transitive(self, first, second, third):
        if contains(third, second) and contains(second, first):
            self.assertTrue(contains(third, first))

    @PROPERTY_SETTINGS
    @given(flats_3d(), flats_3d())
    def test_join_is_an_upper_bound(self, first, second):
        span = join(first, second)
        self.assertTrue(contains(span, first))
        self.assertTrue(contains(span, second))
        self.assertEqual(meet(first, span), first)

    @PROPERTY_SETTINGS
    @given(flats_3d(), flats_3d())
    def test_meet_is_a_lower_bound(self, first, second):
        common = meet(first, second)
        if common is not None:
            self.assertTrue(contains(first, common))
            self.assertTrue(contains(second, common))


class DualityProperties(SimpleTestCase):
    """Point/plane duality is an incidence-preserving involution."""

    @PROPERTY_SETTINGS
    @given(small, small, small)
    def test_involution(self, u, v, w):
        plane = Plane3.from_graph(u, v, w)
        self.assertEqual(dual_of_point(dual_of_plane(plane)), plane)

    @PROPERTY_SETTINGS
    @given(points_3d, small, small, small)
    def test_incidence(self, point, u, v, w):
        plane = Plane3.from_graph(u, v, w)
        self.assertEqual(plane.contains_point(point), dual_of_point(point).contains_point(dual_of_plane(plane)))


class LegendrianProperties(SimpleTestCase):
    """The orthogonality form does not depend on the anchor."""

    @PROPERTY_SETTINGS
    @given(points_3d, points_3d, small)
    def test_anchor_independence(self, anchor, direction, shift):
        moved = tuple(a + shift * d for a, d in zip(anchor, direction))
        self.assertEqual(is_legendrian(Line3(anchor, direction)), is_legendrian(Line3(moved, direction)))

    @PROPERTY_SETTINGS
    @given(points_3d, small)
    def test_slope_lines_are_legendrian(self, anchor, t):
        a, b, _ = anchor
        self.assertTrue(is_legendrian(Line3.through(anchor, (1, t, t * a - b))))


class CountingProperties(SimpleTestCase):
    """The dynamic programme agrees with enumeration."""

    @hypothesis_settings(max_examples=30, deadline=None, suppress_health_check=[HealthCheck.too_slow])
    @given(families())
    def test_dp_matches_bruteforce(self, family):
        self.assertEqual(count_flags_dp(family), count_flags_bruteforce(family))

    @hypothesis_settings(max_examples=30, deadline=None, suppress_health_check=[HealthCheck.too_slow])
    @given(st.integers(min_value=0, max_value=2**31 - 1))
    def test_split_identity(self, seed):
        family = random_family(3, (0, 1, 2), 6, seed).family
        parts = degree_split(family, 1)
        self.assertEqual(
            sum(count_flags_dp(family.replace_level(1, part)) for part in parts),
            count_flags_dp(family),
        )


@skipUnless(settings.FLAGFORGE_SLOW_TESTS, "set FLAGFORGE_SLOW_TESTS=1 for the full-scale grid sweep")
class GridTightnessTests(SimpleTestCase):
    """Flag counts of the grid construction grow like N^{3/2}."""

    def test_grid_exponent(self):
        schedule = [{"k": l * l, "l": l} for l in (2, 3, 4)]
        rows = run_experiment("grid", schedule, workers=1)
        self.assertFalse(any(row.skipped for row in rows))
        fit = fit_exponent(rows, lambda row: float(row.parameters["l"] ** 8))
        self.assertGreaterEqual(fit.slope, 1.35)
        self.assertLessEqual(fit.slope, 1.65)
        ratios = [row.count / row.bounds["flags3d-restricted"] for row in rows]
        constant = max(ratios)
        self.assertLessEqual(constant, 1.0)
        for row in rows:
            self.assertEqual(row.primary_bound, "flags3d-restricted")
            self.assertLessEqual(row.count, constant * row.bounds["flags3d-restricted"])
        self.assertLessEqual(ratios[-1], ratios[0])

