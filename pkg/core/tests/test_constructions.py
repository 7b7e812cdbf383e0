"""
Flagforge — Tests for the construction generators: predicted counts must match exact counts.
"""

import itertools

from django.test import SimpleTestCase

from core.exceptions import ConstructionError, InteractionDetected, InvalidTuple
from core.services.bounds import ExponentTuple, valid_exponent_tuples
from core.services.constructions import (
    ConstructionSpec,
    build,
    disjoint_copies,
    elekes_fit,
    elekes_grid_2d,
    flag_lower_bound_construction,
    grid_construction_3d,
    legendrian_family,
    lift_to_flats,
    lightlike_family,
    parallel_bundle_3d,
    pythagorean_directions,
    random_family,
)
from core.services.counting import containment_graph, count_flags_dp, max_coplanar_through_point
from core.services.geometry import contains, is_legendrian, legendrian_plane


class ElekesGridTests(SimpleTestCase):
    """Planar grid with k^2 l^2 incidences."""

    def test_small_grid(self):
        instance = elekes_grid_2d(2, 1)
        self.assertEqual(instance.family.sizes, (8, 2))
        self.assertEqual(count_flags_dp(instance.family), 4)

    def test_incidences_over_parameter_square(self):
        for k, l in itertools.product(range(1, 6), repeat=2):
            instance = elekes_grid_2d(k, l)
            self.assertEqual(instance.family.sizes, (instance.predicted["points"], instance.predicted["lines"]))
            self.assertEqual(count_flags_dp(instance.family), k * k * l * l, msg=f"k={k} l={l}")

    def test_every_line_meets_k_points(self):
        instance = elekes_grid_2d(3, 2)
        degrees = containment_graph(instance.family).lower_degrees(0, instance.family.sizes[1])
        self.assertEqual(set(degrees), {3})

    def test_rejects_non_positive(self):
        with self.assertRaises(ConstructionError):
            elekes_grid_2d(0, 1)

    def test_fit(self):
        self.assertEqual(elekes_fit(8, 2), (2, 1))
        self.assertEqual(elekes_fit(1, 1), (0, 0))


class GridConstructionTests(SimpleTestCase):
    """Points, lines and spanned planes in Q^3."""

    def test_unit_grid_has_no_planes(self):
        instance = grid_construction_3d(1, 1)
        self.assertEqual(instance.family.sizes, (4, 1, 0))
        self.assertEqual(count_flags_dp(instance.family), 0)

    def test_sizes(self):
        for l in (1, 2, 3):
            k = l * l
            instance = grid_construction_3d(k, l)
            self.assertEqual(instance.family.sizes[0], 4 * k ** 3 * l ** 2)
            self.assertEqual(instance.family.sizes[1], k * k * l ** 4)

    def test_regularity(self):
        instance = grid_construction_3d(4, 2)
        family = instance.family
        self.assertEqual(family.sizes[:2], (1024, 256))
        graph = containment_graph(family)
        self.assertEqual(set(graph.lower_degrees(0, family.sizes[1])), {4})
        self.assertEqual(graph.edge_count() - len(graph.edges[1]), instance.predicted["incidences"])
        self.assertGreaterEqual(min(graph.lower_degrees(1, family.sizes[2])), 2)


class ParallelBundleTests(SimpleTestCase):
    """b N flags."""

    def test_small(self):
        instance = parallel_bundle_3d(4, 2)
        self.assertEqual(instance.family.sizes, (4, 2, 4))
        self.assertEqual(count_flags_dp(instance.family), 8)
        self.assertEqual(count_flags_dp(parallel_bundle_3d(9, 3).family), 27)

    def test_predicted_flags(self):
        for n, b in ((12, 3), (40, 5), (64, 8)):
            instance = parallel_bundle_3d(n, b)
            self.assertEqual(count_flags_dp(instance.family), b * n)
            self.assertEqual(instance.predicted["flags"], b * n)

    def test_b_must_divide_n(self):
        with self.assertRaises(ConstructionError):
            parallel_bundle_3d(10, 3)


class LiftTests(SimpleTestCase):
    """Planar configurations moved into higher flats."""

    def test_points_to_lines(self):
        lifted = lift_to_flats(elekes_grid_2d(2, 1), 4, 1, seed=0)
        self.assertEqual(lifted.family.dims, (1, 2))
        self.assertEqual(lifted.family.sizes, (8, 2))
        self.assertEqual(count_flags_dp(lifted.family), 4)

    def test_plain_embedding(self):
        lifted = lift_to_flats(elekes_grid_2d(3, 2), 3, 0, seed=4)
        self.assertEqual(lifted.family.dims, (0, 1))
        self.assertEqual(count_flags_dp(lifted.family), 36)

    def test_index_out_of_range(self):
        with self.assertRaises(ConstructionError):
            lift_to_flats(elekes_grid_2d(2, 1), 4, 3, seed=0)

    def test_needs_planar_input(self):
        with self.assertRaises(ConstructionError):
            lift_to_flats(parallel_bundle_3d(4, 2), 4, 1, seed=0)


class FlagLowerBoundTests(SimpleTestCase):
    """One construction per admissible exponent tuple."""

    def test_pencil_between_point_and_plane(self):
        instance = flag_lower_bound_construction(ExponentTuple.parse("0,1,0"), (1, 5, 1), seed=0)
        self.assertEqual(instance.family.sizes, (1, 5, 1))
        self.assertEqual(count_flags_dp(instance.family), 5)

    def test_two_pencils(self):
        instance = flag_lower_bound_construction(ExponentTuple.parse("1,0,1"), (3, 1, 4), seed=0)
        self.assertEqual(count_flags_dp(instance.family), 12)

    def test_grid_pair(self):
        instance = flag_lower_bound_construction(ExponentTuple.parse("2/3,2/3,0"), (8, 2, 1), seed=0)
        self.assertEqual(count_flags_dp(instance.family), 4)
        self.assertEqual(instance.predicted["flags_lower"], 4)

    def test_padding_keeps_sizes(self):
        instance = flag_lower_bound_construction(ExponentTuple.parse("0,1,0"), (3, 4, 2), seed=2)
        self.assertEqual(instance.family.sizes, (3, 4, 2))
        self.assertGreaterEqual(count_flags_dp(instance.family), 4)

    def test_sweep_reaches_the_term(self):
        for length in (3, 4):
            for exponents in valid_exponent_tuples(length):
                nonzero = [i for i, e in enumerate(exponents) if e.value]
                for chosen in itertools.product((4, 9, 16), repeat=len(nonzero)):
                    sizes = [1] * length
                    for i, size in zip(nonzero, chosen):
                        sizes[i] = size
                    instance = flag_lower_bound_construction(exponents, sizes, seed=1)
                    count = count_flags_dp(instance.family)
                    self.assertEqual(instance.family.sizes, tuple(sizes))
                    self.assertGreaterEqual(count, instance.predicted["flags_lower"], msg=f"{exponents} {sizes}")
                    self.assertGreaterEqual(count, 1e-2 * instance.predicted["term"], msg=f"{exponents} {sizes}")

    def test_inadmissible_tuple(self):
        with self.assertRaises(InvalidTuple):
            flag_lower_bound_construction(ExponentTuple.parse("1,1,0"), (2, 2, 2), seed=0)

    def test_size_count_must_match(self):
        with self.assertRaises(ConstructionError):
            flag_lower_bound_construction(ExponentTuple.parse("1,0"), (2, 2, 2), seed=0)


class LineFamilyTests(SimpleTestCase):
    """Lightlike and Legendrian line families."""

    def test_pythagorean_directions(self):
        directions = pythagorean_directions(8)
        self.assertEqual(len(set(directions)), 8)
        self.assertIn((3, 4, 5), directions)
        for x, y, z in directions:
            self.assertEqual(x * x + y * y, z * z)

    def test_lightlike_lines_are_never_three_coplanar(self):
        instance = build(ConstructionSpec("lightlike", {"directions": 6, "lines_per_direction": 3}), seed=2)
        family = instance.family
        self.assertEqual(max_coplanar_through_point(family[0], family[1]), 2)

    def test_lightlike_family_size(self):
        lines = lightlike_family(4, 5, seed=0)
        self.assertLessEqual(len(lines), 20)
        self.assertEqual({line.direction for line in lines}, set(pythagorean_directions(4)))

    def test_legendrian_single_point(self):
        lines = legendrian_family(1, 3, seed=0)
        self.assertEqual(len(lines), 3)
        plane = legendrian_plane((0, 0, 0)).to_flat()
        for line in lines:
            self.assertTrue(is_legendrian(line))
            self.assertFalse(line.is_vertical)
            self.assertTrue(contains(plane, line.to_flat()))

    def test_legendrian_grid(self):
        lines = legendrian_family(2, 2, seed=0)
        self.assertLessEqual(len(lines), 16)
        self.assertTrue(all(is_legendrian(line) for line in lines))


class RandomAndCopiesTests(SimpleTestCase):
    """Seeded random families and translated copies."""

    def test_random_family_is_deterministic(self):
        first = random_family(3, (0, 1, 2), 6, seed=11).family
        second = random_family(3, (0, 1, 2), 6, seed=11).family
        self.assertEqual(first, second)

    def test_random_family_dims(self):
        with self.assertRaises(ConstructionError):
            random_family(3, (1, 1), 4, seed=0)

    def test_copies_add_flags(self):
        instance = disjoint_copies(ConstructionSpec("bundle", {"N": 4, "b": 2}), 2)
        self.assertEqual(count_flags_dp(instance.family), 16)
        self.assertEqual(instance.predicted["flags"], 16)

    def test_one_copy_is_the_construction(self):
        instance = disjoint_copies(ConstructionSpec("bundle", {"N": 4, "b": 2}), 1)
        self.assertEqual(instance.family, parallel_bundle_3d(4, 2).family)

    def test_copies_of_an_empty_count(self):
        instance = disjoint_copies(ConstructionSpec("grid", {"k": 1, "l": 1}), 3)
        self.assertEqual(count_flags_dp(instance.family), 0)

    def test_overlapping_copies(self):
        with self.assertRaises(InteractionDetected):
            disjoint_copies(ConstructionSpec("elekes", {"k": 2, "l": 1}), 2, separation=1)


class RegistryTests(SimpleTestCase):
    """build() dispatch."""

    def test_bundle(self):
        instance = build(ConstructionSpec("bundle", {"N": 12, "b": 3}), seed=5)
        self.assertEqual(instance.seed, 5)
        self.assertEqual(count_flags_dp(instance.family), 36)

    def test_flag_lower_bound_from_string(self):
        instance = build(ConstructionSpec("flag-lower-bound", {"tuple": "(0,1,0)", "sizes": (1, 5, 1)}))
        self.assertEqual(count_flags_dp(instance.family), 5)

    def test_copies_through_registry(self):
        instance = build(ConstructionSpec("copies", {"of": "bundle", "copies": 2, "N": 4, "b": 2}))
        self.assertEqual(count_flags_dp(instance.family), 16)

    def test_unknown_kind(self):
        with self.assertRaises(ConstructionError):
            build(ConstructionSpec("nope", {}))

    def test_missing_parameter(self):
        with self.assertRaises(ConstructionError):
            build(ConstructionSpec("bundle", {"N": 4}))
