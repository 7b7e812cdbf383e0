"""
Flagforge — Tests for command-line value validators.
"""

from django.core.exceptions import ValidationError
from django.test import SimpleTestCase

from core.utils.validation import parse_assignments, parse_float, parse_int_in_range, parse_int_list
from core.validators import (
    parse_construction_arguments,
    parse_exponent_tuple,
    validate_bound_arguments,
    validate_construction_parameters,
)


class ParseHelpersTests(SimpleTestCase):
    """Integers, lists and name=value pairs."""

    def test_int_in_range(self):
        self.assertEqual(parse_int_in_range(" 1_000 ", field_name="N", minimum=1), 1000)
        with self.assertRaises(ValidationError):
            parse_int_in_range("0", field_name="N", minimum=1)
        with self.assertRaises(ValidationError):
            parse_int_in_range("9", field_name="N", minimum=1, maximum=8)
        with self.assertRaises(ValidationError):
            parse_int_in_range("four", field_name="N", minimum=1)

    def test_int_list(self):
        self.assertEqual(parse_int_list("4,9,16", field_name="sizes"), [4, 9, 16])
        with self.assertRaises(ValidationError):
            parse_int_list("", field_name="sizes")

    def test_float(self):
        self.assertEqual(parse_float("2.5", field_name="m"), 2.5)
        with self.assertRaises(ValidationError):
            parse_float("-1", field_name="m")

    def test_assignments(self):
        self.assertEqual(parse_assignments(["k=4", "l = 2", "k=5"]), {"k": "5", "l": "2"})
        with self.assertRaises(ValidationError):
            parse_assignments(["k"])


class ConstructionParameterTests(SimpleTestCase):
    """Typed parameters per construction kind."""

    def test_bundle(self):
        self.assertEqual(validate_construction_parameters("bundle", {"N": "12", "b": "3"}), {"N": 12, "b": 3})

    def test_lift_allows_zero_index(self):
        parsed = parse_construction_arguments("lift", ["k=2", "l=1", "d=3", "i=0"])
        self.assertEqual(parsed["i"], 0)

    def test_non_positive_size(self):
        with self.assertRaises(ValidationError):
            validate_construction_parameters("elekes", {"k": "0", "l": "1"})

    def test_unknown_kind(self):
        with self.assertRaises(ValidationError):
            validate_construction_parameters("nope", {})

    def test_unknown_and_missing_parameters(self):
        with self.assertRaises(ValidationError):
            validate_construction_parameters("bundle", {"N": "12", "b": "3", "x": "1"})
        with self.assertRaises(ValidationError):
            validate_construction_parameters("bundle", {"N": "12"})

    def test_flag_lower_bound(self):
        parsed = validate_construction_parameters("flag-lower-bound", {"tuple": "2/3,2/3,0", "sizes": "8,2,1"})
        self.assertEqual(parsed, {"tuple": "(2/3,2/3,0)", "sizes": (8, 2, 1)})

    def test_inadmissible_tuple(self):
        with self.assertRaises(ValidationError):
            parse_exponent_tuple("(1,1,0)")

    def test_copies_take_inner_parameters(self):
        parsed = validate_construction_parameters("copies", {"of": "bundle", "copies": "2", "N": "4", "b": "2"})
        self.assertEqual(parsed, {"of": "bundle", "copies": 2, "N": 4, "b": 2})
        with self.assertRaises(ValidationError):
            validate_construction_parameters("copies", {"of": "copies", "copies": "2"})


class BoundArgumentTests(SimpleTestCase):
    """Bound inputs."""

    def test_scalar_arguments(self):
        self.assertEqual(validate_bound_arguments("st", {"m": "8", "n": "27"}), {"m": 8.0, "n": 27.0})

    def test_list_arguments(self):
        parsed = validate_bound_arguments("partial-flags", {"sigma": "0,1,3", "sizes": "4,4,4"})
        self.assertEqual(parsed, {"sigma": [0, 1, 3], "sizes": [4.0, 4.0, 4.0]})

    def test_missing(self):
        with self.assertRaises(ValidationError):
            validate_bound_arguments("gk", {"m": "1", "n": "1"})

    def test_unknown_bound(self):
        with self.assertRaises(ValidationError):
            validate_bound_arguments("nope", {})
