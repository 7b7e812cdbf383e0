"""
Flagforge — Exact affine geometry over the rationals.

A flat of dimension k in Q^d is stored as the reduced row-echelon basis of its
homogeneous lift: the row space spanned by (1, x) for every point x of the flat.
The basis has k+1 rows of length d+1. Because column 0 always carries the first
pivot, row 0 is an anchor point (1, x0) and the remaining rows are directions
(0, v). Two flats are equal exactly when their ambient dimension and basis match.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from core.conf import generic_range, genericity_retries
from core.exceptions import (
    DimensionMismatch,
    EmptyInput,
    GenericityFailure,
    NotOnPlane,
    VerticalInput,
)

logger = logging.getLogger(__name__)

Scalar = Fraction
Point = tuple[Fraction, ...]
Row = tuple[Fraction, ...]
Matrix = tuple[Row, ...]

_ZERO = Fraction(0)
_ONE = Fraction(1)


def to_scalar(value) -> Fraction:
    """Coerce ints, numpy integers, "p/q" strings and Fractions. Floats are rejected."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError(f"not an exact scalar: {value!r}")
    if isinstance(value, (int, np.integer)):
        return Fraction(int(value))
    if isinstance(value, str):
        return Fraction(value.strip())
    raise TypeError(f"not an exact scalar: {value!r}")


def to_point(coords: Iterable) -> Point:
    return tuple(to_scalar(c) for c in coords)


def _leading_column(row: Sequence[Fraction]) -> int:
    for col, value in enumerate(row):
        if value:
            return col
    return -1


def rref(rows: Iterable[Sequence], width: int) -> Matrix:
    """Reduced row-echelon form with zero rows dropped."""
    matrix = []
    for row in rows:
        if len(row) != width:
            raise DimensionMismatch(f"row of length {len(row)} in a matrix of width {width}")
        matrix.append([to_scalar(x) for x in row])

    pivot_row = 0
    for col in range(width):
        if pivot_row == len(matrix):
            break
        selected = next((r for r in range(pivot_row, len(matrix)) if matrix[r][col]), None)
        if selected is None:
            continue
        matrix[pivot_row], matrix[selected] = matrix[selected], matrix[pivot_row]
        pivot = matrix[pivot_row][col]
        if pivot != 1:
            matrix[pivot_row] = [x / pivot for x in matrix[pivot_row]]
        lead = matrix[pivot_row]
        for r in range(len(matrix)):
            if r != pivot_row and matrix[r][col]:
                factor = matrix[r][col]
                matrix[r] = [a - factor * b for a, b in zip(matrix[r], lead)]
        pivot_row += 1
    return tuple(tuple(row) for row in matrix[:pivot_row])


def null_space(rows: Iterable[Sequence], width: int) -> Matrix:
    """Basis of {x : r . x = 0 for every row r}."""
    reduced = rref(rows, width)
    pivots = [_leading_column(row) for row in reduced]
    pivot_set = set(pivots)
    basis = []
    for free in range(width):
        if free in pivot_set:
            continue
        vector = [_ZERO] * width
        vector[free] = _ONE
        for row, pivot in zip(reduced, pivots):
            vector[pivot] = -row[free]
        basis.append(tuple(vector))
    return tuple(basis)


def matrix_rank(rows: Iterable[Sequence], width: int) -> int:
    return len(rref(rows, width))


def primitive_vector(values: Iterable) -> tuple[int, ...]:
    """Smallest integer multiple of a nonzero vector whose first nonzero entry is positive."""
    fractions = [to_scalar(v) for v in values]
    scale = math.lcm(*(x.denominator for x in fractions))
    ints = [int(x * scale) for x in fractions]
    divisor = math.gcd(*ints)
    if divisor == 0:
        raise ValueError("the zero vector has no primitive representative")
    ints = [x // divisor for x in ints]
    if next(x for x in ints if x) < 0:
        ints = [-x for x in ints]
    return tuple(ints)


@dataclass(frozen=True)
class Flat:
    """
    Affine flat in Q^d, canonical by construction.

    Build flats with from_rows / point / flat_from_points; the raw constructor
    trusts its basis to be in reduced row-echelon form already.
    """

    ambient_dim: int
    basis: Matrix

    @classmethod
    def from_rows(cls, rows: Iterable[Sequence], ambient_dim: int) -> "Flat":
        basis = rref(rows, ambient_dim + 1)
        if not basis or basis[0][0] != 1:
            raise EmptyInput("rows span no affine point")
        return cls(ambient_dim, basis)

    @classmethod
    def point(cls, coords: Iterable) -> "Flat":
        row = (_ONE,) + to_point(coords)
        return cls(len(row) - 1, (row,))

    @property
    def dim(self) -> int:
        return len(self.basis) - 1

    @cached_property
    def pivots(self) -> tuple[int, ...]:
        return tuple(_leading_column(row) for row in self.basis)

    @property
    def anchor(self) -> Point:
        return self.basis[0][1:]

    @property
    def directions(self) -> tuple[Point, ...]:
        return tuple(row[1:] for row in self.basis[1:])

    @cached_property
    def _hash(self) -> int:
        return hash((self.ambient_dim, self.basis))

    def __hash__(self) -> int:
        return self._hash

    def contains_point(self, coords: Iterable) -> bool:
        coords = to_point(coords)
        if len(coords) != self.ambient_dim:
            raise DimensionMismatch(f"point of length {len(coords)} tested against Q^{self.ambient_dim}")
        return _in_row_space(self, (_ONE,) + coords)

    def __repr__(self) -> str:
        anchor = ", ".join(str(x) for x in self.anchor)
        if self.dim == 0:
            return f"Flat(point ({anchor}) in Q^{self.ambient_dim})"
        dirs = "; ".join("(" + ", ".join(str(x) for x in v) + ")" for v in self.directions)
        return f"Flat(dim={self.dim} in Q^{self.ambient_dim}, anchor=({anchor}), directions={dirs})"


def _same_ambient(*flats: Flat) -> int:
    dims = {f.ambient_dim for f in flats}
    if len(dims) != 1:
        raise DimensionMismatch(f"flats live in different ambient spaces: {sorted(dims)}")
    return dims.pop()


def _in_row_space(flat: Flat, vector: Sequence[Fraction]) -> bool:
    # With the identity on the pivot columns, v is in the row space iff
    # v equals the combination of basis rows weighted by v's pivot entries.
    pivots = flat.pivots
    weights = [vector[p] for p in pivots]
    pivot_set = set(pivots)
    for col in range(len(vector)):
        if col in pivot_set:
            continue
        expected = sum((w * row[col] for w, row in zip(weights, flat.basis) if w), _ZERO)
        if expected != vector[col]:
            return False
    return True


def flat_from_points(points: Iterable[Iterable], ambient_dim: Optional[int] = None) -> Flat:
    """Affine span of a nonempty set of points."""
    rows = []
    for coords in points:
        coords = to_point(coords)
        if ambient_dim is None:
            ambient_dim = len(coords)
        if len(coords) != ambient_dim:
            raise DimensionMismatch(f"point of length {len(coords)} in Q^{ambient_dim}")
        rows.append((_ONE,) + coords)
    if not rows:
        raise EmptyInput("the affine span of no points is undefined")
    return Flat.from_rows(rows, ambient_dim)


def contains(outer: Flat, inner: Flat) -> bool:
    """True iff inner is a subset of outer."""
    _same_ambient(outer, inner)
    if inner.dim > outer.dim:
        return False
    return all(_in_row_space(outer, row) for row in inner.basis)


def join(first: Flat, second: Flat) -> Flat:
    """Smallest flat containing both."""
    ambient = _same_ambient(first, second)
    return Flat.from_rows(first.basis + second.basis, ambient)


def meet(first: Flat, second: Flat) -> Optional[Flat]:
    """Intersection of two flats, or None when they are disjoint."""
    ambient = _same_ambient(first, second)
    if contains(first, second):
        return second
    if contains(second, first):
        return first
    width = ambient + 1
    equations = null_space(first.basis, width) + null_space(second.basis, width)
    common = null_space(equations, width)
    if not any(row[0] for row in common):
        return None
    return Flat.from_rows(common, ambient)


def apply_affine_map(flat: Flat, matrix: Sequence[Sequence], shift: Sequence) -> Flat:
    """Image of a flat under x -> A x + t; the image may have lower dimension."""
    if not matrix or any(len(row) != flat.ambient_dim for row in matrix):
        raise DimensionMismatch("affine map does not match the flat's ambient space")
    if len(shift) != len(matrix):
        raise DimensionMismatch("shift vector does not match the affine map's target")
    images = []
    for row in flat.basis:
        head, tail = row[0], row[1:]
        images.append(
            (head,)
            + tuple(sum((a * x for a, x in zip(arow, tail)), _ZERO) + head * t for arow, t in zip(matrix, shift))
        )
    return Flat.from_rows(images, len(matrix))


def translate(flat: Flat, offset: Sequence) -> Flat:
    offset = to_point(offset)
    if len(offset) != flat.ambient_dim:
        raise DimensionMismatch("translation vector does not match the flat's ambient space")
    basis = tuple(
        row if not row[0] else (row[0],) + tuple(x + row[0] * t for x, t in zip(row[1:], offset))
        for row in flat.basis
    )
    return Flat.from_rows(basis, flat.ambient_dim)


# --- Generic position ---------------------------------------------------------


def _integers(rng: np.random.Generator, count: int, bound: int) -> list[int]:
    return [int(x) for x in rng.integers(-bound, bound + 1, size=count)]


def random_flat(rng: np.random.Generator, dim: int, ambient_dim: int, bound: int) -> Optional[Flat]:
    """A random dim-flat with integer data in [-bound, bound]; None if the draw was degenerate."""
    rows = [(_ONE,) + to_point(_integers(rng, ambient_dim, bound))]
    for _ in range(dim):
        rows.append((_ZERO,) + to_point(_integers(rng, ambient_dim, bound)))
    flat = Flat.from_rows(rows, ambient_dim)
    return flat if flat.dim == dim else None


def _chart(flat: Flat, columns: Sequence[int]) -> Flat:
    # Coordinates of a flat inside a host flat whose pivot columns are `columns`.
    return Flat.from_rows([tuple(row[c] for c in columns) for row in flat.basis], len(columns) - 1)


def generic_section(flats: Sequence[Flat], section_dim: int, seed: int) -> list[Flat]:
    """
    Intersect every flat with one random section_dim-flat pi and return the
    pieces in pi's own coordinates (so the result lives in Q^section_dim).

    A k-flat becomes a (k - codim pi)-flat and distinct flats stay distinct,
    otherwise GenericityFailure is raised and the caller retries with another seed.
    """
    flats = list(flats)
    if not flats:
        return []
    ambient = _same_ambient(*flats)
    if not 0 <= section_dim <= ambient:
        raise DimensionMismatch(f"cannot take a {section_dim}-dimensional section of Q^{ambient}")
    codim = ambient - section_dim
    for f in flats:
        if f.dim < codim:
            raise DimensionMismatch(f"a {f.dim}-flat does not survive a section of codimension {codim}")

    rng = np.random.default_rng(seed)
    host = random_flat(rng, section_dim, ambient, generic_range())
    if host is None:
        raise GenericityFailure("section flat is degenerate", seed=seed)

    images = []
    for f in flats:
        piece = meet(f, host)
        if piece is None or piece.dim != f.dim - codim:
            raise GenericityFailure("section is not transversal to every flat", seed=seed)
        images.append(_chart(piece, host.pivots))
    if len(set(images)) != len(set(flats)):
        raise GenericityFailure("section merged two distinct flats", seed=seed)
    return images


def generic_projection(flats: Sequence[Flat], target_dim: int, seed: int) -> list[Flat]:
    """Image of every flat under one random affine surjection Q^d -> Q^target_dim."""
    flats = list(flats)
    if not flats:
        return []
    ambient = _same_ambient(*flats)
    if not 1 <= target_dim <= ambient:
        raise DimensionMismatch(f"cannot project Q^{ambient} onto Q^{target_dim}")
    for f in flats:
        if f.dim > target_dim:
            raise DimensionMismatch(f"a {f.dim}-flat cannot keep its dimension in Q^{target_dim}")

    rng = np.random.default_rng(seed)
    bound = generic_range()
    matrix = [_integers(rng, ambient, bound) for _ in range(target_dim)]
    shift = _integers(rng, target_dim, bound)
    if matrix_rank(matrix, ambient) != target_dim:
        raise GenericityFailure("projection is not surjective", seed=seed)

    images = []
    for f in flats:
        image = apply_affine_map(f, matrix, shift)
        if image.dim != f.dim:
            raise GenericityFailure("projection collapsed a flat", seed=seed)
        images.append(image)
    if len(set(images)) != len(set(flats)):
        raise GenericityFailure("projection merged two distinct flats", seed=seed)
    return images


def random_invertible_map(ambient_dim: int, seed: int, bound: int = 9) -> tuple[list[list[int]], list[int]]:
    """Small-entry invertible linear map (zero shift) drawn from the seed."""
    rng = np.random.default_rng(seed)
    for _ in range(genericity_retries()):
        matrix = [_integers(rng, ambient_dim, bound) for _ in range(ambient_dim)]
        if matrix_rank(matrix, ambient_dim) == ambient_dim:
            return matrix, [0] * ambient_dim
    raise GenericityFailure("no invertible map found", seed=seed)


# --- R^3 views -----------------------------------------------------------------


@dataclass(frozen=True)
class Line3:
    """Line in Q^3 as anchor + primitive integer direction."""

    anchor: Point
    direction: tuple[int, int, int]

    @classmethod
    def through(cls, anchor: Iterable, direction: Iterable) -> "Line3":
        anchor = to_point(anchor)
        direction = to_point(direction)
        if len(anchor) != 3 or len(direction) != 3:
            raise DimensionMismatch("Line3 needs coordinates in Q^3")
        return cls.from_flat(Flat.from_rows([(_ONE,) + anchor, (_ZERO,) + direction], 3))

    @classmethod
    def from_flat(cls, flat: Flat) -> "Line3":
        if flat.ambient_dim != 3 or flat.dim != 1:
            raise DimensionMismatch(f"expected a line in Q^3, got {flat!r}")
        return cls(flat.anchor, primitive_vector(flat.directions[0]))

    def to_flat(self) -> Flat:
        return Flat.from_rows([(_ONE,) + to_point(self.anchor), (_ZERO,) + to_point(self.direction)], 3)

    @property
    def is_vertical(self) -> bool:
        return self.direction[0] == 0 and self.direction[1] == 0


@dataclass(frozen=True)
class Plane3:
    """Plane normal . x = offset in Q^3 with a primitive integer normal."""

    normal: tuple[int, int, int]
    offset: Fraction

    @classmethod
    def from_equation(cls, normal: Iterable, offset) -> "Plane3":
        values = to_point(normal)
        if len(values) != 3:
            raise DimensionMismatch("Plane3 needs a normal in Q^3")
        primitive = primitive_vector(values)
        lead = next(i for i, x in enumerate(values) if x)
        factor = Fraction(primitive[lead]) / values[lead]
        return cls(primitive, to_scalar(offset) * factor)

    @classmethod
    def from_graph(cls, u, v, w) -> "Plane3":
        """The plane z = u x + v y + w."""
        return cls.from_equation((u, v, -1), -to_scalar(w))

    @classmethod
    def from_flat(cls, flat: Flat) -> "Plane3":
        if flat.ambient_dim != 3 or flat.dim != 2:
            raise DimensionMismatch(f"expected a plane in Q^3, got {flat!r}")
        (equation,) = null_space(flat.basis, 4)
        return cls.from_equation(equation[1:], -equation[0])

    def to_flat(self) -> Flat:
        return Flat.from_rows(null_space([(-self.offset,) + to_point(self.normal)], 4), 3)

    @property
    def is_vertical(self) -> bool:
        return self.normal[2] == 0

    def graph_coefficients(self) -> tuple[Fraction, Fraction, Fraction]:
        """(u, v, w) with z = u x + v y + w."""
        if self.is_vertical:
            raise VerticalInput(f"vertical plane {self} is not a graph over the xy-plane")
        n1, n2, n3 = (Fraction(n) for n in self.normal)
        return -n1 / n3, -n2 / n3, self.offset / n3

    def contains_point(self, coords: Iterable) -> bool:
        coords = to_point(coords)
        return sum((n * x for n, x in zip(self.normal, coords)), _ZERO) == self.offset


# --- Point/plane duality in R^3 --------------------------------------------------


def dual_of_point(coords: Iterable) -> Plane3:
    """(a, b, c) -> the plane z = a x + b y - c."""
    a, b, c = to_point(coords)
    return Plane3.from_graph(a, b, -c)


def dual_of_plane(plane: Plane3) -> Point:
    """z = u x + v y + w -> (u, v, -w)."""
    u, v, w = plane.graph_coefficients()
    return (u, v, -w)


def dual_of_line(line: Line3) -> Line3:
    """Meet of the duals of two points of the line."""
    if line.is_vertical:
        raise VerticalInput("vertical lines have no dual line")
    first = to_point(line.anchor)
    second = tuple(a + d for a, d in zip(first, line.direction))
    common = meet(dual_of_point(first).to_flat(), dual_of_point(second).to_flat())
    if common is None or common.dim != 1:
        raise VerticalInput("line has no dual line")
    return Line3.from_flat(common)


DualInput = Union[Flat, Line3, Plane3, tuple, list]


def dualize_3d(obj: DualInput):
    """
    Incidence-preserving duality of Q^3. Flats map to flats (0 <-> 2, 1 -> 1),
    points given as coordinate tuples map to Plane3, Plane3 to points, Line3 to Line3.
    """
    if isinstance(obj, Flat):
        if obj.ambient_dim != 3:
            raise DimensionMismatch("duality is defined in Q^3 only")
        if obj.dim == 0:
            return dual_of_point(obj.anchor).to_flat()
        if obj.dim == 1:
            return dual_of_line(Line3.from_flat(obj)).to_flat()
        if obj.dim == 2:
            return Flat.point(dual_of_plane(Plane3.from_flat(obj)))
        raise DimensionMismatch("only points, lines and planes have duals")
    if isinstance(obj, Line3):
        return dual_of_line(obj)
    if isinstance(obj, Plane3):
        return dual_of_plane(obj)
    return dual_of_point(obj)


def is_vertical_flat(flat: Flat) -> bool:
    if flat.dim == 1:
        return Line3.from_flat(flat).is_vertical
    if flat.dim == 2:
        return Plane3.from_flat(flat).is_vertical
    return False


def vertical_free_rotation(flats: Sequence[Flat], seed: int) -> list[Flat]:
    """
    Apply one random invertible linear map of Q^3 so that no line or plane is vertical.
    Incidences are preserved; retries with derived seeds before giving up.
    """
    flats = list(flats)
    if not any(is_vertical_flat(f) for f in flats):
        return flats
    for attempt in range(genericity_retries()):
        matrix, shift = random_invertible_map(3, seed + attempt)
        images = [apply_affine_map(f, matrix, shift) for f in flats]
        if not any(is_vertical_flat(f) for f in images):
            logger.debug("vertical-free rotation found after %d attempt(s)", attempt + 1)
            return images
    raise GenericityFailure("could not rotate vertical lines and planes away", seed=seed)


# --- Legendrian structure --------------------------------------------------------


def _line_data(line: Union[Line3, Flat]) -> tuple[Point, Point]:
    if isinstance(line, Flat):
        if line.ambient_dim != 3 or line.dim != 1:
            raise DimensionMismatch(f"expected a line in Q^3, got {line!r}")
        return line.anchor, line.directions[0]
    return to_point(line.anchor), to_point(line.direction)


def is_legendrian(line: Union[Line3, Flat]) -> bool:
    """b u - a v + w == 0 for anchor (a, b, c) and direction (u, v, w)."""
    (a, b, _), (u, v, w) = _line_data(line)
    return b * u - a * v + w == 0


def legendrian_plane(coords: Iterable) -> Plane3:
    """Plane through p = (a, b, c) with normal (b, -a, 1)."""
    a, b, c = to_point(coords)
    return Plane3.from_equation((b, -a, 1), c)


def legendrian_point(plane: Plane3) -> Point:
    """The point of a non-vertical plane z = u x + v y + w whose Legendrian plane it is."""
    u, v, w = plane.graph_coefficients()
    return (v, -u, w)


def legendrian_line_at(coords: Iterable, plane: Plane3) -> Optional[Line3]:
    """
    The unique Legendrian line through q inside the plane, or None when q is the
    plane's Legendrian point (where every line of the plane through q qualifies).
    """
    q = to_point(coords)
    if plane.is_vertical:
        raise VerticalInput("Legendrian lines are defined on non-vertical planes")
    if not plane.contains_point(q):
        raise NotOnPlane(f"{q} does not lie on {plane}")
    if q == legendrian_point(plane):
        return None
    n1, n2, n3 = (Fraction(n) for n in plane.normal)
    m1, m2, m3 = q[1], -q[0], _ONE
    direction = (n2 * m3 - n3 * m2, n3 * m1 - n1 * m3, n1 * m2 - n2 * m1)
    return Line3.through(q, direction)
