"""
Flagforge — Flag counting over layered families of flats.

A LayeredFamily holds levels S_0, ..., S_{r-1} of distinct flats with strictly
increasing dimension. A flag picks one flat per level with each contained in the
next. Counting runs a prefix-sum over the containment graph between consecutive
levels; the brute-force enumerator is kept as an oracle for small families.
"""

from __future__ import annotations

import itertools
import logging
import math
from collections import Counter, defaultdict
from dataclasses import dataclass, replace
from fractions import Fraction
from functools import cached_property
from operator import mul
from typing import Callable, Iterable, NamedTuple, Optional, Sequence

from core.conf import bruteforce_cap
from core.exceptions import CapExceeded, InvalidFamily
from core.services.geometry import Flat, contains, dualize_3d, join, vertical_free_rotation
from core.services.log_service import Category, log_exceptions

logger = logging.getLogger(__name__)

ContainmentPredicate = Callable[[Flat, Flat], bool]


@dataclass(frozen=True)
class Level:
    dim: int
    flats: tuple[Flat, ...]

    def __len__(self) -> int:
        return len(self.flats)


@dataclass(frozen=True, eq=False)
class LayeredFamily:
    ambient_dim: int
    levels: tuple[Level, ...]

    def __post_init__(self):
        if not self.levels:
            raise InvalidFamily("a layered family needs at least one level")
        previous = -1
        for index, level in enumerate(self.levels):
            if level.dim <= previous:
                raise InvalidFamily(f"level {index} has dim {level.dim}, not above {previous}")
            if not 0 <= level.dim <= self.ambient_dim:
                raise InvalidFamily(f"level {index} has dim {level.dim} outside Q^{self.ambient_dim}")
            for flat in level.flats:
                if flat.ambient_dim != self.ambient_dim or flat.dim != level.dim:
                    raise InvalidFamily(f"level {index} holds {flat!r}, expected a {level.dim}-flat")
            if len(set(level.flats)) != len(level.flats):
                raise InvalidFamily(f"level {index} repeats a flat")
            previous = level.dim

    @classmethod
    def build(cls, ambient_dim: int, levels: Iterable[tuple[int, Iterable[Flat]]]) -> "LayeredFamily":
        return cls(ambient_dim, tuple(Level(dim, tuple(flats)) for dim, flats in levels))

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(level.dim for level in self.levels)

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(len(level) for level in self.levels)

    def __len__(self) -> int:
        return len(self.levels)

    def __getitem__(self, index: int) -> tuple[Flat, ...]:
        return self.levels[index].flats

    def replace_level(self, index: int, flats: Iterable[Flat]) -> "LayeredFamily":
        levels = list(self.levels)
        levels[index] = replace(levels[index], flats=tuple(flats))
        return LayeredFamily(self.ambient_dim, tuple(levels))

    def sub_family(self, start: int, stop: int) -> "LayeredFamily":
        return LayeredFamily(self.ambient_dim, self.levels[start:stop])

    def __eq__(self, other) -> bool:
        if not isinstance(other, LayeredFamily):
            return NotImplemented
        return self.ambient_dim == other.ambient_dim and self.levels == other.levels

    __hash__ = None

    @cached_property
    def graph(self) -> "ContainmentGraph":
        return ContainmentGraph(
            tuple(
                tuple(_containment_edges(lower.flats, upper.flats))
                for lower, upper in zip(self.levels, self.levels[1:])
            )
        )


@dataclass(frozen=True)
class ContainmentGraph:
    """edges[i] lists (a, b) with S_i[a] contained in S_{i+1}[b], sorted."""

    edges: tuple[tuple[tuple[int, int], ...], ...]

    def edge_count(self) -> int:
        return sum(len(e) for e in self.edges)

    def lower_degrees(self, interface: int, size: int) -> list[int]:
        """How many S_i flats each S_{i+1} flat contains."""
        degrees = [0] * size
        for _, upper in self.edges[interface]:
            degrees[upper] += 1
        return degrees

    def upper_degrees(self, interface: int, size: int) -> list[int]:
        """How many S_{i+1} flats contain each S_i flat."""
        degrees = [0] * size
        for lower, _ in self.edges[interface]:
            degrees[lower] += 1
        return degrees


def _scaled(matrix: Sequence[Sequence[Fraction]]) -> tuple[tuple[tuple[int, ...], ...], int]:
    denominator = math.lcm(*(x.denominator for row in matrix for x in row)) if matrix else 1
    return tuple(tuple(int(x * denominator) for x in row) for row in matrix), denominator


def _containment_edges(lower: Sequence[Flat], upper: Sequence[Flat]) -> list[tuple[int, int]]:
    # An upper flat g with pivot columns J has the identity on J, so a row v lies
    # in its row space iff v restricted to the other columns equals v_J . G_rest.
    # Lower flats are indexed by their J-columns; each (g, J-key) pair is one lookup.
    if not lower or not upper:
        return []
    width = upper[0].ambient_dim + 1
    groups: dict[tuple[int, ...], list[int]] = defaultdict(list)
    for j, g in enumerate(upper):
        groups[g.pivots].append(j)

    edges = []
    for pivots, members in groups.items():
        rest = tuple(c for c in range(width) if c not in pivots)
        index: dict[tuple, dict[tuple, int]] = defaultdict(dict)
        for i, f in enumerate(lower):
            key = tuple(tuple(row[c] for c in pivots) for row in f.basis)
            tail = tuple(tuple(row[c] for c in rest) for row in f.basis)
            index[key][tail] = i
        keys = [(_scaled(key), tails) for key, tails in index.items()]

        for j in members:
            g = upper[j]
            columns, col_den = _scaled([[row[c] for row in g.basis] for c in rest])
            for (key_rows, key_den), tails in keys:
                denominator = key_den * col_den
                if denominator == 1:
                    predicted = tuple(tuple(sum(map(mul, r, col)) for col in columns) for r in key_rows)
                else:
                    predicted = tuple(
                        tuple(Fraction(sum(map(mul, r, col)), denominator) for col in columns)
                        for r in key_rows
                    )
                i = tails.get(predicted)
                if i is not None:
                    edges.append((i, j))
    edges.sort()
    return edges


def containment_graph(family: LayeredFamily) -> ContainmentGraph:
    """Memoized on the family instance."""
    return family.graph


def prefix_counts(family: LayeredFamily) -> list[list[int]]:
    """counts[i][a] = number of partial flags (F_0, ..., F_i) ending at S_i[a]."""
    graph = containment_graph(family)
    counts = [[1] * len(family.levels[0])]
    for interface, edges in enumerate(graph.edges):
        current = [0] * len(family.levels[interface + 1])
        below = counts[-1]
        for lower, upper in edges:
            current[upper] += below[lower]
        counts.append(current)
    return counts


def suffix_counts(family: LayeredFamily) -> list[list[int]]:
    """counts[i][a] = number of partial flags (F_i, ..., F_top) starting at S_i[a]."""
    graph = containment_graph(family)
    counts = [[1] * len(family.levels[-1])]
    for interface in range(len(graph.edges) - 1, -1, -1):
        current = [0] * len(family.levels[interface])
        above = counts[0]
        for lower, upper in graph.edges[interface]:
            current[lower] += above[upper]
        counts.insert(0, current)
    return counts


@log_exceptions(Category.COUNTING)
def count_flags_dp(family: LayeredFamily) -> int:
    """Exact flag count I(S_0, ..., S_{r-1}) as an unbounded integer."""
    total = sum(prefix_counts(family)[-1])
    logger.debug("counted %d flags over sizes %s", total, family.sizes)
    return total


def count_partial_flags(family: LayeredFamily) -> int:
    """
    Flag count for levels whose dimensions need not be consecutive. Containment
    between consecutive levels is all that matters, so the same recurrence applies.
    """
    return count_flags_dp(family)


def count_flags_bruteforce(
    family: LayeredFamily,
    cap: Optional[int] = None,
    predicate: ContainmentPredicate = contains,
) -> int:
    """Enumerate the Cartesian product of all levels; the oracle for count_flags_dp."""
    cap = bruteforce_cap() if cap is None else cap
    total = math.prod(family.sizes)
    if total > cap:
        raise CapExceeded(f"brute force would enumerate {total} tuples (cap {cap})")

    # predicate(outer, inner), memoized per pair of consecutive levels
    tables = [
        {
            (a, b)
            for a, inner in enumerate(lower.flats)
            for b, outer in enumerate(upper.flats)
            if predicate(outer, inner)
        }
        for lower, upper in zip(family.levels, family.levels[1:])
    ]
    count = 0
    for choice in itertools.product(*(range(size) for size in family.sizes)):
        if all((choice[t], choice[t + 1]) in table for t, table in enumerate(tables)):
            count += 1
    return count


class DegreeSplit(NamedTuple):
    """Partition of one interior level by prefix and suffix degree."""

    heavy: tuple[Flat, ...]  # S_i0
    prefix_light: tuple[Flat, ...]  # S_i1: at most one partial flag below
    suffix_light: tuple[Flat, ...]  # S_i2: at most one partial flag above


def degree_split(family: LayeredFamily, index: int) -> DegreeSplit:
    if not 0 < index < len(family.levels) - 1:
        raise InvalidFamily(f"level {index} is not an interior level of a {len(family.levels)}-level family")
    below = prefix_counts(family)[index]
    above = suffix_counts(family)[index]
    heavy, prefix_light, suffix_light = [], [], []
    for flat, down, up in zip(family.levels[index].flats, below, above):
        if down <= 1:
            prefix_light.append(flat)
        elif up <= 1:
            suffix_light.append(flat)
        else:
            heavy.append(flat)
    return DegreeSplit(tuple(heavy), tuple(prefix_light), tuple(suffix_light))


@dataclass(frozen=True)
class DegreeProfile:
    """counts[(k, l)] = number of lines containing exactly k points and lying in exactly l planes."""

    counts: dict[tuple[int, int], int]

    def line_count(self) -> int:
        return sum(self.counts.values())

    def flag_count(self) -> int:
        return sum(k * l * n for (k, l), n in self.counts.items())

    def lines_with_points(self, k: int) -> int:
        return sum(n for (kk, _), n in self.counts.items() if kk == k)

    def max_degree(self) -> int:
        """Largest point or plane degree of any line (the b of the restricted bound)."""
        return max((max(k, l) for (k, l), n in self.counts.items() if n), default=0)

    def cumulative(self) -> dict[tuple[int, int], int]:
        """N_{>=k,>=l} for k, l >= 1. Summing it recovers flag_count()."""
        cells = [(k, l, n) for (k, l), n in self.counts.items() if n and k and l]
        if not cells:
            return {}
        top_k = max(k for k, _, _ in cells)
        top_l = max(l for _, l, _ in cells)
        return {
            (k, l): sum(n for kk, ll, n in cells if kk >= k and ll >= l)
            for k in range(1, top_k + 1)
            for l in range(1, top_l + 1)
        }

    def rows(self) -> list[tuple[int, int, int]]:
        return sorted((k, l, n) for (k, l), n in self.counts.items())


def degree_profile(family: LayeredFamily) -> DegreeProfile:
    if family.dims != (0, 1, 2):
        raise InvalidFamily(f"degree profiles need levels of dims (0, 1, 2), got {family.dims}")
    graph = containment_graph(family)
    lines = len(family.levels[1])
    points_on = graph.lower_degrees(0, lines)
    planes_on = graph.upper_degrees(1, lines)
    return DegreeProfile(dict(Counter(zip(points_on, planes_on))))


def _distinct(flats: Iterable[Flat]) -> list[Flat]:
    return list(dict.fromkeys(flats))


def max_coplanar_through_point(points: Iterable[Flat], lines: Iterable[Flat]) -> int:
    """Largest number of lines through one of the points that share a plane."""
    points, lines = _distinct(points), _distinct(lines)
    if not points or not lines:
        return 0
    family = LayeredFamily.build(points[0].ambient_dim, [(0, points), (1, lines)])
    through = defaultdict(list)
    for p, l in containment_graph(family).edges[0]:
        through[p].append(l)

    best = 0
    for incident in through.values():
        best = max(best, 1)
        planes = defaultdict(set)
        for a, b in itertools.combinations(incident, 2):
            planes[join(lines[a], lines[b])].update((a, b))
        if planes:
            best = max(best, max(len(members) for members in planes.values()))
    return best


def max_lines_per_plane(lines: Iterable[Flat]) -> int:
    """Largest number of the lines lying in a common plane."""
    lines = _distinct(lines)
    if not lines:
        return 0
    planes = defaultdict(set)
    for a, b in itertools.combinations(range(len(lines)), 2):
        span = join(lines[a], lines[b])
        if span.dim == 2:
            planes[span].update((a, b))
    return max((len(members) for members in planes.values()), default=1)


def dualize_family(family: LayeredFamily, seed: int) -> tuple[LayeredFamily, LayeredFamily]:
    """
    Rotate a (points, lines, planes) family of Q^3 free of vertical flats and dualize it.
    Returns (rotated, dual); the dual has levels (planes*, lines*, points*) and the same flag count.
    """
    if family.ambient_dim != 3 or family.dims != (0, 1, 2):
        raise InvalidFamily(f"duality needs points, lines and planes in Q^3, got dims {family.dims}")
    p, l, _ = family.sizes
    rotated = vertical_free_rotation([f for level in family.levels for f in level.flats], seed)
    points, lines, planes = rotated[:p], rotated[p:p + l], rotated[p + l:]
    original = LayeredFamily.build(3, [(0, points), (1, lines), (2, planes)])
    dual = LayeredFamily.build(
        3,
        [(0, [dualize_3d(f) for f in planes]), (1, [dualize_3d(f) for f in lines]), (2, [dualize_3d(f) for f in points])],
    )
    return original, dual
