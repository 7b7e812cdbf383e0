"""
Flagforge — Extremal and random constructions.

Each generator returns a GeneratedInstance: the layered family plus the counts
the construction predicts. Exact predictions (sizes, guaranteed incidences) are
ints; shape references are floats.
"""

from __future__ import annotations

import itertools
import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Sequence

import numpy as np

from core.conf import generic_range, genericity_retries
from core.exceptions import ConstructionError, GenericityFailure, InteractionDetected, InvalidFamily
from core.services.bounds import Exponent, ExponentTuple, ensure_valid
from core.services.counting import LayeredFamily, containment_graph, count_flags_dp
from core.services.geometry import (
    Flat,
    Line3,
    Plane3,
    apply_affine_map,
    flat_from_points,
    matrix_rank,
    random_flat,
    translate,
)
from core.services.log_service import Category, log_event, log_exceptions

logger = logging.getLogger(__name__)

_ZERO = Fraction(0)
_ONE = Fraction(1)

# Predictions that add up over disjoint copies.
ADDITIVE_PREDICTIONS = frozenset(
    {"points", "lines", "planes", "incidences", "flags", "flags_lower", "lower_flats", "upper_flats"}
)


@dataclass(frozen=True)
class ConstructionSpec:
    kind: str
    parameters: dict = field(default_factory=dict)


@dataclass(frozen=True, eq=False)
class GeneratedInstance:
    kind: str
    parameters: dict
    family: LayeredFamily
    predicted: dict = field(default_factory=dict)
    seed: Optional[int] = None


def _require_positive(**values):
    for name, value in values.items():
        if not isinstance(value, int) or isinstance(value, bool) or value < 1:
            raise ConstructionError(f"{name} must be a positive integer, got {value!r}")


def _planar_line(a, b) -> Flat:
    """y = a x + b in Q^2."""
    return Flat(2, ((_ONE, _ZERO, Fraction(b)), (_ZERO, _ONE, Fraction(a))))


# --- Planar and spatial grids ----------------------------------------------------


def elekes_grid_2d(k: int, l: int) -> GeneratedInstance:
    """
    P = [1, k] x [1, 2kl], L = {y = a x + b : a in [1, l], b in [1, kl]}.
    Every line meets exactly k points, so I(P, L) = k^2 l^2.
    """
    _require_positive(k=k, l=l)
    points = [Flat.point((x, y)) for x in range(1, k + 1) for y in range(1, 2 * k * l + 1)]
    lines = [_planar_line(a, b) for a in range(1, l + 1) for b in range(1, k * l + 1)]
    family = LayeredFamily.build(2, [(0, points), (1, lines)])
    predicted = {
        "points": 2 * k * k * l,
        "lines": k * l * l,
        "incidences": k * k * l * l,
        "flags": k * k * l * l,
    }
    return GeneratedInstance("elekes", {"k": k, "l": l}, family, predicted)


def _normalized_plane(normal: tuple[int, int, int], offset: int) -> tuple[tuple[int, int, int], int]:
    divisor = math.gcd(*normal)
    n = tuple(x // divisor for x in normal)
    offset //= divisor
    if next(x for x in n if x) < 0:
        n = tuple(-x for x in n)
        offset = -offset
    return n, offset


@log_exceptions(Category.CONSTRUCTION)
def grid_construction_3d(k: int, l: int) -> GeneratedInstance:
    """
    P = [1, k] x [1, 2kl]^2, L = {y = a x + b, z = c x + d : a, c in [1, l], b, d in [1, kl]},
    S = every plane spanned by two concurrent lines of L.
    """
    _require_positive(k=k, l=l)
    span = 2 * k * l
    points = [Flat.point((x, y, z)) for x in range(1, k + 1) for y in range(1, span + 1) for z in range(1, span + 1)]

    lines = []
    through: dict[tuple[int, int, int], list[tuple[int, int]]] = defaultdict(list)
    for a in range(1, l + 1):
        for c in range(1, l + 1):
            for b in range(1, k * l + 1):
                for d in range(1, k * l + 1):
                    lines.append(Flat(3, ((_ONE, _ZERO, Fraction(b), Fraction(d)), (_ZERO, _ONE, Fraction(a), Fraction(c)))))
                    for x in range(1, k + 1):
                        through[(x, a * x + b, c * x + d)].append((a, c))

    planes = set()
    for (x, y, z), directions in through.items():
        for (a, c), (a2, c2) in itertools.combinations(directions, 2):
            normal = (a * c2 - a2 * c, c - c2, a2 - a)
            planes.add(_normalized_plane(normal, normal[0] * x + normal[1] * y + normal[2] * z))
    plane_flats = [Plane3(normal, Fraction(offset)).to_flat() for normal, offset in sorted(planes)]

    log_event(
        'INFO', Category.CONSTRUCTION, 'grid construction built', target=logger,
        k=k, l=l, points=len(points), lines=len(lines), planes=len(plane_flats),
    )
    family = LayeredFamily.build(3, [(0, points), (1, lines), (2, plane_flats)])
    predicted = {
        "points": 4 * k ** 3 * l ** 2,
        "lines": k * k * l ** 4,
        "planes": len(plane_flats),
        "incidences": k ** 3 * l ** 4,
        "plane_shape": float(k * l ** 6),
    }
    return GeneratedInstance("grid", {"k": k, "l": l}, family, predicted)


def parallel_bundle_3d(n: int, b: int) -> GeneratedInstance:
    """
    N/b parallel lines x = j, y = 0; b points on each; b planes x + t y = j through each.
    Every line holds b points and lies in b planes, so the flag count is b N.
    """
    _require_positive(N=n, b=b)
    if n % b:
        raise ConstructionError(f"b = {b} must divide N = {n}")
    count = n // b
    points = [Flat.point((j, 0, z)) for j in range(1, count + 1) for z in range(1, b + 1)]
    lines = [Flat(3, ((_ONE, Fraction(j), _ZERO, _ZERO), (_ZERO, _ZERO, _ZERO, _ONE))) for j in range(1, count + 1)]
    planes = [Plane3.from_equation((1, t, 0), j).to_flat() for j in range(1, count + 1) for t in range(1, b + 1)]
    family = LayeredFamily.build(3, [(0, points), (1, lines), (2, planes)])
    predicted = {"points": n, "lines": count, "planes": n, "flags": b * n}
    return GeneratedInstance("bundle", {"N": n, "b": b}, family, predicted)


# --- Lifting planar configurations -----------------------------------------------


@dataclass(frozen=True)
class _Frame:
    origin: tuple[int, ...]
    vectors: tuple[tuple[int, ...], ...]

    @property
    def dimension(self) -> int:
        return len(self.origin)

    def chain_rows(self, j: int) -> list[tuple[Fraction, ...]]:
        """Homogeneous rows of pi_j = origin + span(e_1, ..., e_j); empty for j < 0."""
        if j < 0:
            return []
        rows = [(_ONE,) + tuple(Fraction(x) for x in self.origin)]
        rows.extend((_ZERO,) + tuple(Fraction(x) for x in v) for v in self.vectors[:j])
        return rows

    def chain(self, j: int) -> Flat:
        return Flat.from_rows(self.chain_rows(j), self.dimension)


def _random_frame(dimension: int, rng: np.random.Generator, seed) -> _Frame:
    bound = generic_range()
    origin = tuple(int(x) for x in rng.integers(-bound, bound + 1, size=dimension))
    vectors = tuple(tuple(int(x) for x in rng.integers(-bound, bound + 1, size=dimension)) for _ in range(dimension))
    if matrix_rank(vectors, dimension) != dimension:
        raise GenericityFailure("frame vectors are dependent", seed=seed)
    return _Frame(origin, vectors)


def _lift_planar(points: Sequence[Flat], lines: Sequence[Flat], frame: _Frame, i: int) -> tuple[list[Flat], list[Flat]]:
    # Planar chart: anchor (origin, plus e_i when i >= 1) with directions e_{i+1}, e_{i+2};
    # every image is joined with Q = pi_{i-1}.
    d = frame.dimension
    anchor = list(frame.origin)
    if i >= 1:
        anchor = [a + e for a, e in zip(anchor, frame.vectors[i - 1])]
    u, w = frame.vectors[i], frame.vectors[i + 1]
    matrix = [(u[r], w[r]) for r in range(d)]
    base = frame.chain_rows(i - 1)

    def lift(flat: Flat) -> Flat:
        image = apply_affine_map(flat, matrix, anchor)
        return Flat.from_rows(list(image.basis) + base, d) if base else image

    return [lift(p) for p in points], [lift(line) for line in lines]


def _verify_lift(lower: list[Flat], upper: list[Flat], i: int, planar_count: int, ambient: int, seed):
    if any(f.dim != i for f in lower) or any(f.dim != i + 1 for f in upper):
        raise GenericityFailure("lift changed a dimension", seed=seed)
    try:
        family = LayeredFamily.build(ambient, [(i, lower), (i + 1, upper)])
    except InvalidFamily as exc:
        raise GenericityFailure(f"lift merged flats: {exc}", seed=seed) from exc
    if count_flags_dp(family) != planar_count:
        raise GenericityFailure("lift changed the incidence count", seed=seed)
    return family


def _with_retries(seed: int, attempt_fn: Callable[[int], GeneratedInstance]) -> GeneratedInstance:
    last = None
    for attempt in range(max(1, genericity_retries())):
        try:
            return attempt_fn(seed + attempt)
        except GenericityFailure as exc:
            last = exc
            log_event('WARNING', Category.CONSTRUCTION, 'genericity failure, retrying', target=logger,
                      seed=exc.seed, reason=str(exc))
    raise last


def lift_to_flats(instance: GeneratedInstance | LayeredFamily, d: int, i: int, seed: int) -> GeneratedInstance:
    """
    Move a planar point-line configuration into Q^d as i-flats and (i+1)-flats:
    place it on a 2-plane and join everything with a generic (i-1)-flat Q.
    Incidences are preserved exactly.
    """
    family = instance.family if isinstance(instance, GeneratedInstance) else instance
    if family.ambient_dim != 2 or family.dims != (0, 1):
        raise ConstructionError("lift_to_flats takes points and lines in Q^2")
    if not 0 <= i <= d - 2:
        raise ConstructionError(f"need 0 <= i <= d - 2, got i = {i}, d = {d}")
    points, lines = family[0], family[1]
    planar_count = count_flags_dp(family)

    def attempt(current_seed: int) -> GeneratedInstance:
        frame = _random_frame(d, np.random.default_rng(current_seed), current_seed)
        lower, upper = _lift_planar(points, lines, frame, i)
        lifted = _verify_lift(lower, upper, i, planar_count, d, current_seed)
        predicted = {"lower_flats": len(points), "upper_flats": len(lines), "incidences": planar_count}
        return GeneratedInstance("lift", {"d": d, "i": i}, lifted, predicted, current_seed)

    return _with_retries(seed, attempt)


# --- Lower-bound constructions for each exponent tuple -------------------------------


def elekes_fit(m: int, n: int) -> tuple[int, int]:
    """(k, l) maximizing k^2 l^2 subject to 2 k^2 l <= m and k l^2 <= n; (0, 0) if none fits."""
    best = (0, 0, 0)
    k = 1
    while 2 * k * k <= m:
        l = 1
        while 2 * k * k * l <= m and k * l * l <= n:
            if k * k * l * l > best[0]:
                best = (k * k * l * l, k, l)
            l += 1
        k += 1
    return best[1], best[2]


def _planar_configuration(m: int, n: int) -> tuple[list[Flat], list[Flat], int]:
    """Exactly m points and n lines holding at least the returned number of incidences."""
    k, l = elekes_fit(m, n)
    if k:
        grid = elekes_grid_2d(k, l)
        points, lines, guaranteed = list(grid.family[0]), list(grid.family[1]), k * k * l * l
    else:
        points, lines, guaranteed = [Flat.point((1, 2))], [_planar_line(1, 1)], 1
    points += [Flat.point((-j, 0)) for j in range(1, m - len(points) + 1)]
    lines += [_planar_line(0, -c) for c in range(1, n - len(lines) + 1)]
    return points, lines, guaranteed


def _padding(rng: np.random.Generator, dim: int, ambient: int, count: int, taken: set) -> list[Flat]:
    extra = []
    while len(extra) < count:
        flat = random_flat(rng, dim, ambient, generic_range())
        if flat is not None and flat not in taken:
            taken.add(flat)
            extra.append(flat)
    return extra


@log_exceptions(Category.CONSTRUCTION)
def flag_lower_bound_construction(exponents: ExponentTuple, sizes: Sequence[int], seed: int) -> GeneratedInstance:
    """
    Family in Q^d (d = len(exponents)) with at least c * prod sizes_i^{a_i} flags.

    Zero slots hold one flat of a generic chain pi_0 < pi_1 < ... (plus padding);
    a 1 at slot i is a pencil of i-flats between pi_{i-1} and pi_{i+1}; a (2/3, 2/3)
    pair at slots i, i+1 is a planar grid lifted between pi_{i-1} and pi_{i+2}.

    The constant c is only uniform when every grid pair has n^1/2 <= m <= n^2;
    pairs outside that window are still built, and predicted["constant"] records c.
    """
    ensure_valid(exponents)
    d = len(exponents)
    sizes = list(sizes)
    if len(sizes) != d:
        raise ConstructionError(f"{d} exponents need {d} sizes, got {len(sizes)}")
    _require_positive(**{f"size_{i}": s for i, s in enumerate(sizes)})

    def attempt(current_seed: int) -> GeneratedInstance:
        rng = np.random.default_rng(current_seed)
        frame = _random_frame(d, rng, current_seed)
        levels: list[list[Flat]] = [[] for _ in range(d)]
        guaranteed = 1
        i = 0
        while i < d:
            e = exponents[i]
            if e is Exponent.ZERO:
                anchor = frame.chain(i)
                levels[i] = [anchor] + _padding(rng, i, d, sizes[i] - 1, {anchor})
                i += 1
            elif e is Exponent.ONE:
                if i == 0:
                    o, e1 = frame.origin, frame.vectors[0]
                    levels[i] = [Flat.point(tuple(a + t * b for a, b in zip(o, e1))) for t in range(sizes[i])]
                else:
                    base = frame.chain_rows(i - 1)
                    first, second = frame.vectors[i - 1], frame.vectors[i]
                    levels[i] = [
                        Flat.from_rows(base + [(_ZERO,) + tuple(Fraction(a + t * b) for a, b in zip(first, second))], d)
                        for t in range(sizes[i])
                    ]
                guaranteed *= sizes[i]
                i += 1
            else:
                points, lines, incidences = _planar_configuration(sizes[i], sizes[i + 1])
                lower, upper = _lift_planar(points, lines, frame, i)
                planar = LayeredFamily.build(2, [(0, points), (1, lines)])
                _verify_lift(lower, upper, i, count_flags_dp(planar), d, current_seed)
                levels[i], levels[i + 1] = lower, upper
                guaranteed *= incidences
                i += 2
        try:
            family = LayeredFamily.build(d, [(dim, flats) for dim, flats in enumerate(levels)])
        except InvalidFamily as exc:
            raise GenericityFailure(str(exc), seed=current_seed) from exc
        term = math.prod(float(s) ** float(e.value) for s, e in zip(sizes, exponents))
        predicted = {"flags_lower": guaranteed, "term": term, "constant": guaranteed / term}
        return GeneratedInstance(
            "flag-lower-bound", {"tuple": str(exponents), "sizes": tuple(sizes)}, family, predicted, current_seed
        )

    return _with_retries(seed, attempt)


# --- Lightlike and Legendrian line families ----------------------------------------


def pythagorean_directions(count: int, max_parameter: int = 64) -> list[tuple[int, int, int]]:
    """First `count` distinct primitive directions on the cone x^2 + y^2 = z^2."""
    found: dict[tuple[int, int, int], None] = {}
    for m in range(1, max_parameter + 1):
        for n in range(1, m + 1):
            a, b, c = m * m - n * n, 2 * m * n, m * m + n * n
            for x, y in ((a, b), (b, a)):
                for sx, sy in ((1, 1), (1, -1), (-1, 1), (-1, -1)):
                    vector = (sx * x, sy * y, c)
                    divisor = math.gcd(*vector)
                    vector = tuple(v // divisor for v in vector)
                    if next(v for v in vector if v) < 0:
                        vector = tuple(-v for v in vector)
                    found.setdefault(vector, None)
                    if len(found) == count:
                        return list(found)
    raise ConstructionError(f"only {len(found)} lightlike directions with parameters up to {max_parameter}")


def _anchor_pool(rng: np.random.Generator, count: int, bound: int = 50) -> list[tuple[int, int, int]]:
    pool: dict[tuple[int, int, int], None] = {}
    while len(pool) < count:
        pool.setdefault(tuple(int(x) for x in rng.integers(-bound, bound + 1, size=3)), None)
    return list(pool)


def lightlike_family(directions: int, lines_per_direction: int, seed: int) -> tuple[Line3, ...]:
    """
    Lines with lightlike directions through a shared pool of anchors, so each
    anchor carries one line per direction. At most two lightlike lines through a
    point are ever coplanar.
    """
    _require_positive(directions=directions, lines_per_direction=lines_per_direction)
    vectors = pythagorean_directions(directions)
    pool = _anchor_pool(np.random.default_rng(seed), lines_per_direction)
    lines = {Line3.through(anchor, v) for v in vectors for anchor in pool}
    return tuple(sorted(lines, key=lambda line: (line.direction, line.anchor)))


def legendrian_family(g: int, r: int, seed: int) -> tuple[Line3, ...]:
    """r non-vertical Legendrian lines through each point of the g x g x g grid {0, ..., g-1}^3."""
    _require_positive(g=g, r=r)
    rng = np.random.default_rng(seed)
    lines = set()
    spread = max(4 * r, 16)
    for a, b, c in itertools.product(range(g), repeat=3):
        slopes = rng.choice(2 * spread + 1, size=r, replace=False) - spread
        for t in slopes:
            t = int(t)
            lines.add(Line3.through((a, b, c), (1, t, t * a - b)))
    return tuple(sorted(lines, key=lambda line: (line.direction, line.anchor)))


def _line_instance(kind: str, parameters: dict, points: Sequence, lines: Sequence[Line3], seed: int) -> GeneratedInstance:
    point_flats = list(dict.fromkeys(Flat.point(p) for p in points))
    family = LayeredFamily.build(3, [(0, point_flats), (1, [line.to_flat() for line in lines])])
    predicted = {"points": len(point_flats), "lines": len(lines)}
    return GeneratedInstance(kind, parameters, family, predicted, seed)


# --- Random families and disjoint copies ----------------------------------------------


def random_family(ambient_dim: int, dims: Sequence[int], size: int, seed: int, coordinate_bound: int = 3) -> GeneratedInstance:
    """
    Random layered family with plenty of containments: every flat is the span of
    a few points drawn from one small pool of integer points.
    """
    dims = list(dims)
    _require_positive(ambient_dim=ambient_dim, size=size)
    if not dims or any(not 0 <= a < ambient_dim + 1 for a in dims) or any(a >= b for a, b in zip(dims, dims[1:])):
        raise ConstructionError(f"dims {dims} must strictly increase inside [0, {ambient_dim}]")
    rng = np.random.default_rng(seed)
    pool_size = max(dims) + 3
    pool = list(dict.fromkeys(
        tuple(int(x) for x in rng.integers(-coordinate_bound, coordinate_bound + 1, size=ambient_dim))
        for _ in range(pool_size)
    ))
    levels = []
    for dim in dims:
        flats: dict[Flat, None] = {}
        for _ in range(20 * size):
            if len(flats) == size or dim + 1 > len(pool):
                break
            chosen = rng.choice(len(pool), size=dim + 1, replace=False)
            flat = flat_from_points([pool[int(c)] for c in chosen], ambient_dim)
            if flat.dim == dim:
                flats.setdefault(flat, None)
        levels.append((dim, list(flats)))
    family = LayeredFamily.build(ambient_dim, levels)
    parameters = {"d": ambient_dim, "dims": tuple(dims), "size": size}
    return GeneratedInstance("random", parameters, family, {}, seed)


def _coordinate_bound(family: LayeredFamily) -> int:
    largest = 0
    for level in family.levels:
        for flat in level.flats:
            for row in flat.basis:
                for x in row:
                    largest = max(largest, math.ceil(abs(x)))
    return largest


@log_exceptions(Category.CONSTRUCTION)
def disjoint_copies(spec: ConstructionSpec, copies: int, seed: int = 0, separation: Optional[int] = None) -> GeneratedInstance:
    """
    Translated copies of one construction. Copy c is shifted by c * M * (1, M, M^2, ...);
    the result is rejected with InteractionDetected if any flat of one copy coincides
    with or lies in a flat of another.
    """
    _require_positive(copies=copies)
    base = build(spec, seed)
    family = base.family
    d = family.ambient_dim
    step = separation if separation is not None else 2 * _coordinate_bound(family) + 3
    _require_positive(separation=step)
    direction = [step ** (p + 1) for p in range(d)]

    levels = []
    for level in family.levels:
        flats = []
        for c in range(copies):
            flats.extend(translate(f, [c * x for x in direction]) if c else f for f in level.flats)
        levels.append((level.dim, flats))
    try:
        union = LayeredFamily.build(d, levels)
    except InvalidFamily as exc:
        raise InteractionDetected(f"copies overlap: {exc}") from exc

    sizes = family.sizes
    for interface, edges in enumerate(containment_graph(union).edges):
        for lower, upper in edges:
            if lower // sizes[interface] != upper // sizes[interface + 1]:
                raise InteractionDetected("a flat of one copy lies in a flat of another copy")

    predicted = {
        key: value * copies for key, value in base.predicted.items()
        if key in ADDITIVE_PREDICTIONS and isinstance(value, int)
    }
    parameters = {"of": spec.kind, "copies": copies, "separation": step, **spec.parameters}
    return GeneratedInstance("copies", parameters, union, predicted, seed)


# --- Registry ------------------------------------------------------------------------------


def _build_flag_lower_bound(p: dict, seed: int) -> GeneratedInstance:
    exponents = p["tuple"]
    if isinstance(exponents, str):
        exponents = ExponentTuple.parse(exponents)
    return flag_lower_bound_construction(exponents, p["sizes"], seed)


def _build_lift(p: dict, seed: int) -> GeneratedInstance:
    return lift_to_flats(elekes_grid_2d(p["k"], p["l"]), p["d"], p["i"], seed)


def _build_lightlike(p: dict, seed: int) -> GeneratedInstance:
    lines = lightlike_family(p["directions"], p["lines_per_direction"], seed)
    anchors = _anchor_pool(np.random.default_rng(seed), p["lines_per_direction"])
    return _line_instance("lightlike", dict(p), anchors, lines, seed)


def _build_legendrian(p: dict, seed: int) -> GeneratedInstance:
    lines = legendrian_family(p["g"], p["r"], seed)
    points = itertools.product(range(p["g"]), repeat=3)
    return _line_instance("legendrian", dict(p), points, lines, seed)


def _build_copies(p: dict, seed: int) -> GeneratedInstance:
    inner = {key: value for key, value in p.items() if key not in ("of", "copies", "separation")}
    return disjoint_copies(ConstructionSpec(p["of"], inner), p["copies"], seed, p.get("separation"))


KINDS: dict[str, Callable[[dict, int], GeneratedInstance]] = {
    "elekes": lambda p, seed: elekes_grid_2d(p["k"], p["l"]),
    "grid": lambda p, seed: grid_construction_3d(p["k"], p["l"]),
    "bundle": lambda p, seed: parallel_bundle_3d(p["N"], p["b"]),
    "lift": _build_lift,
    "flag-lower-bound": _build_flag_lower_bound,
    "lightlike": _build_lightlike,
    "legendrian": _build_legendrian,
    "random": lambda p, seed: random_family(p["d"], p["dims"], p["size"], seed),
    "copies": _build_copies,
}


def build(spec: ConstructionSpec, seed: int = 0) -> GeneratedInstance:
    if spec.kind not in KINDS:
        raise ConstructionError(f"unknown construction {spec.kind!r}; choose from {', '.join(sorted(KINDS))}")
    try:
        instance = KINDS[spec.kind](spec.parameters, seed)
    except KeyError as exc:
        raise ConstructionError(f"construction {spec.kind!r} is missing parameter {exc}") from exc
    if instance.seed is None:
        instance = GeneratedInstance(instance.kind, instance.parameters, instance.family, instance.predicted, seed)
    return instance
