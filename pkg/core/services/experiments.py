"""
Flagforge — Experiment harness.

run_experiment() builds one instance per schedule point, counts its flags,
evaluates the matching bounds and returns rows in schedule order.
fit_exponent() fits log y against log x over the rows; verify_suite() runs the
self-checks behind `manage.py verify`.
"""

from __future__ import annotations

import logging
import math
import multiprocessing
import time
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence, Union

import numpy as np

from core.conf import experiment_cap, genericity_retries, worker_count
from core.exceptions import CapExceeded, FitError, FlagforgeError, GenericityFailure
from core.services import bounds as bound_lib
from core.services.bounds import (
    BoundValue,
    ExponentTuple,
    partial_flags_bound,
    tuples_by_conditions,
    valid_exponent_tuples,
)
from core.services.constructions import (
    ConstructionSpec,
    GeneratedInstance,
    build,
    disjoint_copies,
    flag_lower_bound_construction,
    legendrian_family,
    lightlike_family,
    random_family,
)
from core.services.counting import (
    LayeredFamily,
    count_flags_bruteforce,
    count_flags_dp,
    degree_profile,
    degree_split,
    dualize_family,
    max_coplanar_through_point,
    max_lines_per_plane,
)
from core.services.geometry import (
    Flat,
    Line3,
    Plane3,
    contains,
    dualize_3d,
    generic_projection,
    generic_section,
    is_legendrian,
    legendrian_line_at,
    legendrian_plane,
    legendrian_point,
    meet,
)
from core.services.log_service import Category, log_event, log_exceptions

logger = logging.getLogger(__name__)

# Largest family for which gk_bound's B is computed (it is quadratic in |L|).
GK_LINE_LIMIT = 2000


@dataclass
class ExperimentRow:
    index: int
    kind: str
    parameters: dict
    seed: int
    sizes: tuple[int, ...] = ()
    count: Optional[int] = None
    bounds: dict[str, float] = field(default_factory=dict)
    primary_bound: str = ""
    dominant_term: str = ""
    dominant_value: float = math.nan
    measured_constant: float = math.nan
    wall_time: float = 0.0
    skipped: bool = False
    note: str = ""
    predicted: dict = field(default_factory=dict)


def estimated_flats(kind: str, parameters: dict) -> Optional[int]:
    """Size of an instance before building it, where the construction makes that cheap."""
    p = parameters
    try:
        if kind == "elekes":
            return 2 * p["k"] ** 2 * p["l"] + p["k"] * p["l"] ** 2
        if kind == "grid":
            return 4 * p["k"] ** 3 * p["l"] ** 2 + p["k"] ** 2 * p["l"] ** 4 + p["k"] * p["l"] ** 6
        if kind == "bundle":
            return 2 * p["N"] + p["N"] // max(p["b"], 1)
        if kind == "legendrian":
            return p["g"] ** 3 * (1 + p["r"])
        if kind == "lightlike":
            return p["lines_per_direction"] * (1 + p["directions"])
        if kind == "flag-lower-bound":
            return sum(p["sizes"])
    except (KeyError, TypeError):
        return None
    return None


def bounds_for(instance: GeneratedInstance) -> tuple[dict[str, BoundValue], str]:
    """Every bound that applies to the instance's shape, and the id of the one to compare against."""
    family = instance.family
    sizes = family.sizes
    dims = family.dims
    results: dict[str, BoundValue] = {"flags": partial_flags_bound(dims, sizes)}
    primary = "flags"

    if dims == (0, 1) and family.ambient_dim == 2:
        results["st"] = bound_lib.st_bound(*sizes)
        primary = "st"
    elif dims == (0, 1) and family.ambient_dim == 3:
        m, n = sizes
        results["pl34"] = bound_lib.pl34_bound(m, n)
        if instance.kind == "lightlike":
            results["sw-log"] = bound_lib.sw_log_bound(m, n)
            results["sw-47"] = bound_lib.sw_47_bound(m, n)
            primary = "pl34"
        elif instance.kind == "legendrian":
            results["legendrian"] = bound_lib.legendrian_bound(m, n)
            primary = "legendrian"
        if n <= GK_LINE_LIMIT:
            results["gk"] = bound_lib.gk_bound(m, n, max_lines_per_plane(family[1]))
    elif dims == (0, 1, 2) and family.ambient_dim == 3:
        p, l, s = sizes
        b = degree_profile(family).max_degree()
        results["flags3d-restricted"] = bound_lib.flags3d_restricted_bound(p, l, s, b)
        primary = "flags3d-restricted"
    return results, primary


def run_point(kind: str, parameters: dict, seed: int, index: int = 0, cap: Optional[int] = None) -> ExperimentRow:
    """One schedule point: build, count, bound. Over-cap and degenerate points come back skipped."""
    cap = experiment_cap() if cap is None else cap
    row = ExperimentRow(index=index, kind=kind, parameters=dict(parameters), seed=seed)
    started = time.perf_counter()
    try:
        estimate = estimated_flats(kind, parameters)
        if estimate is not None and estimate > cap:
            raise CapExceeded(f"about {estimate} flats (cap {cap})")
        instance = build(ConstructionSpec(kind, dict(parameters)), seed)
        row.sizes = instance.family.sizes
        if sum(row.sizes) > cap:
            raise CapExceeded(f"{sum(row.sizes)} flats (cap {cap})")
        row.predicted = dict(instance.predicted)
        row.count = count_flags_dp(instance.family)
        results, primary = bounds_for(instance)
    except (CapExceeded, GenericityFailure) as exc:
        row.skipped = True
        row.note = str(exc)
        row.wall_time = time.perf_counter() - started
        log_event('WARNING', Category.EXPERIMENT, 'schedule point skipped', target=logger,
                  index=index, kind=kind, reason=str(exc))
        return row

    row.bounds = {bound_id: value.value for bound_id, value in results.items()}
    chosen = results[primary]
    row.primary_bound = primary
    row.dominant_term = chosen.dominant_term
    row.dominant_value = chosen.dominant_value
    if chosen.dominant_value > 0:
        row.measured_constant = row.count / chosen.dominant_value
    row.wall_time = time.perf_counter() - started
    log_event('INFO', Category.EXPERIMENT, 'schedule point done', target=logger,
              index=index, kind=kind, sizes=row.sizes, count=row.count,
              constant=f'{row.measured_constant:.4g}', seconds=f'{row.wall_time:.2f}')
    return row


def _run_point_args(args: tuple) -> ExperimentRow:
    return run_point(*args)


@log_exceptions(Category.EXPERIMENT)
def run_experiment(
    kind: str,
    schedule: Sequence[dict],
    seed: int = 0,
    workers: Optional[int] = None,
    cap: Optional[int] = None,
) -> list[ExperimentRow]:
    """Rows come back ordered by schedule index; point i uses seed + i."""
    if not schedule:
        raise FlagforgeError("an experiment needs at least one schedule point")
    workers = worker_count() if workers is None else max(1, workers)
    cap = experiment_cap() if cap is None else cap
    jobs = [(kind, dict(point), seed + index, index, cap) for index, point in enumerate(schedule)]
    log_event('INFO', Category.EXPERIMENT, 'experiment started', target=logger,
              kind=kind, points=len(jobs), seed=seed, workers=workers)
    if workers == 1 or len(jobs) < 2:
        return [_run_point_args(job) for job in jobs]
    with multiprocessing.get_context("fork").Pool(processes=min(workers, len(jobs))) as pool:
        return pool.map(_run_point_args, jobs)


# --- Exponent fitting ------------------------------------------------------------------


@dataclass(frozen=True)
class FitResult:
    slope: float
    intercept: float
    r_squared: float
    points: int


Expression = Union[str, Callable[[ExperimentRow], float]]


def resolve(row: ExperimentRow, expression: Expression) -> Optional[float]:
    """
    Value of an expression on a row: "count", "flats", "size:<i>", "param:<name>",
    "predicted:<name>", "bound:<id>", a bare parameter name, or a callable.
    """
    if callable(expression):
        return expression(row)
    if expression == "count":
        return None if row.count is None else float(row.count)
    if expression == "flats":
        return float(sum(row.sizes)) if row.sizes else None
    prefix, _, name = expression.partition(":")
    if not name:
        prefix, name = "param", expression
    if prefix == "size":
        index = int(name)
        return float(row.sizes[index]) if index < len(row.sizes) else None
    source = {"param": row.parameters, "predicted": row.predicted, "bound": row.bounds}.get(prefix)
    if source is None:
        raise FitError(f"unknown expression {expression!r}")
    value = source.get(name)
    return None if value is None else float(value)


def fit_exponent(rows: Iterable[ExperimentRow], x: Expression, y: Expression = "count") -> FitResult:
    """Least-squares line through (log x, log y) over the non-skipped rows with positive values."""
    pairs = []
    for row in rows:
        if row.skipped:
            continue
        xv, yv = resolve(row, x), resolve(row, y)
        if xv is not None and yv is not None and xv > 0 and yv > 0:
            pairs.append((xv, yv))
    if len({xv for xv, _ in pairs}) < 2:
        raise FitError(f"need at least two distinct x values, got {len(pairs)} usable rows")

    log_x = np.log([xv for xv, _ in pairs])
    log_y = np.log([yv for _, yv in pairs])
    slope, intercept = np.polyfit(log_x, log_y, 1)
    residual = log_y - (slope * log_x + intercept)
    total = float(np.sum((log_y - log_y.mean()) ** 2))
    r_squared = 1.0 if total == 0 else max(0.0, 1.0 - float(np.sum(residual ** 2)) / total)
    return FitResult(float(slope), float(intercept), min(1.0, r_squared), len(pairs))


# --- Self-checks ----------------------------------------------------------------------------


@dataclass
class SuiteResult:
    name: str
    checked: int = 0
    failures: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures

    def fail(self, message: str):
        if len(self.failures) < 20:
            self.failures.append(message)
        else:
            self.failures[-1] = f"... and more ({message})"


@dataclass
class VerifyReport:
    results: list[SuiteResult]

    @property
    def passed(self) -> bool:
        return all(result.passed for result in self.results)


def _suite_grammar(result: SuiteResult, instances: int, seed: int, **_):
    for length in range(1, 11):
        result.checked += 1
        generated = {t.code for t in valid_exponent_tuples(length)}
        filtered = {t.code for t in tuples_by_conditions(length)}
        if generated != filtered:
            result.fail(f"length {length}: grammar and conditions disagree on {sorted(generated ^ filtered)}")
        for code in generated:
            if ExponentTuple.from_code(code).reversed().code not in generated:
                result.fail(f"length {length}: reversal of {code} is not admissible")


def _random_oracle_family(rng: np.random.Generator, seed: int) -> LayeredFamily:
    ambient = int(rng.integers(2, 5))
    top = int(rng.integers(2, min(ambient, 3) + 2))
    dims = sorted(int(x) for x in rng.choice(ambient + 1, size=min(top, ambient + 1), replace=False))
    return random_family(ambient, dims, int(rng.integers(1, 9)), seed).family


def _suite_oracle(result: SuiteResult, instances: int, seed: int, predicate=None, **_):
    rng = np.random.default_rng(seed)
    for n in range(instances):
        family = _random_oracle_family(rng, seed + n)
        result.checked += 1
        fast = count_flags_dp(family)
        slow = count_flags_bruteforce(family, predicate=predicate) if predicate else count_flags_bruteforce(family)
        if fast != slow:
            result.fail(f"instance {n} dims {family.dims} sizes {family.sizes}: dp {fast} != brute force {slow}")


def _random_split_family(rng: np.random.Generator, ambient: int, seed: int) -> LayeredFamily:
    levels = int(rng.integers(3, ambient + 2))
    dims = sorted(int(x) for x in rng.choice(ambient + 1, size=levels, replace=False))
    return random_family(ambient, dims, int(rng.integers(2, 10)), seed).family


def _suite_eqsum(result: SuiteResult, instances: int, seed: int, **_):
    """Alternates Q^3 and Q^4 families with at least three levels."""
    rng = np.random.default_rng(seed)
    for n in range(instances):
        family = _random_split_family(rng, 3 + n % 2, seed + n)
        total = count_flags_dp(family)
        for index in range(1, len(family) - 1):
            result.checked += 1
            parts = degree_split(family, index)
            pieces = sum(count_flags_dp(family.replace_level(index, part)) for part in parts)
            if pieces != total:
                result.fail(f"instance {n} level {index}: split sums to {pieces}, expected {total}")


def _random_incidence_family_3d(rng: np.random.Generator, seed: int) -> LayeredFamily:
    return random_family(3, (0, 1, 2), int(rng.integers(2, 10)), seed).family


def _suite_duality(result: SuiteResult, instances: int, seed: int, **_):
    rng = np.random.default_rng(seed)
    for n in range(instances):
        family = _random_incidence_family_3d(rng, seed + n)
        try:
            original, dual = dualize_family(family, seed + n)
        except GenericityFailure as exc:
            result.fail(f"instance {n}: {exc}")
            continue
        rotated = [f for level in original.levels for f in level.flats]
        result.checked += 1
        if count_flags_dp(original) != count_flags_dp(dual):
            result.fail(f"instance {n}: duality changed the flag count")
        if [dualize_3d(dualize_3d(f)) for f in rotated] != rotated:
            result.fail(f"instance {n}: duality is not an involution")


def _random_direction(rng: np.random.Generator) -> tuple[int, int, int]:
    while True:
        direction = tuple(int(x) for x in rng.integers(-9, 10, size=3))
        if any(direction):
            return direction


def _suite_legendrian(result: SuiteResult, instances: int, seed: int, **_):
    rng = np.random.default_rng(seed)
    for n in range(instances):
        anchor = tuple(int(x) for x in rng.integers(-20, 21, size=3))
        direction = _random_direction(rng)
        s = int(rng.integers(1, 21))
        moved = tuple(x + s * d for x, d in zip(anchor, direction))
        result.checked += 1
        if is_legendrian(Line3(anchor, direction)) != is_legendrian(Line3(moved, direction)):
            result.fail(f"line {anchor} + t {direction}: predicate depends on the anchor")
        a, b, c = anchor
        t = int(rng.integers(-20, 21))
        if not is_legendrian(Line3.through(anchor, (1, t, t * a - b))):
            result.fail(f"line through {anchor} with slope {t} should be Legendrian")

    for n in range(max(1, instances // 5)):
        u, v, w = (int(x) for x in rng.integers(-20, 21, size=3))
        plane = Plane3.from_graph(u, v, w)
        centre = legendrian_point(plane)
        result.checked += 1
        if not plane.contains_point(centre) or legendrian_plane(centre) != plane:
            result.fail(f"Legendrian point {centre} does not match the plane {plane}")
            continue
        for _ in range(20):
            dx, dy = (int(x) for x in rng.integers(-9, 10, size=2))
            if dx == 0 and dy == 0:
                dx = 1
            if not is_legendrian(Line3.through(centre, (dx, dy, u * dx + v * dy))):
                result.fail(f"in-plane line through the Legendrian point of {plane} is not Legendrian")
        for _ in range(20):
            x, y = (int(k) for k in rng.integers(-20, 21, size=2))
            q = (x, y, u * x + v * y + w)
            if q == centre:
                continue
            line = legendrian_line_at(q, plane)
            if line is None:
                result.fail(f"no Legendrian line through {q} in {plane}")
                continue
            ends = (line.anchor, tuple(p + d for p, d in zip(line.anchor, line.direction)))
            if not all(plane.contains_point(p) for p in ends):
                result.fail(f"Legendrian line through {q} leaves the plane {plane}")
            if not contains(line.to_flat(), Flat.point(q)) or not is_legendrian(line):
                result.fail(f"legendrian_line_at({q}) fails membership or the predicate")


def _suite_section(result: SuiteResult, instances: int, seed: int, **_):
    rng = np.random.default_rng(seed)
    retried = 0
    for n in range(instances):
        ambient = int(rng.integers(4, 6))
        low = ambient - 3
        family = random_family(ambient, (low, low + 1), int(rng.integers(2, 8)), seed + n).family
        flats = list(family[0]) + list(family[1])
        result.checked += 1
        for attempt in range(max(1, genericity_retries())):
            try:
                cut = generic_section(flats, 3, seed + n + attempt)
                flat_images = generic_projection(cut, 2, seed + n + attempt)
                break
            except GenericityFailure:
                retried += attempt == 0
                continue
        else:
            result.fail(f"instance {n}: no generic section found")
            continue
        m = family.sizes[0]
        planar = LayeredFamily.build(2, [(0, flat_images[:m]), (1, flat_images[m:])])
        if count_flags_dp(planar) != count_flags_dp(family):
            result.fail(f"instance {n}: section and projection changed the count")
    if instances >= 20 and retried >= 0.05 * instances:
        result.fail(f"{retried} of {instances} seeds were not generic on the first draw")


def _suite_constructions(result: SuiteResult, instances: int, seed: int, **_):
    checks = [
        (ConstructionSpec("elekes", {"k": 2, "l": 1}), 4),
        (ConstructionSpec("elekes", {"k": 3, "l": 2}), 36),
        (ConstructionSpec("bundle", {"N": 12, "b": 3}), 36),
        (ConstructionSpec("grid", {"k": 1, "l": 1}), 0),
    ]
    for spec, expected in checks:
        result.checked += 1
        got = count_flags_dp(build(spec, seed).family)
        if got != expected:
            result.fail(f"{spec.kind} {spec.parameters}: {got} flags, expected {expected}")
    result.checked += 1
    copies = disjoint_copies(ConstructionSpec("bundle", {"N": 4, "b": 2}), 2, seed)
    if count_flags_dp(copies.family) != 16:
        result.fail("two bundle copies should carry 16 flags")
    for length in range(1, 5):
        for exponents in valid_exponent_tuples(length):
            result.checked += 1
            sizes = [4] * length
            instance = flag_lower_bound_construction(exponents, sizes, seed)
            count = count_flags_dp(instance.family)
            if count < instance.predicted["flags_lower"] or count < 1e-2 * instance.predicted["term"]:
                result.fail(f"{exponents}: {count} flags under the guaranteed {instance.predicted['flags_lower']}")


def _suite_lightlike(result: SuiteResult, instances: int, seed: int, **_):
    for n in range(max(1, instances // 10)):
        lines = lightlike_family(6, 3, seed + n)
        flats = [line.to_flat() for line in lines]
        points = {}
        for a in range(len(flats)):
            for b in range(a + 1, len(flats)):
                common = meet(flats[a], flats[b])
                if common is not None and common.dim == 0:
                    points.setdefault(common, None)
        result.checked += 1
        coplanar = max_coplanar_through_point(list(points), flats)
        if coplanar > 2:
            result.fail(f"seed {seed + n}: {coplanar} coplanar lightlike lines through one point")
    result.checked += 1
    if not all(is_legendrian(line) for line in legendrian_family(2, 2, seed)):
        result.fail("legendrian_family produced a non-Legendrian line")


SUITES: dict[str, Callable[..., None]] = {
    "grammar": _suite_grammar,
    "oracle": _suite_oracle,
    "eqsum": _suite_eqsum,
    "duality": _suite_duality,
    "legendrian": _suite_legendrian,
    "section": _suite_section,
    "constructions": _suite_constructions,
    "lightlike": _suite_lightlike,
}


def verify_suite(
    scopes: Optional[Sequence[str]] = None,
    seed: int = 0,
    instances: int = 50,
    predicate: Optional[Callable[[Flat, Flat], bool]] = None,
) -> VerifyReport:
    """
    Run the named self-checks (all by default). `predicate` replaces the containment
    test used by the brute-force oracle; a broken predicate must make "oracle" fail.
    """
    scopes = list(scopes or SUITES)
    unknown = [name for name in scopes if name not in SUITES]
    if unknown:
        raise FlagforgeError(f"unknown verify scope(s): {', '.join(unknown)}")
    results = []
    for name in scopes:
        result = SuiteResult(name)
        SUITES[name](result, instances=instances, seed=seed, predicate=predicate)
        log_event('INFO' if result.passed else 'ERROR', Category.EXPERIMENT, 'verify suite finished',
                  target=logger, suite=name, checked=result.checked, failures=len(result.failures))
        results.append(result)
    return VerifyReport(results)

