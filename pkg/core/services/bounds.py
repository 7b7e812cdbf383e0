"""
Flagforge — Incidence and flag bounds.

Every bound evaluates to a BoundValue: the float value, the name of its largest
term, and the individual terms. Logarithms are natural logs of max(b, 2).
"""

from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Iterable, Sequence

from core.exceptions import InvalidTuple


class Exponent(Enum):
    ZERO = Fraction(0)
    TWO_THIRDS = Fraction(2, 3)
    ONE = Fraction(1)

    @property
    def code(self) -> str:
        return _CODES[self]

    @property
    def label(self) -> str:
        return {Exponent.ZERO: "0", Exponent.TWO_THIRDS: "2/3", Exponent.ONE: "1"}[self]

    @classmethod
    def parse(cls, raw: str) -> "Exponent":
        try:
            value = Fraction(raw.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise InvalidTuple(f"not an exponent: {raw!r}") from exc
        for member in cls:
            if member.value == value:
                return member
        raise InvalidTuple(f"exponent {raw!r} is not one of 0, 2/3, 1")


_CODES = {Exponent.ZERO: "0", Exponent.TWO_THIRDS: "t", Exponent.ONE: "1"}
_FROM_CODE = {code: member for member, code in _CODES.items()}

# One regex per admissibility condition, matched against the tuple's code string.
_THREE_NONZERO = re.compile(r"[t1]{3}")
_ONE_NEXT_TO_NONZERO = re.compile(r"1[t1]|[t1]1")
_UNPAIRED_TWO_THIRDS = re.compile(r"(?<!t)t(?!t)")
_UNSUPPORTED_ZERO = re.compile(r"(?<![t1])0(?![t1])")


@dataclass(frozen=True)
class ExponentTuple:
    entries: tuple[Exponent, ...]

    @classmethod
    def parse(cls, raw: str) -> "ExponentTuple":
        """'2/3,2/3,0' or '(1, 0, 1)'."""
        body = raw.strip().strip("()")
        if not body:
            raise InvalidTuple("empty exponent tuple")
        return cls(tuple(Exponent.parse(part) for part in body.split(",")))

    @classmethod
    def from_code(cls, code: str) -> "ExponentTuple":
        return cls(tuple(_FROM_CODE[c] for c in code))

    @property
    def code(self) -> str:
        return "".join(e.code for e in self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __getitem__(self, index: int) -> Exponent:
        return self.entries[index]

    def reversed(self) -> "ExponentTuple":
        return ExponentTuple(self.entries[::-1])

    def __str__(self) -> str:
        return "(" + ",".join(e.label for e in self.entries) + ")"


def no_three_consecutive_nonzero(code: str) -> bool:
    return not _THREE_NONZERO.search(code)


def ones_isolated(code: str) -> bool:
    return not _ONE_NEXT_TO_NONZERO.search(code)


def two_thirds_paired(code: str) -> bool:
    return not _UNPAIRED_TWO_THIRDS.search(code)


def zeros_supported(code: str) -> bool:
    return not _UNSUPPORTED_ZERO.search(code)


def satisfies_conditions(candidate: ExponentTuple | str) -> bool:
    """The four admissibility conditions, checked independently of the block grammar."""
    code = candidate if isinstance(candidate, str) else candidate.code
    return (
        bool(code)
        and no_three_consecutive_nonzero(code)
        and ones_isolated(code)
        and two_thirds_paired(code)
        and zeros_supported(code)
    )


@lru_cache(maxsize=None)
def _grammar_codes(length: int) -> tuple[str, ...]:
    # Blocks "tt" / "1", separated by "0" or "00", with at most one leading and one trailing "0".
    found = set()

    def extend(prefix: str):
        for block in ("tt", "1"):
            body = prefix + block
            if len(body) > length:
                continue
            for tail in ("", "0"):
                if len(body + tail) == length:
                    found.add(body + tail)
            for separator in ("0", "00"):
                if len(body + separator) < length:
                    extend(body + separator)

    extend("")
    extend("0")
    return tuple(sorted(found))


def valid_exponent_tuples(length: int) -> tuple[ExponentTuple, ...]:
    """All admissible exponent tuples of the given length, generated from the block grammar."""
    if length < 1:
        raise InvalidTuple("exponent tuples have length at least 1")
    return tuple(ExponentTuple.from_code(code) for code in _grammar_codes(length))


def tuples_by_conditions(length: int) -> tuple[ExponentTuple, ...]:
    """Exhaustive filter of {0, 2/3, 1}^length through satisfies_conditions."""
    codes = ("".join(chars) for chars in itertools.product("0t1", repeat=length))
    return tuple(ExponentTuple.from_code(code) for code in sorted(c for c in codes if satisfies_conditions(c)))


def ensure_valid(candidate: ExponentTuple) -> ExponentTuple:
    if not satisfies_conditions(candidate):
        raise InvalidTuple(f"{candidate} violates the admissibility conditions")
    return candidate


@dataclass(frozen=True)
class BoundValue:
    value: float
    dominant_term: str
    terms: dict[str, float] = field(default_factory=dict)
    alternatives: dict[str, float] = field(default_factory=dict)

    @property
    def dominant_value(self) -> float:
        return self.terms.get(self.dominant_term, self.value)


def _sum_of_terms(terms: dict[str, float]) -> BoundValue:
    dominant = max(terms, key=lambda name: terms[name])
    return BoundValue(math.fsum(terms.values()), dominant, terms)


def _log(b: float) -> float:
    return math.log(max(b, 2))


def _check_sizes(*sizes: float):
    for size in sizes:
        if size < 0:
            raise ValueError(f"sizes must be non-negative, got {size}")


def st_bound(m: float, n: float) -> BoundValue:
    """Point-line incidences in the plane."""
    _check_sizes(m, n)
    return _sum_of_terms({"m^2/3 n^2/3": m ** (2 / 3) * n ** (2 / 3), "m": float(m), "n": float(n)})


def gk_bound(m: float, n: float, b: float) -> BoundValue:
    """Points and lines in R^3 with at most b lines in a common plane."""
    _check_sizes(m, n, b)
    return _sum_of_terms(
        {
            "m^1/2 n^3/4": m ** 0.5 * n ** 0.75,
            "m^2/3 n^1/3 b^1/3": m ** (2 / 3) * n ** (1 / 3) * b ** (1 / 3),
            "m": float(m),
            "n": float(n),
        }
    )


def pl34_bound(m: float, n: float) -> BoundValue:
    """Points and lines in R^3 with at most two coplanar lines through any point."""
    _check_sizes(m, n)
    return _sum_of_terms({"m^1/2 n^3/4": m ** 0.5 * n ** 0.75, "m": float(m), "n": float(n)})


def legendrian_bound(m: float, n: float) -> BoundValue:
    """Points and non-vertical Legendrian lines in R^3; same shape as pl34_bound."""
    return pl34_bound(m, n)


def sw_log_bound(m: float, n: float) -> BoundValue:
    """Points and lightlike lines in R^3, with the logarithmic factor."""
    _check_sizes(m, n)
    return _sum_of_terms({"m^3/4 n^1/2 log m": m ** 0.75 * n ** 0.5 * _log(m), "m": float(m), "n": float(n)})


def sw_47_bound(m: float, n: float) -> BoundValue:
    """Points and lightlike lines in R^3, the m^4/7 n^5/7 form."""
    _check_sizes(m, n)
    return _sum_of_terms({"m^4/7 n^5/7": m ** (4 / 7) * n ** (5 / 7), "m": float(m), "n": float(n)})


def _tuple_term(exponents: ExponentTuple, sizes: Sequence[float]) -> float:
    return math.prod(float(size) ** float(e.value) for size, e in zip(sizes, exponents))


def flags_bound(sizes: Sequence[float]) -> BoundValue:
    """Sum over admissible exponent tuples of prod |S_i|^{a_i}."""
    if not sizes:
        raise ValueError("flags_bound needs at least one size")
    _check_sizes(*sizes)
    return _sum_of_terms({str(t): _tuple_term(t, sizes) for t in valid_exponent_tuples(len(sizes))})


def regime_threshold(p: float, l: float, s: float) -> float:
    """((p^2 + s^2) / l)^{1/4}: below it the b^2 |L| branch is the smaller one."""
    _check_sizes(p, l, s)
    if l == 0:
        return math.inf
    return ((p * p + s * s) / l) ** 0.25


def flags3d_restricted_bound(p: float, l: float, s: float, b: float) -> BoundValue:
    """
    Flags (point, line, plane) in R^3 when every line holds at most b points and
    lies in at most b planes. The value is the smaller of two branches; for
    p = l = s = N the symmetric form min{b^2 N, N^{3/2} log b + b N} is used.
    """
    _check_sizes(p, l, s, b)
    small = {"b^2 |L|": b * b * l}
    if p == l == s:
        large = {"N^3/2 log b": l ** 1.5 * _log(b), "b N": b * l}
    else:
        large = {
            "(|P|+|S|) |L|^1/2": (p + s) * l ** 0.5,
            "(|P| |S|^1/2 + |S| |P|^1/2) log b": (p * s ** 0.5 + s * p ** 0.5) * _log(b),
            "(|P|+|S|) b": (p + s) * b,
        }
    small_value = math.fsum(small.values())
    large_value = math.fsum(large.values())
    alternatives = {"b^2 |L|": small_value, "incidence branch": large_value, "threshold": regime_threshold(p, l, s)}
    terms = small if small_value <= large_value else large
    dominant = max(terms, key=lambda name: terms[name])
    return BoundValue(min(small_value, large_value), dominant, terms, alternatives)


def maximal_runs(sigma: Sequence[int]) -> list[list[int]]:
    """Split a strictly increasing sequence into maximal runs of consecutive integers."""
    runs: list[list[int]] = []
    for position, value in enumerate(sigma):
        if position and value <= sigma[position - 1]:
            raise ValueError("dimension sequence must be strictly increasing")
        if runs and value == runs[-1][-1] + 1:
            runs[-1].append(value)
        else:
            runs.append([value])
    return runs


def partial_flags_bound(sigma: Sequence[int], sizes: Sequence[float]) -> BoundValue:
    """Product of flags_bound over the maximal runs of consecutive dimensions."""
    if len(sigma) != len(sizes) or not sigma:
        raise ValueError("sigma and sizes must be nonempty and of equal length")
    value = 1.0
    dominant = []
    position = 0
    for run in maximal_runs(sigma):
        part = flags_bound(sizes[position:position + len(run)])
        value *= part.value
        dominant.append(part.dominant_term)
        position += len(run)
    return BoundValue(value, " * ".join(dominant), {" * ".join(dominant): value})


BoundFunction = Callable[..., BoundValue]

BOUNDS: dict[str, tuple[BoundFunction, tuple[str, ...]]] = {
    "st": (st_bound, ("m", "n")),
    "gk": (gk_bound, ("m", "n", "b")),
    "pl34": (pl34_bound, ("m", "n")),
    "legendrian": (legendrian_bound, ("m", "n")),
    "sw-log": (sw_log_bound, ("m", "n")),
    "sw-47": (sw_47_bound, ("m", "n")),
    "flags": (flags_bound, ("sizes",)),
    "flags3d-restricted": (flags3d_restricted_bound, ("p", "l", "s", "b")),
    "partial-flags": (partial_flags_bound, ("sigma", "sizes")),
}


def evaluate(bound_id: str, arguments: dict) -> BoundValue:
    """Evaluate a registered bound from keyword arguments (used by the CLI and experiments)."""
    if bound_id not in BOUNDS:
        raise KeyError(f"unknown bound {bound_id!r}; choose from {', '.join(sorted(BOUNDS))}")
    function, names = BOUNDS[bound_id]
    missing = [name for name in names if name not in arguments]
    if missing:
        raise KeyError(f"bound {bound_id!r} needs {', '.join(missing)}")
    return function(*(arguments[name] for name in names))
