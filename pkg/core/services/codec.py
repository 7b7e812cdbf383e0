"""
Flagforge — File formats.

Families are JSON: {"ambient_dim": d, "levels": [{"dim": k, "flats": [flat, ...]}]} and every
flat is an object {"ambient_dim": d, "dim": k, "basis": [["p/q", ...], ...]} holding its
canonical basis with entries written as "numerator/denominator".
Reports are UTF-8 CSV with a header row and LF line endings; big integers are
written as decimal strings.
"""

from __future__ import annotations

import csv
import json
import math
from fractions import Fraction
from pathlib import Path
from typing import IO, Iterable, Sequence

from core.exceptions import InvalidFamily
from core.services.bounds import BoundValue
from core.services.counting import DegreeProfile, LayeredFamily
from core.services.geometry import Flat

FORMAT_VERSION = 1

EXPERIMENT_COLUMNS = [
    "index",
    "kind",
    "parameters",
    "seed",
    "sizes",
    "count",
    "primary_bound",
    "bound_value",
    "dominant_term",
    "dominant_value",
    "measured_constant",
    "wall_time",
    "skipped",
    "note",
    "bounds",
]

BOUND_COLUMNS = ["bound_id", "inputs", "value", "dominant_term", "alternatives"]
PROFILE_COLUMNS = ["k", "l", "lines"]


def _rational(value: Fraction) -> str:
    return f"{value.numerator}/{value.denominator}"


def flat_to_dict(flat: Flat) -> dict:
    return {
        "ambient_dim": flat.ambient_dim,
        "dim": flat.dim,
        "basis": [[_rational(x) for x in row] for row in flat.basis],
    }


def flat_from_dict(data: dict, ambient_dim: int) -> Flat:
    """Re-reduce the stored basis and check it against the declared dimensions."""
    declared_ambient, declared_dim = int(data["ambient_dim"]), int(data["dim"])
    if declared_ambient != ambient_dim:
        raise InvalidFamily(f"flat declares ambient_dim {declared_ambient} inside a family in Q^{ambient_dim}")
    flat = Flat.from_rows([[Fraction(x) for x in row] for row in data["basis"]], ambient_dim)
    if flat.dim != declared_dim:
        raise InvalidFamily(f"flat declares dim {declared_dim} but its basis spans a {flat.dim}-flat")
    return flat


def family_to_dict(family: LayeredFamily, **meta) -> dict:
    data = {
        "format": FORMAT_VERSION,
        "ambient_dim": family.ambient_dim,
        "levels": [
            {"dim": level.dim, "flats": [flat_to_dict(f) for f in level.flats]}
            for level in family.levels
        ],
    }
    if meta:
        data["meta"] = meta
    return data


def family_from_dict(data: dict) -> LayeredFamily:
    """Rebuild a family; every basis is re-reduced, so hand-written files are accepted."""
    try:
        ambient = int(data["ambient_dim"])
        levels = []
        for level in data["levels"]:
            flats = [flat_from_dict(flat, ambient) for flat in level["flats"]]
            levels.append((int(level["dim"]), flats))
    except (KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
        raise InvalidFamily(f"malformed family file: {exc}") from exc
    return LayeredFamily.build(ambient, levels)


def dump_family(family: LayeredFamily, path: Path | str, **meta) -> Path:
    path = Path(path)
    path.write_text(json.dumps(family_to_dict(family, **meta)), encoding="utf-8")
    return path


def load_family(path: Path | str) -> LayeredFamily:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise InvalidFamily(f"{path} is not valid JSON: {exc}") from exc
    return family_from_dict(data)


def dump_predicted(predicted: dict, path: Path | str, **meta) -> Path:
    path = Path(path)
    payload = {key: str(value) if isinstance(value, int) else value for key, value in predicted.items()}
    payload.update(meta)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True, default=str), encoding="utf-8")
    return path


def _pairs(mapping: dict) -> str:
    return ";".join(f"{key}={_plain(value)}" for key, value in mapping.items())


def _plain(value) -> str:
    if isinstance(value, float):
        return "nan" if math.isnan(value) else repr(value)
    if isinstance(value, (tuple, list)):
        return ",".join(_plain(v) for v in value)
    return str(value)


def _writer(stream: IO[str]):
    return csv.writer(stream, lineterminator="\n")


def write_experiment_csv(rows: Iterable, stream: IO[str], timing: bool = False) -> None:
    """wall_time stays blank unless timing is set, so reruns with one seed are byte-identical."""
    writer = _writer(stream)
    writer.writerow(EXPERIMENT_COLUMNS)
    for row in rows:
        writer.writerow(
            [
                row.index,
                row.kind,
                _pairs(row.parameters),
                row.seed,
                ";".join(str(s) for s in row.sizes),
                "" if row.count is None else str(row.count),
                row.primary_bound,
                _plain(row.bounds.get(row.primary_bound, math.nan)),
                row.dominant_term,
                _plain(row.dominant_value),
                _plain(row.measured_constant),
                f"{row.wall_time:.6f}" if timing else "",
                int(row.skipped),
                row.note,
                _pairs(row.bounds),
            ]
        )


def write_bound_csv(entries: Sequence[tuple[str, dict, BoundValue]], stream: IO[str]) -> None:
    writer = _writer(stream)
    writer.writerow(BOUND_COLUMNS)
    for bound_id, inputs, value in entries:
        writer.writerow([bound_id, _pairs(inputs), _plain(value.value), value.dominant_term, _pairs(value.alternatives)])


def write_profile_csv(profile: DegreeProfile, stream: IO[str]) -> None:
    writer = _writer(stream)
    writer.writerow(PROFILE_COLUMNS)
    for k, l, n in profile.rows():
        writer.writerow([k, l, n])


def read_experiment_csv(stream: IO[str]) -> list[dict]:
    return list(csv.DictReader(stream))
