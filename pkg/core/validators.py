"""
Flagforge — Validators for construction parameters and bound arguments.

Raw command-line strings go in; typed values come out, or ValidationError.
"""

from django.core.exceptions import ValidationError

from core.exceptions import InvalidTuple
from core.services.bounds import BOUNDS, ExponentTuple, ensure_valid
from core.utils.validation import parse_assignments, parse_float, parse_int_in_range, parse_int_list

# Parameter name -> parser, per construction kind.
_INT = "int"
_INTS = "ints"
_TUPLE = "tuple"
_KIND = "kind"

CONSTRUCTION_PARAMETERS = {
    "elekes": {"k": _INT, "l": _INT},
    "grid": {"k": _INT, "l": _INT},
    "bundle": {"N": _INT, "b": _INT},
    "lift": {"k": _INT, "l": _INT, "d": _INT, "i": _INT},
    "flag-lower-bound": {"tuple": _TUPLE, "sizes": _INTS},
    "lightlike": {"directions": _INT, "lines_per_direction": _INT},
    "legendrian": {"g": _INT, "r": _INT},
    "random": {"d": _INT, "dims": _INTS, "size": _INT},
    "copies": {"of": _KIND, "copies": _INT, "separation": _INT},
}

# Parameters that may be zero rather than strictly positive.
_NON_NEGATIVE = {("lift", "i")}


def parse_exponent_tuple(raw: str) -> ExponentTuple:
    try:
        return ensure_valid(ExponentTuple.parse(raw))
    except InvalidTuple as exc:
        raise ValidationError(str(exc)) from exc


def _parse_value(kind: str, name: str, parser: str, raw: str):
    if parser == _INT:
        minimum = 0 if (kind, name) in _NON_NEGATIVE else 1
        return parse_int_in_range(raw, field_name=name, minimum=minimum)
    if parser == _INTS:
        return tuple(parse_int_list(raw, field_name=name, minimum=0 if name == "dims" else 1))
    if parser == _TUPLE:
        return str(parse_exponent_tuple(raw))
    if raw not in CONSTRUCTION_PARAMETERS or raw == "copies":
        raise ValidationError(f"{name} must name a construction other than 'copies'.")
    return raw


def validate_construction_parameters(kind: str, raw: dict[str, str]) -> dict:
    """
    Type the parameters of one construction. For kind 'copies' the keys of the
    wrapped construction ('of') are accepted too.
    """
    if kind not in CONSTRUCTION_PARAMETERS:
        raise ValidationError(f"Unknown construction {kind!r}; choose from {', '.join(sorted(CONSTRUCTION_PARAMETERS))}.")
    allowed = dict(CONSTRUCTION_PARAMETERS[kind])
    if kind == "copies":
        inner = raw.get("of", "")
        if inner not in CONSTRUCTION_PARAMETERS or inner == "copies":
            raise ValidationError("copies needs of=<construction>.")
        allowed.update(CONSTRUCTION_PARAMETERS[inner])
    unknown = sorted(set(raw) - set(allowed))
    if unknown:
        raise ValidationError(f"{kind} does not take {', '.join(unknown)}.")
    required = [name for name in allowed if name != "separation"]
    missing = [name for name in required if name not in raw]
    if missing:
        raise ValidationError(f"{kind} needs {', '.join(missing)}.")
    return {
        name: _parse_value(kind, name, allowed[name], value)
        for name, value in raw.items()
    }


def parse_construction_arguments(kind: str, items) -> dict:
    return validate_construction_parameters(kind, parse_assignments(items))


def validate_bound_arguments(bound_id: str, raw: dict[str, str]) -> dict:
    if bound_id not in BOUNDS:
        raise ValidationError(f"Unknown bound {bound_id!r}; choose from {', '.join(sorted(BOUNDS))}.")
    _, names = BOUNDS[bound_id]
    missing = [name for name in names if name not in raw]
    if missing:
        raise ValidationError(f"{bound_id} needs {', '.join(missing)}.")
    arguments = {}
    for name in names:
        if name == "sizes":
            arguments[name] = [float(v) for v in parse_int_list(raw[name], field_name=name)]
        elif name == "sigma":
            arguments[name] = parse_int_list(raw[name], field_name=name)
        else:
            arguments[name] = parse_float(raw[name], field_name=name)
    return arguments
