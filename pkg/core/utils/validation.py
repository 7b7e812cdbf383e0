"""Validation helpers for command-line values."""

from __future__ import annotations

from typing import Any, Iterable

from django.core.exceptions import ValidationError


def parse_int_in_range(
    raw_value: Any,
    *,
    field_name: str,
    minimum: int,
    maximum: int | None = None,
) -> int:
    """Parse integer value and enforce inclusive numeric bounds."""
    try:
        value = int(str(raw_value).strip().replace("_", ""))
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"{field_name} must be a valid integer.") from exc
    if value < minimum or (maximum is not None and value > maximum):
        upper = "infinity" if maximum is None else maximum
        raise ValidationError(f"{field_name} must be between {minimum} and {upper}.")
    return value


def parse_int_list(raw_value: Any, *, field_name: str, minimum: int = 0) -> list[int]:
    """'4,9,16' -> [4, 9, 16]."""
    parts = [part for part in str(raw_value or "").replace(";", ",").split(",") if part.strip()]
    if not parts:
        raise ValidationError(f"{field_name} must be a comma-separated list of integers.")
    return [parse_int_in_range(part, field_name=field_name, minimum=minimum) for part in parts]


def parse_float(raw_value: Any, *, field_name: str, minimum: float = 0.0) -> float:
    try:
        value = float(str(raw_value).strip())
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"{field_name} must be a number.") from exc
    if value < minimum:
        raise ValidationError(f"{field_name} must be at least {minimum}.")
    return value


def parse_assignments(items: Iterable[str], *, field_name: str = "parameter") -> dict[str, str]:
    """['k=4', 'l=2'] -> {'k': '4', 'l': '2'}; a later key overrides an earlier one."""
    parsed: dict[str, str] = {}
    for item in items or ():
        key, sep, value = str(item).partition("=")
        key = key.strip()
        if not sep or not key:
            raise ValidationError(f"{field_name} {item!r} must look like name=value.")
        parsed[key] = value.strip()
    return parsed
