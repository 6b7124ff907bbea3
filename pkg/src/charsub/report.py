"""
JSON reports.
Every result dataclass goes through the `to_json` single dispatch
serializer; rationals are written as `p/q` literals so that reports can
be fed back to the parsers.

@date: 14.10.2026
@author: Baptiste Pestourie
"""

from __future__ import annotations

import dataclasses
import json
import logging
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from functools import singledispatch
from importlib.metadata import PackageNotFoundError, version
from typing import Any

from charsub.circle import CertifiedIrrational, Enclosure, ExactRational
from charsub.finite_abelian import FinAbGroup, Subgroup, _Vector
from charsub.sequence_groups import BlockPattern, FiniteSupport, OmegaRule, ZInfElem
from charsub.sequences import (
    ExplicitPrefix,
    Factorial,
    FiniteEventuallyPeriodic,
    Geometric,
    LinearRecurrence,
    Subsequence,
)
from charsub.utils import format_fraction
from charsub.verdicts import In, NotIn, Unknown

_logger = logging.getLogger(__name__)

SCHEMA_VERSION: str = "1"
# subgroups up to this order list their elements
MAX_LISTED_ELEMENTS: int = 256

type JsonValue = None | bool | int | str | list[JsonValue] | dict[str, JsonValue]


def tool_version() -> str:
    try:
        return version("charsub")
    except PackageNotFoundError:
        return "0.0.0+unknown"


@singledispatch
def to_json(obj: object) -> JsonValue:
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {
            f.name: to_json(getattr(obj, f.name))
            for f in dataclasses.fields(obj)
            if not callable(getattr(obj, f.name))
        }
    _logger.debug("No JSON form for %r, falling back to str", obj)
    return str(obj)


@to_json.register(type(None))
@to_json.register(bool)
@to_json.register(int)
@to_json.register(str)
def _(obj: None | bool | int | str) -> JsonValue:
    return obj


@to_json.register
def _(obj: Fraction) -> JsonValue:
    return format_fraction(obj)


@to_json.register
def _(obj: Enum) -> JsonValue:
    return obj.name


@to_json.register(list)
@to_json.register(tuple)
def _(obj: list[Any] | tuple[Any, ...]) -> JsonValue:
    return [to_json(item) for item in obj]


@to_json.register(set)
@to_json.register(frozenset)
def _(obj: set[Any] | frozenset[Any]) -> JsonValue:
    items = [to_json(item) for item in obj]
    return sorted(items, key=lambda item: json.dumps(item, sort_keys=True))


@to_json.register
def _(obj: dict) -> JsonValue:  # type: ignore[type-arg]
    return {str(key): to_json(value) for key, value in obj.items()}


@to_json.register
def _(obj: ExactRational) -> JsonValue:
    return "0" if obj.is_zero else str(obj)


@to_json.register
def _(obj: CertifiedIrrational) -> JsonValue:
    return str(obj)


@to_json.register
def _(obj: Enclosure) -> JsonValue:
    return {
        "lo": format_fraction(obj.lo),
        "hi": format_fraction(obj.hi),
        "symbol": None if obj.symbol is None else str(obj.symbol),
    }


@to_json.register
def _(obj: _Vector) -> JsonValue:
    return list(obj.coords)


@to_json.register
def _(obj: FinAbGroup) -> JsonValue:
    return str(obj)


@to_json.register
def _(obj: Subgroup) -> JsonValue:
    data: dict[str, JsonValue] = {
        "ambient": str(obj.ambient),
        "dual": obj.dual,
        "order": obj.order,
        "basis": [list(row) for row in obj.basis],
    }
    if obj.order <= MAX_LISTED_ELEMENTS:
        data["elements"] = sorted(list(x.coords) for x in obj.elements())
    return data


@to_json.register(ZInfElem)
@to_json.register(FiniteSupport)
@to_json.register(BlockPattern)
@to_json.register(OmegaRule)
@to_json.register(ExplicitPrefix)
@to_json.register(Geometric)
@to_json.register(Factorial)
@to_json.register(LinearRecurrence)
@to_json.register(FiniteEventuallyPeriodic)
@to_json.register(Subsequence)
def _(obj: object) -> JsonValue:
    # these have a literal form
    return str(obj)


@to_json.register(In)
@to_json.register(NotIn)
@to_json.register(Unknown)
def _(obj: In | NotIn | Unknown) -> JsonValue:
    data = {f.name: to_json(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    return {"kind": type(obj).__name__, **data}  # type: ignore[dict-item]


@dataclass
class Report:
    """
    The outcome of one command. `asserted` lists the facts taken on
    trust from the input rather than verified.
    """

    command: str
    inputs: dict[str, Any]
    result: Any
    exit_code: int
    asserted: list[str] = field(default_factory=list)
    trace: list[str] = field(default_factory=list)
    elapsed: float = 0.0

    def to_dict(self) -> dict[str, JsonValue]:
        return {
            "schema_version": SCHEMA_VERSION,
            "tool_version": tool_version(),
            "command": self.command,
            "input": to_json(self.inputs),
            "result": to_json(self.result),
            "exit_code": self.exit_code,
            "asserted": list(self.asserted),
            "trace": list(self.trace),
            "timing": {"seconds": round(self.elapsed, 6)},  # type: ignore[dict-item]
        }

    def render(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2, ensure_ascii=False)
