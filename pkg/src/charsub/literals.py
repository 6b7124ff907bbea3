"""
Parsers for the literal grammar used by spec files and the CLI:

    points      1/3, 0, surd(a,b,D,c)
    groups      Z4 x Z8, Z1
    vectors     (1,2), or a bare integer on cyclic groups
    sequences   geometric(a,q), factorial(a), recurrence([c..],[u0..]),
                explicit([..]), finper(Z4, prefix=[..], period=[..]),
                subsequence(SEQ, step=s, offset=o)
    Z_0^∞       zinf{1: 2, 5..9: -1}
    T^∞         tinf{3: 1/6}, block(rule=NAME, key=value, ...)
    ω           omega(rule=NAME), [zinf{..}, zinf{..}]

Every literal is tokenized with a single regex, then read by a small
recursive descent parser into plain nodes that get interpreted last.
Errors carry the (1-based) column of the offending token.

@date: 13.10.2026
@author: Baptiste Pestourie
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

from charsub.circle import CirclePoint, ExactRational, from_fraction, surd
from charsub.finite_abelian import Character, FinAbGroup, GroupElement
from charsub.sequence_groups import (
    BLOCK_RULES,
    OMEGA_RULES,
    BlockPattern,
    FiniteSupport,
    OmegaSequence,
    TInfElem,
    ZInfElem,
)
from charsub.sequences import (
    ExplicitPrefix,
    Factorial,
    FiniteEventuallyPeriodic,
    Geometric,
    LinearRecurrence,
    SeqSpec,
    Subsequence,
)
from charsub.utils import CharsubError, CharsubInputError

_logger = logging.getLogger(__name__)

_TOKEN_REGEX = re.compile(
    r"""\s*(?:
        (?P<number>[-+]?\d+(?:\s*/\s*\d+)?)
      | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
      | (?P<range>\.\.)
      | (?P<punct>[()\[\]{},:=])
    )""",
    re.VERBOSE | re.ASCII,
)
_GROUP_FACTOR_REGEX = re.compile(r"Z(\d+)", re.ASCII)


@dataclass(frozen=True)
class _Token:
    kind: str
    text: str
    column: int


@dataclass(frozen=True)
class _Call:
    name: str
    args: tuple[object, ...]
    kwargs: dict[str, object] = field(default_factory=dict)
    column: int = 1


@dataclass(frozen=True)
class _Group:
    factors: tuple[int, ...]
    column: int


@dataclass(frozen=True)
class _Range:
    first: int
    last: int


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    position = 0
    stripped_end = len(text.rstrip())
    while position < stripped_end:
        match = _TOKEN_REGEX.match(text, position)
        if match is None or match.end() == position:
            column = len(text) - len(text[position:].lstrip()) + 1
            raise CharsubInputError(f"Unexpected character {text[column - 1]!r}", column=column)
        kind = match.lastgroup
        assert kind is not None
        tokens.append(_Token(kind, match.group(kind), match.start(kind) + 1))
        position = match.end()
    return tokens


class _Parser:
    """
    Recursive descent over the token list.
    """

    def __init__(self, text: str) -> None:
        self.text = text
        self.tokens = _tokenize(text)
        self.index = 0

    def _peek(self, offset: int = 0) -> _Token | None:
        i = self.index + offset
        return self.tokens[i] if i < len(self.tokens) else None

    def _fail(self, message: str, token: _Token | None = None) -> CharsubInputError:
        token = token if token is not None else self._peek()
        column = token.column if token is not None else len(self.text) + 1
        return CharsubInputError(message, column=column)

    def _take(self, text: str | None = None, kind: str | None = None) -> _Token:
        token = self._peek()
        if token is None:
            raise self._fail(f"Unexpected end of literal, expected {text or kind}")
        if (text is not None and token.text != text) or (kind is not None and token.kind != kind):
            raise self._fail(f"Expected {text or kind}, got {token.text!r}")
        self.index += 1
        return token

    def _accept(self, text: str) -> bool:
        token = self._peek()
        if token is not None and token.text == text:
            self.index += 1
            return True
        return False

    def parse(self) -> object:
        value = self.value()
        if self._peek() is not None:
            raise self._fail(f"Trailing input {self._peek().text!r}")  # type: ignore[union-attr]
        return value

    def value(self) -> object:
        token = self._peek()
        if token is None:
            raise self._fail("Empty literal")
        match token.kind, token.text:
            case "number", text:
                self.index += 1
                if self._accept(".."):
                    last = self._take(kind="number")
                    return _Range(_integer(text, token), _integer(last.text, last))
                try:
                    value = Fraction(text.replace(" ", ""))
                except ZeroDivisionError as exc:
                    raise self._fail("Zero denominator", token) from exc
                return value.numerator if value.denominator == 1 else value
            case "name", text if _GROUP_FACTOR_REGEX.fullmatch(text):
                return self._group()
            case "name", text:
                self.index += 1
                if self._accept("("):
                    args, kwargs = self._arguments(")")
                    return _Call(text, args, kwargs, token.column)
                if self._accept("{"):
                    return _Call(text, (self._mapping(),), {}, token.column)
                return text
            case "punct", "[":
                self.index += 1
                args, kwargs = self._arguments("]")
                if kwargs:
                    raise self._fail("Lists take no keyword entries", token)
                return list(args)
            case "punct", "(":
                self.index += 1
                args, kwargs = self._arguments(")")
                if kwargs:
                    raise self._fail("Tuples take no keyword entries", token)
                return tuple(args)
        raise self._fail(f"Unexpected {token.text!r}")

    def _group(self) -> _Group:
        first = self._take(kind="name")
        factors = [int(first.text[1:])]
        while (token := self._peek()) is not None and token.text == "x":
            self.index += 1
            factor = self._take(kind="name")
            if not _GROUP_FACTOR_REGEX.fullmatch(factor.text):
                raise self._fail(f"Expected a cyclic factor Zn, got {factor.text!r}", factor)
            factors.append(int(factor.text[1:]))
        return _Group(tuple(factors), first.column)

    def _arguments(self, closing: str) -> tuple[tuple[object, ...], dict[str, object]]:
        args: list[object] = []
        kwargs: dict[str, object] = {}
        if self._accept(closing):
            return (), kwargs
        while True:
            token, following = self._peek(), self._peek(1)
            if (
                token is not None
                and token.kind == "name"
                and following is not None
                and following.text == "="
            ):
                self.index += 2
                kwargs[token.text] = self.value()
            elif kwargs:
                raise self._fail("Positional argument after a keyword argument")
            else:
                args.append(self.value())
            if self._accept(closing):
                return tuple(args), kwargs
            self._take(",")

    def _mapping(self) -> dict[object, object]:
        mapping: dict[object, object] = {}
        if self._accept("}"):
            return mapping
        while True:
            key = self.value()
            self._take(":")
            mapping[key] = self.value()
            if self._accept("}"):
                return mapping
            self._take(",")


def _integer(text: str, token: _Token) -> int:
    value = Fraction(text.replace(" ", ""))
    if value.denominator != 1:
        raise CharsubInputError(f"Expected an integer, got {text}", column=token.column)
    return value.numerator


def _parse(text: str, interpret: Callable[[object], object], what: str) -> object:
    try:
        return interpret(_Parser(text).parse())
    except CharsubInputError:
        raise
    except CharsubError as exc:
        raise CharsubInputError(f"Invalid {what} {text!r}: {exc}", column=1) from exc
    except TypeError as exc:
        raise CharsubInputError(f"Invalid {what} {text!r}: wrong arguments", column=1) from exc


def _expect_int(node: object, what: str) -> int:
    if not isinstance(node, int) or isinstance(node, bool):
        raise CharsubInputError(f"{what} must be an integer, got {node!r}")
    return node


def _expect_ints(node: object, what: str) -> tuple[int, ...]:
    if not isinstance(node, (list, tuple)):
        raise CharsubInputError(f"{what} must be a list of integers, got {node!r}")
    return tuple(_expect_int(item, what) for item in node)


# --- Points ---
def _point(node: object) -> CirclePoint:
    match node:
        case int() | Fraction():
            return from_fraction(node)
        case _Call(name="surd", args=(a, b, radicand, c), kwargs=extra) if not extra:
            return surd(*(_expect_int(v, "surd parameters") for v in (a, b, radicand, c)))
    raise CharsubInputError(f"Not a circle point: {node!r}")


def parse_point(text: str) -> CirclePoint:
    return _parse(text, _point, "point")  # type: ignore[return-value]


def parse_fraction(text: str) -> Fraction:
    """
    A rational literal p/q, kept as is (not reduced mod 1).
    """

    def interpret(node: object) -> Fraction:
        if not isinstance(node, (int, Fraction)):
            raise CharsubInputError(f"Not a rational: {node!r}")
        return Fraction(node)

    return _parse(text, interpret, "rational")  # type: ignore[return-value]


def parse_integer(text: str) -> int:
    def interpret(node: object) -> int:
        return _expect_int(node, "The literal")

    return _parse(text, interpret, "integer")  # type: ignore[return-value]


# --- Groups and vectors ---
def _group(node: object) -> FinAbGroup:
    if not isinstance(node, _Group):
        raise CharsubInputError(f"Not a group: {node!r}")
    return FinAbGroup.from_factors(node.factors)


def parse_group(text: str) -> FinAbGroup:
    return _parse(text, _group, "group")  # type: ignore[return-value]


def _coords(group: FinAbGroup, node: object) -> tuple[int, ...]:
    if isinstance(node, int) and group.rank == 1:
        return (node,)
    return _expect_ints(node, f"Coordinates on {group}")


def parse_element(text: str, group: FinAbGroup) -> GroupElement:
    return _parse(text, lambda node: GroupElement.of(group, _coords(group, node)), "element")  # type: ignore[return-value]


def parse_character(text: str, group: FinAbGroup) -> Character:
    return _parse(text, lambda node: Character.of(group, _coords(group, node)), "character")  # type: ignore[return-value]


# --- Sequences ---
def _sequence(node: object) -> SeqSpec:
    match node:
        case _Call(name="geometric", args=(a, q), kwargs=extra) if not extra:
            return Geometric(_expect_int(a, "a"), _expect_int(q, "q"))
        case _Call(name="factorial", args=(a,), kwargs=extra) if not extra:
            return Factorial(_expect_int(a, "a"))
        case _Call(name="factorial", args=(), kwargs=extra) if not extra:
            return Factorial(1)
        case _Call(name="recurrence", args=(coefficients, initial), kwargs=extra) if not extra:
            return LinearRecurrence(
                _expect_ints(coefficients, "coefficients"), _expect_ints(initial, "initial terms")
            )
        case _Call(name="explicit", args=(terms,), kwargs=extra) if not extra:
            return ExplicitPrefix(_expect_ints(terms, "terms"))
        case _Call(name="finper", args=(group_node,), kwargs=kwargs):
            group = _group(group_node)
            unknown = set(kwargs) - {"prefix", "period"}
            if unknown or "period" not in kwargs:
                raise CharsubInputError("finper expects prefix=[..] and period=[..]")

            def characters(items: object) -> tuple[Character, ...]:
                if not isinstance(items, list):
                    raise CharsubInputError(f"Expected a list of characters, got {items!r}")
                return tuple(Character.of(group, _coords(group, item)) for item in items)

            return FiniteEventuallyPeriodic(
                group, characters(kwargs.get("prefix", [])), characters(kwargs["period"])
            )
        case _Call(name="subsequence", args=(base,), kwargs=kwargs):
            if set(kwargs) - {"step", "offset"}:
                raise CharsubInputError("subsequence expects step= and offset=")
            return Subsequence(
                _sequence(base),
                _expect_int(kwargs.get("step", 1), "step"),
                _expect_int(kwargs.get("offset", 0), "offset"),
            )
        case _Call(name=name):
            raise CharsubInputError(f"Unknown sequence {name!r} or wrong arguments")
    raise CharsubInputError(f"Not a sequence: {node!r}")


def parse_sequence(text: str) -> SeqSpec:
    return _parse(text, _sequence, "sequence")  # type: ignore[return-value]


# --- Sequence groups ---
def _zinf(node: object) -> ZInfElem:
    match node:
        case _Call(name="zinf", args=(dict() as mapping,)):
            result = ZInfElem()
            for key, coeff in mapping.items():
                coeff = _expect_int(coeff, "Z_0^∞ coefficients")
                match key:
                    case _Range(first=first, last=last):
                        result = result + ZInfElem.indicator(first, last, coeff) if coeff else result
                    case int():
                        result = result + ZInfElem.from_mapping({key: coeff}) if coeff else result
                    case _:
                        raise CharsubInputError(f"Invalid Z_0^∞ index {key!r}")
            return result
    raise CharsubInputError(f"Not a Z_0^∞ element: {node!r}")


def parse_zinf(text: str) -> ZInfElem:
    return _parse(text, _zinf, "Z_0^∞ element")  # type: ignore[return-value]


def _tinf(node: object) -> TInfElem:
    match node:
        case _Call(name="tinf", args=(dict() as mapping,)):
            coordinates: dict[int, CirclePoint | Fraction | int] = {}
            for key, value in mapping.items():
                coordinates[_expect_int(key, "T^∞ positions")] = _point(value)
            return FiniteSupport.of(coordinates)
        case _Call(name="block", args=(), kwargs=kwargs):
            kwargs = dict(kwargs)
            rule = kwargs.pop("rule", None)
            if rule not in BLOCK_RULES:
                raise CharsubInputError(
                    f"Unknown block rule {rule!r}, expected one of {', '.join(BLOCK_RULES)}"
                )
            return BlockPattern(BLOCK_RULES[rule](**kwargs))  # type: ignore[index]
    raise CharsubInputError(f"Not a T^∞ element: {node!r}")


def parse_tinf(text: str) -> TInfElem:
    return _parse(text, _tinf, "T^∞ element")  # type: ignore[return-value]


def _omega(node: object) -> OmegaSequence:
    match node:
        case _Call(name="omega", args=(), kwargs={"rule": str() as rule}):
            if rule not in OMEGA_RULES:
                raise CharsubInputError(
                    f"Unknown ω rule {rule!r}, expected one of {', '.join(OMEGA_RULES)}"
                )
            return OMEGA_RULES[rule]()
        case list():
            return tuple(_zinf(item) for item in node)
    raise CharsubInputError(f"Not a sequence of Z_0^∞: {node!r}")


def parse_omega(text: str) -> OmegaSequence:
    return _parse(text, _omega, "ω sequence")  # type: ignore[return-value]


def format_point(x: CirclePoint) -> str:
    """
    The literal of a point, `p/q` or `surd(a,b,D,c)`.
    """
    if isinstance(x, ExactRational):
        return "0" if x.is_zero else str(x)
    if not x.serializable:
        raise CharsubInputError(f"{x} has no literal form")
    return str(x.descriptor)

