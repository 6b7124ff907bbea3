"""
Unit tests for the literal parsers.

@date: 14.10.2026
@author: Baptiste Pestourie
"""

from __future__ import annotations

from fractions import Fraction

import pytest

from charsub.circle import CertifiedIrrational, canonicalize, surd
from charsub.finite_abelian import Character, FinAbGroup, GroupElement
from charsub.literals import (
    format_point,
    parse_character,
    parse_element,
    parse_fraction,
    parse_group,
    parse_integer,
    parse_omega,
    parse_point,
    parse_sequence,
    parse_tinf,
    parse_zinf,
)
from charsub.sequence_groups import BlockPattern, FiniteSupport, ZInfElem
from charsub.sequences import (
    ExplicitPrefix,
    Factorial,
    FiniteEventuallyPeriodic,
    Geometric,
    LinearRecurrence,
    Subsequence,
)
from charsub.utils import CharsubInputError

Z4 = FinAbGroup.cyclic(4)


@pytest.mark.parametrize(
    "text, expected",
    [
        ("1/3", canonicalize(1, 3)),
        ("4/3", canonicalize(1, 3)),
        ("-1/4", canonicalize(3, 4)),
        ("0", canonicalize(0, 1)),
        ("2", canonicalize(0, 1)),
        (" 2 / 6 ", canonicalize(1, 3)),
        ("surd(0,1,2,1)", surd(0, 1, 2, 1)),
        ("surd(1, 1, 4, 2)", canonicalize(1, 2)),
    ],
)
def test_parse_point(text: str, expected: object) -> None:
    assert parse_point(text) == expected


def test_surd_is_irrational() -> None:
    point = parse_point("surd(1,3,8,4)")
    assert isinstance(point, CertifiedIrrational)
    assert format_point(point) == str(point.descriptor)
    assert parse_point(format_point(point)) == point


def test_fraction_and_integer() -> None:
    assert parse_fraction("6/4") == Fraction(3, 2)
    assert parse_fraction("-3") == Fraction(-3)
    assert parse_integer("-12") == -12
    with pytest.raises(CharsubInputError):
        parse_integer("1/2")


@pytest.mark.parametrize(
    "text, factors",
    [("Z4", (4,)), ("Z2 x Z4 x Z8", (2, 4, 8)), ("Z1", ()), ("Z1 x Z6", (6,))],
)
def test_parse_group(text: str, factors: tuple[int, ...]) -> None:
    group = parse_group(text)
    assert group.invariant_factors == factors
    assert parse_group(str(group)) == group


def test_group_must_be_a_chain() -> None:
    with pytest.raises(CharsubInputError, match="divisibility chain"):
        parse_group("Z4 x Z2")


def test_elements_and_characters() -> None:
    group = parse_group("Z2 x Z4")
    assert parse_element("(1, 3)", group) == GroupElement.of(group, (1, 3))
    assert parse_character("(0,5)", group) == Character.of(group, (0, 1))
    assert parse_element("3", Z4) == GroupElement.of(Z4, (3,))
    with pytest.raises(CharsubInputError):
        parse_element("3", group)


@pytest.mark.parametrize(
    "text, expected",
    [
        ("geometric(1,2)", Geometric(1, 2)),
        ("factorial()", Factorial(1)),
        ("factorial(3)", Factorial(3)),
        ("recurrence([1,1],[0,1])", LinearRecurrence((1, 1), (0, 1))),
        ("explicit([1, 2, 3])", ExplicitPrefix((1, 2, 3))),
        ("subsequence(factorial(1), step=2)", Subsequence(Factorial(1), 2, 0)),
    ],
)
def test_parse_sequence(text: str, expected: object) -> None:
    sequence = parse_sequence(text)
    assert sequence == expected
    assert parse_sequence(str(sequence)) == sequence


def test_parse_finper() -> None:
    sequence = parse_sequence("finper(Z4, prefix=[1], period=[2, (3)])")
    assert isinstance(sequence, FiniteEventuallyPeriodic)
    assert sequence.group == Z4
    assert sequence.prefix == (Character.of(Z4, (1,)),)
    assert sequence.period == (Character.of(Z4, (2,)), Character.of(Z4, (3,)))
    assert parse_sequence(str(sequence)) == sequence


@pytest.mark.parametrize(
    "text",
    [
        "geometric(1)",
        "geometric(1, 2, q=3)",
        "fibonacci(1)",
        "finper(Z4, prefix=[1])",
        "subsequence(geometric(1,2), stride=2)",
        "explicit(1/2)",
    ],
)
def test_invalid_sequences(text: str) -> None:
    with pytest.raises(CharsubInputError):
        parse_sequence(text)


def test_parse_zinf() -> None:
    element = parse_zinf("zinf{1: 2, 5..9: -1}")
    assert element == ZInfElem.from_mapping({1: 2}) + ZInfElem.indicator(5, 9, -1)
    assert str(element) == "zinf{1: 2, 5..9: -1}"
    assert parse_zinf("zinf{}").is_zero
    assert parse_zinf("zinf{3: 0}").is_zero
    with pytest.raises(CharsubInputError):
        parse_zinf("zinf{0: 1}")


def test_parse_tinf() -> None:
    element = parse_tinf("tinf{3: 1/6, 1: surd(0,1,2,1), 7: 0}")
    assert isinstance(element, FiniteSupport)
    assert [position for position, _ in element.entries] == [1, 3]
    assert element.coordinate(3) == canonicalize(1, 6)


def test_parse_block() -> None:
    element = parse_tinf("block(rule=harmonic, C=3)")
    assert isinstance(element, BlockPattern)
    assert element.entry(2) == (2, Fraction(1, 6))
    assert str(element) == "block(rule=harmonic, C=3)"
    assert parse_tinf("block(rule=constant, value=1/3)").entry(5) == (5, Fraction(1, 3))
    with pytest.raises(CharsubInputError, match="Unknown block rule"):
        parse_tinf("block(rule=cubic)")
    with pytest.raises(CharsubInputError):
        parse_tinf("block(rule=harmonic, D=3)")


def test_parse_omega() -> None:
    assert str(parse_omega("omega(rule=anchored)")) == "omega(rule=anchored)"
    terms = parse_omega("[zinf{1: 1}, zinf{1..2: 1}]")
    assert terms == (ZInfElem.unit(1), ZInfElem.indicator(1, 2))
    with pytest.raises(CharsubInputError, match="Unknown ω rule"):
        parse_omega("omega(rule=spiral)")


@pytest.mark.parametrize(
    "text, column",
    [
        ("geometric(1,2", 14),
        ("geometric(1;2)", 12),
        ("1/3 4", 5),
        ("surd(0,1,2,)", 12),
        ("1/0", 1),
        ("", 1),
    ],
)
def test_error_columns(text: str, column: int) -> None:
    with pytest.raises(CharsubInputError) as exc_info:
        parse_sequence(text) if text.startswith("geometric") else parse_point(text)
    assert exc_info.value.column == column


def test_format_point() -> None:
    assert format_point(canonicalize(0, 1)) == "0"
    assert format_point(canonicalize(2, 6)) == "1/3"
