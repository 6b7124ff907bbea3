"""
Common utilities for this package: the error hierarchy,
a few type-level helpers and small integer routines shared by
the group and sequence modules.

@date: 03.10.2026
@author: Baptiste Pestourie
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum, auto
from fractions import Fraction
from math import gcd
from typing import Iterable, NewType, Sequence, TypeGuard

_logger = logging.getLogger(__name__)

DivisibilityChain = NewType("DivisibilityChain", tuple[int, ...])
Modulus = NewType("Modulus", int)


# --- Errors ---
class CharsubError(Exception):
    """
    Base exception class for charsub errors
    """


class CharsubInputError(CharsubError):
    """
    Raised when a literal or a spec file cannot be parsed.
    Optionally carries the position of the offending text.
    """

    def __init__(
        self, message: str, line: int | None = None, column: int | None = None
    ) -> None:
        self.message = message
        self.line = line
        self.column = column
        super().__init__(self.render())

    def render(self) -> str:
        match (self.line, self.column):
            case (None, _):
                return self.message
            case (line, None):
                return f"line {line}: {self.message}"
            case (line, column):
                return f"line {line}, column {column}: {self.message}"
        return self.message  # pragma: no cover


class CharsubConfigError(CharsubInputError):
    """
    Raised when running conversions for settings/parameters loading.
    """


class CharsubDomainError(CharsubError):
    """
    Raised when an operation is called outside of its domain
    (shape mismatch, violated precondition...).
    """


class CharsubBudgetError(CharsubError):
    """
    Raised when an enumeration or a search exceeds its configured cap.
    """


class DependentInputError(CharsubDomainError):
    """
    Raised when inputs expected to be independent carry an integer relation.
    """

    def __init__(self, message: str, relation: Sequence[int]) -> None:
        super().__init__(message)
        self.relation = tuple(relation)


def is_divisibility_chain(factors: Sequence[int]) -> TypeGuard[DivisibilityChain]:
    """
    Whether `factors` is a valid invariant factor list d_1 | d_2 | ... | d_r
    of positive integers. Narrows `factors` to `DivisibilityChain` for type checkers.
    """
    if any(d < 1 for d in factors):
        return False
    return all(b % a == 0 for a, b in zip(factors, factors[1:]))


def assert_divisibility_chain(factors: Sequence[int]) -> DivisibilityChain:
    if not is_divisibility_chain(factors):
        raise CharsubDomainError(
            f"Invariant factors {list(factors)} do not form a divisibility chain"
        )
    return DivisibilityChain(tuple(factors))


def assert_modulus(q: int) -> Modulus:
    if q < 1:
        raise CharsubDomainError(f"Modulus must be positive, got {q}")
    return Modulus(q)


def lcm_all(values: Iterable[int]) -> int:
    """
    Least common multiple of `values`, 1 for an empty iterable.
    """
    result = 1
    for value in values:
        value = abs(value)
        if value == 0:
            return 0
        result = result * value // gcd(result, value)
    return result


def gcd_all(values: Iterable[int]) -> int:
    result = 0
    for value in values:
        result = gcd(result, value)
    return result


def format_fraction(value: Fraction | int) -> str:
    """
    Renders a rational as a `p/q` literal (`p` alone for integers).
    """
    value = Fraction(value)
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


class VerdictKind(Enum):
    IN = auto()
    NOT_IN = auto()
    UNKNOWN = auto()

    @property
    def exit_code(self) -> int:
        match self:
            case VerdictKind.IN:
                return 0
            case VerdictKind.NOT_IN:
                return 1
            case VerdictKind.UNKNOWN:
                return 2


@dataclass(frozen=True)
class ScanBudget:
    """
    A simple counter to enforce search caps.
    Not shared between threads: every scan creates its own.
    """

    cap: int
    label: str = "search"

    def check(self, count: int) -> None:
        if count > self.cap:
            raise CharsubBudgetError(
                f"{self.label} exceeded its budget of {self.cap} steps"
            )
