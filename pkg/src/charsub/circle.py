"""
Exact and certified arithmetic on the circle group T = R/Z.

Points are stored additively. Rationals are kept canonical
(0 <= p < q, gcd(p, q) = 1). Irrationals are represented by their
floor function m -> floor(x * m), which gives nested dyadic
enclosures of any width and composes exactly under integer scaling,
rational shifts and negation. Quadratic surds (a + b*sqrt(D)) / c are
the only built-in irrational descriptor; they also compose symbolically.

The multiplicative picture only shows up through `chord_distance`,
i.e. |1 - exp(2*pi*i*t)| = 2*sin(pi*||t||).

@date: 03.10.2026
@author: Baptiste Pestourie
"""

from __future__ import annotations

import logging
import threading
from contextlib import contextmanager
from dataclasses import dataclass, field
from fractions import Fraction
from functools import partial
from math import gcd, isqrt
from typing import Callable, Generator, TypeGuard

import sympy as sp
from mpmath import iv, libmp

from charsub.utils import CharsubBudgetError, CharsubDomainError, format_fraction

_logger = logging.getLogger(__name__)

# chord enclosures default to a width of 2^-30
DEFAULT_PRECISION: int = 30
_MAX_SUM_REFINEMENTS: int = 256

type FloorFunction = Callable[[int], int]


@dataclass(frozen=True)
class Enclosure:
    """
    A closed rational interval [lo, hi].
    `symbol` optionally carries the exact value as a sympy expression
    (e.g. sqrt(2) for the chord of 1/4); it does not take part in equality.
    """

    lo: Fraction
    hi: Fraction
    symbol: sp.Expr | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        if self.lo > self.hi:
            raise CharsubDomainError(f"Empty enclosure [{self.lo}, {self.hi}]")

    @classmethod
    def exact(cls, value: Fraction | int) -> Enclosure:
        value = Fraction(value)
        return cls(value, value, sp.Rational(value.numerator, value.denominator))

    @property
    def is_exact(self) -> bool:
        return self.lo == self.hi

    @property
    def width(self) -> Fraction:
        return self.hi - self.lo

    def __add__(self, other: Enclosure) -> Enclosure:
        symbol = (
            self.symbol + other.symbol
            if self.symbol is not None and other.symbol is not None
            else None
        )
        return Enclosure(self.lo + other.lo, self.hi + other.hi, symbol)

    def scale(self, factor: Fraction | int) -> Enclosure:
        factor = Fraction(factor)
        if factor < 0:
            raise CharsubDomainError("Enclosures are only scaled by nonnegative factors")
        symbol = (
            self.symbol * sp.Rational(factor.numerator, factor.denominator)
            if self.symbol is not None
            else None
        )
        return Enclosure(self.lo * factor, self.hi * factor, symbol)

    def contains(self, value: Fraction | int) -> bool:
        return self.lo <= value <= self.hi

    def certainly_below(self, bound: Fraction | int) -> bool:
        return self.hi < bound

    def __str__(self) -> str:
        if self.is_exact:
            return format_fraction(self.lo)
        if self.symbol is not None:
            return f"{self.symbol} in [{self.lo}, {self.hi}]"
        return f"[{self.lo}, {self.hi}]"


type NormValue = Enclosure


# --- Points ---
@dataclass(frozen=True)
class ExactRational:
    """
    A rational point of T, always canonical.
    Build through `canonicalize` when the input may not be reduced.
    """

    numerator: int
    denominator: int = 1

    def __post_init__(self) -> None:
        if (
            self.denominator <= 0
            or not 0 <= self.numerator < self.denominator
            or gcd(self.numerator, self.denominator) != 1
        ):
            raise CharsubDomainError(
                f"{self.numerator}/{self.denominator} is not canonical, "
                "use canonicalize()"
            )

    @property
    def value(self) -> Fraction:
        return Fraction(self.numerator, self.denominator)

    @property
    def is_zero(self) -> bool:
        return self.numerator == 0

    def __add__(self, other: CirclePoint) -> CirclePoint:
        return add(self, other)

    def __sub__(self, other: CirclePoint) -> CirclePoint:
        return add(self, negate(other))

    def __neg__(self) -> ExactRational:
        return canonicalize(-self.numerator, self.denominator)

    def __str__(self) -> str:
        return f"{self.numerator}/{self.denominator}"


@dataclass(frozen=True)
class QuadraticSurd:
    """
    The real number (a + b*sqrt(radicand)) / c,
    normalized: radicand squarefree > 1, b != 0, c > 0,
    gcd(a, b, c) = 1 and 0 <= a < c (the point only matters mod 1).
    """

    a: int
    b: int
    radicand: int
    c: int

    @classmethod
    def normalized(cls, a: int, b: int, radicand: int, c: int) -> QuadraticSurd | Fraction:
        """
        Normalizes the given surd, returning a Fraction (mod 1)
        when the value turns out to be rational.
        """
        if c == 0:
            raise CharsubDomainError("Surd denominator must be nonzero")
        if radicand < 0:
            raise CharsubDomainError(f"Negative radicand {radicand}")
        if c < 0:
            a, b, c = -a, -b, -c
        if b == 0 or radicand == 0:
            return Fraction(a, c) % 1
        k = 2
        while k * k <= radicand:
            while radicand % (k * k) == 0:
                radicand //= k * k
                b *= k
            k += 1
        if radicand == 1:
            return Fraction(a + b, c) % 1
        g = gcd(gcd(a, b), c)
        a, b, c = a // g, b // g, c // g
        return cls(a % c, b, radicand, c)

    def floor_scaled(self, m: int) -> int:
        """
        floor(x * m) for a positive integer `m`.
        """
        root = isqrt(self.b * self.b * self.radicand * m * m)
        scaled_root = root if self.b > 0 else -root - 1
        return (self.a * m + scaled_root) // self.c

    def scaled(self, k: int) -> QuadraticSurd | Fraction:
        return QuadraticSurd.normalized(k * self.a, k * self.b, self.radicand, self.c)

    def shifted(self, shift: Fraction) -> QuadraticSurd | Fraction:
        p, q = shift.numerator, shift.denominator
        return QuadraticSurd.normalized(
            self.a * q + p * self.c, self.b * q, self.radicand, self.c * q
        )

    def plus(self, other: QuadraticSurd) -> QuadraticSurd | Fraction | None:
        """
        Symbolic sum, None when the radicands differ.
        """
        if other.radicand != self.radicand:
            return None
        return QuadraticSurd.normalized(
            self.a * other.c + other.a * self.c,
            self.b * other.c + other.b * self.c,
            self.radicand,
            self.c * other.c,
        )

    def to_sympy(self) -> sp.Expr:
        return (sp.Integer(self.a) + self.b * sp.sqrt(self.radicand)) / self.c

    def __str__(self) -> str:
        return f"surd({self.a},{self.b},{self.radicand},{self.c})"


def _negated_floor(floor_fn: FloorFunction, m: int) -> int:
    # x irrational: floor(-x*m) = -floor(x*m) - 1
    return -floor_fn(m) - 1


def _scaled_floor(floor_fn: FloorFunction, k: int, m: int) -> int:
    return floor_fn(k * m)


def _shifted_floor(floor_fn: FloorFunction, p: int, q: int, m: int) -> int:
    return (floor_fn(q * m) + p * m) // q


def _sum_floor(first: FloorFunction, second: FloorFunction, m: int) -> int:
    for bits in range(1, _MAX_SUM_REFINEMENTS):
        scale = 1 << bits
        low = first(m * scale) + second(m * scale)
        if low // scale == (low + 1) // scale:
            return low // scale
    raise CharsubBudgetError(
        "Could not separate a sum of irrationals from the integer grid, "
        "the sum may be rational"
    )


@dataclass(frozen=True, eq=False)
class CertifiedIrrational:
    """
    An irrational point of T given by its floor function m -> floor(x * m).
    Enclosures at precision k are [F/2^k, (F + 1)/2^k] reduced mod 1,
    they are nested and never collapse (the value is irrational).
    Points without a surd descriptor cannot be serialized.
    """

    floor_scaled: FloorFunction
    descriptor: QuadraticSurd | None = None
    label: str = "irrational"

    @classmethod
    def from_surd(cls, surd: QuadraticSurd) -> CertifiedIrrational:
        return cls(surd.floor_scaled, surd, str(surd))

    @property
    def serializable(self) -> bool:
        return self.descriptor is not None

    def enclosure(self, k: int) -> Enclosure:
        """
        Enclosure of the argument in [0, 1) of width 2^-k.
        """
        m = 1 << k
        lo = Fraction(self.floor_scaled(m) % m, m)
        return Enclosure(lo, lo + Fraction(1, m))

    refine = enclosure

    def __add__(self, other: CirclePoint) -> CirclePoint:
        return add(self, other)

    def __sub__(self, other: CirclePoint) -> CirclePoint:
        return add(self, negate(other))

    def __neg__(self) -> CirclePoint:
        return negate(self)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, CertifiedIrrational):
            return NotImplemented
        if self.descriptor is not None and other.descriptor is not None:
            return self.descriptor == other.descriptor
        return self is other

    def __hash__(self) -> int:
        if self.descriptor is not None:
            return hash(self.descriptor)
        return id(self)

    def __str__(self) -> str:
        return str(self.descriptor) if self.descriptor is not None else f"<{self.label}>"


type CirclePoint = ExactRational | CertifiedIrrational

ZERO = ExactRational(0, 1)


def is_rational(x: CirclePoint) -> TypeGuard[ExactRational]:
    return isinstance(x, ExactRational)


def canonicalize(numerator: int, denominator: int) -> ExactRational:
    """
    Canonical representative of numerator/denominator mod 1.

    Raises
    ------
    CharsubDomainError
        On a zero denominator.
    """
    if denominator == 0:
        raise CharsubDomainError("Zero denominator")
    value = Fraction(numerator, denominator) % 1
    return ExactRational(value.numerator, value.denominator)


def from_fraction(value: Fraction | int) -> ExactRational:
    value = Fraction(value)
    return canonicalize(value.numerator, value.denominator)


def _from_surd_result(result: QuadraticSurd | Fraction) -> CirclePoint:
    if isinstance(result, Fraction):
        return from_fraction(result)
    return CertifiedIrrational.from_surd(result)


def surd(a: int, b: int, radicand: int, c: int) -> CirclePoint:
    """
    The point (a + b*sqrt(radicand))/c mod 1, rational if it degenerates.
    """
    return _from_surd_result(QuadraticSurd.normalized(a, b, radicand, c))


def negate(x: CirclePoint) -> CirclePoint:
    match x:
        case ExactRational():
            return -x
        case CertifiedIrrational(descriptor=QuadraticSurd() as descriptor):
            return _from_surd_result(descriptor.scaled(-1))
        case CertifiedIrrational():
            return CertifiedIrrational(
                partial(_negated_floor, x.floor_scaled), None, f"-({x.label})"
            )
    raise CharsubDomainError(f"Not a circle point: {x!r}")


def add(x: CirclePoint, y: CirclePoint) -> CirclePoint:
    """
    Sum in T. Exact for rationals and for surds sharing a radicand,
    certified through floor functions otherwise.
    """
    match x, y:
        case ExactRational(), ExactRational():
            return canonicalize(
                x.numerator * y.denominator + y.numerator * x.denominator,
                x.denominator * y.denominator,
            )
        case CertifiedIrrational(), ExactRational():
            return add(y, x)
        case ExactRational(), CertifiedIrrational():
            if y.descriptor is not None:
                return _from_surd_result(y.descriptor.shifted(x.value))
            return CertifiedIrrational(
                partial(_shifted_floor, y.floor_scaled, x.numerator, x.denominator),
                None,
                f"{y.label} + {x}",
            )
        case CertifiedIrrational(), CertifiedIrrational():
            if x.descriptor is not None and y.descriptor is not None:
                combined = x.descriptor.plus(y.descriptor)
                if combined is not None:
                    return _from_surd_result(combined)
            return CertifiedIrrational(
                partial(_sum_floor, x.floor_scaled, y.floor_scaled),
                None,
                f"{x.label} + {y.label}",
            )
    raise CharsubDomainError(f"Cannot add {x!r} and {y!r}")


def pair(u: int, x: CirclePoint) -> CirclePoint:
    """
    The pairing (u, x) = u * x mod 1 between an integer character
    and a circle point.
    """
    match x:
        case ExactRational():
            return canonicalize(u * x.numerator, x.denominator)
        case CertifiedIrrational():
            if u == 0:
                return ZERO
            if x.descriptor is not None:
                return _from_surd_result(x.descriptor.scaled(u))
            scaled = CertifiedIrrational(
                partial(_scaled_floor, x.floor_scaled, abs(u)), None, f"{abs(u)}*{x.label}"
            )
            return scaled if u > 0 else negate(scaled)
    raise CharsubDomainError(f"Not a circle point: {x!r}")


def argument(x: CirclePoint, precision: int = DEFAULT_PRECISION) -> Enclosure:
    """
    The representative of `x` in [0, 1), exact for rationals.
    """
    if isinstance(x, ExactRational):
        return Enclosure.exact(x.value)
    return x.enclosure(precision)


def circle_norm(x: CirclePoint, precision: int = DEFAULT_PRECISION) -> NormValue:
    """
    Distance to the nearest integer ||x||.
    Exact for rationals, an enclosure of width <= 2^-precision otherwise.
    """
    if isinstance(x, ExactRational):
        value = x.value
        return Enclosure.exact(min(value, 1 - value))
    enclosure = x.enclosure(precision)
    lo, hi = enclosure.lo, enclosure.hi
    half = Fraction(1, 2)
    if hi <= half:
        return Enclosure(lo, hi)
    if lo >= half:
        return Enclosure(1 - hi, 1 - lo)
    return Enclosure(min(lo, 1 - hi), half)


def _sqrt_enclosure(n: int, precision: int) -> Enclosure:
    m = 1 << precision
    root = isqrt(n * m * m)
    return Enclosure(Fraction(root, m), Fraction(root + 1, m), sp.sqrt(n))


_IV_LOCK = threading.Lock()


@contextmanager
def interval_precision(bits: int) -> Generator[None, None, None]:
    """
    Runs the block with the mpmath interval context at `bits` of precision.
    The interval context is process-wide, hence the lock.
    """
    with _IV_LOCK:
        previous = iv.prec
        iv.prec = bits
        try:
            yield
        finally:
            iv.prec = previous


def interval_from_fraction(value: Fraction) -> iv.mpf:
    return iv.mpf(value.numerator) / value.denominator


def fraction_bounds(value: iv.mpf) -> tuple[Fraction, Fraction]:
    """
    Exact rational endpoints of an mpmath interval.
    """
    low_raw, high_raw = value._mpi_
    return Fraction(*libmp.to_rational(low_raw)), Fraction(*libmp.to_rational(high_raw))


def _chord_bound(norm: Fraction, precision: int, upper: bool) -> Fraction:
    """
    Outward-rounded bound of 2*sin(pi*norm), sine being monotone on [0, 1/2].
    """
    with interval_precision(precision + 20):
        value = 2 * iv.sin(iv.pi * interval_from_fraction(norm))
        low, high = fraction_bounds(value)
    bound = high if upper else low
    return min(bound, Fraction(2)) if upper else max(bound, Fraction(0))


_EXACT_CHORDS: dict[Fraction, Callable[[int], Enclosure]] = {
    Fraction(0): lambda _: Enclosure.exact(0),
    Fraction(1, 6): lambda _: Enclosure.exact(1),
    Fraction(1, 4): partial(_sqrt_enclosure, 2),
    Fraction(1, 3): partial(_sqrt_enclosure, 3),
    Fraction(1, 2): lambda _: Enclosure.exact(2),
}


def chord_distance(t: CirclePoint, precision: int = DEFAULT_PRECISION) -> Enclosure:
    """
    |1 - exp(2*pi*i*t)| = 2*sin(pi*||t||).
    Exact (symbolic) when ||t|| is one of 0, 1/6, 1/4, 1/3, 1/2,
    a certified enclosure of width <= 2^-precision otherwise.
    """
    norm = circle_norm(t, precision + 4)
    if norm.is_exact and norm.lo in _EXACT_CHORDS:
        return _EXACT_CHORDS[norm.lo](precision)
    return chord_from_norm(norm, precision)


def chord_from_norm(norm: Enclosure, precision: int = DEFAULT_PRECISION) -> Enclosure:
    """
    2*sin(pi*t) for t known through an enclosure inside [0, 1/2].
    """
    return Enclosure(
        _chord_bound(norm.lo, precision, upper=False),
        _chord_bound(norm.hi, precision, upper=True),
    )


def chord_lower_bound(t: CirclePoint, precision: int = DEFAULT_PRECISION) -> Fraction:
    """
    A cheap exact lower bound of the chord: 4 * ||t|| <= chord(t).
    """
    return 4 * circle_norm(t, precision).lo
