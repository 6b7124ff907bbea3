"""
The sequence groups T^∞ ⊇ T_0^H ⊇ T_1^H and their dual Z_0^∞.

Elements of Z_0^∞ are finite integer vectors stored as maximal runs
of equal coefficients, so that indicators of astronomically long blocks
stay small objects. Elements of T^∞ are either finitely supported or
given by a block rule producing the m-th nonzero entry (position and
argument in [0, 1)). Tail classes (z_n -> 1, Σ|1 - z_n| < ∞) are
certified by the rule, never sampled.

Also hosts the witness constructions for the characterized subgroup
of T_0^H defined by a sequence ω of Z_0^∞: unbounded coefficients,
escape of the first support index, and the block characters separating
T_0^H from the closure of T_1^H.

@date: 08.10.2026
@author: Baptiste Pestourie
"""

from __future__ import annotations

import bisect
import itertools
import logging
import math
import threading
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterator, Literal, Sequence

from mpmath import iv

from charsub.circle import (
    CertifiedIrrational,
    CirclePoint,
    Enclosure,
    ExactRational,
    ZERO,
    add,
    chord_distance,
    chord_from_norm,
    circle_norm,
    fraction_bounds,
    from_fraction,
    interval_from_fraction,
    interval_precision,
    negate,
    pair,
)
from charsub.config import DEFAULT_SETTINGS, Settings
from charsub.context import add_trace_if_enabled
from charsub.utils import CharsubBudgetError, CharsubDomainError, format_fraction
from charsub.verdicts import In, NotIn, Unknown, Verdict

_logger = logging.getLogger(__name__)

# 22/7 > pi, enough for upper chord bounds chord(t) <= 2*pi*||t||
PI_UPPER = Fraction(22, 7)
# arguments beyond the first block cutoff stay below this bound
GCLOSURE_TAIL_BOUND = Fraction(1, 100)
BLOCK_SUM_LOW = Fraction(1, 3)
BLOCK_SUM_HIGH = Fraction(1, 2)
# exact prefix of harmonic range sums before switching to Euler-Maclaurin
_EXACT_HARMONIC_HEAD: int = 64
DEFAULT_DEPTH: int = 10_000
DEFAULT_DIVERGENCE_BOUND = Fraction(10)
DEFAULT_ESCAPE_BLOCKS: int = 100
_MAX_RANGE_PRECISION: int = 4096


# --- Z_0^∞ ---
type Run = tuple[int, int, int]


def _merge_runs(runs: Sequence[Run]) -> tuple[Run, ...]:
    merged: list[Run] = []
    for start, stop, coeff in runs:
        if coeff == 0 or start >= stop:
            continue
        if merged and merged[-1][1] == start and merged[-1][2] == coeff:
            merged[-1] = (merged[-1][0], stop, coeff)
        else:
            merged.append((start, stop, coeff))
    return tuple(merged)


@dataclass(frozen=True)
class ZInfElem:
    """
    A finitely supported integer vector (n_1, n_2, ...), stored as
    sorted runs [start, stop) of a nonzero coefficient. Indices start at 1.
    """

    runs: tuple[Run, ...] = ()

    def __post_init__(self) -> None:
        previous_stop = 1
        for start, stop, coeff in self.runs:
            if start < previous_stop or stop <= start or coeff == 0:
                raise CharsubDomainError(f"Invalid runs {self.runs}")
            previous_stop = stop
        if _merge_runs(self.runs) != self.runs:
            raise CharsubDomainError(f"Runs {self.runs} are not maximal")

    @classmethod
    def from_mapping(cls, coefficients: dict[int, int]) -> ZInfElem:
        if any(k < 1 for k in coefficients):
            raise CharsubDomainError("Z_0^∞ indices start at 1")
        return cls(_merge_runs([(k, k + 1, c) for k, c in sorted(coefficients.items())]))

    @classmethod
    def unit(cls, k: int) -> ZInfElem:
        return cls.from_mapping({k: 1})

    @classmethod
    def indicator(cls, first: int, last: int, coeff: int = 1) -> ZInfElem:
        """
        coeff on every index of [first, last].
        """
        if first < 1:
            raise CharsubDomainError("Z_0^∞ indices start at 1")
        if last < first:
            return cls()
        return cls(_merge_runs([(first, last + 1, coeff)]))

    @property
    def is_zero(self) -> bool:
        return not self.runs

    @property
    def min_index(self) -> int:
        if not self.runs:
            raise CharsubDomainError("The zero vector has no support")
        return self.runs[0][0]

    @property
    def max_index(self) -> int:
        if not self.runs:
            raise CharsubDomainError("The zero vector has no support")
        return self.runs[-1][1] - 1

    def coefficient(self, k: int) -> int:
        i = bisect.bisect_right(self.runs, (k, float("inf"), 0)) - 1
        if i >= 0:
            start, stop, coeff = self.runs[i]
            if start <= k < stop:
                return coeff
        return 0

    def items(self, limit: int = DEFAULT_SETTINGS.exact_run_limit) -> Iterator[tuple[int, int]]:
        """
        (index, coefficient) pairs of the support.

        Raises
        ------
        CharsubBudgetError
            If the support is larger than `limit`.
        """
        if self.support_size > limit:
            raise CharsubBudgetError(f"Support of size {self.support_size} exceeds {limit}")
        for start, stop, coeff in self.runs:
            for k in range(start, stop):
                yield k, coeff

    @property
    def support_size(self) -> int:
        return sum(stop - start for start, stop, _ in self.runs)

    @property
    def l1(self) -> int:
        return sum(abs(c) * (stop - start) for start, stop, c in self.runs)

    @property
    def l2sq(self) -> int:
        return sum(c * c * (stop - start) for start, stop, c in self.runs)

    @property
    def linf(self) -> int:
        return max((abs(c) for _, _, c in self.runs), default=0)

    def argmax(self) -> int:
        """
        First index carrying the largest absolute coefficient.
        """
        d = self.linf
        return next(start for start, _, c in self.runs if abs(c) == d)

    def __add__(self, other: ZInfElem) -> ZInfElem:
        bounds = sorted({b for s, e, _ in (*self.runs, *other.runs) for b in (s, e)})
        return ZInfElem(
            _merge_runs(
                [
                    (start, stop, self.coefficient(start) + other.coefficient(start))
                    for start, stop in zip(bounds, bounds[1:])
                ]
            )
        )

    def __neg__(self) -> ZInfElem:
        return ZInfElem(tuple((s, e, -c) for s, e, c in self.runs))

    def __sub__(self, other: ZInfElem) -> ZInfElem:
        return self + (-other)

    def __mul__(self, k: int) -> ZInfElem:
        if k == 0:
            return ZInfElem()
        return ZInfElem(tuple((s, e, k * c) for s, e, c in self.runs))

    __rmul__ = __mul__

    def __str__(self) -> str:
        parts = [
            f"{start}: {coeff}" if stop == start + 1 else f"{start}..{stop - 1}: {coeff}"
            for start, stop, coeff in self.runs
        ]
        return "zinf{" + ", ".join(parts) + "}"


# --- T^∞ ---
_FINITE_REASON = "finitely supported"


@dataclass(frozen=True)
class BlockRule:
    """
    The m-th nonzero entry (m >= 1) sits at `position(m)` with argument
    `value(m)` in [0, 1); positions strictly increase.
    `tail_bound(m)` bounds the arguments of every entry from the m-th on,
    `chord_tail(m)` (summable rules only) bounds Σ chord over those entries.
    Equality only looks at the name and parameters.
    """

    name: str
    params: tuple[tuple[str, str], ...]
    position: Callable[[int], int] = field(compare=False)
    value: Callable[[int], Fraction] = field(compare=False)
    tail_bound: Callable[[int], Fraction] = field(compare=False)
    tends_to_one: Verdict = field(compare=False)
    l1_summable: Verdict = field(compare=False)
    chord_tail: Callable[[int], Fraction] | None = field(default=None, compare=False)
    range_sum: Callable[[int, int, int], Enclosure] | None = field(default=None, compare=False)
    count_upto: Callable[[int], int] | None = field(default=None, compare=False)
    count: int | None = None

    def __str__(self) -> str:
        params = "".join(f", {key}={value}" for key, value in self.params)
        return f"block(rule={self.name}{params})"


@dataclass(frozen=True)
class FiniteSupport:
    """
    Finitely many nontrivial coordinates; z_n = 0 (i.e. 1 multiplicatively) elsewhere.
    """

    entries: tuple[tuple[int, CirclePoint], ...] = ()

    def __post_init__(self) -> None:
        positions = [p for p, _ in self.entries]
        if positions != sorted(set(positions)) or any(p < 1 for p in positions):
            raise CharsubDomainError("Positions must be distinct, sorted and >= 1")

    @classmethod
    def of(cls, coordinates: dict[int, CirclePoint | Fraction | int]) -> FiniteSupport:
        entries = []
        for position, value in sorted(coordinates.items()):
            point = (
                value
                if isinstance(value, (ExactRational, CertifiedIrrational))
                else from_fraction(value)
            )
            if not (isinstance(point, ExactRational) and point.is_zero):
                entries.append((position, point))
        return cls(tuple(entries))

    @property
    def tends_to_one(self) -> Verdict:
        return In(self.entries[-1][0] + 1 if self.entries else 0, _FINITE_REASON)

    @property
    def l1_summable(self) -> Verdict:
        return In(self.entries[-1][0] + 1 if self.entries else 0, _FINITE_REASON)

    def coordinate(self, n: int) -> CirclePoint:
        for position, point in self.entries:
            if position == n:
                return point
        return ZERO

    def __str__(self) -> str:
        return "tinf{" + ", ".join(f"{p}: {v}" for p, v in self.entries) + "}"


@dataclass(frozen=True)
class BlockPattern:
    rule: BlockRule

    @property
    def tends_to_one(self) -> Verdict:
        return self.rule.tends_to_one

    @property
    def l1_summable(self) -> Verdict:
        return self.rule.l1_summable

    def entry(self, m: int) -> tuple[int, Fraction]:
        if m < 1 or (self.rule.count is not None and m > self.rule.count):
            raise CharsubDomainError(f"{self.rule} has no entry {m}")
        return self.rule.position(m), self.rule.value(m)

    def coordinate(self, n: int) -> CirclePoint:
        m = count_upto(self, n)
        if m and self.rule.position(m) == n:
            return from_fraction(self.rule.value(m))
        return ZERO

    def __str__(self) -> str:
        return str(self.rule)


type TInfElem = FiniteSupport | BlockPattern

ZERO_SEQUENCE = FiniteSupport()


def count_upto(z: TInfElem, position: int) -> int:
    """
    Number of entries of z at positions <= `position`.
    """
    match z:
        case FiniteSupport(entries=entries):
            return sum(1 for p, _ in entries if p <= position)
        case BlockPattern(rule=rule):
            if rule.count_upto is not None:
                found = rule.count_upto(position)
                return found if rule.count is None else min(found, rule.count)
            exists = (
                lambda m: (rule.count is None or m <= rule.count) and rule.position(m) <= position
            )
            if not exists(1):
                return 0
            low, high = 1, 2
            while exists(high):
                low, high = high, 2 * high
            while high - low > 1:
                middle = (low + high) // 2
                if exists(middle):
                    low = middle
                else:
                    high = middle
            return low
    raise CharsubDomainError(f"Not an element of T^∞: {z!r}")


def entries(z: TInfElem, start: int = 1) -> Iterator[tuple[int, CirclePoint]]:
    """
    The nontrivial coordinates of z in increasing position, from the `start`-th entry.
    """
    match z:
        case FiniteSupport(entries=finite):
            yield from finite[start - 1 :]
        case BlockPattern(rule=rule):
            m = start
            while rule.count is None or m <= rule.count:
                yield rule.position(m), from_fraction(rule.value(m))
                m += 1


def _norm_tail(z: TInfElem, consumed: int) -> Fraction:
    match z:
        case FiniteSupport(entries=finite):
            return max((circle_norm(p).hi for _, p in finite[consumed:]), default=Fraction(0))
        case BlockPattern(rule=rule):
            if rule.count is not None and consumed >= rule.count:
                return Fraction(0)
            return min(rule.tail_bound(consumed + 1), Fraction(1, 2))
    raise CharsubDomainError(f"Not an element of T^∞: {z!r}")


def _chord_tail(z: TInfElem, consumed: int) -> Fraction | None:
    match z:
        case FiniteSupport(entries=finite):
            return sum((chord_distance(p).hi for _, p in finite[consumed:]), Fraction(0))
        case BlockPattern(rule=rule):
            if rule.count is not None and consumed >= rule.count:
                return Fraction(0)
            return rule.chord_tail(consumed + 1) if rule.chord_tail is not None else None
    raise CharsubDomainError(f"Not an element of T^∞: {z!r}")


def _differences(
    z: TInfElem, w: TInfElem
) -> Iterator[tuple[int, CirclePoint, int, int]]:
    """
    Merges both entry streams: (position, z_n - w_n, consumed in z, consumed in w).
    """
    zs, ws = entries(z), entries(w)
    next_z, next_w = next(zs, None), next(ws, None)
    consumed_z = consumed_w = 0
    while next_z is not None or next_w is not None:
        if next_w is None or (next_z is not None and next_z[0] < next_w[0]):
            assert next_z is not None
            position, diff = next_z[0], next_z[1]
            consumed_z += 1
            next_z = next(zs, None)
        elif next_z is None or next_w[0] < next_z[0]:
            position, diff = next_w[0], negate(next_w[1])
            consumed_w += 1
            next_w = next(ws, None)
        else:
            position, diff = next_z[0], add(next_z[1], negate(next_w[1]))
            consumed_z += 1
            consumed_w += 1
            next_z, next_w = next(zs, None), next(ws, None)
        yield position, diff, consumed_z, consumed_w


@dataclass(frozen=True)
class Diverges:
    """
    Σ chord(z_n - w_n) exceeds `bound` by position `position`, and the
    tail classes certify that the full series diverges.
    """

    bound: Fraction
    position: int
    partial_sum: Fraction
    reason: str

    def __str__(self) -> str:
        return (
            f"Diverges (partial sum >= {format_fraction(self.partial_sum)} > "
            f"{format_fraction(self.bound)} at n = {self.position}: {self.reason})"
        )


type MetricValue = Enclosure | Diverges | Unknown


def metric_d0(
    z: TInfElem,
    w: TInfElem,
    depth: int = DEFAULT_DEPTH,
    settings: Settings = DEFAULT_SETTINGS,
) -> Enclosure | Unknown:
    """
    sup_n |z_n - w_n| on T_0^H.
    The supremum is attained once the tails can no longer beat the
    running maximum.
    """
    if z == w:
        return Enclosure.exact(0)
    if not (isinstance(z.tends_to_one, In) and isinstance(w.tends_to_one, In)):
        return Unknown(0, "d_0 needs both arguments to tend to 1")
    lo_max, hi_max = Fraction(0), Fraction(0)
    for step, (_, diff, consumed_z, consumed_w) in enumerate(_differences(z, w), start=1):
        chord = chord_distance(diff, settings.chord_precision)
        lo_max, hi_max = max(lo_max, chord.lo), max(hi_max, chord.hi)
        remaining = 2 * PI_UPPER * (_norm_tail(z, consumed_z) + _norm_tail(w, consumed_w))
        if remaining <= lo_max:
            return Enclosure(lo_max, hi_max)
        if step >= depth:
            return Unknown(depth, "the tails could still exceed the running maximum")
    return Enclosure(lo_max, hi_max)


def metric_d1(
    z: TInfElem,
    w: TInfElem,
    depth: int = DEFAULT_DEPTH,
    bound: Fraction = DEFAULT_DIVERGENCE_BOUND,
    settings: Settings = DEFAULT_SETTINGS,
) -> MetricValue:
    """
    Σ_n |z_n - w_n| on T_1^H.
    Enclosed when both series are summable; Diverges with a partial sum
    above `bound` when exactly one of them is.
    """
    if z == w:
        return Enclosure.exact(0)
    z_summable, w_summable = z.l1_summable, w.l1_summable
    if isinstance(z_summable, In) and isinstance(w_summable, In):
        total = Enclosure.exact(0)
        for step, (_, diff, consumed_z, consumed_w) in enumerate(_differences(z, w), start=1):
            total = total + chord_distance(diff, settings.chord_precision)
            if step >= depth:
                tail_z, tail_w = _chord_tail(z, consumed_z), _chord_tail(w, consumed_w)
                if tail_z is None or tail_w is None:
                    return Unknown(depth, "no certified chord tail")
                return Enclosure(total.lo, total.hi + tail_z + tail_w)
        return total
    one_sided = {type(z_summable), type(w_summable)} == {In, NotIn}
    if not one_sided:
        return Unknown(0, "the summability of z - w is not certified")
    partial = Fraction(0)
    for step, (position, diff, _, _) in enumerate(_differences(z, w), start=1):
        # chord(t) >= 4 * ||t||
        partial += 4 * circle_norm(diff, settings.chord_precision).lo
        if partial > bound:
            return Diverges(bound, position, partial, "one side is summable, the other is not")
        if step >= depth:
            break
    return Unknown(depth, f"partial sums stayed below {format_fraction(bound)}")


def pair_zinf(n: ZInfElem, z: TInfElem, settings: Settings = DEFAULT_SETTINGS) -> CirclePoint:
    """
    (n, z) = Σ_k n_k z_k mod 1, exact.

    Raises
    ------
    CharsubBudgetError
        If more than `exact_run_limit` coordinates of z meet the support of n.
    """
    if n.is_zero:
        return ZERO
    total: CirclePoint = ZERO
    match z:
        case FiniteSupport(entries=finite):
            for position, point in finite:
                coeff = n.coefficient(position)
                if coeff:
                    total = add(total, pair(coeff, point))
            return total
        case BlockPattern():
            first = count_upto(z, n.min_index - 1) + 1
            last = count_upto(z, n.max_index)
            if last - first + 1 > settings.exact_run_limit:
                raise CharsubBudgetError(
                    f"{last - first + 1} coordinates meet the support, use pair_zinf_enclosure"
                )
            for m in range(first, last + 1):
                position, value = z.entry(m)
                coeff = n.coefficient(position)
                if coeff:
                    total = add(total, pair(coeff, from_fraction(value)))
            return total
    raise CharsubDomainError(f"Not an element of T^∞: {z!r}")


def pair_zinf_enclosure(
    n: ZInfElem, z: BlockPattern, settings: Settings = DEFAULT_SETTINGS
) -> Enclosure:
    """
    An enclosure of the real number Σ_k n_k ε_k (ε_k the arguments of z),
    a representative of the pairing. Long runs use the rule's range sums.
    """
    total = Enclosure.exact(0)
    for start, stop, coeff in n.runs:
        first = count_upto(z, start - 1) + 1
        last = count_upto(z, stop - 1)
        if last < first:
            continue
        block = _value_sum(z.rule, first, last, settings)
        total = total + (block.scale(coeff) if coeff > 0 else _negated(block.scale(-coeff)))
    return total


def _negated(enclosure: Enclosure) -> Enclosure:
    return Enclosure(-enclosure.hi, -enclosure.lo)


def enclosure_norm(enclosure: Enclosure) -> Enclosure:
    """
    ||x|| for a real x known through an enclosure.
    """
    shift = math.floor(enclosure.lo)
    lo, hi = enclosure.lo - shift, enclosure.hi - shift
    half = Fraction(1, 2)
    if hi > 1:
        return Enclosure(Fraction(0), half)
    if hi <= half:
        return Enclosure(lo, hi)
    if lo >= half:
        return Enclosure(1 - hi, 1 - lo)
    return Enclosure(min(lo, 1 - hi), half)


# --- Rules ---
def harmonic_range(first: int, last: int, precision: int = 60) -> Enclosure:
    """
    Σ_{n=first}^{last} 1/n. Exact for short ranges, otherwise
    H_b - H_a = ln(b/a) + 1/(2b) - 1/(2a) - 1/(12b²) + 1/(12a²) + e
    with -1/(120a⁴) < e < 1/(120b⁴).
    """
    if first < 1:
        raise CharsubDomainError("Harmonic ranges start at 1")
    if last < first:
        return Enclosure.exact(0)
    if last - first < 2 * _EXACT_HARMONIC_HEAD:
        return Enclosure.exact(sum((Fraction(1, n) for n in range(first, last + 1)), Fraction(0)))
    # small indices are summed exactly, the error term is in 1/a⁴
    a = first - 1 if first > _EXACT_HARMONIC_HEAD else _EXACT_HARMONIC_HEAD
    head = sum((Fraction(1, n) for n in range(first, a + 1)), Fraction(0))
    b = last
    with interval_precision(precision + 20):
        low_log, high_log = fraction_bounds(iv.ln(interval_from_fraction(Fraction(b, a))))
    correction = (
        Fraction(1, 2 * b) - Fraction(1, 2 * a) - Fraction(1, 12 * b * b) + Fraction(1, 12 * a * a)
    )
    return Enclosure(
        head + low_log + correction - Fraction(1, 120 * a**4),
        head + high_log + correction + Fraction(1, 120 * b**4),
    )


def _in(reason: str) -> In:
    return In(0, reason)


def harmonic_rule(C: int = 1) -> BlockRule:
    """
    Argument 1/(mC) at position m.
    """
    if C < 1:
        raise CharsubDomainError("C must be a positive integer")

    def range_sum(i: int, j: int, precision: int = 60) -> Enclosure:
        if C == 1 and i == 1:
            i = 2
        return harmonic_range(i, j, precision).scale(Fraction(1, C))

    return BlockRule(
        name="harmonic",
        params=(("C", str(C)),),
        position=lambda m: m,
        value=lambda m: Fraction(1, m * C) % 1,
        tail_bound=lambda m: min(Fraction(1, 2), Fraction(1, m * C)) if m * C > 1 else Fraction(1, 2),
        tends_to_one=_in("1/(mC) -> 0"),
        l1_summable=NotIn(Fraction(4, C), "Σ chord >= Σ 4/(mC) diverges"),
        range_sum=range_sum,
        count_upto=lambda p: max(0, p),
    )


def inverse_square_rule(C: int = 1) -> BlockRule:
    """
    Argument 1/(m²C) at position m.
    """
    if C < 1:
        raise CharsubDomainError("C must be a positive integer")
    return BlockRule(
        name="inverse_square",
        params=(("C", str(C)),),
        position=lambda m: m,
        value=lambda m: Fraction(1, m * m * C) % 1,
        tail_bound=lambda m: Fraction(1, m * m * C) if m * m * C > 1 else Fraction(1, 2),
        tends_to_one=_in("1/(m²C) -> 0"),
        l1_summable=_in("Σ chord <= 2π Σ 1/(m²C)"),
        # Σ_{m' >= m} 1/m'² <= 1/m² + 1/m
        chord_tail=lambda m: 2 * PI_UPPER * (Fraction(1, m * m) + Fraction(1, m)) / C,
        count_upto=lambda p: max(0, p),
    )


def constant_rule(value: Fraction) -> BlockRule:
    """
    The same argument at every position.
    """
    value = Fraction(value) % 1
    if value == 0:
        raise CharsubDomainError("A constant pattern needs a nonzero argument")
    norm = min(value, 1 - value)
    return BlockRule(
        name="constant",
        params=(("value", format_fraction(value)),),
        position=lambda m: m,
        value=lambda m: value,
        tail_bound=lambda m: value,
        tends_to_one=NotIn(norm, f"every coordinate is {format_fraction(value)}"),
        l1_summable=NotIn(4 * norm, "constant nonzero coordinates"),
        count_upto=lambda p: max(0, p),
    )


def tail_harmonic_rule(scale: int, offset: int = 0) -> BlockRule:
    """
    ε_n = 1/(scale·n) at every position n > offset.
    """
    if scale < 1 or offset < 0:
        raise CharsubDomainError("tail_harmonic needs scale >= 1 and offset >= 0")

    def value(m: int) -> Fraction:
        return Fraction(1, scale * (offset + m)) % 1

    def range_sum(i: int, j: int, precision: int = 60) -> Enclosure:
        first = offset + i
        if scale == 1 and first == 1:
            first = 2
        return harmonic_range(first, offset + j, precision).scale(Fraction(1, scale))

    return BlockRule(
        name="tail_harmonic",
        params=(("scale", str(scale)), ("offset", str(offset))),
        position=lambda m: offset + m,
        value=value,
        tail_bound=lambda m: min(Fraction(1, 2), Fraction(1, scale * (offset + m)))
        if scale * (offset + m) > 1
        else Fraction(1, 2),
        tends_to_one=_in("ε_n -> 0"),
        l1_summable=NotIn(Fraction(4, scale), "Σ chord >= Σ 4/(scale·n) diverges"),
        range_sum=range_sum,
        count_upto=lambda p: max(0, p - offset),
    )


BLOCK_RULES: dict[str, Callable[..., BlockRule]] = {
    "harmonic": harmonic_rule,
    "inverse_square": inverse_square_rule,
    "constant": constant_rule,
    "tail_harmonic": tail_harmonic_rule,
}


def _value_sum(rule: BlockRule, first: int, last: int, settings: Settings) -> Enclosure:
    """
    Σ of the arguments of entries first..last.
    """
    if last < first:
        return Enclosure.exact(0)
    if last - first + 1 <= settings.exact_run_limit:
        return Enclosure.exact(sum((rule.value(m) for m in range(first, last + 1)), Fraction(0)))
    if rule.range_sum is None:
        raise CharsubBudgetError(
            f"{rule} has no range sums and {last - first + 1} entries exceed the exact run limit"
        )
    return rule.range_sum(first, last, 60)


# --- F_ε^l ---
def f_eps_l_contains(chi: ZInfElem, eps: Fraction, l: int) -> bool:
    """
    chi in F_ε^l: supported beyond l with Σ n_k² <= 1/ε².
    """
    if eps <= 0:
        raise CharsubDomainError("ε must be positive")
    if chi.is_zero:
        return True
    return chi.min_index > l and chi.l2sq * eps * eps <= 1


def _vectors_with_square_sum(width: int, budget: int) -> Iterator[tuple[int, ...]]:
    if width == 0:
        yield ()
        return
    bound = 0
    while (bound + 1) ** 2 <= budget:
        bound += 1
    for head in range(-bound, bound + 1):
        for tail in _vectors_with_square_sum(width - 1, budget - head * head):
            yield (head, *tail)


def f_eps_l_enumerate(
    eps: Fraction, l: int, width: int, settings: Settings = DEFAULT_SETTINGS
) -> Iterator[ZInfElem]:
    """
    Every element of F_ε^l supported in (l, l + width].

    Raises
    ------
    CharsubBudgetError
        Past the enumeration cap.
    """
    if eps <= 0:
        raise CharsubDomainError("ε must be positive")
    budget = int(1 / (eps * eps))
    for count, vector in enumerate(_vectors_with_square_sum(width, budget), start=1):
        if count > settings.enumeration_cap:
            raise CharsubBudgetError("F_ε^l enumeration exceeded the enumeration cap")
        yield ZInfElem.from_mapping({l + 1 + i: c for i, c in enumerate(vector) if c})


@dataclass(frozen=True)
class FEpsReport:
    eps: Fraction
    l: int
    width: int
    count: int
    max_l1: int
    square_bound: Fraction
    cube_bound: Fraction

    @property
    def holds(self) -> bool:
        """
        ℓ1 <= 1/ε² <= 1/ε³, strict against 1/ε³ when ε < 1.
        """
        if self.max_l1 > self.square_bound:
            return False
        if self.eps < 1:
            return self.max_l1 < self.cube_bound
        return self.max_l1 <= self.cube_bound


def f_eps_l1_report(
    eps: Fraction, l: int, width: int, settings: Settings = DEFAULT_SETTINGS
) -> FEpsReport:
    count, max_l1 = 0, 0
    for chi in f_eps_l_enumerate(eps, l, width, settings):
        count += 1
        max_l1 = max(max_l1, chi.l1)
    return FEpsReport(eps, l, width, count, max_l1, 1 / (eps * eps), 1 / (eps**3))


# --- Sequences ω of Z_0^∞ ---
@dataclass(frozen=True)
class OmegaRule:
    """
    A sequence (ω_k)_{k >= 1} of Z_0^∞ with certified facts:
    `first_index_floor(k) <= min support of ω_k` (nondecreasing, unbounded),
    `constant_first_index` when r_1^k never moves, `coefficient_bound` when
    every |coefficient| <= C.
    """

    name: str
    term: Callable[[int], ZInfElem] = field(compare=False)
    first_index_floor: Callable[[int], int] | None = field(default=None, compare=False)
    constant_first_index: int | None = None
    coefficient_bound: int | None = None
    coefficients_unbounded: bool = False

    @classmethod
    def unit(cls) -> OmegaRule:
        """
        ω_k = e_k
        """
        return cls("unit", ZInfElem.unit, lambda k: k, None, 1)

    @classmethod
    def scaled_unit(cls) -> OmegaRule:
        """
        ω_k = k·e_k
        """
        return cls(
            "scaled_unit",
            lambda k: ZInfElem.from_mapping({k: k}),
            lambda k: k,
            coefficients_unbounded=True,
        )

    @classmethod
    def anchored(cls) -> OmegaRule:
        """
        ω_k = e_1 + e_k
        """
        return cls(
            "anchored",
            lambda k: ZInfElem.unit(1) + ZInfElem.unit(k),
            None,
            constant_first_index=1,
            coefficient_bound=2,
        )

    def __str__(self) -> str:
        return f"omega(rule={self.name})"


OMEGA_RULES: dict[str, Callable[[], OmegaRule]] = {
    "unit": OmegaRule.unit,
    "scaled_unit": OmegaRule.scaled_unit,
    "anchored": OmegaRule.anchored,
}

type OmegaSequence = OmegaRule | Sequence[ZInfElem]


def omega_term(omega: OmegaSequence, k: int) -> ZInfElem:
    if k < 1:
        raise CharsubDomainError("ω is indexed from 1")
    if isinstance(omega, OmegaRule):
        return omega.term(k)
    if k > len(omega):
        raise CharsubDomainError(f"ω has only {len(omega)} known terms")
    return omega[k - 1]


def _omega_length(omega: OmegaSequence) -> int | None:
    return None if isinstance(omega, OmegaRule) else len(omega)


@dataclass(frozen=True)
class UnboundedWitness:
    """
    Indices k_1 < k_2 < ... with d_{k_j} > j² and the support of ω_{k_j}
    ending before the support of ω_{k_{j+1}} starts.
    """

    indices: tuple[int, ...]
    positions: tuple[int, ...]
    coefficients: tuple[int, ...]


@dataclass(frozen=True)
class CoefficientAnalysis:
    r1_divergent: Verdict
    bound: int | None
    witness: UnboundedWitness | None
    max_observed: int


def _select_unbounded(
    omega: OmegaSequence, length: int, settings: Settings
) -> UnboundedWitness | None:
    indices: list[int] = []
    k = 0
    limit = _omega_length(omega)
    for j in range(1, length + 1):
        while True:
            k += 1
            if (limit is not None and k > limit) or k > settings.search_budget:
                return _witness_of(omega, indices) if indices else None
            term = omega_term(omega, k)
            if term.is_zero or term.linf <= j * j:
                continue
            if indices and omega_term(omega, indices[-1]).max_index >= term.min_index:
                continue
            indices.append(k)
            break
    return _witness_of(omega, indices)


def _witness_of(omega: OmegaSequence, indices: Sequence[int]) -> UnboundedWitness:
    terms = [omega_term(omega, k) for k in indices]
    return UnboundedWitness(
        tuple(indices),
        tuple(t.argmax() for t in terms),
        tuple(t.linf for t in terms),
    )


def exa1_coefficient_analysis(
    omega: OmegaSequence,
    witness_length: int = 8,
    settings: Settings = DEFAULT_SETTINGS,
) -> CoefficientAnalysis:
    """
    Decides whether the first support index r_1^k of ω_k tends to infinity,
    and whether the coefficients d_k = max |n^k| stay bounded. Unbounded
    coefficients come with a witness subsequence.
    """
    if not isinstance(omega, OmegaRule):
        observed = max((t.linf for t in omega), default=0)
        return CoefficientAnalysis(
            Unknown(len(omega), "a finite prefix says nothing about r_1^k"),
            None,
            None,
            observed,
        )
    if omega.first_index_floor is not None:
        r1: Verdict = In(0, "r_1^k is bounded below by an unbounded function of k")
    elif omega.constant_first_index is not None:
        r1 = NotIn(Fraction(1), f"r_1^k = {omega.constant_first_index} for every k")
    else:
        r1 = Unknown(0, "no certified behaviour of r_1^k")
    observed = max(omega.term(k).linf for k in range(1, 17))
    witness = None
    if omega.coefficient_bound is None and omega.coefficients_unbounded:
        witness = _select_unbounded(omega, witness_length, settings)
    add_trace_if_enabled(
        "coefficient analysis",
        str(omega),
        f"r_1 divergent: {r1}",
        f"bound: {omega.coefficient_bound}",
        f"witness: {witness.indices if witness else None}",
    )
    return CoefficientAnalysis(r1, omega.coefficient_bound, witness, observed)


def _check_e1(omega: OmegaSequence, indices: Sequence[int]) -> None:
    previous: ZInfElem | None = None
    for j, k in enumerate(indices, start=1):
        term = omega_term(omega, k)
        if term.is_zero or term.linf <= j * j:
            raise CharsubDomainError(f"d_{{k_{j}}} = {term.linf} is not above {j * j}")
        if previous is not None and previous.max_index >= term.min_index:
            raise CharsubDomainError(f"Supports of ω at k_{j - 1} and k_{j} overlap")
        previous = term


def exa1_unbounded_witness(
    omega: OmegaSequence,
    witness: Sequence[int] | Callable[[int], int],
) -> TInfElem:
    """
    z with argument 1/(2 d_{k_j}) at the position of the largest
    coefficient of ω_{k_j}, so that (ω_{k_j}, z) = 1/2 for every j
    while Σ chord(z_n) <= π Σ 1/j² < ∞.

    Raises
    ------
    CharsubDomainError
        If the witness violates d_{k_j} > j² or the support separation.
    """
    if not callable(witness):
        _check_e1(omega, witness)
        return FiniteSupport.of(
            {
                omega_term(omega, k).argmax(): Fraction(1, 2 * omega_term(omega, k).linf)
                for k in witness
            }
        )
    # checked lazily, entry by entry
    lock = threading.Lock()
    checked: list[int] = []

    def term_of(j: int) -> ZInfElem:
        with lock:
            while len(checked) < j:
                checked.append(witness(len(checked) + 1))
                _check_e1(omega, checked)
        return omega_term(omega, checked[j - 1])

    def tail(m: int) -> Fraction:
        return Fraction(1, 2 * m * m)

    rule = BlockRule(
        name="unbounded_witness",
        params=(("omega", str(omega)),),
        position=lambda j: term_of(j).argmax(),
        value=lambda j: Fraction(1, 2 * term_of(j).linf),
        tail_bound=tail,
        tends_to_one=_in("1/(2 d_{k_j}) < 1/(2j²) -> 0"),
        l1_summable=_in("Σ chord <= π Σ 1/j²"),
        chord_tail=lambda m: PI_UPPER * (Fraction(1, m * m) + Fraction(1, m)),
    )
    return BlockPattern(rule)


def verify_unbounded_witness(
    omega: OmegaSequence, z: TInfElem, indices: Sequence[int]
) -> bool:
    """
    (ω_{k_j}, z) = 1/2 for every listed k_j.
    """
    half = ExactRational(1, 2)
    return all(pair_zinf(omega_term(omega, k), z) == half for k in indices)


class _EscapeSchedule:
    """
    Lazily computed k_1 < k_2 < ... with max supp(ω_1..ω_{k_m}) below r_1^k
    for every k >= k_{m+1}. Thread safe.
    """

    def __init__(self, omega: OmegaSequence, settings: Settings) -> None:
        self._omega = omega
        self._settings = settings
        self._lock = threading.Lock()
        self._indices: list[int] = [1]
        self._max_support = 0
        self._scanned = 0
        self.exhausted = False

    def _scan_to(self, k: int) -> None:
        while self._scanned < k:
            self._scanned += 1
            term = omega_term(self._omega, self._scanned)
            if not term.is_zero:
                self._max_support = max(self._max_support, term.max_index)

    def _admissible(self, k: int) -> bool:
        omega = self._omega
        if isinstance(omega, OmegaRule):
            assert omega.first_index_floor is not None
            return omega.first_index_floor(k) > self._max_support
        return all(
            t.is_zero or t.min_index > self._max_support for t in omega[k - 1 :]
        )

    def index(self, m: int) -> int | None:
        """
        k_m, or None when a finite ω runs out of blocks.
        """
        with self._lock:
            limit = _omega_length(self._omega)
            while len(self._indices) < m and not self.exhausted:
                current = self._indices[-1]
                self._scan_to(current)
                k = current + 1
                while not (limit is not None and k > limit) and not self._admissible(k):
                    k += 1
                    if k - current > self._settings.search_budget:
                        raise CharsubBudgetError("No admissible next block within budget")
                if limit is not None and k > limit:
                    self.exhausted = True
                    break
                self._indices.append(k)
            return self._indices[m - 1] if m <= len(self._indices) else None


@dataclass(frozen=True)
class EscapeCase:
    """
    One t in [k_m, k_{m+1}): which blocks of z meet the support of ω_t.
    case "a": none, "b": one block, "c": two blocks.
    """

    t: int
    block: int
    case: Literal["a", "b", "c"]
    norm: Fraction
    bound: Fraction

    @property
    def holds(self) -> bool:
        return self.norm <= self.bound


@dataclass(frozen=True)
class EscapeWitness:
    z: TInfElem
    schedule: tuple[int, ...]
    C: int
    trace: tuple[EscapeCase, ...]
    divergence: MetricValue


def exa1_escape_witness(
    omega: OmegaSequence,
    C: int | None = None,
    blocks: int = DEFAULT_ESCAPE_BLOCKS,
    cases_per_block: int = 64,
    divergence_bound: Fraction = DEFAULT_DIVERGENCE_BOUND,
    settings: Settings = DEFAULT_SETTINGS,
) -> EscapeWitness:
    """
    With bounded coefficients (|n| <= C) and r_1^k -> ∞, builds z with
    argument 1/(mC) at r_1^{k_m}: ||(ω_t, z)|| <= 2/m on [k_m, k_{m+1})
    so z is in s_ω, while Σ chord(z_n) diverges: the partial sums over the
    first `blocks` blocks must exceed `divergence_bound`.

    Raises
    ------
    CharsubDomainError
        Without a coefficient bound or a certified divergent r_1.
    """
    if isinstance(omega, OmegaRule):
        C = C if C is not None else omega.coefficient_bound
        if omega.coefficient_bound is None or C is None or C < omega.coefficient_bound:
            raise CharsubDomainError("The escape witness needs a certified coefficient bound")
        if omega.first_index_floor is None:
            raise CharsubDomainError("The escape witness needs r_1^k -> ∞")
    else:
        observed = max((t.linf for t in omega), default=0)
        C = C if C is not None else max(observed, 1)
        if observed > C:
            raise CharsubDomainError(f"Coefficient {observed} exceeds C = {C}")
    bound_c: int = C
    schedule = _EscapeSchedule(omega, settings)

    def position(m: int) -> int:
        k = schedule.index(m)
        if k is None:
            raise CharsubDomainError(f"ω has no block {m}")
        return omega_term(omega, k).min_index

    if isinstance(omega, OmegaRule):
        z: TInfElem = BlockPattern(
            BlockRule(
                name="escape_witness",
                params=(("omega", str(omega)), ("C", str(bound_c))),
                position=position,
                value=lambda m: Fraction(1, m * bound_c) % 1,
                tail_bound=lambda m: Fraction(1, m * bound_c) if m * bound_c > 1 else Fraction(1, 2),
                tends_to_one=_in("1/(mC) -> 0"),
                l1_summable=NotIn(Fraction(4, bound_c), "Σ chord >= Σ 4/(mC) diverges"),
            )
        )
    else:
        coordinates: dict[int, CirclePoint | Fraction | int] = {}
        m = 1
        while schedule.index(m) is not None:
            coordinates[position(m)] = Fraction(1, m * bound_c)
            m += 1
        z = FiniteSupport.of(coordinates)

    indices = [k for k in (schedule.index(m) for m in range(1, blocks + 2)) if k is not None]
    trace: list[EscapeCase] = []
    block_positions = {position(m): m for m in range(1, len(indices) + 1)}
    for m, (start, stop) in enumerate(zip(indices, indices[1:]), start=1):
        for t in range(start, min(stop, start + cases_per_block)):
            term = omega_term(omega, t)
            value = pair_zinf(term, z, settings)
            meeting = {
                block for p, block in block_positions.items() if term.coefficient(p)
            }
            if not meeting <= {m, m + 1}:
                raise CharsubDomainError(f"ω_{t} meets blocks {sorted(meeting)}")
            case: Literal["a", "b", "c"] = "abc"[len(meeting)]  # type: ignore[assignment]
            trace.append(
                EscapeCase(t, m, case, circle_norm(value).hi, Fraction(2, m))
            )
    divergence = metric_d1(
        z, ZERO_SEQUENCE, depth=len(indices), bound=divergence_bound, settings=settings
    )
    add_trace_if_enabled(
        "escape witness",
        f"schedule {indices}",
        f"cases {''.join(c.case for c in trace)}",
        str(divergence),
    )
    _logger.debug("Escape witness for %s: schedule %s", omega, indices)
    return EscapeWitness(z, tuple(indices), bound_c, tuple(trace), divergence)


# --- Characters separating T_0^H from the closure of T_1^H ---
@dataclass(frozen=True)
class EpsilonBlockPartition:
    """
    Cutoffs k_0 < k_1 < ... with every block sum Σ_{k_m < j <= k_{m+1}} ε_j
    certified inside (1/3, 1/2).
    """

    cutoffs: tuple[int, ...]
    sums: tuple[Enclosure, ...]

    def __post_init__(self) -> None:
        if len(self.sums) != len(self.cutoffs) - 1:
            raise CharsubDomainError("One sum per block is expected")
        if any(b <= a for a, b in zip(self.cutoffs, self.cutoffs[1:])):
            raise CharsubDomainError("Cutoffs must increase")
        for s in self.sums:
            if not (s.lo > BLOCK_SUM_LOW and s.hi < BLOCK_SUM_HIGH):
                raise CharsubDomainError(f"Block sum {s} is not certified in (1/3, 1/2)")


@dataclass(frozen=True)
class GClosureBlocks:
    family: Literal["blocks", "projections"]
    characters: tuple[ZInfElem, ...]
    partition: EpsilonBlockPartition | None
    pair_norms: tuple[Enclosure, ...]

    @property
    def pair_chords(self) -> tuple[Enclosure, ...]:
        return tuple(chord_from_norm(norm) for norm in self.pair_norms)


def _first_cutoff(z: BlockPattern, settings: Settings) -> int:
    """
    k_0 such that every argument beyond it is below 1/100.
    """
    m = 1
    while z.rule.tail_bound(m) >= GCLOSURE_TAIL_BOUND:
        m += 1
        if m > settings.search_budget:
            raise CharsubDomainError("Arguments never drop below 1/100")
    return z.rule.position(m) - 1


def _block_sum(rule: BlockRule, first: int, last: int, settings: Settings) -> Enclosure:
    """
    Σ of the arguments of entries first..last, refined until its position
    with respect to 1/3 is decided.
    """
    short = last - first + 1 <= settings.exact_run_limit
    if rule.range_sum is None:
        if not short:
            raise CharsubBudgetError(f"{rule} has no range sums for {last - first + 1} entries")
        return _value_sum(rule, first, last, settings)
    precision = 64
    while precision <= _MAX_RANGE_PRECISION:
        total = rule.range_sum(first, last, precision)
        if total.lo > BLOCK_SUM_LOW or total.hi <= BLOCK_SUM_LOW:
            return total
        if short:
            return _value_sum(rule, first, last, settings)
        precision *= 2
    raise CharsubBudgetError("Block sum too close to 1/3 to be decided")


def _minimal_block_end(rule: BlockRule, first: int, settings: Settings) -> tuple[int, Enclosure]:
    """
    Smallest last entry index with Σ_{first..last} > 1/3, by galloping then
    bisection, together with the sum of that block.
    """
    span = 1
    previous = first - 1
    total = _block_sum(rule, first, first, settings)
    while not total.lo > BLOCK_SUM_LOW:
        previous = first + span - 1
        span *= 2
        if span.bit_length() > _MAX_RANGE_PRECISION:
            raise CharsubBudgetError("Block sums never exceed 1/3")
        total = _block_sum(rule, first, first + span - 1, settings)
    low, high = previous, first + span - 1
    while high - low > 1:
        middle = (low + high) // 2
        candidate = _block_sum(rule, first, middle, settings)
        if candidate.lo > BLOCK_SUM_LOW:
            high, total = middle, candidate
        else:
            low = middle
    return high, total


def exa1_gclosure_blocks(
    z: TInfElem,
    blocks: int = 4,
    first_cutoff: int | None = None,
    settings: Settings = DEFAULT_SETTINGS,
) -> GClosureBlocks:
    """
    For z in T_0^H outside T_1^H, greedy block cutoffs k_{m+1} minimal with
    Σ_{k_m < j <= k_{m+1}} ε_j > 1/3 (and then < 1/3 + 1/100 < 1/2),
    giving the block indicator characters with chord(ω_m, z) >= √3.
    When z does not tend to 1, the projections e_n already separate it.

    Raises
    ------
    CharsubDomainError
        If z is summable, or its tail class is undetermined.
    """
    if isinstance(z.l1_summable, In):
        raise CharsubDomainError("z is in T_1^H: its arguments are summable, no partition exists")
    if isinstance(z.tends_to_one, NotIn):
        assert isinstance(z, BlockPattern)
        positions = [z.rule.position(m) for m in range(1, blocks + 1)]
        characters = tuple(ZInfElem.unit(p) for p in positions)
        norms = tuple(circle_norm(z.coordinate(p)) for p in positions)
        return GClosureBlocks("projections", characters, None, norms)
    if not isinstance(z, BlockPattern) or not isinstance(z.tends_to_one, In):
        raise CharsubDomainError("The tail class of z is not certified")
    rule = z.rule
    k0 = _first_cutoff(z, settings)
    if first_cutoff is not None:
        if first_cutoff < k0:
            raise CharsubDomainError(f"Arguments are only certified below 1/100 beyond {k0}")
        k0 = first_cutoff
    cutoffs = [k0]
    sums: list[Enclosure] = []
    first = count_upto(z, k0) + 1
    for _ in range(blocks):
        last, total = _minimal_block_end(rule, first, settings)
        cutoffs.append(rule.position(last))
        exact = last - first + 1 <= settings.exact_run_limit
        sums.append(_value_sum(rule, first, last, settings) if exact else total)
        first = last + 1
    partition = EpsilonBlockPartition(tuple(cutoffs), tuple(sums))
    characters = tuple(
        ZInfElem.indicator(a + 1, b) for a, b in zip(partition.cutoffs, partition.cutoffs[1:])
    )
    norms = tuple(enclosure_norm(s) for s in partition.sums)
    add_trace_if_enabled("g-closure blocks", f"cutoffs {partition.cutoffs}")
    _logger.debug("Block cutoffs for %s: %s", z, partition.cutoffs)
    return GClosureBlocks("blocks", characters, partition, norms)


@dataclass(frozen=True)
class TailBound:
    chord: Enclosure | None
    bound: Fraction

    @property
    def holds(self) -> bool:
        return self.chord is None or self.chord.lo <= self.bound


def gclosure_tail_bounds(
    characters: Sequence[ZInfElem],
    w: TInfElem,
    settings: Settings = DEFAULT_SETTINGS,
) -> tuple[TailBound, ...]:
    """
    For w in T_1^H: chord((ω_m, w)) <= Σ_{n in block m} chord(w_n),
    which goes to 0 with m.

    Raises
    ------
    CharsubDomainError
        If w is not certified summable.
    """
    if not isinstance(w.l1_summable, In):
        raise CharsubDomainError("w must be in T_1^H")
    bounds = []
    for chi in characters:
        first = count_upto(w, chi.min_index - 1) + 1
        last = count_upto(w, chi.max_index)
        if last < first:
            bounds.append(TailBound(Enclosure.exact(0), Fraction(0)))
            continue
        chord: Enclosure | None = None
        if last - first + 1 <= settings.exact_run_limit:
            block_entries = itertools.islice(entries(w, first), last - first + 1)
            bound = sum(
                (chord_distance(p, settings.chord_precision).hi for _, p in block_entries),
                Fraction(0),
            )
            chord = chord_distance(pair_zinf(chi, w, settings), settings.chord_precision)
        else:
            tail = _chord_tail(w, first - 1)
            if tail is None:
                raise CharsubDomainError("w has no certified chord tail")
            bound = tail
        bounds.append(TailBound(chord, bound))
    return tuple(bounds)
