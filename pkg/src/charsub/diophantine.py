"""
Integer relations between points of T, simultaneous approximation
by characters of Z (Kronecker scans) and the ℓ1 word cancellation
behind the non-polishability of characterized subgroups of Kronecker sets.

Rationals and quadratic surds are decided exactly: their relations form
a lattice computed as an integer kernel. Other certified irrationals go
through PSLQ candidates that are then checked against enclosures.

@date: 11.10.2026
@author: Baptiste Pestourie
"""

from __future__ import annotations

import itertools
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import lcm
from typing import Iterator, Sequence

import mpmath
import sympy as sp
from sympy.polys.domains import ZZ
from sympy.polys.matrices import DomainMatrix

from charsub.circle import (
    CertifiedIrrational,
    CirclePoint,
    Enclosure,
    ExactRational,
    QuadraticSurd,
    ZERO,
    add,
    circle_norm,
    negate,
    pair,
)
from charsub.config import DEFAULT_SETTINGS, Settings
from charsub.context import add_trace_if_enabled
from charsub.finite_abelian import integer_kernel
from charsub.utils import CharsubBudgetError, CharsubDomainError, DependentInputError

_logger = logging.getLogger(__name__)

DEFAULT_RELATION_PRECISION: int = 64
# refinements of an ambiguous candidate before giving up on it
_MAX_REFINEMENTS: int = 4
_MAX_NORM_BITS: int = 512


# --- Results ---
@dataclass(frozen=True)
class RelationCertificate:
    """
    Σ n_i x_i = 0 in T. `exact` relations were checked symbolically;
    `minimal` ones are the smallest in (ℓ∞, ℓ1, lexicographic) order.
    """

    coefficients: tuple[int, ...]
    residual: Enclosure
    exact: bool
    minimal: bool

    @property
    def height(self) -> int:
        return max(map(abs, self.coefficients))


@dataclass(frozen=True)
class NoneFound:
    """
    No relation with coefficients bounded by `height`, nor by any height
    when `unbounded`. Inexact certificates carry the smallest residual met.
    """

    height: int
    precision: int
    exact: bool
    lower_bound: Fraction | None = None
    unbounded: bool = False


@dataclass(frozen=True)
class RelationAmbiguous:
    """
    A candidate whose residual could not be separated from 0.
    """

    candidate: tuple[int, ...]
    residual: Enclosure
    precision: int


type RelationOutcome = RelationCertificate | NoneFound | RelationAmbiguous


@dataclass(frozen=True)
class KroneckerSolution:
    """
    ‖n x_i - t_i‖ < eps for every i, each certified by `achieved`.
    """

    character: int
    achieved: tuple[Enclosure, ...]
    eps: Fraction
    gate_height: int


@dataclass(frozen=True)
class NotFoundWithin:
    scan_max: int
    eps: Fraction
    gate_height: int


type KroneckerOutcome = KroneckerSolution | NotFoundWithin


# --- Relations ---
def _relation_key(v: Sequence[int]) -> tuple[int, int, tuple[int, ...]]:
    return max(map(abs, v)), sum(map(abs, v)), tuple(v)


def _normalize_sign(v: Sequence[int]) -> tuple[int, ...]:
    first = next((c for c in v if c), 0)
    return tuple(-c for c in v) if first < 0 else tuple(v)


def _vectors_of_height(dimension: int, h: int) -> Iterator[tuple[int, ...]]:
    """
    Nonzero vectors with ℓ∞ norm exactly h, first nonzero entry positive.
    """
    for v in itertools.product(range(-h, h + 1), repeat=dimension):
        if max(map(abs, v)) == h and next(c for c in v if c) > 0:
            yield v


@dataclass(frozen=True)
class _SurdSystem:
    """
    x_i = (a_i + b_i sqrt(D_i)) / c_i, rationals having b_i = 0.
    Σ n_i x_i is an integer iff the rational part is an integer and the
    sqrt(D) parts cancel radicand by radicand.
    """

    parts: tuple[tuple[int, int, int, int], ...]

    @classmethod
    def of(cls, xs: Sequence[CirclePoint]) -> _SurdSystem | None:
        parts = []
        for x in xs:
            match x:
                case ExactRational(numerator=a, denominator=c):
                    parts.append((a, 0, 1, c))
                case CertifiedIrrational(descriptor=QuadraticSurd(a=a, b=b, radicand=d, c=c)):
                    parts.append((a, b, d, c))
                case _:
                    return None
        return cls(tuple(parts))

    @property
    def radicands(self) -> list[int]:
        return sorted({d for _, b, d, _ in self.parts if b})

    def matrix(self) -> list[list[int]]:
        """
        Rows over (n_1, ..., n_m, t), t absorbing the integer part.
        """
        common = lcm(*(c for *_, c in self.parts))
        rows = [[a * (common // c) for a, _, _, c in self.parts] + [-common]]
        for radicand in self.radicands:
            rows.append(
                [b * (common // c) if d == radicand else 0 for _, b, d, c in self.parts] + [0]
            )
        return rows

    def is_relation(self, v: Sequence[int]) -> bool:
        rational = sum(Fraction(n * a, c) for n, (a, _, _, c) in zip(v, self.parts))
        if rational.denominator != 1:
            return False
        return all(
            sum(Fraction(n * b, c) for n, (_, b, d, c) in zip(v, self.parts) if d == radicand) == 0
            for radicand in self.radicands
        )

    def lattice(self) -> list[list[int]]:
        m = len(self.parts)
        return [vector[:m] for vector in integer_kernel(self.matrix(), m + 1)]


def _to_sympy(x: CirclePoint) -> sp.Expr:
    match x:
        case ExactRational(numerator=a, denominator=c):
            return sp.Rational(a, c)
        case CertifiedIrrational(descriptor=QuadraticSurd() as descriptor):
            return descriptor.to_sympy()
    raise CharsubDomainError(f"{x} has no symbolic form")


def symbolic_residual(coefficients: Sequence[int], xs: Sequence[CirclePoint]) -> sp.Expr:
    """
    Σ n_i x_i minus its integer part, simplified. Zero for exact relations.
    """
    total = sp.expand(sum((n * _to_sympy(x) for n, x in zip(coefficients, xs)), sp.Integer(0)))
    return sp.nsimplify(total - sp.floor(total))


def _lll_candidates(basis: list[list[int]]) -> list[tuple[int, ...]]:
    reduced = DomainMatrix([[ZZ(c) for c in row] for row in basis], (len(basis), len(basis[0])), ZZ)
    rows = [[int(c) for c in row] for row in reduced.lll().to_Matrix().tolist()]
    candidates = [_normalize_sign(row) for row in rows if any(row)]
    for first, second in itertools.combinations(rows, 2):
        for combined in ([a + b for a, b in zip(first, second)], [a - b for a, b in zip(first, second)]):
            if any(combined):
                candidates.append(_normalize_sign(combined))
    return candidates


def _exact_relation(
    system: _SurdSystem, xs: Sequence[CirclePoint], height: int, precision: int, settings: Settings
) -> RelationOutcome:
    basis = system.lattice()
    if not basis:
        return NoneFound(height, precision, exact=True, unbounded=True)
    dimension = len(xs)
    fallback = min(_lll_candidates(basis), key=_relation_key)
    fallback_height = _relation_key(fallback)[0]
    scanned = 0
    for h in range(1, min(height, fallback_height) + 1):
        scanned += (2 * h + 1) ** dimension
        if scanned > settings.search_budget:
            break
        shell = [v for v in _vectors_of_height(dimension, h) if system.is_relation(v)]
        if shell:
            return _exact_certificate(min(shell, key=_relation_key), xs, minimal=True)
    else:
        # the fallback sits in the shell of its own height, so it lies above `height`
        return NoneFound(height, precision, exact=True)
    if fallback_height > height:
        raise CharsubBudgetError(f"Relation search up to height {height} exceeds the search budget")
    return _exact_certificate(fallback, xs, minimal=False)


def _exact_certificate(
    coefficients: tuple[int, ...], xs: Sequence[CirclePoint], minimal: bool
) -> RelationCertificate:
    residual = symbolic_residual(coefficients, xs)
    if residual != 0:
        raise CharsubDomainError(f"Lattice relation {coefficients} does not cancel: {residual}")
    return RelationCertificate(coefficients, Enclosure.exact(0), exact=True, minimal=minimal)


def _fixed_point(x: CirclePoint, bits: int) -> int:
    """
    floor(x * 2^bits) mod 2^bits, x lies in [F, F + 1] / 2^bits.
    """
    scale = 1 << bits
    if isinstance(x, ExactRational):
        return x.numerator * scale // x.denominator
    return x.floor_scaled(scale) % scale


def _residual(coefficients: Sequence[int], xs: Sequence[CirclePoint], bits: int) -> Enclosure:
    """
    Enclosure of ‖Σ n_i x_i‖.
    """
    scale = 1 << bits
    center = sum(n * _fixed_point(x, bits) for n, x in zip(coefficients, xs)) % scale
    spread = sum(map(abs, coefficients))
    distance = min(center, scale - center)
    return Enclosure(
        Fraction(max(distance - spread, 0), scale),
        min(Fraction(distance + spread, scale), Fraction(1, 2)),
    )


def _refined_residual(
    coefficients: Sequence[int], xs: Sequence[CirclePoint], precision: int
) -> tuple[Enclosure, int]:
    """
    Doubles the precision until the residual leaves 0, or gives up.
    """
    for step in range(_MAX_REFINEMENTS + 1):
        bits = precision << step
        residual = _residual(coefficients, xs, bits)
        if residual.lo > 0:
            break
    return residual, bits


def _pslq_candidate(xs: Sequence[CirclePoint], height: int, bits: int) -> tuple[int, ...] | None:
    with mpmath.workprec(bits):
        values = [mpmath.mpf(_fixed_point(x, bits)) / 2**bits for x in xs]
        try:
            relation = mpmath.pslq([*values, mpmath.mpf(1)], maxcoeff=height, maxsteps=10**4)
        except ValueError:
            # a vanishing coordinate
            return None
    if relation is None or not any(relation[:-1]):
        return None
    return _normalize_sign([int(c) for c in relation[:-1]])


def _generic_relation(
    xs: Sequence[CirclePoint], height: int, precision: int, settings: Settings
) -> RelationOutcome:
    candidate = _pslq_candidate(xs, height, precision)
    if candidate is not None:
        residual, bits = _refined_residual(candidate, xs, precision)
        if residual.lo == 0:
            return RelationAmbiguous(candidate, residual, bits)
        _logger.debug("PSLQ candidate %s refuted at %d bits", candidate, bits)
    dimension = len(xs)
    if (2 * height + 1) ** dimension > settings.search_budget:
        raise CharsubBudgetError(
            f"No certified relation search for height {height} in dimension {dimension}"
        )
    smallest: Fraction | None = None
    for h in range(1, height + 1):
        for v in _vectors_of_height(dimension, h):
            residual, bits = _refined_residual(v, xs, precision)
            if residual.lo == 0:
                return RelationAmbiguous(v, residual, bits)
            smallest = residual.lo if smallest is None else min(smallest, residual.lo)
    return NoneFound(height, precision, exact=False, lower_bound=smallest)


def integer_relation(
    xs: Sequence[CirclePoint],
    height: int,
    precision: int = DEFAULT_RELATION_PRECISION,
    settings: Settings = DEFAULT_SETTINGS,
) -> RelationOutcome:
    """
    Looks for n != 0 with ‖n‖∞ <= height and Σ n_i x_i = 0 in T.

    Raises
    ------
    CharsubDomainError
        On an empty input.
    CharsubBudgetError
        When no exact path applies and the exhaustive scan is too large.
    """
    if not xs:
        raise CharsubDomainError("integer_relation needs at least one point")
    if height < 1:
        raise CharsubDomainError(f"Height must be positive, got {height}")
    system = _SurdSystem.of(xs)
    if system is not None:
        outcome = _exact_relation(system, xs, height, precision, settings)
    else:
        outcome = _generic_relation(xs, height, precision, settings)
    add_trace_if_enabled(
        "Integer relation",
        f"inputs {', '.join(map(str, xs))}, height {height}",
        f"outcome {outcome}",
    )
    _logger.debug("Relation search on %d points: %s", len(xs), outcome)
    return outcome


def independence_gate(
    xs: Sequence[CirclePoint], height: int, settings: Settings = DEFAULT_SETTINGS
) -> NoneFound:
    """
    Bounded-height independence: no relation up to `height`.

    Raises
    ------
    DependentInputError
        Carrying the relation (or the undecided candidate).
    """
    outcome = integer_relation(xs, height, settings=settings)
    match outcome:
        case NoneFound():
            return outcome
        case RelationCertificate(coefficients=coefficients):
            raise DependentInputError(
                f"The points satisfy the relation {coefficients}", coefficients
            )
        case RelationAmbiguous(candidate=candidate):
            raise DependentInputError(
                f"Could not rule out the relation {candidate}", candidate
            )
    raise AssertionError(outcome)  # pragma: no cover


# --- Kronecker scans ---
def _certified_norm(value: CirclePoint, precision: int, eps: Fraction) -> Enclosure:
    """
    An enclosure of ‖value‖ that decides the comparison with eps.
    """
    bits = precision
    while True:
        norm = circle_norm(value, bits)
        if norm.certainly_below(eps) or norm.lo >= eps:
            return norm
        bits *= 2
        if bits > _MAX_NORM_BITS:
            raise CharsubBudgetError(f"Could not compare {value} with {eps}")


def _offset(n: int, x: CirclePoint, t: CirclePoint) -> CirclePoint:
    return add(pair(n, x), negate(t))


def _scan_range(
    xs: Sequence[CirclePoint],
    targets: Sequence[CirclePoint],
    eps: Fraction,
    first: int,
    last: int,
    precision: int,
) -> int | None:
    """
    Smallest n in [first, last] with every ‖n x_i - t_i‖ < eps.
    Fixed point screening with error (n + 1) / 2^bits; undecided
    values are refined exactly.
    """
    bits = max(64, last.bit_length() + 40)
    scale = 1 << bits
    steps = [_fixed_point(x, bits) for x in xs]
    offsets = [_fixed_point(t, bits) for t in targets]
    accumulators = [(first * s - o) % scale for s, o in zip(steps, offsets)]
    threshold = -(-eps.numerator * scale // eps.denominator)
    for n in range(first, last + 1):
        error = n + 1
        accepted = True
        for i, acc in enumerate(accumulators):
            distance = min(acc, scale - acc)
            if distance + error < threshold:
                continue
            if distance - error >= threshold:
                accepted = False
                break
            if not _certified_norm(_offset(n, xs[i], targets[i]), precision, eps).certainly_below(eps):
                accepted = False
                break
        if accepted:
            return n
        accumulators = [(acc + s) % scale for acc, s in zip(accumulators, steps)]
    return None


def kronecker_char_search(
    xs: Sequence[CirclePoint],
    targets: Sequence[CirclePoint] | None,
    eps: Fraction,
    scan_max: int,
    settings: Settings = DEFAULT_SETTINGS,
) -> KroneckerOutcome:
    """
    Smallest character n in [1, scan_max] with ‖n x_i - t_i‖ < eps for all i.
    The points must pass the independence gate at `kronecker_gate_height`.

    Raises
    ------
    DependentInputError
        When the points satisfy (or may satisfy) a relation.
    """
    if eps <= 0:
        raise CharsubDomainError(f"ε must be positive, got {eps}")
    targets = list(targets) if targets is not None else [ZERO] * len(xs)
    if len(targets) != len(xs):
        raise CharsubDomainError(f"{len(xs)} points but {len(targets)} targets")
    independence_gate(xs, settings.kronecker_gate_height, settings)
    gate = settings.kronecker_gate_height
    precision = settings.chord_precision
    if settings.workers > 1 and scan_max > settings.workers:
        chunk = -(-scan_max // (4 * settings.workers))
        ranges = [(start, min(start + chunk - 1, scan_max)) for start in range(1, scan_max + 1, chunk)]
        with ThreadPoolExecutor(max_workers=settings.workers) as executor:
            found = [
                n
                for n in executor.map(
                    lambda bounds: _scan_range(xs, targets, eps, *bounds, precision), ranges
                )
                if n is not None
            ]
        best = min(found, default=None)
    else:
        best = _scan_range(xs, targets, eps, 1, scan_max, precision)
    add_trace_if_enabled(
        "Kronecker scan",
        f"{len(xs)} points, eps {eps}, scanned up to {scan_max}",
        f"first character {best}" if best is not None else "no character found",
    )
    if best is None:
        return NotFoundWithin(scan_max, eps, gate)
    achieved = tuple(
        _certified_norm(_offset(best, x, t), precision, eps) for x, t in zip(xs, targets)
    )
    _logger.debug("Kronecker character %d for eps = %s", best, eps)
    return KroneckerSolution(best, achieved, eps, gate)


def verify_solution(
    solution: KroneckerSolution,
    xs: Sequence[CirclePoint],
    targets: Sequence[CirclePoint] | None = None,
    settings: Settings = DEFAULT_SETTINGS,
) -> bool:
    """
    Recomputes every distance at twice the working precision.
    """
    targets = list(targets) if targets is not None else [ZERO] * len(xs)
    precision = 2 * settings.chord_precision
    return all(
        _certified_norm(_offset(solution.character, x, t), precision, solution.eps).certainly_below(
            solution.eps
        )
        for x, t in zip(xs, targets)
    )


# --- ℓ1 words ---
@lru_cache(maxsize=None)
def delannoy(rank: int, radius: int) -> int:
    """
    #{v in Z^rank : ‖v‖1 <= radius}.
    """
    if rank == 0 or radius == 0:
        return 1
    return delannoy(rank - 1, radius) + delannoy(rank, radius - 1) + delannoy(rank - 1, radius - 1)


def l1_ball(rank: int, radius: int) -> Iterator[tuple[int, ...]]:
    """
    The words of length `radius` over K ∪ -K ∪ {0}, K a basis of Z^rank.
    """
    if rank == 0:
        yield ()
        return
    for head in range(-radius, radius + 1):
        for tail in l1_ball(rank - 1, radius - abs(head)):
            yield (head, *tail)


@dataclass(frozen=True)
class WordCheckReport:
    """
    Every g with ‖g‖1 <= n_0 and ‖2 n_0 g‖1 <= n_0 is 0.
    `bound` is the supremum of the real solutions of 2 n_0 s <= n_0.
    """

    rank: int
    budget: int
    checked: int
    survivors: tuple[tuple[int, ...], ...]
    growth: tuple[int, ...]
    delannoy: tuple[int, ...]
    bound: Fraction
    exhaustive: bool

    @property
    def passed(self) -> bool:
        cancels = self.survivors == ((0,) * self.rank,) or not self.exhaustive
        return cancels and self.growth == self.delannoy and self.bound < 1


def l1_word_check(rank: int, n0: int, settings: Settings = DEFAULT_SETTINGS) -> WordCheckReport:
    if rank < 1 or n0 < 1:
        raise CharsubDomainError(f"Word checks need rank >= 1 and n_0 >= 1, got {rank}, {n0}")
    s = sp.Symbol("s", real=True)
    solutions = sp.solve_univariate_inequality(2 * n0 * s <= n0, s, relational=False)
    bound = Fraction(str(solutions.sup))
    expected = tuple(delannoy(rank, n) for n in range(n0 + 1))
    exhaustive = expected[-1] <= settings.enumeration_cap
    growth: tuple[int, ...] = expected
    survivors: tuple[tuple[int, ...], ...] = ()
    checked = 0
    if exhaustive:
        growth = tuple(sum(1 for _ in l1_ball(rank, n)) for n in range(n0 + 1))
        found = []
        for g in l1_ball(rank, n0):
            checked += 1
            if sum(abs(2 * n0 * c) for c in g) <= n0:
                found.append(g)
        survivors = tuple(found)
    report = WordCheckReport(rank, n0, checked, survivors, growth, expected, bound, exhaustive)
    _logger.debug("Word check rank %d, n_0 = %d: %s", rank, n0, report.passed)
    return report
