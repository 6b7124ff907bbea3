"""
Membership in characterized subgroups s_u(X), radical bounds and
the finite models of the pushforward and radical transfer statements.

For a rational point p/q (canonical), (u_n, p/q) -> 0 iff q | u_n
eventually, which the residue orbit of u mod q decides exactly.
For a finite group X, s_u(X) is the common kernel of the period
characters of u.

@date: 05.10.2026
@author: Baptiste Pestourie
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from fractions import Fraction
from math import gcd
from typing import Iterable

from charsub.circle import (
    CertifiedIrrational,
    CirclePoint,
    ExactRational,
    circle_norm,
    pair,
)
from charsub.config import DEFAULT_SETTINGS, Settings
from charsub.context import add_trace_if_enabled
from charsub.finite_abelian import (
    Character,
    FinAbGroup,
    GroupElement,
    Subgroup,
    annihilator,
    dual_pair_finite,
    kernel_of,
)
from charsub.sequences import (
    ExplicitPrefix,
    Factorial,
    FiniteEventuallyPeriodic,
    Geometric,
    Orbit,
    SeqSpec,
    Subsequence,
    eval_int,
    integer_cycle,
    is_eventually_zero,
    is_integer_sequence,
    recurrence_order,
    residue_orbit,
    term_gcd,
    zero_tail_start,
)
from charsub.utils import CharsubBudgetError, CharsubDomainError, lcm_all
from charsub.verdicts import In, NotIn, Unknown, Verdict

_logger = logging.getLogger(__name__)

# precision ceiling when certifying ||c x|| > 0 for irrational x
_MAX_NORM_BITS: int = 256


def _rational_norm(value: Fraction) -> Fraction:
    value %= 1
    return min(value, 1 - value)


def member_su(
    u: SeqSpec,
    x: CirclePoint | GroupElement,
    depth: int | None = None,
    settings: Settings = DEFAULT_SETTINGS,
) -> Verdict:
    """
    Decides x in s_u(X).

    Parameters
    ----------
    u: SeqSpec
        An integer sequence when x is a circle point,
        a finite eventually periodic one when x is a group element.
    x: CirclePoint | GroupElement
        The point to test.
    depth: int | None
        Overrides the orbit cap of `settings`.

    Returns
    -------
    Verdict
        Exact for rational points and finite groups;
        irrational points may give Unknown.

    Raises
    ------
    CharsubDomainError
        If u and x do not live on dual groups.
    """
    if depth is not None:
        settings = replace(settings, orbit_cap=depth)
    match x:
        case GroupElement():
            return _member_finite(u, x)
        case ExactRational() | CertifiedIrrational():
            if not is_integer_sequence(u):
                raise CharsubDomainError(f"{u} is not a sequence of characters of T")
        case _:
            raise CharsubDomainError(f"Not a point: {x!r}")

    if isinstance(x, ExactRational) and x.is_zero:
        return In(0, "x = 0 pairs trivially with every character")
    if isinstance(u, ExplicitPrefix):
        checked = len(u.terms) if depth is None else min(depth, len(u.terms))
        return Unknown(checked, "an explicit prefix carries no tail information")
    if isinstance(x, ExactRational):
        return _member_rational(u, x, settings)
    return _member_irrational(u, x, settings)


def _member_rational(u: SeqSpec, x: ExactRational, settings: Settings) -> Verdict:
    q = x.denominator
    try:
        orbit = residue_orbit(u, q, settings)
    except CharsubBudgetError as exc:
        _logger.info("Orbit search aborted: %s", exc)
        return Unknown(settings.orbit_cap, str(exc))
    if orbit.eventually_zero:
        return In(orbit.preperiod, f"{q} divides u_n for every n >= {orbit.preperiod}", orbit)
    delta = min(
        _rational_norm(Fraction(r * x.numerator, q)) for r in orbit.cycle if r % q
    )
    return NotIn(delta, f"the residue cycle mod {q} contains nonzero residues", orbit)


def _member_irrational(u: SeqSpec, x: CertifiedIrrational, settings: Settings) -> Verdict:
    if is_eventually_zero(u):
        return In(zero_tail_start(u), "u is eventually zero")
    orbit = integer_cycle(u)
    if orbit is None:
        return Unknown(0, "no tail decision for irrational points")
    bounds = [_certified_norm_lower_bound(c, x, settings) for c in set(orbit.cycle) if c]
    return NotIn(min(bounds), "u cycles through nonzero integers, x is irrational", orbit)


def _certified_norm_lower_bound(c: int, x: CertifiedIrrational, settings: Settings) -> Fraction:
    point = pair(c, x)
    bits = settings.chord_precision
    while bits <= _MAX_NORM_BITS:
        low = circle_norm(point, bits).lo
        if low > 0:
            return low
        bits *= 2
    raise CharsubBudgetError(f"Could not separate ||{c} x|| from 0")


def _member_finite(u: SeqSpec, x: GroupElement) -> Verdict:
    if not isinstance(u, FiniteEventuallyPeriodic):
        raise CharsubDomainError(f"{u} is not a sequence of characters of {x.group}")
    if u.group != x.group:
        raise CharsubDomainError(f"Shape mismatch: {u.group} vs {x.group}")
    canonical = u.canonical()
    prefix_values = [dual_pair_finite(chi, x) for chi in canonical.prefix]
    period_values = tuple(dual_pair_finite(chi, x) for chi in canonical.period)
    if all(value.is_zero for value in period_values):
        cutoff = max((n + 1 for n, v in enumerate(prefix_values) if not v.is_zero), default=0)
        return In(cutoff, "every period character annihilates x", period_values)
    delta = min(_rational_norm(v.value) for v in period_values if not v.is_zero)
    return NotIn(delta, "a period character does not annihilate x", period_values)


def recheck(
    verdict: Verdict,
    u: SeqSpec,
    x: CirclePoint | GroupElement,
    settings: Settings = DEFAULT_SETTINGS,
) -> bool:
    """
    Re-derives the evidence of a verdict from the terms of u.
    Unknown verdicts assert nothing and always pass.
    """
    match verdict, x:
        case Unknown(), _:
            return True
        case In(), ExactRational() if x.is_zero:
            return True
        case _, GroupElement():
            assert isinstance(u, FiniteEventuallyPeriodic)
            span = len(u.prefix) + len(u.period)
            values = [dual_pair_finite(chi, x) for chi in (*u.prefix, *u.period)]
            tail = [v for n, v in enumerate(values) if n >= len(u.prefix)]
            if isinstance(verdict, In):
                return all(values[n].is_zero for n in range(verdict.cutoff, span)) and all(
                    v.is_zero for v in tail
                )
            return any(_rational_norm(v.value) >= verdict.delta for v in tail)
        case _, ExactRational():
            orbit = verdict.evidence
            if not isinstance(orbit, Orbit) or orbit.modulus != x.denominator:
                return False
            for n in range(orbit.preperiod + 2 * len(orbit.cycle)):
                if eval_int(u, n) % orbit.modulus != orbit.residue(n):
                    return False
            if isinstance(verdict, In):
                return orbit.tail_residues(verdict.cutoff) == {0}
            return any(
                _rational_norm(Fraction(r * x.numerator, x.denominator)) >= verdict.delta
                for r in orbit.cycle
            )
        case In(), CertifiedIrrational():
            k = recurrence_order(u)
            return bool(is_eventually_zero(u)) and not any(
                eval_int(u, n) for n in range(verdict.cutoff, verdict.cutoff + 2 * k)
            )
        case NotIn(), CertifiedIrrational():
            orbit = verdict.evidence
            if not isinstance(orbit, Orbit):
                return False
            for n in range(orbit.preperiod + 2 * len(orbit.cycle)):
                if eval_int(u, n) != orbit.residue(n):
                    return False
            return any(
                _certified_norm_lower_bound(c, x, settings) >= verdict.delta
                for c in orbit.cycle
                if c
            )
    return False


def su_finite(group: FinAbGroup, u: FiniteEventuallyPeriodic) -> Subgroup:
    """
    s_u(X) for finite X: the common kernel of the period characters.

    Raises
    ------
    CharsubDomainError
        If u is not a sequence of characters of `group`.
    """
    if not isinstance(u, FiniteEventuallyPeriodic) or u.group != group:
        raise CharsubDomainError(f"{u} is not a sequence of characters of {group}")
    return kernel_of(group, u.canonical().period)


# --- Radical ---
@dataclass(frozen=True)
class IntegerSubgroup:
    """
    generator * Z, {0} for a zero generator.
    """

    generator: int

    def __post_init__(self) -> None:
        if self.generator < 0:
            raise CharsubDomainError("Subgroup generators of Z are nonnegative")

    def contains(self, n: int) -> bool:
        if self.generator == 0:
            return n == 0
        return n % self.generator == 0

    def is_subgroup_of(self, other: IntegerSubgroup) -> bool:
        return other.contains(self.generator)

    def __str__(self) -> str:
        match self.generator:
            case 0:
                return "{0}"
            case 1:
                return "Z"
            case g:
                return f"{g}Z"


@dataclass(frozen=True)
class RadicalBounds:
    certified_superset: IntegerSubgroup
    certified_subset: IntegerSubgroup


@dataclass(frozen=True)
class RadicalProfile:
    bounds: RadicalBounds
    map: bool | None
    minap: bool | None
    denominator_bound: int
    member_denominators: tuple[int, ...]
    undecided_denominators: tuple[int, ...]
    term_gcd: int
    family: str | None
    t_sequence_asserted: bool


def _divisibility_family(u: SeqSpec) -> str | None:
    """
    Closed forms certifying members with unbounded denominators.
    Subsequences keep every member of their base.
    """
    if isinstance(u, Subsequence):
        u = u.flattened().base
    match u:
        case Factorial(a=a) if a != 0:
            return "1/q is a member for every q (q divides a*n! for n >= q)"
        case Geometric(a=a, q=ratio) if a != 0 and abs(ratio) >= 2:
            return f"1/{abs(ratio)}^j is a member for every j"
    return None


def _is_dense(denominators: Iterable[int], resolution: int) -> bool:
    points = {Fraction(0)}
    for q in denominators:
        points.update(Fraction(p, q) for p in range(1, q) if gcd(p, q) == 1)
    ordered = sorted(points) + [Fraction(1)]
    return all(b - a <= Fraction(1, resolution) for a, b in zip(ordered, ordered[1:]))


def radical_profile(
    u: SeqSpec,
    denominator_bound: int,
    settings: Settings = DEFAULT_SETTINGS,
    extra_denominators: Iterable[int] = (),
    t_sequence: bool = False,
) -> RadicalProfile:
    """
    Two-sided bounds on the radical s_u(T)^⊥ in Z, and MAP / minAP flags,
    testing every rational p/q with q <= `denominator_bound`.
    The T-sequence property is the caller's assertion, recorded as is.

    Raises
    ------
    CharsubDomainError
        If u is not a closed form integer sequence.
    """
    if not is_integer_sequence(u) or isinstance(u, ExplicitPrefix):
        raise CharsubDomainError(f"{u} is not a closed form integer sequence")
    if denominator_bound < 1:
        raise CharsubDomainError("The denominator bound must be positive")
    trace = add_trace_if_enabled("radical profile", str(u), f"Q = {denominator_bound}")
    zero = IntegerSubgroup(0)
    if is_eventually_zero(u):
        return RadicalProfile(
            RadicalBounds(zero, zero),
            map=True,
            minap=False,
            denominator_bound=denominator_bound,
            member_denominators=tuple(range(1, denominator_bound + 1)),
            undecided_denominators=(),
            term_gcd=0,
            family="u is eventually zero, s_u(T) = T",
            t_sequence_asserted=t_sequence,
        )
    members: list[int] = []
    undecided: list[int] = []
    for q in sorted({*range(1, denominator_bound + 1), *extra_denominators}):
        try:
            orbit = residue_orbit(u, q, settings)
        except CharsubBudgetError:
            undecided.append(q)
            continue
        if orbit.eventually_zero:
            members.append(q)
    family = _divisibility_family(u)
    superset = zero if family is not None else IntegerSubgroup(lcm_all(members))
    generator = term_gcd(u, settings)
    dense = _is_dense([q for q in members if q <= denominator_bound], denominator_bound)
    if any(q > 1 for q in members) or generator != 1:
        minap: bool | None = False
    elif not undecided:
        minap = True
    else:
        minap = None
    if trace is not None:
        trace.comment(f"members with denominators {members}")
        trace.comment(f"superset {superset}")
    _logger.debug("Radical of %s: members %s, family %s", u, members, family)
    return RadicalProfile(
        RadicalBounds(superset, zero),
        map=True if dense else None,
        minap=minap,
        denominator_bound=denominator_bound,
        member_denominators=tuple(members),
        undecided_denominators=tuple(undecided),
        term_gcd=generator,
        family=family,
        t_sequence_asserted=t_sequence,
    )


# --- Radical transfer on finite models ---
@dataclass(frozen=True)
class RadicalTransfer:
    dually_closed: bool
    dually_embedded: bool
    n_G: Subgroup
    n_H: Subgroup
    lemma_holds: bool


def _closed_under_addition(chars: set[Character]) -> bool:
    return all(a + b in chars for a in chars for b in chars) and all(
        -a in chars for a in chars
    )


def radical_transfer_check(
    group: FinAbGroup,
    available: Subgroup,
    subgroup: Subgroup,
    available_on_subgroup: Subgroup | Iterable[Character] | None = None,
) -> RadicalTransfer:
    """
    Finite model of radical transfer: `available` (S <= Ĝ) are the
    characters of G, `available_on_subgroup` (T_H <= Ĥ) those of H,
    Ĥ being the dual of the abstract presentation of H. By default T_H
    is the set of restrictions of S.

    Raises
    ------
    CharsubDomainError
        If T_H is not a subgroup, or misses a restriction of S.
    """
    if not available.dual or available.ambient != group:
        raise CharsubDomainError("S must be a subgroup of the dual of G")
    if subgroup.dual or subgroup.ambient != group:
        raise CharsubDomainError("H must be a subgroup of G")
    presentation = subgroup.presentation()
    abstract = presentation.abstract
    restricted = Subgroup.generated_by(
        abstract,
        [presentation.restrict(Character.of(group, row)) for row in available.basis],
        dual=True,
    )
    match available_on_subgroup:
        case None:
            t_h = restricted
        case Subgroup():
            t_h = available_on_subgroup
        case _:
            chars = set(available_on_subgroup)
            if not chars or not _closed_under_addition(chars):
                raise CharsubDomainError("T_H is not closed under the group operation")
            t_h = Subgroup.generated_by(abstract, chars, dual=True)
    if not t_h.dual or t_h.ambient != abstract:
        raise CharsubDomainError(f"T_H must be a subgroup of the dual of {abstract}")
    if not restricted.is_subgroup_of(t_h):
        raise CharsubDomainError("T_H misses restrictions of available characters")

    n_g = annihilator(available)
    # ∩ ker χ over χ in S ∩ H^⊥ is (S ∩ H^⊥)^⊥ = S^⊥ + H
    dually_closed = n_g.is_subgroup_of(subgroup)
    dually_embedded = restricted == t_h
    n_h = Subgroup.generated_by(
        group, [presentation.embed(GroupElement.of(abstract, row)) for row in annihilator(t_h).basis]
    )
    add_trace_if_enabled(
        "radical transfer",
        f"dually closed: {dually_closed}",
        f"dually embedded: {dually_embedded}",
        f"n(G) = {n_g}",
        f"n(H) = {n_h}",
    )
    return RadicalTransfer(dually_closed, dually_embedded, n_g, n_h, n_g == n_h)
