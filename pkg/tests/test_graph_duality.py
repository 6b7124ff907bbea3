"""
Unit tests for the graph subgroup G_u and its dual side.

@date: 10.10.2026
@author: Baptiste Pestourie
"""

from __future__ import annotations

import dataclasses
import itertools
from fractions import Fraction

import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from charsub.circle import ExactRational, ZERO, canonicalize
from charsub.config import Settings
from charsub.finite_abelian import (
    FinAbGroup,
    GroupElement,
    Subgroup,
    annihilator,
    characters,
    elements,
)
from charsub.graph_duality import (
    ContinuityCertificate,
    DecompositionTerm,
    GraphPoint,
    akm_exhaustion,
    continuity_certificate,
    enumerate_Akm,
    graph_point,
    gu_perp_generators,
    L_i_subgroup,
    neighborhood_member,
    restrict_to_closure,
    separate_point,
)
from charsub.sequence_groups import ZInfElem
from charsub.sequences import (
    ExplicitPrefix,
    Factorial,
    FiniteEventuallyPeriodic,
    Geometric,
    LinearRecurrence,
    SeqSpec,
    eval_int,
)
from charsub.utils import CharsubBudgetError, CharsubDomainError
from charsub.verdicts import In, NotIn, Unknown

Z2 = FinAbGroup((2,))
Z4 = FinAbGroup((4,))
NATURALS = LinearRecurrence((2, -1), (0, 1))
DESK_GROUPS = [FinAbGroup((2,)), FinAbGroup((4,)), FinAbGroup((6,)), FinAbGroup((2, 2)), FinAbGroup((2, 4))]


def finper(group: FinAbGroup, prefix: list[int], period: list[int]) -> FiniteEventuallyPeriodic:
    return FiniteEventuallyPeriodic(
        group,
        tuple(group.character(c) for c in prefix),
        tuple(group.character(c) for c in period),
    )


def graph_coordinates(group: FinAbGroup, u: SeqSpec, x: GroupElement, depth: int) -> GroupElement:
    m = group.exponent
    trace = [int(z.value * m) for z in graph_point(x, u, depth).trace]
    return GroupElement.of(group.extended(m, depth), [*x.coords, *trace])


@st.composite
def desk_sequences(draw: st.DrawFn) -> tuple[FinAbGroup, FiniteEventuallyPeriodic]:
    group = draw(st.sampled_from(DESK_GROUPS))
    pool = list(characters(group))
    prefix = draw(st.lists(st.sampled_from(pool), max_size=2))
    period = draw(st.lists(st.sampled_from(pool), min_size=1, max_size=4 - len(prefix)))
    return group, FiniteEventuallyPeriodic(group, tuple(prefix), tuple(period))


def test_graph_point_examples() -> None:
    point = graph_point(Z4.element(1), finper(Z4, [], [2]), 3)
    assert point.trace == (ExactRational(1, 2),) * 3
    assert point.base == Z4.element(1)

    point = graph_point(ExactRational(1, 3), Geometric(1, 2), 4)
    assert point.trace == (
        ExactRational(2, 3),
        ExactRational(1, 3),
        ExactRational(2, 3),
        ExactRational(1, 3),
    )
    assert point.coordinate(2) == ExactRational(1, 3)

    assert graph_point(ZERO, Factorial(1), 5).trace == (ZERO,) * 5
    with pytest.raises(CharsubDomainError):
        point.coordinate(0)


def test_L_i_examples() -> None:
    L = L_i_subgroup(Z2, finper(Z2, [], [1]), 1)
    assert L.ambient == FinAbGroup((2, 2))
    assert set(L.elements()) == {L.ambient.element(0, 0), L.ambient.element(1, 1)}

    L = L_i_subgroup(Z4, finper(Z4, [], [2]), 1)
    assert L == Subgroup.generated_by(FinAbGroup((4, 4)), [(1, 2)])

    group = FinAbGroup((2, 4))
    assert L_i_subgroup(group, finper(group, [], [0]), 0) == Subgroup.whole(group)


@settings(max_examples=30, deadline=None)
@given(desk_sequences(), st.integers(0, 3))
def test_L_i_is_the_graph_image(case: tuple[FinAbGroup, FiniteEventuallyPeriodic], i: int) -> None:
    group, u = case
    L = L_i_subgroup(group, u, i)
    assert set(L.elements()) == {graph_coordinates(group, u, x, i) for x in elements(group)}
    assert L.order == group.order


def test_separate_point_examples() -> None:
    u = finper(Z2, [], [1])
    separator = separate_point(Z2, u, Z2.element(1), [0])
    assert separator.base_char == Z2.character(1)
    assert separator.tail == ZInfElem.unit(1)
    assert separator.record.value == ExactRational(1, 2)
    assert separator.record.in_annihilator
    assert separator.pair_with(GraphPoint(Z2.element(1), (ZERO,))) == ExactRational(1, 2)

    u = finper(Z4, [], [2])
    separator = separate_point(Z4, u, Z4.element(1), [0])
    perp = annihilator(L_i_subgroup(Z4, u, 1))
    assert perp.contains(FinAbGroup((4, 4)).character(*separator.base_char.coords, 1))
    assert separator.record.value == ExactRational(1, 2)


def test_separate_point_on_graph() -> None:
    u = finper(Z4, [], [2])
    with pytest.raises(CharsubDomainError):
        separate_point(Z4, u, Z4.element(1), [Fraction(1, 2), Fraction(1, 2)])
    with pytest.raises(CharsubDomainError):
        separate_point(Z4, u, Z4.element(1), [])


def test_separate_point_on_the_circle() -> None:
    u = Geometric(1, 2)
    x = ExactRational(1, 3)
    claim = (ExactRational(2, 3), ZERO)
    separator = separate_point(None, u, x, claim)
    assert separator.base_char == -4
    assert separator.tail == ZInfElem.unit(2)
    assert separator.pair_with(GraphPoint(x, claim)) == ExactRational(2, 3)
    for y in (ExactRational(1, 5), ExactRational(3, 7), ZERO):
        assert separator.pair_with(graph_point(y, u, 2)) == ZERO


@settings(max_examples=1000, deadline=None)
@given(desk_sequences(), st.data())
def test_separate_point_is_complete_and_sound(
    case: tuple[FinAbGroup, FiniteEventuallyPeriodic], data: st.DataObject
) -> None:
    group, u = case
    m = group.exponent
    x = data.draw(st.sampled_from(list(elements(group))))
    claim = tuple(
        canonicalize(a, m)
        for a in data.draw(st.lists(st.integers(0, m - 1), min_size=3, max_size=3))
    )
    on_graph = graph_point(x, u, 3)
    assume(claim != on_graph.trace)
    separator = separate_point(group, u, x, claim)
    assert separator.record.verified
    assert separator.pair_with(GraphPoint(x, claim)) != ZERO
    depth = separator.record.depth
    for y in elements(group):
        assert separator.pair_with(graph_point(y, u, depth)) == ZERO


def test_gu_perp_precondition() -> None:
    with pytest.raises(CharsubDomainError):
        gu_perp_generators(Z2, finper(Z2, [], [1, 0]), 3)


def test_gu_perp_generators() -> None:
    u = finper(Z2, [0, 1], [0])
    perp = gu_perp_generators(Z2, u, 3)
    assert perp.generators == (
        (Z2.character(1), ZInfElem.unit(1)),
        (Z2.character(0), ZInfElem.unit(2)),
        (Z2.character(0), ZInfElem.unit(3)),
    )
    assert perp.annihilates_graph()
    assert all(perp.relation_one(n) for n in range(1, 4))
    assert perp.contains(Z2.character(1), ZInfElem.unit(1))
    assert not perp.contains(Z2.character(1), ZInfElem())
    assert perp.contains(Z2.character(0), ZInfElem.unit(2))
    with pytest.raises(CharsubDomainError):
        perp.contains(Z2.character(0), ZInfElem.unit(4))


def test_gu_perp_relation_one_checks_the_generators() -> None:
    u = finper(Z4, [1, 3, 1], [0])
    perp = gu_perp_generators(Z4, u, 3)
    assert all(perp.relation_one(n) for n in range(1, 4))
    assert perp.contains(Z4.character(2), ZInfElem.from_mapping({1: -1, 3: -1}))
    assert not perp.contains(Z4.character(1), ZInfElem.from_mapping({1: -1, 3: -1}))
    # (u_k; e_k) instead of (-u_k; e_k)
    flipped = dataclasses.replace(
        perp, generators=tuple((-chi, tail) for chi, tail in perp.generators)
    )
    assert not any(flipped.relation_one(n) for n in range(1, 4))
    missing = dataclasses.replace(perp, generators=perp.generators[:2])
    assert missing.relation_one(1) and missing.relation_one(2)
    assert not missing.relation_one(3)


def test_gu_perp_trivial_sequence() -> None:
    perp = gu_perp_generators(Z4, finper(Z4, [], [0]), 4)
    assert all(chi.is_zero for chi, _ in perp.generators)
    assert perp.annihilates_graph()


def test_restrict_to_closure_examples() -> None:
    restriction = restrict_to_closure(Z4, finper(Z4, [], [2]))
    assert restriction.subgroup == Subgroup.generated_by(Z4, [(2,)])
    assert restriction.presentation.abstract == Z2
    assert restriction.sequence.period == (Z2.character(0),)

    assert restrict_to_closure(Z2, finper(Z2, [], [1])).subgroup.order == 1

    restriction = restrict_to_closure(Z4, finper(Z4, [3], [0]))
    assert restriction.subgroup == Subgroup.whole(Z4)
    assert restriction.presentation.abstract.order == 4


@settings(max_examples=30, deadline=None)
@given(desk_sequences())
def test_restriction_makes_the_sequence_dense(case: tuple[FinAbGroup, FiniteEventuallyPeriodic]) -> None:
    group, u = case
    restriction = restrict_to_closure(group, u)
    Y = restriction.presentation.abstract
    perp = gu_perp_generators(Y, restriction.sequence, 4)
    assert perp.annihilates_graph()
    assert all(perp.relation_one(n) for n in range(1, 5))


def test_enumerate_Akm_examples() -> None:
    assert enumerate_Akm(Geometric(1, 3), 1, 0, 2) == {1, -1, 3, -3, 9, -9}
    assert enumerate_Akm(ExplicitPrefix((0, 0, 0)), 3, 0, 2) == {0}
    assert enumerate_Akm(finper(Z4, [], [1]), 2, 0, 3) == set(characters(Z4))
    assert enumerate_Akm(Geometric(1, 3), 1, 3, 2) == frozenset()


@pytest.mark.parametrize("k", [1, 2, 3])
@pytest.mark.parametrize("m", [0, 1])
def test_enumerate_Akm_against_brute_force(k: int, m: int) -> None:
    u = Geometric(1, 3)
    N = 3
    terms = [eval_int(u, r) for r in range(m, N + 1)]
    expected = {
        sum(c * t for c, t in zip(coeffs, terms))
        for coeffs in itertools.product(range(-k, k + 1), repeat=len(terms))
        if 1 <= sum(map(abs, coeffs)) <= k
    }
    assert enumerate_Akm(u, k, m, N) == expected


def test_enumerate_Akm_monotonicity() -> None:
    u = NATURALS
    for k in (1, 2):
        assert enumerate_Akm(u, k, 0, 4) <= enumerate_Akm(u, k + 1, 0, 4)
        assert enumerate_Akm(u, k, 0, 4) <= enumerate_Akm(u, k, 0, 5)
    assert {eval_int(u, n) for n in range(2, 6)} <= enumerate_Akm(u, 1, 2, 5)


def test_enumerate_Akm_errors() -> None:
    with pytest.raises(CharsubDomainError):
        enumerate_Akm(Geometric(1, 3), 0, 0, 2)
    with pytest.raises(CharsubBudgetError):
        enumerate_Akm(Geometric(1, 3), 1, 0, 2, Settings(enumeration_cap=3))


def test_akm_exhaustion() -> None:
    u = Geometric(1, 3)
    assert akm_exhaustion(u, {4}, 3, 4).budget == 2
    assert akm_exhaustion(u, {3, 9}, 3, 4).budget == 1
    assert akm_exhaustion(u, {0}, 3, 4).budget == 1
    result = akm_exhaustion(u, {1000}, 2, 3)
    assert not result.found
    assert result.uncovered == 1000


def test_neighborhood_member_examples() -> None:
    u = Geometric(1, 3)
    result = neighborhood_member(u, (0, 4), 9 + 243)
    assert isinstance(result.verdict, In)
    assert result.decomposition == (DecompositionTerm(0, 2, 1), DecompositionTerm(1, 5, 1))

    result = neighborhood_member(u, (2, 3), 1)
    assert result.verdict == NotIn(Fraction(1, 9), "every element of U is divisible by 9")
    assert result.modulus == 9

    result = neighborhood_member(u, (2, 3), 0)
    assert isinstance(result.verdict, In)
    assert all(term.coefficient == 0 for term in result.decomposition or ())


def test_neighborhood_member_unknown() -> None:
    u = Geometric(1, 3)
    assert isinstance(neighborhood_member(u, (0,), 2).verdict, Unknown)
    starved = neighborhood_member(u, (0, 4), 252, settings=Settings(search_budget=1))
    assert isinstance(starved.verdict, Unknown)
    with pytest.raises(CharsubDomainError):
        neighborhood_member(u, (3, 3), 1)


def test_neighborhood_member_finite() -> None:
    u = finper(Z4, [], [2])
    assert isinstance(neighborhood_member(u, (0, 1), Z4.character(1)).verdict, NotIn)
    result = neighborhood_member(u, (0, 1), Z4.character(2))
    assert isinstance(result.verdict, In)
    assert result.decomposition == (DecompositionTerm(0, 0, 1),)


@settings(max_examples=60, deadline=None)
@given(
    st.sampled_from([Geometric(1, 2), Geometric(1, 3), NATURALS]),
    st.integers(0, 3),
    st.integers(1, 3),
    st.lists(st.tuples(st.integers(0, 3), st.sampled_from([-1, 0, 1])), min_size=2, max_size=2),
)
def test_neighborhood_member_recovers_samples(
    u: SeqSpec, n0: int, gap: int, choices: list[tuple[int, int]]
) -> None:
    cutoffs = (n0, n0 + gap)
    y = sum(sign * eval_int(u, n + shift) for n, (shift, sign) in zip(cutoffs, choices))
    result = neighborhood_member(u, cutoffs, y)
    assert isinstance(result.verdict, In)
    assert result.decomposition is not None
    assert sum(t.coefficient * eval_int(u, t.index) for t in result.decomposition) == y
    assert all(t.index >= cutoffs[t.slot] for t in result.decomposition)


def test_continuity_certificate() -> None:
    certificate = continuity_certificate(Factorial(1), ExactRational(1, 6), Fraction(1, 10))
    assert isinstance(certificate, ContinuityCertificate)
    assert certificate.cutoffs[:3] == (3, 4, 5)
    assert certificate.holds
    assert certificate.max_chord == 0

    certificate = continuity_certificate(Geometric(1, 2), ZERO, Fraction(1, 10))
    assert isinstance(certificate, ContinuityCertificate)
    assert certificate.cutoffs[0] == 0

    certificate = continuity_certificate(Geometric(1, 2), ExactRational(3, 8), Fraction(1, 100), levels=4)
    assert isinstance(certificate, ContinuityCertificate)
    assert certificate.cutoffs == (3, 4, 5, 6)
    assert certificate.holds


def test_continuity_certificate_outside_su() -> None:
    verdict = continuity_certificate(Geometric(1, 2), ExactRational(1, 3), Fraction(1, 10))
    assert isinstance(verdict, NotIn)
    assert verdict.delta == Fraction(1, 3)
    with pytest.raises(CharsubDomainError):
        continuity_certificate(Geometric(1, 2), ZERO, Fraction(0))
