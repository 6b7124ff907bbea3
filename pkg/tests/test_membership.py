"""
Unit tests for sequences, residue orbits and membership in s_u(X).

@date: 07.10.2026
@author: Baptiste Pestourie
"""

from __future__ import annotations

import itertools
from fractions import Fraction
from math import prod
from typing import Iterator

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from charsub.circle import ExactRational, ZERO, canonicalize, surd
from charsub.config import Settings
from charsub.finite_abelian import (
    Character,
    FinAbGroup,
    QuotientMap,
    Subgroup,
    annihilator,
    elements,
    quotient_by,
    subgroups,
)
from charsub.membership import (
    IntegerSubgroup,
    member_su,
    radical_profile,
    radical_transfer_check,
    recheck,
    su_finite,
)
from charsub.sequences import (
    ExplicitPrefix,
    Factorial,
    FiniteEventuallyPeriodic,
    Geometric,
    LinearRecurrence,
    SeqSpec,
    Subsequence,
    eval_term,
    is_eventually_zero,
    pushforward,
    residue_orbit,
    tail_divisor,
    term_gcd,
)
from charsub.utils import CharsubDomainError, VerdictKind
from charsub.verdicts import In, NotIn, Unknown

FIBONACCI = LinearRecurrence((1, 1), (0, 1))
NATURALS = LinearRecurrence((2, -1), (0, 1))
EVENTUALLY_ZERO = LinearRecurrence((0,), (5,))

CLOSED_FORMS: list[SeqSpec] = [
    Geometric(1, 2),
    Geometric(3, -2),
    Geometric(5, 1),
    Factorial(1),
    Factorial(6),
    FIBONACCI,
    NATURALS,
    EVENTUALLY_ZERO,
    LinearRecurrence((1, 0, 1), (1, 0, 2)),
]


def finper(group: FinAbGroup, prefix: list[int], period: list[int]) -> FiniteEventuallyPeriodic:
    return FiniteEventuallyPeriodic(
        group,
        tuple(group.character(c) for c in prefix),
        tuple(group.character(c) for c in period),
    )


@pytest.mark.parametrize(
    ["u", "n", "expected"],
    [
        (Geometric(1, 2), 10, 1024),
        (Factorial(1), 4, 24),
        (FIBONACCI, 10, 55),
        (NATURALS, 7, 7),
        (Subsequence(FIBONACCI, 2, 1), 2, 5),
        (ExplicitPrefix((5, 8, 13)), 2, 13),
    ],
)
def test_eval_term(u: SeqSpec, n: int, expected: int) -> None:
    assert eval_term(u, n) == expected


def test_eval_term_errors() -> None:
    with pytest.raises(CharsubDomainError):
        eval_term(ExplicitPrefix((5, 8, 13)), 3)
    with pytest.raises(CharsubDomainError):
        eval_term(FIBONACCI, -1)
    with pytest.raises(CharsubDomainError):
        Geometric(1, 0)


@pytest.mark.parametrize(
    ["u", "q", "preperiod", "cycle"],
    [
        (Geometric(1, 2), 3, 0, (1, 2)),
        (Factorial(1), 7, 7, (0,)),
        (Geometric(1, 2), 1, 0, (0,)),
        (Geometric(1, 2), 12, 2, (4, 8)),
        (EVENTUALLY_ZERO, 3, 1, (0,)),
    ],
)
def test_residue_orbit(u: SeqSpec, q: int, preperiod: int, cycle: tuple[int, ...]) -> None:
    orbit = residue_orbit(u, q)
    assert orbit.preperiod == preperiod
    assert orbit.cycle == cycle


def test_fibonacci_pisano_period() -> None:
    orbit = residue_orbit(FIBONACCI, 10)
    assert orbit.preperiod == 0
    assert len(orbit.cycle) == 60


def test_residue_orbit_errors() -> None:
    with pytest.raises(CharsubDomainError):
        residue_orbit(ExplicitPrefix((1, 2)), 3)
    with pytest.raises(CharsubDomainError):
        residue_orbit(Geometric(1, 2), 0)


@pytest.mark.parametrize("u", CLOSED_FORMS, ids=str)
@pytest.mark.parametrize("q", [1, 2, 6, 7, 10, 12])
def test_orbit_matches_terms(u: SeqSpec, q: int) -> None:
    orbit = residue_orbit(u, q)
    for n in range(60):
        assert orbit.residue(n) == eval_term(u, n) % q


@pytest.mark.parametrize("u", CLOSED_FORMS, ids=str)
@pytest.mark.parametrize(["step", "offset"], [(1, 0), (2, 1), (3, 5)])
def test_subsequence_orbit_matches_terms(u: SeqSpec, step: int, offset: int) -> None:
    v = Subsequence(u, step, offset)
    for q in (4, 9, 10):
        orbit = residue_orbit(v, q)
        for n in range(40):
            assert orbit.residue(n) == eval_term(u, step * n + offset) % q


def test_tail_divisor() -> None:
    assert term_gcd(NATURALS) == 1
    assert term_gcd(Geometric(6, 2)) == 6
    assert tail_divisor(Geometric(1, 2), 3) == 8
    assert tail_divisor(Factorial(1), 5) == 120
    assert tail_divisor(EVENTUALLY_ZERO, 1) == 0
    assert term_gcd(LinearRecurrence((1, 1), (4, 6))) == 2


@pytest.mark.parametrize(
    ["u", "expected"],
    [
        (EVENTUALLY_ZERO, True),
        (FIBONACCI, False),
        (Factorial(0), True),
        (Subsequence(LinearRecurrence((0, 1), (0, 1)), 2, 0), True),
        (ExplicitPrefix((0, 0)), None),
    ],
)
def test_is_eventually_zero(u: SeqSpec, expected: bool | None) -> None:
    assert is_eventually_zero(u) is expected


def test_member_su_examples() -> None:
    verdict = member_su(Geometric(1, 2), ExactRational(1, 3))
    assert isinstance(verdict, NotIn)
    assert verdict.delta == Fraction(1, 3)

    verdict = member_su(Factorial(1), ExactRational(5, 7))
    assert isinstance(verdict, In)
    assert verdict.cutoff == 7

    for u in CLOSED_FORMS:
        assert isinstance(member_su(u, ZERO), In)
    assert isinstance(member_su(EVENTUALLY_ZERO, surd(0, 1, 2, 1)), In)
    assert member_su(EVENTUALLY_ZERO, ExactRational(2, 3)).kind is VerdictKind.IN


def test_member_su_explicit_prefix_is_unknown() -> None:
    verdict = member_su(ExplicitPrefix((5, 8, 13)), ExactRational(1, 3))
    assert isinstance(verdict, Unknown)
    assert verdict.depth == 3
    assert isinstance(member_su(ExplicitPrefix((5, 8, 13)), ZERO), In)


def test_member_su_irrational() -> None:
    root2 = surd(0, 1, 2, 1)
    verdict = member_su(Geometric(1, 1), root2)
    assert isinstance(verdict, NotIn)
    assert Fraction(41, 100) < verdict.delta <= Fraction(4143, 10000)
    assert recheck(verdict, Geometric(1, 1), root2)
    assert isinstance(member_su(Geometric(1, 2), root2), Unknown)


def test_member_su_budget_gives_unknown() -> None:
    verdict = member_su(FIBONACCI, ExactRational(1, 1009), depth=10)
    assert isinstance(verdict, Unknown)
    assert verdict.kind.exit_code == 2


def test_member_su_domain_errors() -> None:
    z4 = FinAbGroup((4,))
    with pytest.raises(CharsubDomainError):
        member_su(Geometric(1, 2), z4.element(1))
    with pytest.raises(CharsubDomainError):
        member_su(finper(z4, [], [2]), ExactRational(1, 2))
    with pytest.raises(CharsubDomainError):
        member_su(finper(z4, [], [2]), FinAbGroup((2,)).element(1))


@pytest.mark.parametrize("u", CLOSED_FORMS, ids=str)
def test_verdicts_recheck(u: SeqSpec) -> None:
    for q in range(1, 25):
        for p in range(q):
            x = canonicalize(p, q)
            verdict = member_su(u, x)
            assert not isinstance(verdict, Unknown)
            assert recheck(verdict, u, x)


@pytest.mark.parametrize("u", CLOSED_FORMS, ids=str)
def test_subsequence_monotonicity(u: SeqSpec) -> None:
    subsequences = [Subsequence(u, 2, 0), Subsequence(u, 3, 1), Subsequence(Subsequence(u, 2, 1), 2, 3)]
    for q in range(1, 30):
        x = ExactRational(1, q) if q > 1 else ZERO
        if isinstance(member_su(u, x), In):
            for v in subsequences:
                assert isinstance(member_su(v, x), In)


def test_su_finite_examples() -> None:
    z4 = FinAbGroup((4,))
    assert set(su_finite(z4, finper(z4, [], [2])).elements()) == {z4.element(0), z4.element(2)}
    z8 = FinAbGroup((8,))
    assert su_finite(z8, finper(z8, [1, 2, 4], [0])) == Subgroup.whole(z8)
    z2z4 = FinAbGroup((2, 4))
    faithful = FiniteEventuallyPeriodic(z2z4, (), tuple(z2z4.character_basis()))
    assert su_finite(z2z4, faithful) == Subgroup.trivial(z2z4)


def test_su_finite_triviality_criterion() -> None:
    for n in range(2, 25):
        group = FinAbGroup.cyclic(n)
        for length in (1, 2, 3):
            for period in itertools.combinations_with_replacement(range(n), length):
                u = finper(group, [], list(period))
                is_whole = su_finite(group, u) == Subgroup.whole(group)
                assert is_whole == all(c == 0 for c in period)


@settings(max_examples=40, deadline=None)
@given(
    st.sampled_from([(4,), (2, 4), (2, 2, 2), (8,), (3, 6), (4, 4), (2, 2, 4)]),
    st.lists(st.integers(0, 63), min_size=1, max_size=3),
    st.lists(st.integers(0, 63), min_size=0, max_size=2),
)
def test_su_finite_is_a_subgroup(factors: tuple[int, ...], period: list[int], prefix: list[int]) -> None:
    group = FinAbGroup(factors)
    chars = list(elements(group))

    def character(i: int) -> Character:
        return group.character(*chars[i % len(chars)].coords)

    u = FiniteEventuallyPeriodic(
        group, tuple(map(character, prefix)), tuple(map(character, period))
    )
    members = set(su_finite(group, u).elements())
    assert all(a + b in members and -a in members for a in members for b in members)
    for x in elements(group):
        verdict = member_su(u, x)
        assert isinstance(verdict, In) == (x in members)
        assert recheck(verdict, u, x)


def test_radical_profile_factorial() -> None:
    profile = radical_profile(Factorial(1), 50)
    assert profile.bounds.certified_superset == IntegerSubgroup(0)
    assert profile.map is True
    assert profile.minap is False
    assert profile.member_denominators == tuple(range(1, 51))


def test_radical_profile_naturals() -> None:
    profile = radical_profile(NATURALS, 50, t_sequence=True)
    assert profile.member_denominators == (1,)
    assert profile.bounds.certified_superset == IntegerSubgroup(1)
    assert profile.minap is True
    assert profile.map is None
    assert profile.term_gcd == 1
    assert profile.t_sequence_asserted


def test_radical_profile_eventually_zero() -> None:
    profile = radical_profile(EVENTUALLY_ZERO, 10)
    assert profile.bounds.certified_superset == profile.bounds.certified_subset == IntegerSubgroup(0)
    assert profile.map is True


def test_radical_profile_geometric() -> None:
    profile = radical_profile(Geometric(1, 2), 20, extra_denominators=[2**j for j in range(11)])
    assert profile.member_denominators == (1, 2, 4, 8, 16, 32, 64, 128, 256, 512, 1024)
    assert profile.bounds.certified_superset == IntegerSubgroup(0)
    assert profile.family is not None
    assert profile.map is None
    assert profile.minap is False


def test_radical_profile_without_family() -> None:
    # u_n = 6 * n: members are p/q with q | 6
    profile = radical_profile(LinearRecurrence((2, -1), (0, 6)), 12)
    assert profile.member_denominators == (1, 2, 3, 6)
    assert profile.bounds.certified_superset == IntegerSubgroup(6)
    assert profile.minap is False


def test_integer_subgroup() -> None:
    assert str(IntegerSubgroup(0)) == "{0}"
    assert str(IntegerSubgroup(1)) == "Z"
    assert str(IntegerSubgroup(6)) == "6Z"
    assert IntegerSubgroup(6).is_subgroup_of(IntegerSubgroup(3))
    assert not IntegerSubgroup(3).is_subgroup_of(IntegerSubgroup(6))


def test_pushforward() -> None:
    z4 = FinAbGroup((4,))
    target, projection = quotient_by(z4, Subgroup.generated_by(z4, [(2,)], dual=True))
    image = pushforward(finper(z4, [], [2]), projection)
    assert image.group == target == FinAbGroup((2,))
    assert image.is_trivial

    u = finper(z4, [1, 3], [1, 2])
    assert pushforward(u, QuotientMap.identity_of(z4, dual=True)) == u
    assert pushforward(finper(z4, [], [0]), projection).is_trivial
    shrunk = pushforward(finper(z4, [1], [1, 3]), projection)
    assert len(shrunk.period) == 2
    assert len(shrunk.canonical().period) == 1
    assert shrunk.canonical().prefix == ()

    with pytest.raises(CharsubDomainError):
        pushforward(finper(FinAbGroup((2,)), [], [1]), projection)


def test_radical_transfer_examples() -> None:
    z4 = FinAbGroup((4,))
    s = Subgroup.generated_by(z4, [(2,)], dual=True)
    h = Subgroup.generated_by(z4, [(2,)])
    report = radical_transfer_check(z4, s, h)
    assert report.dually_closed and report.dually_embedded
    assert report.n_G == report.n_H == h
    assert report.lemma_holds

    full = Subgroup.whole(h.presentation().abstract, dual=True)
    report = radical_transfer_check(z4, s, h, full)
    assert not report.dually_embedded
    assert report.n_H == Subgroup.trivial(z4)
    assert report.n_G == h
    assert not report.lemma_holds

    report = radical_transfer_check(z4, Subgroup.whole(z4, dual=True), h)
    assert report.n_G == report.n_H == Subgroup.trivial(z4)


def test_radical_transfer_rejects_non_subgroup() -> None:
    z4 = FinAbGroup((4,))
    h = Subgroup.generated_by(z4, [(2,)])
    abstract = h.presentation().abstract
    with pytest.raises(CharsubDomainError):
        radical_transfer_check(
            z4, Subgroup.whole(z4, dual=True), h, [abstract.character(1)]
        )


def divisibility_chains(max_order: int, chain: tuple[int, ...] = ()) -> Iterator[tuple[int, ...]]:
    """
    Every invariant factor chain d_1 | ... | d_r with d_1 >= 2 and
    d_1 * ... * d_r <= max_order.
    """
    if chain:
        yield chain
    budget = max_order // prod(chain)
    if chain:
        candidates = range(chain[-1], budget + 1, chain[-1])
    else:
        candidates = range(2, budget + 1)
    for d in candidates:
        yield from divisibility_chains(max_order, (*chain, d))


CHAINS_UP_TO_32 = list(divisibility_chains(32))


def dual_lattice(group: FinAbGroup) -> list[Subgroup]:
    return [Subgroup(group, h.basis, dual=True) for h in subgroups(group, Settings())]


def test_divisibility_chains() -> None:
    assert list(divisibility_chains(4)) == [(2,), (2, 2), (3,), (4,)]
    orders = [prod(chain) for chain in CHAINS_UP_TO_32]
    # abelian groups of order 32, 24 and 16 up to isomorphism
    assert orders.count(32) == 7 and orders.count(24) == 3 and orders.count(16) == 5
    assert len(CHAINS_UP_TO_32) == len(set(CHAINS_UP_TO_32))


@pytest.mark.parametrize("factors", CHAINS_UP_TO_32, ids=str)
def test_radical_transfer_exhaustive(factors: tuple[int, ...]) -> None:
    group = FinAbGroup(factors)
    lattice = subgroups(group, Settings())
    for s in dual_lattice(group):
        for h in lattice:
            report = radical_transfer_check(group, s, h)
            assert report.dually_embedded
            assert report.n_G == annihilator(s)
            if report.dually_closed:
                assert report.lemma_holds


@pytest.mark.parametrize(
    "factors", [chain for chain in CHAINS_UP_TO_32 if prod(chain) <= 12], ids=str
)
def test_radical_transfer_over_subgroup_characters(factors: tuple[int, ...]) -> None:
    group = FinAbGroup(factors)
    lattice = subgroups(group, Settings())
    violations = 0
    for s in dual_lattice(group):
        for h in lattice:
            restricted = radical_transfer_check(group, s, h)
            for t_h in dual_lattice(h.presentation().abstract):
                try:
                    report = radical_transfer_check(group, s, h, t_h)
                except CharsubDomainError:
                    # T_H misses a restriction of S
                    continue
                assert report.dually_closed == restricted.dually_closed
                assert report.dually_embedded == (report.n_H == restricted.n_H)
                if report.dually_closed and report.dually_embedded:
                    assert report.lemma_holds
                if not report.dually_embedded and not report.lemma_holds:
                    violations += 1
    # S = {0} with T_H = Ĥ already breaks the conclusion for H = G
    assert violations > 0
