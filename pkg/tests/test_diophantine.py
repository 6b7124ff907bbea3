"""
Unit tests for integer relations, Kronecker scans and ℓ1 word checks.

@date: 12.10.2026
@author: Baptiste Pestourie
"""

from __future__ import annotations

import itertools
from fractions import Fraction

import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from charsub.circle import (
    CertifiedIrrational,
    ExactRational,
    add,
    canonicalize,
    circle_norm,
    pair,
    surd,
)
from charsub.config import Settings
from charsub.diophantine import (
    KroneckerSolution,
    NoneFound,
    NotFoundWithin,
    RelationAmbiguous,
    RelationCertificate,
    delannoy,
    independence_gate,
    integer_relation,
    kronecker_char_search,
    l1_ball,
    l1_word_check,
    symbolic_residual,
    verify_solution,
)
from charsub.utils import CharsubBudgetError, CharsubDomainError, DependentInputError

SQRT2 = surd(0, 1, 2, 1)
SQRT3 = surd(0, 1, 3, 1)
SQRT8 = surd(0, 1, 8, 1)
HALF = canonicalize(1, 2)

# exact points with small relations between them
POOL = [
    canonicalize(1, 2),
    canonicalize(1, 3),
    canonicalize(1, 6),
    canonicalize(2, 5),
    SQRT2,
    SQRT8,
    SQRT3,
    surd(1, 1, 2, 2),
    surd(1, 3, 3, 4),
]


def generic(x: CertifiedIrrational) -> CertifiedIrrational:
    """
    The same point without its surd descriptor.
    """
    return CertifiedIrrational(x.floor_scaled, None, f"generic {x}")


def brute_force_relation(xs: list, height: int) -> tuple[int, ...] | None:
    best = None
    for v in itertools.product(range(-height, height + 1), repeat=len(xs)):
        if not any(v) or next(c for c in v if c) < 0:
            continue
        total = sp.expand(sum((n * _sym(x) for n, x in zip(v, xs)), sp.Integer(0)))
        if total.is_Integer:
            key = (max(map(abs, v)), sum(map(abs, v)), v)
            if best is None or key < best:
                best = key
    return best[2] if best is not None else None


def _sym(x) -> sp.Expr:
    if isinstance(x, ExactRational):
        return sp.Rational(x.numerator, x.denominator)
    return x.descriptor.to_sympy()


# --- Relations ---
@pytest.mark.parametrize(
    "xs, expected",
    [
        ([canonicalize(1, 3), canonicalize(1, 6)], (1, -2)),
        ([SQRT2, SQRT8], (2, -1)),
        ([HALF], (2,)),
        ([canonicalize(0, 1)], (1,)),
        ([canonicalize(1, 4), canonicalize(3, 4)], (1, 1)),
    ],
)
def test_exact_relations(xs: list, expected: tuple[int, ...]) -> None:
    outcome = integer_relation(xs, height=10)
    assert isinstance(outcome, RelationCertificate)
    assert outcome.coefficients == expected
    assert outcome.exact and outcome.minimal
    assert outcome.residual.is_exact and outcome.residual.lo == 0
    assert symbolic_residual(outcome.coefficients, xs) == 0


def test_relation_above_the_height() -> None:
    outcome = integer_relation([canonicalize(1, 7)], height=6)
    assert outcome == NoneFound(6, 64, exact=True)


def test_independent_surds_have_no_relation_at_all() -> None:
    outcome = integer_relation([SQRT2, SQRT3], height=1000)
    assert isinstance(outcome, NoneFound)
    assert outcome.exact and outcome.unbounded


def test_relation_errors() -> None:
    with pytest.raises(CharsubDomainError):
        integer_relation([], height=3)
    with pytest.raises(CharsubDomainError):
        integer_relation([HALF], height=0)


@settings(max_examples=25, deadline=None)
@given(
    st.lists(st.sampled_from(POOL), min_size=1, max_size=2),
    st.integers(min_value=1, max_value=5),
)
def test_exact_relation_matches_brute_force(xs: list, height: int) -> None:
    expected = brute_force_relation(xs, height)
    outcome = integer_relation(xs, height)
    if expected is None:
        assert isinstance(outcome, NoneFound) and outcome.exact
    else:
        assert isinstance(outcome, RelationCertificate)
        assert outcome.coefficients == expected


def test_generic_relation_cannot_be_certified() -> None:
    # √2 + √3 loses its descriptor, so the relation is only observed numerically
    mixed = add(SQRT2, SQRT3)
    assert isinstance(mixed, CertifiedIrrational) and mixed.descriptor is None
    outcome = integer_relation([mixed, SQRT2, SQRT3], height=10)
    assert isinstance(outcome, RelationAmbiguous)
    assert outcome.candidate == (1, -1, -1)
    assert outcome.residual.lo == 0


def test_generic_point_certified_free() -> None:
    outcome = integer_relation([generic(SQRT2)], height=5)
    assert isinstance(outcome, NoneFound)
    assert not outcome.exact
    # ‖5√2‖ is the closest approach up to height 5
    assert outcome.lower_bound is not None
    assert Fraction(7, 100) < outcome.lower_bound < Fraction(72, 1000)


def test_generic_search_budget() -> None:
    points = [generic(SQRT2), generic(SQRT3)]
    with pytest.raises(CharsubBudgetError):
        integer_relation(points, height=10, settings=Settings(search_budget=100))


def test_independence_gate() -> None:
    assert independence_gate([SQRT2, SQRT3], 50).unbounded
    with pytest.raises(DependentInputError) as exc_info:
        independence_gate([SQRT2, SQRT8], 50)
    assert exc_info.value.relation == (2, -1)


# --- Kronecker scans ---
@pytest.mark.parametrize("eps, expected", [(Fraction(1, 10), 5), (Fraction(1, 100), 70)])
def test_kronecker_first_character(eps: Fraction, expected: int) -> None:
    outcome = kronecker_char_search([SQRT2], None, eps, scan_max=1000)
    assert isinstance(outcome, KroneckerSolution)
    assert outcome.character == expected
    assert outcome.gate_height == 100
    assert all(norm.certainly_below(eps) for norm in outcome.achieved)
    assert verify_solution(outcome, [SQRT2])


def test_kronecker_not_found() -> None:
    outcome = kronecker_char_search([SQRT2], None, Fraction(1, 1000), scan_max=10)
    assert outcome == NotFoundWithin(10, Fraction(1, 1000), 100)


def test_kronecker_rejects_dependent_points() -> None:
    with pytest.raises(DependentInputError) as exc_info:
        kronecker_char_search([HALF], None, Fraction(1, 10), scan_max=100)
    assert exc_info.value.relation == (2,)


def test_kronecker_input_errors() -> None:
    with pytest.raises(CharsubDomainError):
        kronecker_char_search([SQRT2], None, Fraction(0), scan_max=10)
    with pytest.raises(CharsubDomainError):
        kronecker_char_search([SQRT2], [HALF, HALF], Fraction(1, 10), scan_max=10)


def test_kronecker_with_targets() -> None:
    targets = [HALF, HALF]
    eps = Fraction(1, 20)
    outcome = kronecker_char_search([SQRT2, SQRT3], targets, eps, scan_max=10**6)
    assert isinstance(outcome, KroneckerSolution)
    assert verify_solution(outcome, [SQRT2, SQRT3], targets)
    for x in (SQRT2, SQRT3):
        offset = add(pair(outcome.character, x), HALF)
        assert circle_norm(offset, 60).certainly_below(eps)


def test_parallel_scan_agrees_with_sequential() -> None:
    eps = Fraction(1, 100)
    sequential = kronecker_char_search([SQRT2], None, eps, scan_max=200)
    parallel = kronecker_char_search([SQRT2], None, eps, scan_max=200, settings=Settings(workers=3))
    assert isinstance(parallel, KroneckerSolution)
    assert parallel.character == sequential.character == 70


@settings(max_examples=20, deadline=None)
@given(st.integers(min_value=2, max_value=60))
def test_kronecker_character_is_minimal(denominator: int) -> None:
    eps = Fraction(1, denominator)
    outcome = kronecker_char_search([SQRT3], None, eps, scan_max=10**4)
    assert isinstance(outcome, KroneckerSolution)
    for n in range(1, outcome.character):
        assert not circle_norm(pair(n, SQRT3), 60).certainly_below(eps)


# --- ℓ1 words ---
def test_word_check_rank_one() -> None:
    report = l1_word_check(1, 3)
    assert report.passed
    assert report.growth == (1, 3, 5, 7)
    assert report.survivors == ((0,),)
    assert report.checked == 7
    assert report.bound == Fraction(1, 2)


@pytest.mark.parametrize("rank", [1, 2, 3])
@pytest.mark.parametrize("n0", [1, 2, 3, 4])
def test_word_check_passes(rank: int, n0: int) -> None:
    report = l1_word_check(rank, n0)
    assert report.exhaustive and report.passed
    assert report.checked == delannoy(rank, n0)


def test_word_check_beyond_cap() -> None:
    report = l1_word_check(3, 20, settings=Settings(enumeration_cap=100))
    assert not report.exhaustive
    assert report.checked == 0
    assert report.passed


def test_word_check_errors() -> None:
    with pytest.raises(CharsubDomainError):
        l1_word_check(0, 3)
    with pytest.raises(CharsubDomainError):
        l1_word_check(2, 0)


def test_delannoy_values() -> None:
    assert delannoy(2, 1) == 5
    assert delannoy(2, 2) == 13
    assert delannoy(3, 1) == 7


@pytest.mark.parametrize("rank", [1, 2, 3, 4])
def test_delannoy_counts_the_ball(rank: int) -> None:
    for radius in range(11):
        brute = sum(
            1
            for v in itertools.product(range(-radius, radius + 1), repeat=rank)
            if sum(map(abs, v)) <= radius
        )
        assert delannoy(rank, radius) == brute
        assert sum(1 for _ in l1_ball(rank, radius)) == brute
