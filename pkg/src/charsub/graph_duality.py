"""
The graph subgroup G_u = {(g; (u_1, g), (u_2, g), ...)} of X x T^∞
and the constructive side of its duality: finite sections L_i,
separating characters, generators of G_u^⊥, the sets A(k, m) and
the neighborhoods Σ A*_{n_i} of 0 in the topology that s_u induces
on the dual.

Graph coordinates start at k = 1; u_0 is not part of the graph.

@date: 10.10.2026
@author: Baptiste Pestourie
"""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Iterable

from charsub.circle import (
    CertifiedIrrational,
    CirclePoint,
    ExactRational,
    ZERO,
    add,
    chord_distance,
    from_fraction,
    negate,
    pair,
)
from charsub.config import DEFAULT_SETTINGS, Settings
from charsub.context import add_trace_if_enabled
from charsub.finite_abelian import (
    Character,
    FinAbGroup,
    GroupElement,
    IntMatrix,
    Presentation,
    Subgroup,
    annihilator,
    dual_pair_finite,
    elements,
    hermite_normal_form,
    lattice_contains,
)
from charsub.membership import member_su, su_finite
from charsub.sequence_groups import ZInfElem
from charsub.sequences import (
    ExplicitPrefix,
    FiniteEventuallyPeriodic,
    SeqSpec,
    eval_int,
    eval_term,
    is_integer_sequence,
    tail_divisor,
)
from charsub.utils import CharsubBudgetError, CharsubDomainError, ScanBudget, gcd_all
from charsub.verdicts import In, NotIn, Unknown, Verdict

_logger = logging.getLogger(__name__)

type DualValue = int | Character

# how many indices past the largest cutoff the neighborhood search explores
DEFAULT_SEARCH_DEPTH: int = 6


def _as_point(value: CirclePoint | Fraction | int) -> CirclePoint:
    if isinstance(value, (ExactRational, CertifiedIrrational)):
        return value
    return from_fraction(Fraction(value))


def _pair_term(u: SeqSpec, k: int, g: GroupElement | CirclePoint) -> CirclePoint:
    """
    (u_k, g), for g in a finite group or in T.
    """
    if isinstance(g, GroupElement):
        term = eval_term(u, k)
        if not isinstance(term, Character):
            raise CharsubDomainError(f"{u} is not a sequence of characters of {g.group}")
        return dual_pair_finite(term, g)
    return pair(eval_int(u, k), g)


def _zero_of(u: SeqSpec) -> DualValue:
    if isinstance(u, FiniteEventuallyPeriodic):
        return u.group.zero_character()
    return 0


def _is_zero(value: DualValue) -> bool:
    return value.is_zero if isinstance(value, Character) else value == 0


# --- Graph points ---
@dataclass(frozen=True)
class GraphPoint:
    """
    (g; (u_1, g), ..., (u_N, g)), the graph of u truncated at depth N.
    """

    base: GroupElement | CirclePoint
    trace: tuple[CirclePoint, ...]

    @property
    def depth(self) -> int:
        return len(self.trace)

    def coordinate(self, n: int) -> CirclePoint:
        """
        π_n, 1-based.
        """
        if not 1 <= n <= len(self.trace):
            raise CharsubDomainError(f"Coordinate {n} is outside 1..{len(self.trace)}")
        return self.trace[n - 1]

    def __str__(self) -> str:
        trace = ", ".join(str(z) for z in self.trace)
        return f"({self.base}; {trace})"


def graph_point(g: GroupElement | CirclePoint, u: SeqSpec, depth: int) -> GraphPoint:
    """
    The point of G_u above g, with its first `depth` graph coordinates.
    """
    if depth < 0:
        raise CharsubDomainError(f"Negative depth {depth}")
    return GraphPoint(g, tuple(_pair_term(u, k, g) for k in range(1, depth + 1)))


def L_i_subgroup(X: FinAbGroup, u: SeqSpec, i: int) -> Subgroup:
    """
    L_i = {(x, (u_1, x), ..., (u_i, x))} inside X x Z_m^i, m being the
    exponent of X. A pairing value a/m is stored as the coordinate a.
    """
    if i < 0:
        raise CharsubDomainError(f"Negative depth {i}")
    m = X.exponent
    ambient = X.extended(m, i)
    return Subgroup.generated_by(ambient, [_graph_coordinates(ambient, u, b, i) for b in X.basis()])


def _graph_coordinates(ambient: FinAbGroup, u: SeqSpec, x: GroupElement, i: int) -> GroupElement:
    m = x.group.exponent
    if m == 1:
        return ambient.zero()
    trace = [int(_pair_term(u, k, x).value * m) for k in range(1, i + 1)]
    return GroupElement.of(ambient, [*x.coords, *trace])


def dual_pair_graph(base_char: Character | int, tail: ZInfElem, point: GraphPoint) -> CirclePoint:
    """
    (χ; n) against a truncated graph point: (χ, g) + Σ n_k z_k.
    """
    if isinstance(base_char, Character):
        if not isinstance(point.base, GroupElement):
            raise CharsubDomainError(f"{point} does not lie above {base_char.group}")
        total: CirclePoint = dual_pair_finite(base_char, point.base)
    else:
        if isinstance(point.base, GroupElement):
            raise CharsubDomainError(f"{point} does not lie above T")
        total = pair(base_char, point.base)
    if tail.is_zero:
        return total
    if tail.max_index > point.depth:
        raise CharsubDomainError(f"The tail reaches index {tail.max_index}, beyond depth {point.depth}")
    for k, coeff in tail.items():
        total = add(total, pair(coeff, point.coordinate(k)))
    return total


# --- Separation ---
@dataclass(frozen=True)
class SeparationRecord:
    """
    How a separating character was checked: `annihilates` on the
    generators of L_i (hence on all of it), `value` at the separated point.
    """

    depth: int
    annihilates: bool
    value: CirclePoint
    in_annihilator: bool | None = None

    @property
    def verified(self) -> bool:
        return self.annihilates and self.value != ZERO and self.in_annihilator is not False


@dataclass(frozen=True)
class SeparatingCharacter:
    """
    ω̃ = (χ; n_1, ..., n_i, 0, ...) with (ω̃, G_u) = 0 through depth i.
    """

    base_char: Character | int
    tail: ZInfElem
    record: SeparationRecord

    def pair_with(self, point: GraphPoint) -> CirclePoint:
        return dual_pair_graph(self.base_char, self.tail, point)

    def __str__(self) -> str:
        return f"({self.base_char}; {self.tail})"


def _first_mismatch(
    u: SeqSpec, x: GroupElement | CirclePoint, claim: Iterable[CirclePoint]
) -> tuple[int, CirclePoint]:
    for k, z in enumerate(claim, start=1):
        expected = _pair_term(u, k, x)
        if z != expected:
            return k, add(z, negate(expected))
    raise CharsubDomainError(
        f"The point above {x} agrees with the graph of {u} up to the available depth"
    )


def separate_point(
    X: FinAbGroup | None,
    u: SeqSpec,
    x: GroupElement | CirclePoint,
    trace_claim: Iterable[CirclePoint | Fraction | int],
) -> SeparatingCharacter:
    """
    A character of X x T^∞ vanishing on G_u but not on (x, trace_claim).
    `X = None` stands for X = T with an integer sequence u.

    With i the first index where the claim leaves the graph, the
    annihilator of L_i consists of the (-Σ n_k u_k; n_1, ..., n_i) and its
    value at the point is Σ n_k (z_k - (u_k, x)). Only z_i differs, so the
    lexicographically smallest nonzero tail that separates is e_i.

    Raises
    ------
    CharsubDomainError
        If the claimed point agrees with the graph at every given index.
    """
    claim = tuple(_as_point(z) for z in trace_claim)
    i, value = _first_mismatch(u, x, claim)
    tail = ZInfElem.unit(i)
    term = eval_term(u, i)
    if X is None:
        if not isinstance(term, int):
            raise CharsubDomainError(f"{u} is not an integer sequence")
        # (-u_i g) + (u_i, g) vanishes identically on T
        record = SeparationRecord(i, True, value)
        separator = SeparatingCharacter(-term, tail, record)
    else:
        if not isinstance(term, Character) or not isinstance(x, GroupElement):
            raise CharsubDomainError(f"{u} and {x} do not live on {X}")
        base = -term
        annihilates = all(
            add(dual_pair_finite(base, b), _pair_term(u, i, b)) == ZERO for b in X.basis()
        )
        record = SeparationRecord(i, annihilates, value, _in_finite_annihilator(X, u, base, i))
        separator = SeparatingCharacter(base, tail, record)
    if not separator.record.verified:
        raise CharsubDomainError(f"Separator {separator} failed its own verification")
    add_trace_if_enabled(
        "Separating character",
        f"point above {x} leaves the graph at index {i}",
        f"separator {separator}, value {value}",
    )
    _logger.debug("Separated %s at depth %d with %s", x, i, separator)
    return separator


def _in_finite_annihilator(X: FinAbGroup, u: SeqSpec, base: Character, i: int) -> bool | None:
    """
    Membership of (base; e_i) in the annihilator of L_i, as a subgroup
    of the dual of X x Z_m^i. None when X is trivial (no Z_m factors).
    """
    m = X.exponent
    if m == 1:
        return None
    perp = annihilator(L_i_subgroup(X, u, i))
    coords = [*base.coords, *(int(k == i) for k in range(1, i + 1))]
    return perp.contains(Character.of(perp.ambient, coords))


# --- G_u^⊥ ---
@dataclass(frozen=True)
class GuPerp:
    """
    The characters (−u_k; e_k), k <= depth, generating G_u^⊥ through
    `depth`. Membership is decided in Ŷ x Z^depth against the span of
    `generators`.
    """

    group: FinAbGroup
    sequence: FiniteEventuallyPeriodic
    depth: int
    generators: tuple[tuple[Character, ZInfElem], ...]

    def _vector(self, base_char: Character, tail: ZInfElem) -> list[int]:
        if base_char.group != self.group:
            raise CharsubDomainError(f"{base_char} is not a character of {self.group}")
        if not tail.is_zero and (tail.min_index < 1 or tail.max_index > self.depth):
            raise CharsubDomainError(f"Tail {tail} leaves the indices 1..{self.depth}")
        return [*base_char.coords, *(tail.coefficient(k) for k in range(1, self.depth + 1))]

    @cached_property
    def _span(self) -> IntMatrix:
        # span(generators) + diag(d_i) on the Ŷ coordinates
        size = self.group.rank + self.depth
        rows = [self._vector(chi, tail) for chi, tail in self.generators]
        rows += [
            [d if j == i else 0 for j in range(size)]
            for i, d in enumerate(self.group.invariant_factors)
        ]
        return hermite_normal_form(rows, size)

    def contains(self, base_char: Character, tail: ZInfElem) -> bool:
        return lattice_contains(self._span, self._vector(base_char, tail))

    def relation_one(self, n: int) -> bool:
        """
        (u_n; 0) - (0; e_n) is in the span of the generators.
        """
        term = eval_term(self.sequence, n)
        assert isinstance(term, Character)
        return self.contains(term, -ZInfElem.unit(n))

    def annihilates_graph(self, settings: Settings = DEFAULT_SETTINGS) -> bool:
        """
        Every generator against every graph point, exhaustively over Y.
        """
        points = [graph_point(y, self.sequence, self.depth) for y in elements(self.group, settings)]
        return all(
            dual_pair_graph(chi, tail, p) == ZERO
            for chi, tail in self.generators
            for p in points
        )


def gu_perp_generators(
    Y: FinAbGroup, u: FiniteEventuallyPeriodic, depth: int
) -> GuPerp:
    """
    Generators of G_u^⊥ through `depth`, for u dense in Y.

    Raises
    ------
    CharsubDomainError
        If s_u(Y) is not all of Y; see `restrict_to_closure`.
    """
    if su_finite(Y, u) != Subgroup.whole(Y):
        raise CharsubDomainError(f"s_u({Y}) is a proper subgroup, restrict u to it first")
    generators = []
    for k in range(1, depth + 1):
        term = eval_term(u, k)
        assert isinstance(term, Character)
        generators.append((-term, ZInfElem.unit(k)))
    return GuPerp(Y, u, depth, tuple(generators))


@dataclass(frozen=True)
class ClosureRestriction:
    """
    Y = s_u(X) presented abstractly, and ũ_n = u_n restricted to Y.
    """

    subgroup: Subgroup
    presentation: Presentation
    sequence: FiniteEventuallyPeriodic


def restrict_to_closure(X: FinAbGroup, u: FiniteEventuallyPeriodic) -> ClosureRestriction:
    subgroup = su_finite(X, u)
    presentation = subgroup.presentation()
    restricted = FiniteEventuallyPeriodic(
        presentation.abstract,
        tuple(presentation.restrict(chi) for chi in u.prefix),
        tuple(presentation.restrict(chi) for chi in u.period),
    )
    _logger.debug("Restricted %s to s_u(%s) = %s", u, X, subgroup)
    return ClosureRestriction(subgroup, presentation, restricted)


# --- A(k, m) ---
@dataclass(frozen=True)
class AkmDescriptor:
    """
    Sums Σ n_i u_{r_i} over m <= r_1 < ... < r_s <= truncation
    with Σ |n_i| <= k.
    """

    k: int
    m: int
    truncation: int

    def __post_init__(self) -> None:
        if self.k < 1 or self.m < 0:
            raise CharsubDomainError(f"A(k, m) needs k >= 1 and m >= 0, got k={self.k}, m={self.m}")


def enumerate_Akm(
    u: SeqSpec, k: int, m: int, N: int, settings: Settings = DEFAULT_SETTINGS
) -> frozenset[DualValue]:
    """
    The truncated A(k, m), empty sum excluded.

    Raises
    ------
    CharsubBudgetError
        If more than `enumeration_cap` values are reachable.
    """
    AkmDescriptor(k, m, N)
    # value -> smallest l1 budget reaching it with a nonempty sum
    cheapest: dict[DualValue, int] = {}
    zero = _zero_of(u)
    for r in range(m, N + 1):
        term = eval_term(u, r)
        extended = dict(cheapest)
        for value, spent in [(zero, 0), *cheapest.items()]:
            for c in range(1, k - spent + 1):
                for signed in (c, -c):
                    candidate = value + term * signed
                    if extended.get(candidate, k + 1) > spent + c:
                        extended[candidate] = spent + c
        if len(extended) > settings.enumeration_cap:
            raise CharsubBudgetError(
                f"A({k}, {m}) exceeds the enumeration cap at index {r}"
            )
        cheapest = extended
    return frozenset(cheapest)


@dataclass(frozen=True)
class AkmExhaustion:
    """
    Smallest k with K ⊆ A(k, 0) ∪ {0}, or the first element left
    uncovered at `k_max`.
    """

    budget: int | None
    truncation: int
    uncovered: DualValue | None = None

    @property
    def found(self) -> bool:
        return self.budget is not None


def akm_exhaustion(
    u: SeqSpec,
    K: Iterable[DualValue],
    k_max: int,
    N: int,
    settings: Settings = DEFAULT_SETTINGS,
) -> AkmExhaustion:
    targets = [y for y in K if not _is_zero(y)]
    missing: DualValue | None = None
    for k in range(1, k_max + 1):
        reachable = enumerate_Akm(u, k, 0, N, settings)
        missing = next((y for y in targets if y not in reachable), None)
        if missing is None:
            return AkmExhaustion(k, N)
    _logger.debug("%s is not in A(%d, 0) truncated at %d", missing, k_max, N)
    return AkmExhaustion(None, N, missing)


# --- Neighborhoods Σ A*_{n_i} ---
@dataclass(frozen=True)
class DecompositionTerm:
    """
    coefficient * u_index, taken from A*_{n_slot}.
    """

    slot: int
    index: int
    coefficient: int


@dataclass(frozen=True)
class NeighborhoodMembership:
    verdict: Verdict
    decomposition: tuple[DecompositionTerm, ...] | None = None
    modulus: int | None = None


def _check_cutoffs(cutoffs: tuple[int, ...]) -> None:
    if not cutoffs:
        raise CharsubDomainError("At least one cutoff is needed")
    if cutoffs[0] < 0 or any(a >= b for a, b in zip(cutoffs, cutoffs[1:])):
        raise CharsubDomainError(f"Cutoffs must be increasing and nonnegative, got {cutoffs}")


def neighborhood_member(
    u: SeqSpec,
    cutoffs: Iterable[int],
    y: DualValue,
    depth: int = DEFAULT_SEARCH_DEPTH,
    settings: Settings = DEFAULT_SETTINGS,
) -> NeighborhoodMembership:
    """
    y in U = A*_{n_0} + ... + A*_{n_d}, A*_n = {±u_l : l >= n} ∪ {0}.

    Finite groups are decided exactly. Over Z, decompositions are searched
    with indices up to max(cutoffs) + depth, by iterative deepening on the
    largest index; NotIn is only returned with a divisibility certificate.
    """
    cutoffs = tuple(cutoffs)
    _check_cutoffs(cutoffs)
    if _is_zero(y):
        zero = tuple(DecompositionTerm(slot, n, 0) for slot, n in enumerate(cutoffs))
        return NeighborhoodMembership(In(cutoffs[0], "0 belongs to every A*"), zero)
    if isinstance(u, FiniteEventuallyPeriodic):
        if not isinstance(y, Character):
            raise CharsubDomainError(f"{y} is not a character of {u.group}")
        return _finite_neighborhood(u, cutoffs, y, settings)
    if not isinstance(y, int) or not is_integer_sequence(u):
        raise CharsubDomainError(f"{u} and {y} are not integers")
    return _integer_neighborhood(u, cutoffs, y, depth, settings)


def _finite_neighborhood(
    u: FiniteEventuallyPeriodic,
    cutoffs: tuple[int, ...],
    y: Character,
    settings: Settings,
) -> NeighborhoodMembership:
    canonical = u.canonical()
    horizon = len(canonical.prefix) + len(canonical.period)
    reached: dict[Character, tuple[DecompositionTerm, ...]] = {u.group.zero_character(): ()}
    for slot, n in enumerate(cutoffs):
        # every value of the tail from n shows up before n + horizon
        choices: dict[Character, DecompositionTerm] = {}
        for index in range(n, n + horizon):
            term = eval_term(u, index)
            assert isinstance(term, Character)
            for sign in (1, -1):
                choices.setdefault(term * sign, DecompositionTerm(slot, index, sign))
        extended = dict(reached)
        for value, terms in reached.items():
            for choice, term in choices.items():
                extended.setdefault(value + choice, (*terms, term))
        if len(extended) > settings.enumeration_cap:
            raise CharsubBudgetError("Neighborhood sumset exceeds the enumeration cap")
        reached = extended
    if y in reached:
        return NeighborhoodMembership(In(cutoffs[0], "exhaustive sumset"), reached[y])
    return NeighborhoodMembership(
        NotIn(Fraction(1, u.group.exponent), f"exhaustive sumset of {len(reached)} characters")
    )


def _integer_neighborhood(
    u: SeqSpec,
    cutoffs: tuple[int, ...],
    y: int,
    depth: int,
    settings: Settings,
) -> NeighborhoodMembership:
    modulus: int | None = None
    if not isinstance(u, ExplicitPrefix):
        modulus = tail_divisor(u, cutoffs[0], settings)
        if modulus == 0 or y % modulus:
            # x = 1/g annihilates U but not y
            delta = Fraction(1, 2) if modulus == 0 else _distance_to_integers(Fraction(y, modulus))
            return NeighborhoodMembership(
                NotIn(delta, f"every element of U is divisible by {modulus}"),
                modulus=modulus,
            )
    budget = ScanBudget(settings.search_budget, "neighborhood search")
    steps = [0]
    top = max(cutoffs)
    last = top + depth
    if isinstance(u, ExplicitPrefix):
        last = min(last, len(u.terms) - 1)
    terms = [eval_int(u, n) for n in range(last + 1)] if last >= 0 else []
    try:
        for horizon in range(top, last + 1):
            found = _search_decomposition(terms[: horizon + 1], cutoffs, y, budget, steps)
            if found is not None:
                assert sum(t.coefficient * terms[t.index] for t in found) == y
                _logger.debug("Decomposed %d with largest index %d", y, horizon)
                return NeighborhoodMembership(
                    In(cutoffs[0], f"decomposition with indices up to {horizon}"),
                    found,
                    modulus,
                )
    except CharsubBudgetError:
        return NeighborhoodMembership(Unknown(steps[0], "search budget exhausted"), modulus=modulus)
    return NeighborhoodMembership(
        Unknown(last, f"no decomposition with indices up to {last}"), modulus=modulus
    )


def _distance_to_integers(value: Fraction) -> Fraction:
    value %= 1
    return min(value, 1 - value)


def _search_decomposition(
    terms: list[int],
    cutoffs: tuple[int, ...],
    y: int,
    budget: ScanBudget,
    steps: list[int],
) -> tuple[DecompositionTerm, ...] | None:
    """
    Depth-first over slots. What remains after slot i must be divisible
    by the gcd of the window terms the later slots may still use.
    """
    horizon = len(terms) - 1
    divisors = [gcd_all(terms[n : horizon + 1]) for n in cutoffs] + [0]

    def admissible(remainder: int, slot: int) -> bool:
        d = divisors[slot]
        return remainder == 0 if d == 0 else remainder % d == 0

    def visit(slot: int, remainder: int) -> list[DecompositionTerm] | None:
        steps[0] += 1
        budget.check(steps[0])
        if slot == len(cutoffs):
            return [] if remainder == 0 else None
        n = cutoffs[slot]
        options = [(n, 0)] + [(index, sign) for index in range(n, horizon + 1) for sign in (1, -1)]
        for index, sign in options:
            rest = remainder - sign * terms[index]
            if not admissible(rest, slot + 1):
                continue
            tail = visit(slot + 1, rest)
            if tail is not None:
                return [DecompositionTerm(slot, index, sign), *tail]
        return None

    if not admissible(y, 0):
        return None
    found = visit(0, y)
    return tuple(found) if found is not None else None


# --- Continuity ---
@dataclass(frozen=True)
class ContinuityCertificate:
    """
    Cutoffs n_0 < n_1 < ... with |(u_n, x) - 1| < ε / 2^{k+1} for n >= n_k,
    and a sampled check that every y of Σ A*_{n_k} keeps |(y, x) - 1| < ε.
    """

    cutoffs: tuple[int, ...]
    eps: Fraction
    samples: int
    max_chord: Fraction
    terms_checked: int
    holds: bool


def continuity_certificate(
    u: SeqSpec,
    x: CirclePoint,
    eps: Fraction,
    levels: int = 8,
    sample_budget: int = 256,
    seed: int = 0,
    settings: Settings = DEFAULT_SETTINGS,
) -> ContinuityCertificate | NotIn | Unknown:
    """
    Continuity of the character induced by x on the dual, for x in s_u(T).
    Returns the membership verdict itself when x is not certified in s_u.
    """
    if eps <= 0:
        raise CharsubDomainError(f"ε must be positive, got {eps}")
    if not is_integer_sequence(u) or isinstance(u, ExplicitPrefix):
        raise CharsubDomainError(f"{u} is not an integer sequence with a known tail")
    verdict = member_su(u, x, settings=settings)
    if not isinstance(verdict, In):
        return verdict
    cutoffs = tuple(verdict.cutoff + k for k in range(levels))
    window = 2 * levels
    holds = True
    checked = 0
    for k, n in enumerate(cutoffs):
        bound = eps / 2 ** (k + 1)
        for index in range(n, n + window):
            checked += 1
            if not chord_distance(pair(eval_int(u, index), x), settings.chord_precision).certainly_below(bound):
                holds = False
    rng = random.Random(seed)
    max_chord = Fraction(0)
    for _ in range(sample_budget):
        y = 0
        for n in cutoffs:
            sign = rng.choice((-1, 0, 1))
            if sign:
                y += sign * eval_int(u, rng.randrange(n, n + window))
        chord = chord_distance(pair(y, x), settings.chord_precision)
        max_chord = max(max_chord, chord.hi)
        if not chord.certainly_below(eps):
            holds = False
    add_trace_if_enabled(
        "Continuity certificate",
        f"cutoffs {cutoffs} from {verdict}",
        f"{sample_budget} samples, largest chord {float(max_chord):.3g}",
    )
    return ContinuityCertificate(cutoffs, eps, sample_budget, max_chord, checked, holds)
