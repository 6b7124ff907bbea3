"""
Character sequences u = (u_n) and their residue orbits.

Integer sequences are characters of T (Z = T^∧); finite eventually
periodic sequences are characters of a finite abelian group.
Every closed form variant is eventually periodic modulo any q, which
is what makes membership of rational points decidable.

@date: 05.10.2026
@author: Baptiste Pestourie
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from math import factorial, gcd
from typing import Callable, Sequence

from charsub.config import DEFAULT_SETTINGS, Settings
from charsub.context import add_trace_if_enabled
from charsub.finite_abelian import Character, FinAbGroup, QuotientMap
from charsub.utils import CharsubBudgetError, CharsubDomainError, assert_modulus, gcd_all

_logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ExplicitPrefix:
    """
    Finitely many known terms, nothing known about the tail.
    """

    terms: tuple[int, ...]

    def __str__(self) -> str:
        return f"explicit([{','.join(map(str, self.terms))}])"


@dataclass(frozen=True)
class Geometric:
    """
    u_n = a * q^n
    """

    a: int
    q: int

    def __post_init__(self) -> None:
        if self.q == 0:
            raise CharsubDomainError("Geometric sequences require q != 0")

    def __str__(self) -> str:
        return f"geometric({self.a},{self.q})"


@dataclass(frozen=True)
class Factorial:
    """
    u_n = a * n!
    """

    a: int

    def __str__(self) -> str:
        return f"factorial({self.a})"


@dataclass(frozen=True)
class LinearRecurrence:
    """
    u_n = c_1 u_{n-1} + ... + c_k u_{n-k}, with u_0 .. u_{k-1} given.
    Fibonacci is LinearRecurrence((1, 1), (0, 1)).
    """

    coefficients: tuple[int, ...]
    initial: tuple[int, ...]

    def __post_init__(self) -> None:
        if not self.coefficients or len(self.coefficients) != len(self.initial):
            raise CharsubDomainError(
                "A recurrence needs as many initial terms as coefficients (at least one)"
            )

    @property
    def order(self) -> int:
        return len(self.coefficients)

    def step(self, window: Sequence[int]) -> int:
        # window holds u_{n-k} .. u_{n-1}
        return sum(c * w for c, w in zip(self.coefficients, reversed(window)))

    def __str__(self) -> str:
        coeffs = ",".join(map(str, self.coefficients))
        initial = ",".join(map(str, self.initial))
        return f"recurrence([{coeffs}],[{initial}])"


@dataclass(frozen=True)
class FiniteEventuallyPeriodic:
    """
    prefix, then `period` repeated forever; characters of `group`.
    """

    group: FinAbGroup
    prefix: tuple[Character, ...]
    period: tuple[Character, ...]

    def __post_init__(self) -> None:
        if not self.period:
            raise CharsubDomainError("The period of a sequence cannot be empty")
        for chi in (*self.prefix, *self.period):
            if not isinstance(chi, Character) or chi.group != self.group:
                raise CharsubDomainError(
                    f"Every term must be a character of {self.group}, got {chi!r}"
                )

    def canonical(self) -> FiniteEventuallyPeriodic:
        """
        Same sequence, with minimal preperiod and period.
        """
        prefix, period = minimize_periodic(self.prefix, self.period)
        return FiniteEventuallyPeriodic(self.group, prefix, period)

    @property
    def is_trivial(self) -> bool:
        """
        Eventually zero.
        """
        return all(chi.is_zero for chi in self.period)

    def __str__(self) -> str:
        prefix = ",".join(str(c) for c in self.prefix)
        period = ",".join(str(c) for c in self.period)
        return f"finper({self.group}, prefix=[{prefix}], period=[{period}])"


@dataclass(frozen=True)
class Subsequence:
    """
    v_n = u_{step * n + offset}
    """

    base: SeqSpec
    step: int = 1
    offset: int = 0

    def __post_init__(self) -> None:
        if self.step < 1 or self.offset < 0:
            raise CharsubDomainError("Subsequences need step >= 1 and offset >= 0")

    def flattened(self) -> Subsequence:
        match self.base:
            case Subsequence(base=inner, step=step, offset=offset):
                return Subsequence(inner, step * self.step, step * self.offset + offset).flattened()
        return self

    def __str__(self) -> str:
        return f"subsequence({self.base}, step={self.step}, offset={self.offset})"


type ClosedForm = Geometric | Factorial | LinearRecurrence
type IntegerSequence = ExplicitPrefix | ClosedForm | Subsequence
type SeqSpec = IntegerSequence | FiniteEventuallyPeriodic


def minimize_periodic[T](prefix: Sequence[T], cycle: Sequence[T]) -> tuple[tuple[T, ...], tuple[T, ...]]:
    """
    Shortest (prefix, cycle) describing the same eventually periodic sequence.
    """
    cycle = tuple(cycle)
    for length in range(1, len(cycle) + 1):
        if len(cycle) % length == 0 and cycle == cycle[:length] * (len(cycle) // length):
            cycle = cycle[:length]
            break
    prefix = list(prefix)
    while prefix and prefix[-1] == cycle[-1]:
        prefix.pop()
        cycle = (cycle[-1], *cycle[:-1])
    return tuple(prefix), cycle


# --- Evaluation ---
def eval_term(u: SeqSpec, n: int) -> int | Character:
    """
    The exact term u_n.

    Raises
    ------
    CharsubDomainError
        On negative indices, or past the end of an explicit prefix.
    """
    if n < 0:
        raise CharsubDomainError(f"Negative index {n}")
    match u:
        case ExplicitPrefix(terms=terms):
            if n >= len(terms):
                raise CharsubDomainError(
                    f"Index {n} is beyond the {len(terms)} known terms of {u}"
                )
            return terms[n]
        case Geometric(a=a, q=q):
            return a * q**n
        case Factorial(a=a):
            return a * factorial(n)
        case LinearRecurrence():
            return _recurrence_terms(u, n + 1)[n]
        case FiniteEventuallyPeriodic(prefix=prefix, period=period):
            if n < len(prefix):
                return prefix[n]
            return period[(n - len(prefix)) % len(period)]
        case Subsequence(base=base, step=step, offset=offset):
            return eval_term(base, step * n + offset)
    raise CharsubDomainError(f"Not a sequence: {u!r}")


def eval_int(u: SeqSpec, n: int) -> int:
    term = eval_term(u, n)
    if not isinstance(term, int):
        raise CharsubDomainError(f"{u} is not an integer sequence")
    return term


def _recurrence_terms(u: LinearRecurrence, count: int, modulus: int | None = None) -> list[int]:
    terms = list(u.initial[:count])
    if modulus is not None:
        terms = [t % modulus for t in terms]
    while len(terms) < count:
        value = u.step(terms[-u.order :])
        terms.append(value % modulus if modulus is not None else value)
    return terms


def is_integer_sequence(u: SeqSpec) -> bool:
    match u:
        case FiniteEventuallyPeriodic():
            return False
        case Subsequence(base=base):
            return is_integer_sequence(base)
    return True


def recurrence_order(u: SeqSpec) -> int:
    """
    Number of consecutive zero terms after which a closed form stays zero.
    """
    match u:
        case LinearRecurrence():
            return u.order
        case Subsequence(base=base):
            return recurrence_order(base)
        case FiniteEventuallyPeriodic(prefix=prefix, period=period):
            return len(prefix) + len(period)
    return 1


# --- Orbits ---
@dataclass(frozen=True)
class Orbit:
    """
    u_n mod `modulus`: `prefix` for n < preperiod, then `cycle` forever.
    Always minimal.
    """

    modulus: int
    prefix: tuple[int, ...]
    cycle: tuple[int, ...]

    @property
    def preperiod(self) -> int:
        return len(self.prefix)

    def residue(self, n: int) -> int:
        if n < self.preperiod:
            return self.prefix[n]
        return self.cycle[(n - self.preperiod) % len(self.cycle)]

    @property
    def eventually_zero(self) -> bool:
        return self.cycle == (0,)

    def tail_residues(self, start: int) -> set[int]:
        """
        Residues taken by u_n for n >= start.
        """
        head = {self.prefix[n] for n in range(start, self.preperiod)}
        return head | set(self.cycle)

    def __str__(self) -> str:
        return (
            f"mod {self.modulus}: preperiod {self.preperiod}, "
            f"cycle ({','.join(map(str, self.cycle))})"
        )


def _orbit_from_states[S](
    modulus: int,
    initial: S,
    advance: Callable[[S], S],
    residue_of: Callable[[S], int],
    cap: int,
) -> Orbit:
    seen: dict[S, int] = {}
    residues: list[int] = []
    state = initial
    while state not in seen:
        if len(residues) >= cap:
            raise CharsubBudgetError(
                f"No period found mod {modulus} within {cap} states"
            )
        seen[state] = len(residues)
        residues.append(residue_of(state))
        state = advance(state)
    start = seen[state]
    prefix, cycle = minimize_periodic(residues[:start], residues[start:])
    return Orbit(modulus, prefix, cycle)


def residue_orbit(u: SeqSpec, q: int, settings: Settings = DEFAULT_SETTINGS) -> Orbit:
    """
    The eventually periodic structure of u_n mod q.

    Raises
    ------
    CharsubDomainError
        If q < 1, or for sequences without a decidable tail.
    CharsubBudgetError
        If the state space walk exceeds the orbit cap.
    """
    assert_modulus(q)
    match u:
        case ExplicitPrefix():
            raise CharsubDomainError(f"{u} has no decidable tail")
        case FiniteEventuallyPeriodic():
            raise CharsubDomainError(f"{u} is not an integer sequence")
        case Geometric(a=a, q=ratio):
            orbit = _orbit_from_states(
                q, a % q, lambda r: (r * ratio) % q, lambda r: r, settings.orbit_cap
            )
        case Factorial(a=a):
            residues = [a % q]
            n = 0
            while residues[-1] != 0:
                n += 1
                residues.append((residues[-1] * n) % q)
            orbit = Orbit(q, tuple(residues[:-1]), (0,))
        case LinearRecurrence():
            orbit = _orbit_from_states(
                q,
                tuple(t % q for t in u.initial),
                lambda window: (*window[1:], u.step(window) % q),
                lambda window: window[0],
                settings.orbit_cap,
            )
        case Subsequence():
            orbit = _subsequence_orbit(u.flattened(), q, settings)
        case _:
            raise CharsubDomainError(f"Not a sequence: {u!r}")
    add_trace_if_enabled("residue orbit", str(u), str(orbit))
    _logger.debug("Orbit of %s %s", u, orbit)
    return orbit


def _subsequence_orbit(v: Subsequence, q: int, settings: Settings) -> Orbit:
    base = residue_orbit(v.base, q, settings)
    step, offset = v.step, v.offset
    # first index whose base index lands in the cycle
    first = max(0, -(-(base.preperiod - offset) // step))
    prefix = [base.residue(step * n + offset) for n in range(first)]
    length = len(base.cycle) // gcd(step, len(base.cycle))
    cycle = [base.residue(step * (first + j) + offset) for j in range(length)]
    minimal_prefix, minimal_cycle = minimize_periodic(prefix, cycle)
    return Orbit(q, minimal_prefix, minimal_cycle)


# --- Tail structure ---
def is_eventually_zero(u: SeqSpec) -> bool | None:
    """
    Exact for closed forms; None for explicit prefixes.
    A recurrence of order k is eventually zero iff its state is zero
    after k steps (the zero tail lives in the nilpotent part).
    """
    match u:
        case ExplicitPrefix():
            return None
        case Geometric(a=a) | Factorial(a=a):
            return a == 0
        case LinearRecurrence():
            k = u.order
            return not any(_recurrence_terms(u, 2 * k)[k:])
        case FiniteEventuallyPeriodic():
            return u.is_trivial
        case Subsequence():
            flat = u.flattened()
            base_zero = is_eventually_zero(flat.base)
            if base_zero is None or base_zero:
                return base_zero
            if not isinstance(flat.base, LinearRecurrence):
                return False
            # a subsequence of a recurrence is a recurrence of the same order
            k = recurrence_order(flat)
            return not any(eval_int(flat, n) for n in range(k, 2 * k))
    raise CharsubDomainError(f"Not a sequence: {u!r}")


def zero_tail_start(u: SeqSpec) -> int:
    """
    The first index from which an eventually zero sequence vanishes.

    Raises
    ------
    CharsubDomainError
        If `u` is not eventually zero.
    """
    if not is_eventually_zero(u):
        raise CharsubDomainError(f"{u} is not eventually zero")
    if isinstance(u, FiniteEventuallyPeriodic):
        return len(u.canonical().prefix)
    k = recurrence_order(u)
    n = 2 * k
    while n > 0 and eval_int(u, n - 1) == 0:
        n -= 1
    return n


def tail_divisor(u: SeqSpec, start: int = 0, settings: Settings = DEFAULT_SETTINGS) -> int:
    """
    gcd{u_n : n >= start}, 0 iff the tail vanishes.
    A window gcd g is certified by checking that the orbit mod g
    vanishes from `start` on; otherwise a term not divisible by g
    shrinks it and we retry.
    """
    if not is_integer_sequence(u) or isinstance(u, ExplicitPrefix):
        raise CharsubDomainError(f"{u} has no certified tail divisor")
    window = max(recurrence_order(u), 4)
    g = gcd_all(eval_int(u, n) for n in range(start, start + window))
    if g == 0:
        # `window` consecutive zeros of a closed form never end
        return 0
    while g != 1:
        orbit = residue_orbit(u, g, settings)
        offender = next(
            (
                n
                for n in range(start, max(start, orbit.preperiod) + len(orbit.cycle))
                if orbit.residue(n) != 0
            ),
            None,
        )
        if offender is None:
            break
        g = gcd(g, eval_int(u, offender))
    _logger.debug("Tail divisor of %s from %d: %d", u, start, g)
    return g


def term_gcd(u: SeqSpec, settings: Settings = DEFAULT_SETTINGS) -> int:
    """
    Generator of the subgroup <u> of Z.
    """
    return tail_divisor(u, 0, settings)


def integer_cycle(u: SeqSpec, limit: int = 64) -> Orbit | None:
    """
    Detects integer sequences that are eventually periodic as integers
    (not only modulo some q). Returns an Orbit with modulus 0.
    """
    match u:
        case Geometric(a=a, q=ratio) if ratio in (1, -1) or a == 0:
            if a == 0 or ratio == 1:
                return Orbit(0, (), (a,))
            return Orbit(0, (), (a, -a))
        case Factorial(a=0):
            return Orbit(0, (), (0,))
        case LinearRecurrence():
            k = u.order
            terms = _recurrence_terms(u, limit + k)
            seen: dict[tuple[int, ...], int] = {}
            for n in range(limit):
                state = tuple(terms[n : n + k])
                if state in seen:
                    start = seen[state]
                    prefix, cycle = minimize_periodic(terms[:start], terms[start:n])
                    return Orbit(0, prefix, cycle)
                seen[state] = n
    return None


def pushforward(u: FiniteEventuallyPeriodic, projection: QuotientMap) -> FiniteEventuallyPeriodic:
    """
    Termwise image of `u` under a projection of the dual group.
    Preperiod and period lengths are kept; call `canonical()` to shrink.

    Raises
    ------
    CharsubDomainError
        If the projection does not start from the group of `u`.
    """
    if not isinstance(u, FiniteEventuallyPeriodic):
        raise CharsubDomainError(f"Pushforward needs a finite eventually periodic sequence, got {u}")
    if projection.source != u.group or not projection.dual:
        raise CharsubDomainError(
            f"Projection from {projection.source} does not act on the characters of {u.group}"
        )
    return FiniteEventuallyPeriodic(
        projection.target,
        tuple(projection(chi) for chi in u.prefix),
        tuple(projection(chi) for chi in u.period),
    )
