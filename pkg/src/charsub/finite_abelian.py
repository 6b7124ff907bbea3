"""
Exact duality for finite abelian groups in invariant factor form:
Smith/Hermite normal forms, characters, subgroups with a canonical basis,
annihilators and quotients.

A subgroup H of G = Z_{d_1} x ... x Z_{d_r} is stored through the lattice
span(H) + diag(d_i) Z^r, in Hermite normal form. Two subgroups are equal
iff their bases are, which makes identities like H^⊥⊥ = H literal.
Characters share the coordinates of elements (Ĝ ≅ G), the pairing being
(χ, x) = Σ x_i χ_i / d_i mod 1.

@date: 04.10.2026
@author: Baptiste Pestourie
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from math import prod
from typing import Iterable, Iterator, Self, Sequence

from sympy.polys.domains import ZZ
from sympy.polys.matrices import DomainMatrix
from sympy.polys.matrices.normalforms import hermite_normal_form as _sympy_hermite_normal_form
from sympy.polys.matrices.normalforms import smith_normal_decomp

from charsub.circle import ExactRational, canonicalize
from charsub.config import DEFAULT_SETTINGS, Settings
from charsub.utils import (
    CharsubBudgetError,
    CharsubDomainError,
    assert_divisibility_chain,
)

_logger = logging.getLogger(__name__)

type IntMatrix = list[list[int]]
type Coordinates = tuple[int, ...]


# --- Integer linear algebra ---
def identity(n: int) -> IntMatrix:
    return [[int(i == j) for j in range(n)] for i in range(n)]


def row_times(row: Sequence[int], m: IntMatrix) -> list[int]:
    cols = len(m[0]) if m else 0
    return [sum(row[k] * m[k][j] for k in range(len(row))) for j in range(cols)]


def _domain_matrix(rows: Sequence[Sequence[int]], ncols: int) -> DomainMatrix:
    entries = [[ZZ(int(x)) for x in row] for row in rows]
    return DomainMatrix(entries, (len(entries), ncols), ZZ)


def _int_rows(matrix: DomainMatrix) -> IntMatrix:
    return [[int(x) for x in row] for row in matrix.to_list()]


def _unimodular_inverse(matrix: IntMatrix) -> IntMatrix:
    if not matrix:
        return []
    adjugate, det = _domain_matrix(matrix, len(matrix)).adj_det()
    # det is a unit, so it is its own inverse
    return [[int(x) * int(det) for x in row] for row in adjugate.to_list()]


@dataclass(frozen=True)
class SmithForm:
    """
    U·M·V = S with U, V unimodular. The inverses are computed on demand.
    """

    S: IntMatrix
    U: IntMatrix
    V: IntMatrix

    @cached_property
    def U_inv(self) -> IntMatrix:
        return _unimodular_inverse(self.U)

    @cached_property
    def V_inv(self) -> IntMatrix:
        return _unimodular_inverse(self.V)

    @property
    def diagonal(self) -> list[int]:
        return [self.S[i][i] for i in range(min(len(self.S), len(self.S[0]) if self.S else 0))]

    @property
    def rank(self) -> int:
        return sum(1 for d in self.diagonal if d != 0)


def smith_normal_form(matrix: Sequence[Sequence[int]], ncols: int | None = None) -> SmithForm:
    """
    Smith normal form with its unimodular transforms.

    Parameters
    ----------
    matrix: Sequence[Sequence[int]]
        An m x n integer matrix.
    ncols: int | None
        n, needed when the matrix has no row.

    Returns
    -------
    SmithForm
        S diagonal with d_1 | d_2 | ... (zeros last), U and V unimodular
        with U·M·V = S.
    """
    n = ncols if ncols is not None else (len(matrix[0]) if matrix else 0)
    s, u, v = smith_normal_decomp(_domain_matrix(matrix, n))
    return SmithForm(_int_rows(s), _int_rows(u), _int_rows(v))


def hermite_normal_form(rows: Sequence[Sequence[int]], ncols: int) -> IntMatrix:
    """
    Row-style Hermite normal form of the lattice spanned by `rows`:
    echelon, positive pivots, entries above a pivot reduced into [0, pivot).
    Only nonzero rows are returned.

    sympy reduces column lattices with pivots pushed to the bottom right,
    so the lattice is handed over transposed with its coordinates reversed
    and the result is read back the same way.
    """
    flipped = [[row[ncols - 1 - j] for row in rows] for j in range(ncols)]
    reduced = _int_rows(_sympy_hermite_normal_form(_domain_matrix(flipped, len(rows))))
    rank = len(reduced[0]) if reduced else 0
    return [
        [reduced[ncols - 1 - j][rank - 1 - i] for j in range(ncols)] for i in range(rank)
    ]


def lattice_contains(basis: Sequence[Sequence[int]], vector: Sequence[int]) -> bool:
    """
    Whether `vector` is in the lattice spanned by a row-style Hermite `basis`.
    """
    v = list(vector)
    for row in basis:
        pivot = next(j for j, x in enumerate(row) if x)
        if any(v[:pivot]) or v[pivot] % row[pivot]:
            return False
        q = v[pivot] // row[pivot]
        v = [a - q * b for a, b in zip(v, row)]
    return not any(v)


def integer_kernel(matrix: Sequence[Sequence[int]], ncols: int | None = None) -> IntMatrix:
    """
    A basis of {v in Z^n : M·v = 0}, as a list of vectors.
    """
    n = ncols if ncols is not None else (len(matrix[0]) if matrix else 0)
    form = smith_normal_form(matrix, n)
    return [[form.V[i][j] for i in range(n)] for j in range(form.rank, n)]


def left_kernel(matrix: Sequence[Sequence[int]]) -> IntMatrix:
    """
    A basis of {z in Z^m : z·M = 0}.
    """
    form = smith_normal_form(matrix)
    return [list(form.U[i]) for i in range(form.rank, len(matrix))]


# --- Groups ---
@dataclass(frozen=True)
class FinAbGroup:
    """
    Z_{d_1} x ... x Z_{d_r} with d_1 | ... | d_r and every d_i >= 2.
    The trivial group has no factor.
    """

    invariant_factors: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        assert_divisibility_chain(self.invariant_factors)
        if any(d == 1 for d in self.invariant_factors):
            raise CharsubDomainError(
                "Invariant factors equal to 1 must be pruned, use FinAbGroup.from_factors"
            )

    @classmethod
    def from_factors(cls, factors: Iterable[int]) -> Self:
        return cls(tuple(d for d in factors if d != 1))

    @classmethod
    def cyclic(cls, order: int) -> Self:
        return cls.from_factors([order])

    @property
    def rank(self) -> int:
        return len(self.invariant_factors)

    @property
    def order(self) -> int:
        return prod(self.invariant_factors)

    @property
    def exponent(self) -> int:
        return self.invariant_factors[-1] if self.invariant_factors else 1

    def extended(self, modulus: int, count: int) -> FinAbGroup:
        """
        self x Z_modulus^count, `modulus` being a multiple of the exponent.
        """
        if modulus % self.exponent:
            raise CharsubDomainError(
                f"{modulus} is not a multiple of the exponent {self.exponent}"
            )
        return FinAbGroup.from_factors([*self.invariant_factors, *([modulus] * count)])

    def element(self, *coords: int) -> GroupElement:
        return GroupElement.of(self, coords)

    def character(self, *coords: int) -> Character:
        return Character.of(self, coords)

    def zero(self) -> GroupElement:
        return GroupElement(self, (0,) * self.rank)

    def zero_character(self) -> Character:
        return Character(self, (0,) * self.rank)

    def basis(self) -> list[GroupElement]:
        return [
            GroupElement(self, tuple(int(i == j) for j in range(self.rank)))
            for i in range(self.rank)
        ]

    def character_basis(self) -> list[Character]:
        return [Character(self, e.coords) for e in self.basis()]

    def __str__(self) -> str:
        if not self.invariant_factors:
            return "Z1"
        return " x ".join(f"Z{d}" for d in self.invariant_factors)


def _reduce(group: FinAbGroup, coords: Sequence[int]) -> Coordinates:
    if len(coords) != group.rank:
        raise CharsubDomainError(
            f"Expected {group.rank} coordinates for {group}, got {len(coords)}"
        )
    return tuple(c % d for c, d in zip(coords, group.invariant_factors))


@dataclass(frozen=True)
class _Vector:
    group: FinAbGroup
    coords: Coordinates

    def __post_init__(self) -> None:
        if _reduce(self.group, self.coords) != tuple(self.coords):
            raise CharsubDomainError(
                f"Coordinates {self.coords} are not reduced for {self.group}"
            )

    @classmethod
    def of(cls, group: FinAbGroup, coords: Sequence[int]) -> Self:
        return cls(group, _reduce(group, coords))

    def _check_same(self, other: _Vector) -> None:
        if type(other) is not type(self) or other.group != self.group:
            raise CharsubDomainError(f"Shape mismatch between {self} and {other}")

    def __add__(self, other: Self) -> Self:
        self._check_same(other)
        return type(self).of(self.group, [a + b for a, b in zip(self.coords, other.coords)])

    def __neg__(self) -> Self:
        return type(self).of(self.group, [-a for a in self.coords])

    def __sub__(self, other: Self) -> Self:
        return self + (-other)

    def __mul__(self, k: int) -> Self:
        return type(self).of(self.group, [k * a for a in self.coords])

    __rmul__ = __mul__

    @property
    def is_zero(self) -> bool:
        return not any(self.coords)

    def __str__(self) -> str:
        return "(" + ",".join(str(c) for c in self.coords) + ")"


class GroupElement(_Vector):
    """
    x in G, coordinate i reduced mod d_i.
    """


class Character(_Vector):
    """
    χ in Ĝ, using the coordinates of G.
    """


def dual_pair_finite(chi: Character, x: GroupElement) -> ExactRational:
    """
    (χ, x) = Σ x_i χ_i / d_i mod 1.

    Raises
    ------
    CharsubDomainError
        If χ and x do not live on the same group.
    """
    if not isinstance(chi, Character) or not isinstance(x, GroupElement):
        raise CharsubDomainError(f"Expected a character and an element, got {chi!r}, {x!r}")
    if chi.group != x.group:
        raise CharsubDomainError(f"Shape mismatch: {chi.group} vs {x.group}")
    exponent = x.group.exponent
    numerator = sum(
        a * b * (exponent // d)
        for a, b, d in zip(chi.coords, x.coords, x.group.invariant_factors)
    )
    return canonicalize(numerator, exponent)


def elements(group: FinAbGroup, settings: Settings = DEFAULT_SETTINGS) -> Iterator[GroupElement]:
    """
    Every element of `group` exactly once, in lexicographic order.

    Raises
    ------
    CharsubBudgetError
        If the group is larger than the enumeration cap.
    """
    if group.order > settings.enumeration_cap:
        raise CharsubBudgetError(
            f"|{group}| = {group.order} exceeds the enumeration cap {settings.enumeration_cap}"
        )
    for coords in itertools.product(*(range(d) for d in group.invariant_factors)):
        yield GroupElement(group, coords)


def characters(group: FinAbGroup, settings: Settings = DEFAULT_SETTINGS) -> Iterator[Character]:
    for x in elements(group, settings):
        yield Character(group, x.coords)


# --- Subgroups ---
def _as_coords(group: FinAbGroup, generator: _Vector | Sequence[int]) -> Coordinates:
    if isinstance(generator, _Vector):
        if generator.group != group:
            raise CharsubDomainError(f"{generator} does not belong to {group}")
        return generator.coords
    return _reduce(group, generator)


@dataclass(frozen=True)
class Presentation:
    """
    An abstract invariant factor form of a subgroup together with
    its embedding into the ambient group.
    `images[i]` is the image of the i-th basis vector of `abstract`.
    """

    abstract: FinAbGroup
    ambient: FinAbGroup
    images: tuple[GroupElement, ...]

    def embed(self, y: GroupElement) -> GroupElement:
        if y.group != self.abstract:
            raise CharsubDomainError(f"{y} is not an element of {self.abstract}")
        result = self.ambient.zero()
        for coeff, image in zip(y.coords, self.images):
            result = result + coeff * image
        return result

    @cached_property
    def _inverse(self) -> dict[GroupElement, GroupElement]:
        return {self.embed(y): y for y in elements(self.abstract)}

    def coordinates(self, x: GroupElement) -> GroupElement:
        """
        Abstract coordinates of an element of the embedded subgroup.
        """
        try:
            return self._inverse[x]
        except KeyError as exc:
            raise CharsubDomainError(f"{x} is not in the presented subgroup") from exc

    def restrict(self, chi: Character) -> Character:
        """
        The restriction of an ambient character, as a character of `abstract`.
        """
        if chi.group != self.ambient:
            raise CharsubDomainError(f"{chi} is not a character of {self.ambient}")
        coords = [
            int(dual_pair_finite(chi, image).value * d)
            for image, d in zip(self.images, self.abstract.invariant_factors)
        ]
        return Character.of(self.abstract, coords)


@lru_cache(maxsize=1 << 16)
def _lattice_basis(ambient: FinAbGroup, gens: frozenset[Coordinates]) -> tuple[Coordinates, ...]:
    """
    Hermite basis of span(gens) + diag(d_i).
    """
    diagonal = [
        [d if i == j else 0 for j in range(ambient.rank)]
        for i, d in enumerate(ambient.invariant_factors)
    ]
    hnf = hermite_normal_form([*map(list, sorted(gens)), *diagonal], ambient.rank)
    return tuple(tuple(row) for row in hnf)


@dataclass(frozen=True)
class Subgroup:
    """
    A subgroup of `ambient` (or of its dual when `dual` is set),
    stored with the Hermite basis of span(generators) + diag(d_i).
    """

    ambient: FinAbGroup
    basis: tuple[Coordinates, ...]
    dual: bool = False
    generators: tuple[Coordinates, ...] = field(default=(), compare=False)

    @classmethod
    def generated_by(
        cls,
        ambient: FinAbGroup,
        generators: Iterable[_Vector | Sequence[int]],
        dual: bool = False,
    ) -> Subgroup:
        gens = tuple(_as_coords(ambient, g) for g in generators)
        return cls(ambient, _lattice_basis(ambient, frozenset(gens)), dual, gens)

    @classmethod
    def trivial(cls, ambient: FinAbGroup, dual: bool = False) -> Subgroup:
        return cls.generated_by(ambient, [], dual)

    @classmethod
    def whole(cls, ambient: FinAbGroup, dual: bool = False) -> Subgroup:
        return cls.generated_by(ambient, [e.coords for e in ambient.basis()], dual)

    @property
    def order(self) -> int:
        return self.ambient.order // prod(self.basis[i][i] for i in range(self.ambient.rank))

    @property
    def index(self) -> int:
        return self.ambient.order // self.order

    def _wrap(self, coords: Sequence[int]) -> GroupElement | Character:
        cls = Character if self.dual else GroupElement
        return cls.of(self.ambient, coords)

    def contains(self, x: _Vector | Sequence[int]) -> bool:
        if isinstance(x, _Vector) and isinstance(x, Character) != self.dual:
            raise CharsubDomainError(
                f"{x!r} does not live on the same side of the duality as this subgroup"
            )
        return lattice_contains(self.basis, _as_coords(self.ambient, x))

    __contains__ = contains

    def elements(self, settings: Settings = DEFAULT_SETTINGS) -> Iterator[GroupElement | Character]:
        """
        Every element once, as sums Σ k_i b_i with 0 <= k_i < d_i / b_ii.
        """
        if self.order > settings.enumeration_cap:
            raise CharsubBudgetError(
                f"Subgroup of order {self.order} exceeds the enumeration cap"
            )
        ranges = [
            range(d // self.basis[i][i])
            for i, d in enumerate(self.ambient.invariant_factors)
        ]
        for ks in itertools.product(*ranges):
            coords = [0] * self.ambient.rank
            for k, row in zip(ks, self.basis):
                if k:
                    coords = [c + k * b for c, b in zip(coords, row)]
            yield self._wrap(coords)

    def is_subgroup_of(self, other: Subgroup) -> bool:
        self._check_compatible(other)
        return all(other.contains(row) for row in self.basis)

    def join(self, other: Subgroup) -> Subgroup:
        self._check_compatible(other)
        return Subgroup.generated_by(self.ambient, [*self.basis, *other.basis], self.dual)

    def intersection(self, other: Subgroup) -> Subgroup:
        self._check_compatible(other)
        return annihilator(annihilator(self).join(annihilator(other)))

    def _check_compatible(self, other: Subgroup) -> None:
        if other.ambient != self.ambient or other.dual != self.dual:
            raise CharsubDomainError("Subgroups of different groups")

    def presentation(self) -> Presentation:
        return _presentation(self)

    def __str__(self) -> str:
        side = "dual of " if self.dual else ""
        if self.order <= 16:
            return "{" + ", ".join(str(x) for x in self.elements()) + "}" + f" <= {side}{self.ambient}"
        return f"<{', '.join(map(str, self.basis))}> <= {side}{self.ambient}"


@lru_cache(maxsize=1 << 12)
def _presentation(subgroup: Subgroup) -> Presentation:
    """
    Computes H ≅ Z^k / K for the k basis rows of H, then the
    Smith form of K gives the invariant factors and the embedding.
    """
    group = subgroup.ambient
    gens = [list(row) for row in subgroup.basis]
    k, r = len(gens), group.rank
    if k == 0:
        return Presentation(FinAbGroup(), group, ())
    diagonal = [
        [d if i == j else 0 for j in range(r)]
        for i, d in enumerate(group.invariant_factors)
    ]
    relations = [z[:k] for z in left_kernel([*gens, *diagonal])]
    relation_basis = hermite_normal_form(relations, k)
    form = smith_normal_form(relation_basis)
    factors = form.diagonal
    kept = [i for i, d in enumerate(factors) if d != 1]
    abstract = FinAbGroup(tuple(factors[i] for i in kept))
    images = []
    for i in kept:
        a = form.V_inv[i]
        images.append(GroupElement.of(group, row_times(a, gens)))
    return Presentation(abstract, group, tuple(images))


@lru_cache(maxsize=1 << 12)
def annihilator(subgroup: Subgroup) -> Subgroup:
    """
    H^⊥ = {χ : (χ, h) = 0 for all h in H}, living on the other side
    of the duality. With E the exponent, χ annihilates h iff
    Σ h_i χ_i (E / d_i) ≡ 0 mod E, which is an integer kernel problem.
    """
    group = subgroup.ambient
    r = group.rank
    if r == 0:
        return Subgroup.trivial(group, not subgroup.dual)
    exponent = group.exponent
    rows = [
        [h[i] * (exponent // d) for i, d in enumerate(group.invariant_factors)]
        for h in subgroup.basis
    ]
    k = len(rows)
    system = [row + [exponent if j == i else 0 for j in range(k)] for i, row in enumerate(rows)]
    kernel = integer_kernel(system, r + k)
    generators = [vector[:r] for vector in kernel]
    return Subgroup.generated_by(group, generators, not subgroup.dual)


def kernel_of(group: FinAbGroup, chars: Iterable[Character]) -> Subgroup:
    """
    ∩ ker χ over the given characters, as a subgroup of `group`.
    """
    return annihilator(Subgroup.generated_by(group, list(chars), dual=True))


@dataclass(frozen=True)
class QuotientMap:
    """
    The projection G -> G/H, x -> (x·V)_i mod s_i on the kept coordinates.
    Acts on elements or characters depending on the side of H.
    """

    source: FinAbGroup
    target: FinAbGroup
    transform: tuple[tuple[int, ...], ...]
    kept: tuple[int, ...]
    dual: bool = False

    def __call__[V: _Vector](self, x: V) -> V:
        if x.group != self.source or isinstance(x, Character) != self.dual:
            raise CharsubDomainError(f"{x!r} is not in the source of this projection")
        image = row_times(list(x.coords), [list(row) for row in self.transform])
        return type(x).of(self.target, [image[i] for i in self.kept])

    @classmethod
    def identity_of(cls, group: FinAbGroup, dual: bool = False) -> QuotientMap:
        return cls(
            group,
            group,
            tuple(tuple(row) for row in identity(group.rank)),
            tuple(range(group.rank)),
            dual,
        )


def quotient_by(group: FinAbGroup, subgroup: Subgroup) -> tuple[FinAbGroup, QuotientMap]:
    """
    G/H in invariant factor form with its projection.

    Raises
    ------
    CharsubDomainError
        If H is not a subgroup of G.
    """
    if subgroup.ambient != group:
        raise CharsubDomainError(f"{subgroup} is not contained in {group}")
    if group.rank == 0:
        return group, QuotientMap.identity_of(group, subgroup.dual)
    form = smith_normal_form([list(row) for row in subgroup.basis])
    factors = form.diagonal
    kept = tuple(i for i, d in enumerate(factors) if d != 1)
    target = FinAbGroup(tuple(factors[i] for i in kept))
    _logger.debug("Quotient of %s by a subgroup of order %d: %s", group, subgroup.order, target)
    projection = QuotientMap(
        group, target, tuple(tuple(row) for row in form.V), kept, subgroup.dual
    )
    return target, projection


def subgroups(group: FinAbGroup, settings: Settings = DEFAULT_SETTINGS) -> list[Subgroup]:
    """
    Every subgroup of `group`, as joins of cyclic subgroups.
    Only meant for small groups.
    """
    cyclic = {Subgroup.generated_by(group, [x]) for x in elements(group, settings)}
    found = {Subgroup.trivial(group)}
    frontier = list(found)
    while frontier:
        next_frontier = []
        for h in frontier:
            for c in cyclic:
                joined = h.join(c)
                if joined not in found:
                    found.add(joined)
                    next_frontier.append(joined)
        frontier = next_frontier
    return sorted(found, key=lambda h: (h.order, h.basis))
