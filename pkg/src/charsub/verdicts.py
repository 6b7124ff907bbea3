"""
Three-valued certified answers.

@date: 05.10.2026
@author: Baptiste Pestourie
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import TYPE_CHECKING

from charsub.utils import CharsubDomainError, VerdictKind, format_fraction

if TYPE_CHECKING:
    from charsub.circle import ExactRational
    from charsub.sequences import Orbit

type Evidence = Orbit | tuple[ExactRational, ...] | None


@dataclass(frozen=True)
class In:
    """
    The pairing vanishes (or tends to 0) from index `cutoff` on.
    """

    cutoff: int
    reason: str
    evidence: Evidence = None

    @property
    def kind(self) -> VerdictKind:
        return VerdictKind.IN

    def __str__(self) -> str:
        return f"In (from n = {self.cutoff}: {self.reason})"


@dataclass(frozen=True)
class NotIn:
    """
    ||(u_n, x)|| >= delta for infinitely many n.
    """

    delta: Fraction
    reason: str
    evidence: Evidence = None

    def __post_init__(self) -> None:
        if self.delta <= 0:
            raise CharsubDomainError(f"A NotIn witness needs delta > 0, got {self.delta}")

    @property
    def kind(self) -> VerdictKind:
        return VerdictKind.NOT_IN

    def __str__(self) -> str:
        return f"NotIn (delta = {format_fraction(self.delta)}: {self.reason})"


@dataclass(frozen=True)
class Unknown:
    """
    Nothing asserted; `depth` is how far the search went.
    """

    depth: int
    reason: str

    @property
    def kind(self) -> VerdictKind:
        return VerdictKind.UNKNOWN

    def __str__(self) -> str:
        return f"Unknown (depth {self.depth}: {self.reason})"


type Verdict = In | NotIn | Unknown
