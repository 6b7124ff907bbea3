"""
The commands behind the CLI: each one reads what it needs from a spec
file, calls the library and returns an `Outcome`. `run` wraps the outcome
into a timed `Report` carrying the trace of the global context.

Exit codes: 0 verified, 1 property violated / NotIn, 2 Unknown,
3 input error (the last one is handled by the frontend).

@date: 14.10.2026
@author: Baptiste Pestourie
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Any, Callable, TypeVar

from charsub.circle import CirclePoint
from charsub.config import Settings, SpecFile
from charsub.context import (
    create_context_if_enabled,
    get_context,
    is_global_context_enabled,
    reset_contexts,
)
from charsub.diophantine import (
    KroneckerSolution,
    NoneFound,
    RelationCertificate,
    integer_relation,
    kronecker_char_search,
    l1_word_check,
    verify_solution,
)
from charsub.finite_abelian import FinAbGroup, GroupElement, Subgroup
from charsub.graph_duality import (
    DEFAULT_SEARCH_DEPTH,
    ContinuityCertificate,
    akm_exhaustion,
    continuity_certificate,
    enumerate_Akm,
    gu_perp_generators,
    neighborhood_member,
    separate_point,
)
from charsub.literals import (
    parse_character,
    parse_element,
    parse_group,
    parse_integer,
    parse_omega,
    parse_point,
    parse_sequence,
    parse_tinf,
)
from charsub.membership import member_su, radical_profile, recheck, su_finite
from charsub.report import Report
from charsub.sequence_groups import (
    DEFAULT_DIVERGENCE_BOUND,
    DEFAULT_ESCAPE_BLOCKS,
    Diverges,
    exa1_coefficient_analysis,
    exa1_escape_witness,
    exa1_gclosure_blocks,
    exa1_unbounded_witness,
    gclosure_tail_bounds,
    verify_unbounded_witness,
)
from charsub.sequences import FiniteEventuallyPeriodic, SeqSpec
from charsub.utils import CharsubInputError, DependentInputError, VerdictKind

_logger = logging.getLogger(__name__)

T = TypeVar("T")

DEFAULT_DENOMINATOR_BOUND: int = 50
DEFAULT_SCAN_MAX: int = 10**6
DEFAULT_HEIGHT: int = 100


@dataclass
class Outcome:
    result: dict[str, Any]
    exit_code: int
    asserted: list[str] = field(default_factory=list)


type Handler = Callable[[SpecFile, Settings], Outcome]

COMMANDS: dict[str, Handler] = {}


def command(name: str) -> Callable[[Handler], Handler]:
    def register(handler: Handler) -> Handler:
        COMMANDS[name] = handler
        return handler

    return register


# --- Literal helpers ---
def _literal(spec: SpecFile, key: str, text: str, parser: Callable[..., T], *args: Any) -> T:
    """
    Parses `text` (the value of `key`, or one of its items), locating
    errors in the spec file.
    """
    try:
        return parser(text, *args)
    except CharsubInputError as exc:
        line, column = spec.locate(key, text)
        if column is not None and exc.column is not None:
            column += exc.column - 1
        raise CharsubInputError(exc.message, line, column) from exc


def _required(value: T | None, key: str, section: str = "input") -> T:
    if value is None or value == []:
        raise CharsubInputError(f"Missing `{key}` in [{section}]")
    return value


def _group(spec: SpecFile) -> FinAbGroup | None:
    text = spec.input.group
    return None if text is None else _literal(spec, "group", text, parse_group)


def _sequence(spec: SpecFile) -> SeqSpec:
    return _literal(spec, "sequence", _required(spec.input.sequence, "sequence"), parse_sequence)


def _finite_sequence(spec: SpecFile, group: FinAbGroup) -> FiniteEventuallyPeriodic:
    u = _sequence(spec)
    if not isinstance(u, FiniteEventuallyPeriodic) or u.group != group:
        raise CharsubInputError(f"`sequence` must be a finper(...) literal over {group}")
    return u


def _points(spec: SpecFile, group: FinAbGroup | None, key: str = "points") -> list[CirclePoint | GroupElement]:
    texts: list[str] = getattr(spec.input, key)
    if group is None:
        return [_literal(spec, key, text, parse_point) for text in texts]
    return [_literal(spec, key, text, parse_element, group) for text in texts]


def _circle_points(spec: SpecFile, key: str) -> list[CirclePoint]:
    return [_literal(spec, key, text, parse_point) for text in getattr(spec.input, key)]


def _verdict_exit(kinds: list[VerdictKind]) -> int:
    return max((kind.exit_code for kind in kinds), default=0)


# --- Commands ---
@command("membership")
def run_membership(spec: SpecFile, settings: Settings) -> Outcome:
    group = _group(spec)
    u = _sequence(spec)
    points = _points(spec, group)
    _required(points, "points")
    params = spec.params
    rows = []
    for text, x in zip(spec.input.points, points):
        verdict = member_su(u, x, params.depth, settings)
        row: dict[str, Any] = {
            "point": text,
            "verdict": verdict,
            "rechecked": recheck(verdict, u, x, settings),
        }
        if params.eps is not None and group is None:
            certificate = continuity_certificate(
                u, x, params.eps, seed=params.seed or 0, settings=settings  # type: ignore[arg-type]
            )
            if isinstance(certificate, ContinuityCertificate):
                row["continuity"] = certificate
        rows.append(row)
    return Outcome(
        {"sequence": u, "results": rows}, _verdict_exit([row["verdict"].kind for row in rows])
    )


@command("su-finite")
def run_su_finite(spec: SpecFile, settings: Settings) -> Outcome:
    group = _required(_group(spec), "group")
    u = _finite_sequence(spec, group)
    subgroup = su_finite(group, u)
    return Outcome(
        {
            "sequence": u,
            "subgroup": subgroup,
            "whole": subgroup == Subgroup.whole(group),
            "sequence_trivial": u.is_trivial,
        },
        0,
    )


@command("radical")
def run_radical(spec: SpecFile, settings: Settings) -> Outcome:
    u = _sequence(spec)
    params = spec.params
    denominator_bound = params.denominator_bound or params.depth or DEFAULT_DENOMINATOR_BOUND
    profile = radical_profile(u, denominator_bound, settings, t_sequence=params.t_sequence)
    asserted = [
        f"{name}: asserted"
        for name, flag in (("T-sequence", params.t_sequence), ("TB-sequence", params.tb_sequence))
        if flag
    ]
    return Outcome({"sequence": u, "profile": profile}, 0, asserted)


@command("separate")
def run_separate(spec: SpecFile, settings: Settings) -> Outcome:
    group = _group(spec)
    u = _sequence(spec)
    points = _required(_points(spec, group), "points")
    claim = _required(_circle_points(spec, "trace"), "trace")
    separator = separate_point(group, u, points[0], claim)
    return Outcome(
        {
            "point": spec.input.points[0],
            "claim": claim,
            "separator": separator,
            "verified": separator.record.verified,
        },
        0 if separator.record.verified else 1,
    )


@command("gu-perp")
def run_gu_perp(spec: SpecFile, settings: Settings) -> Outcome:
    group = _required(_group(spec), "group")
    u = _finite_sequence(spec, group)
    depth = spec.params.depth or DEFAULT_SEARCH_DEPTH
    perp = gu_perp_generators(group, u, depth)
    annihilates = perp.annihilates_graph(settings)
    relations = [perp.relation_one(n) for n in range(1, depth + 1)]
    return Outcome(
        {"perp": perp, "annihilates_graph": annihilates, "relation_one": relations},
        0 if annihilates and all(relations) else 1,
    )


@command("akm")
def run_akm(spec: SpecFile, settings: Settings) -> Outcome:
    group = _group(spec)
    u = _sequence(spec)
    params = spec.params
    k = _required(params.k, "k", "params")
    m = params.m or 0
    truncation = params.truncation or m + (params.depth or DEFAULT_SEARCH_DEPTH)
    if not spec.input.points:
        elements = enumerate_Akm(u, k, m, truncation, settings)
        return Outcome({"k": k, "m": m, "truncation": truncation, "elements": elements}, 0)
    if group is None:
        targets: list[Any] = [_literal(spec, "points", text, parse_integer) for text in spec.input.points]
    else:
        targets = [_literal(spec, "points", text, parse_character, group) for text in spec.input.points]
    exhaustion = akm_exhaustion(u, targets, k, truncation, settings)
    return Outcome({"targets": targets, "exhaustion": exhaustion}, 0 if exhaustion.found else 1)


@command("neighborhood")
def run_neighborhood(spec: SpecFile, settings: Settings) -> Outcome:
    group = _group(spec)
    u = _sequence(spec)
    cutoffs = _required(spec.input.cutoffs, "cutoffs")
    text = _required(spec.input.y, "y")
    y: Any = (
        _literal(spec, "y", text, parse_integer)
        if group is None
        else _literal(spec, "y", text, parse_character, group)
    )
    depth = spec.params.depth or DEFAULT_SEARCH_DEPTH
    membership = neighborhood_member(u, cutoffs, y, depth, settings)
    return Outcome(
        {"cutoffs": cutoffs, "y": y, "membership": membership},
        membership.verdict.kind.exit_code,
    )


@command("witness-exa1")
def run_witness_exa1(spec: SpecFile, settings: Settings) -> Outcome:
    omega = _literal(spec, "omega", _required(spec.input.omega, "omega"), parse_omega)
    params = spec.params
    analysis = exa1_coefficient_analysis(omega, settings=settings)
    result: dict[str, Any] = {"omega": omega, "analysis": analysis}
    if analysis.bound is not None or params.C is not None:
        escape = exa1_escape_witness(
            omega,
            params.C,
            params.blocks or DEFAULT_ESCAPE_BLOCKS,
            divergence_bound=params.divergence_bound or DEFAULT_DIVERGENCE_BOUND,
            settings=settings,
        )
        result["escape"] = escape
        holds = all(case.holds for case in escape.trace) and isinstance(escape.divergence, Diverges)
        return Outcome(result, 0 if holds else 2)
    if analysis.witness is not None:
        indices = analysis.witness.indices
        z = exa1_unbounded_witness(omega, indices)
        result["unbounded"] = {"z": z, "witness": analysis.witness}
        verified = verify_unbounded_witness(omega, z, indices)
        result["verified"] = verified
        return Outcome(result, 0 if verified else 1)
    return Outcome(result, VerdictKind.UNKNOWN.exit_code)


@command("gclosure")
def run_gclosure(spec: SpecFile, settings: Settings) -> Outcome:
    z = _literal(spec, "z", _required(spec.input.z, "z"), parse_tinf)
    params = spec.params
    blocks = exa1_gclosure_blocks(z, params.blocks or 4, params.first_cutoff, settings)
    result: dict[str, Any] = {"z": z, "blocks": blocks, "chords": blocks.pair_chords}
    exit_code = 0
    if spec.input.w is not None:
        w = _literal(spec, "w", spec.input.w, parse_tinf)
        bounds = gclosure_tail_bounds(blocks.characters, w, settings)
        result["w"] = w
        result["tail_bounds"] = bounds
        exit_code = 0 if all(bound.holds for bound in bounds) else 1
    return Outcome(result, exit_code)


@command("kronecker")
def run_kronecker(spec: SpecFile, settings: Settings) -> Outcome:
    points = _required(_circle_points(spec, "points"), "points")
    targets = _circle_points(spec, "targets") or None
    params = spec.params
    eps = _required(params.eps, "eps", "params")
    scan_max = params.scan_max or DEFAULT_SCAN_MAX
    try:
        outcome = kronecker_char_search(points, targets, eps, scan_max, settings)
    except DependentInputError as exc:
        return Outcome({"points": points, "dependent": True, "relation": exc.relation}, 1)
    result: dict[str, Any] = {"points": points, "targets": targets, "outcome": outcome}
    if isinstance(outcome, KroneckerSolution):
        verified = verify_solution(outcome, points, targets, settings)
        result["verified"] = verified
        return Outcome(result, 0 if verified else 1)
    return Outcome(result, VerdictKind.UNKNOWN.exit_code)


@command("relation")
def run_relation(spec: SpecFile, settings: Settings) -> Outcome:
    points = _required(_circle_points(spec, "points"), "points")
    height = spec.params.height or DEFAULT_HEIGHT
    outcome = integer_relation(points, height, settings=settings)
    match outcome:
        case RelationCertificate():
            exit_code = 0
        case NoneFound():
            exit_code = 1
        case _:
            exit_code = VerdictKind.UNKNOWN.exit_code
    return Outcome({"points": points, "height": height, "outcome": outcome}, exit_code)


@command("wordcheck")
def run_wordcheck(spec: SpecFile, settings: Settings) -> Outcome:
    params = spec.params
    rank = _required(params.rank, "rank", "params")
    n0 = _required(params.n0, "n0", "params")
    report = l1_word_check(rank, n0, settings)
    return Outcome({"report": report, "passed": report.passed}, 0 if report.passed else 1)


def run(command_name: str, spec: SpecFile, settings: Settings | None = None) -> Report:
    """
    Runs `command_name` on `spec`. Settings default to the ones of the spec file.

    Raises
    ------
    CharsubError
        On invalid inputs or violated preconditions.
    """
    try:
        handler = COMMANDS[command_name]
    except KeyError as exc:
        raise CharsubInputError(f"Unknown command {command_name!r}") from exc
    settings = settings if settings is not None else spec.settings
    if is_global_context_enabled():
        # every run starts from a fresh context
        reset_contexts()
        create_context_if_enabled("settings", settings)
    start = time.perf_counter()
    outcome = handler(spec, settings)
    elapsed = time.perf_counter() - start
    context = get_context()
    trace = context.trace_lines() if context is not None else []
    if context is not None:
        _logger.debug("Context of %s:\n%s", command_name, context.render())
    _logger.info("Command %s done in %.3fs, exit code %d", command_name, elapsed, outcome.exit_code)
    return Report(
        command_name,
        _echo(spec),
        outcome.result,
        outcome.exit_code,
        outcome.asserted,
        trace,
        elapsed,
    )


def _echo(spec: SpecFile) -> dict[str, Any]:
    inputs = {key: value for key, value in vars(spec.input).items() if value not in (None, [])}
    params = {
        key: value
        for key, value in vars(spec.params).items()
        if value is not None and not (isinstance(value, bool) and not value)
    }
    return {"input": inputs, "params": params}

