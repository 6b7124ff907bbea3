"""
Config definitions for charsub.
Settings are plain dataclasses built from TOML sections,
every field being converted from its annotation string.

@date: 04.10.2026
@author: Baptiste Pestourie
"""

from __future__ import annotations

import logging
import os
import re
import tomllib
from dataclasses import MISSING, asdict, dataclass, field, fields
from fractions import Fraction
from pathlib import Path
from typing import TYPE_CHECKING, Any, Iterable, Self

from charsub.utils import CharsubConfigError, CharsubError, CharsubInputError

if TYPE_CHECKING:
    from _typeshed import DataclassInstance

_logger = logging.getLogger(__name__)

type _TomlData = str | int | float | bool | list[_TomlData] | dict[str, _TomlData]
type TomlData = dict[str, _TomlData]
type ConfigContext = Iterable[str]

ENV_PREFIX: str = "CHARSUB_"


def assert_type_is(obj: object, typ: type | tuple[type, ...]) -> None:
    # bool is an int subclass, never accept it where a number is expected
    if isinstance(obj, bool) and bool not in (typ if isinstance(typ, tuple) else (typ,)):
        raise CharsubConfigError(f"Expected type {typ}, got {type(obj)}")
    if not isinstance(obj, typ):
        raise CharsubConfigError(f"Expected type {typ}, got {type(obj)}")


def parse_fraction(value_decl: object) -> Fraction:
    """
    Accepts integers and `p/q` strings.
    """
    assert_type_is(value_decl, (int, str))
    try:
        return Fraction(value_decl)  # type: ignore[arg-type]
    except (ValueError, ZeroDivisionError) as exc:
        raise CharsubConfigError(f"Invalid rational literal {value_decl!r}") from exc


def convert_value(value_decl: object, type_hint: str) -> object:
    """
    Converts a raw TOML value according to the annotation string `type_hint`.
    """
    match type_hint:
        case "int":
            assert_type_is(value_decl, int)
            return value_decl
        case "int | None":
            if value_decl is None:
                return None
            assert_type_is(value_decl, int)
            return value_decl
        case "bool":
            assert_type_is(value_decl, bool)
            return value_decl
        case "str" | "str | None":
            assert_type_is(value_decl, str)
            return value_decl
        case "Fraction" | "Fraction | None":
            return parse_fraction(value_decl)
        case "list[str]" | "tuple[str, ...]":
            assert_type_is(value_decl, list)
            for item in value_decl:  # type: ignore[union-attr]
                assert_type_is(item, str)
            return list(value_decl) if type_hint.startswith("list") else tuple(value_decl)  # type: ignore[arg-type]
        case "list[int]" | "tuple[int, ...]":
            assert_type_is(value_decl, list)
            for item in value_decl:  # type: ignore[union-attr]
                assert_type_is(item, int)
            return list(value_decl) if type_hint.startswith("list") else tuple(value_decl)  # type: ignore[arg-type]
        case _:
            raise NotImplementedError(f"Unsupported type hint: {type_hint}")


def _format_context(context: ConfigContext) -> str:
    """
    A small helper that builds a human-friendly hint from
    the path of a parameter in the config.
    Meant to be used when reporting config errors.
    """
    context = list(context)
    if not context:
        return ""

    *nodes, leaf = context

    param_path = ".".join(nodes) + ":" + leaf if nodes else leaf
    return f"In [{param_path}]:"


def build_datacls_from_toml[T: DataclassInstance](
    datacls: type[T],
    toml_data: TomlData,
    context: ConfigContext | None = None,
    strict: bool = True,
) -> T:
    """
    Builds `datacls` from `toml_data`, converting every field from its
    annotation. With `strict`, unknown keys are rejected.

    Raises
    ------
    CharsubConfigError
        On missing mandatory fields, unknown keys or failed conversions.
    """
    context = list(context) if context is not None else []
    sentinel = object()
    kwargs: dict[str, object] = {}
    known = {f.name for f in fields(datacls)}
    if strict and (unknown := sorted(set(toml_data) - known)):
        raise CharsubConfigError(
            f"{_format_context(context)}Unknown parameter(s): {', '.join(unknown)}"
        )
    for f in fields(datacls):
        local_ctx = list(context)
        field_name = f.name
        value_decl = toml_data.get(field_name, sentinel)
        if value_decl is sentinel:
            if f.default is MISSING and f.default_factory is MISSING:
                raise CharsubConfigError(
                    f"{_format_context(local_ctx)}Missing mandatory argument: {f.name}"
                )
            continue
        local_ctx.append(f.name)
        assert isinstance(f.type, str), (
            "Expected annotations from __future__ to be used"
        )
        try:
            value = convert_value(value_decl, f.type)
        except CharsubError as exc:
            raise CharsubConfigError(f"{_format_context(local_ctx)}{exc}") from exc
        kwargs[field_name] = value
    return datacls(**kwargs)


def toml_get_nested_section(toml_data: TomlData, *path: str) -> TomlData:
    """
    Extracts the sub section given by `path` from `toml_data`.
    Missing sections are returned empty.

    Raises
    ------
    CharsubConfigError
        If the found object is not a section.
    """
    ctx: list[str] = []
    section: _TomlData = toml_data
    for subsection_name in path:
        ctx.append(subsection_name)
        assert isinstance(section, dict)
        section = section.get(subsection_name, {})
        if not isinstance(section, dict):
            raise CharsubConfigError(
                f"{_format_context(ctx)}Expected section, found {section}"
            )
    assert isinstance(section, dict)
    return section


@dataclass(frozen=True)
class Settings:
    """
    Caps and precisions shared by all computations.
    """

    enumeration_cap: int = 10**6
    orbit_cap: int = 10**6
    search_budget: int = 10**6
    chord_precision: int = 30
    relation_l1_limit: int = 16
    kronecker_gate_height: int = 100
    exact_run_limit: int = 4096
    workers: int = 1
    debug: bool = False

    def __post_init__(self) -> None:
        for f in fields(self):
            value = getattr(self, f.name)
            if f.type == "int" and value < 1:
                raise CharsubConfigError(f"In [settings:{f.name}]:must be positive")

    @classmethod
    def from_toml_data(cls, toml_data: dict[str, Any]) -> Self:
        return build_datacls_from_toml(cls, toml_data, context=["settings"])

    def load_env(self, environ: dict[str, str] | None = None) -> Settings:
        """
        Returns a copy of these settings overridden by `CHARSUB_<FIELD>`
        environment variables.
        """
        environ = environ if environ is not None else dict(os.environ)
        overrides: dict[str, object] = {}
        for f in fields(self):
            raw = environ.get(ENV_PREFIX + f.name.upper())
            if raw is None:
                continue
            if f.type == "bool":
                overrides[f.name] = raw.strip().lower() in ("1", "true", "yes", "on")
                continue
            try:
                overrides[f.name] = int(raw)
            except ValueError as exc:
                raise CharsubConfigError(
                    f"In [env:{ENV_PREFIX + f.name.upper()}]:expected an integer, got {raw!r}"
                ) from exc
        if overrides:
            _logger.debug("Settings overridden from environment: %s", overrides)
        return Settings(**{**asdict(self), **overrides})

    def __str__(self) -> str:
        return "\n".join(f"{key} = {value}" for key, value in asdict(self).items())

    def render(self) -> str:
        return str(self)


DEFAULT_SETTINGS = Settings()


# --- Spec files ---
@dataclass(frozen=True)
class InputSection:
    """
    The `[input]` section: every value is a literal, see `charsub.literals`.
    A missing group means the circle T.
    """

    group: str | None = None
    sequence: str | None = None
    points: list[str] = field(default_factory=list)
    targets: list[str] = field(default_factory=list)
    trace: list[str] = field(default_factory=list)
    omega: str | None = None
    z: str | None = None
    w: str | None = None
    cutoffs: list[int] = field(default_factory=list)
    y: str | None = None


@dataclass(frozen=True)
class ParamsSection:
    depth: int | None = None
    eps: Fraction | None = None
    height: int | None = None
    scan_max: int | None = None
    seed: int | None = None
    k: int | None = None
    m: int | None = None
    truncation: int | None = None
    denominator_bound: int | None = None
    blocks: int | None = None
    first_cutoff: int | None = None
    C: int | None = None
    divergence_bound: Fraction | None = None
    rank: int | None = None
    n0: int | None = None
    t_sequence: bool = False
    tb_sequence: bool = False


@dataclass(frozen=True)
class SpecFile:
    """
    A parsed spec file. `source` keeps the raw text so that literal errors
    can be located, see `SpecFile.locate`.
    """

    input: InputSection = field(default_factory=InputSection)
    params: ParamsSection = field(default_factory=ParamsSection)
    settings: Settings = field(default_factory=Settings)
    source: str = ""

    @classmethod
    def from_text(cls, text: str) -> SpecFile:
        """
        Raises
        ------
        CharsubInputError
            On invalid TOML, located at the reported line and column.
        CharsubConfigError
            On unknown sections, keys or badly typed values.
        """
        try:
            toml_data = tomllib.loads(text)
        except tomllib.TOMLDecodeError as exc:
            line, column = _decode_error_position(exc)
            raise CharsubInputError(f"Invalid TOML: {exc}", line, column) from exc
        if unknown := sorted(set(toml_data) - {"input", "params", "settings"}):
            raise CharsubConfigError(f"Unknown section(s): {', '.join(unknown)}")
        try:
            return cls(
                build_datacls_from_toml(
                    InputSection, toml_get_nested_section(toml_data, "input"), ["input"]
                ),
                build_datacls_from_toml(
                    ParamsSection, toml_get_nested_section(toml_data, "params"), ["params"]
                ),
                Settings.from_toml_data(toml_get_nested_section(toml_data, "settings")),
                text,
            )
        except CharsubConfigError as exc:
            key = _offending_key(exc.message)
            line, column = _locate_key(text, key) if key is not None else (None, None)
            raise CharsubConfigError(exc.message, line, column) from exc

    def locate(self, key: str, item: str | None = None) -> tuple[int | None, int | None]:
        """
        Line and column of the value of `key`, or of the string `item`
        inside it (1-based). Unknown keys give (None, None).
        """
        line, column = _locate_key(self.source, key)
        if line is None or item is None:
            return line, column
        lines = self.source.splitlines()
        for offset, text in enumerate(lines[line - 1 :]):
            start = text.find(f'"{item}"')
            if start >= 0:
                return line + offset, start + 2
        return line, column


def _decode_error_position(exc: tomllib.TOMLDecodeError) -> tuple[int | None, int | None]:
    # the position only lives in the message before Python 3.14
    match = re.search(r"at line (\d+), column (\d+)", str(exc))
    if match is None:
        return None, None
    return int(match.group(1)), int(match.group(2))


def _offending_key(message: str) -> str | None:
    match = re.match(r"In \[(?:[\w.]+:)?(\w+)\]:", message)
    return match.group(1) if match is not None else None


def _locate_key(text: str, key: str) -> tuple[int | None, int | None]:
    pattern = re.compile(rf"^\s*{re.escape(key)}\s*=\s*")
    for number, line in enumerate(text.splitlines(), start=1):
        match = pattern.match(line)
        if match is not None:
            return number, match.end() + 1
    return None, None


def load_spec_file(path: Path) -> SpecFile:
    _logger.debug("Loading spec file %s", path)
    return SpecFile.from_text(path.read_text(encoding="utf-8"))
