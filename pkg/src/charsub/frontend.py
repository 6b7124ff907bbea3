"""
Command-line interface for charsub.
Every sub-command reads an optional TOML spec file, lets the command line
override its parameters and prints a JSON report.

@date: 14.10.2026
@author: Baptiste Pestourie
"""

from __future__ import annotations

import dataclasses
import logging
import sys
from contextlib import contextmanager
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable, Generator

import click
from click import Context, Parameter, ParamType

from charsub.commands import COMMANDS, run
from charsub.config import SpecFile, load_spec_file
from charsub.context import clear_contexts, enable_global_context
from charsub.literals import parse_fraction
from charsub.utils import CharsubBudgetError, CharsubError, CharsubInputError

_logger = logging.getLogger(__name__)

INPUT_ERROR_EXIT_CODE: int = 3
BUDGET_EXIT_CODE: int = 2

COMMAND_HELP: dict[str, str] = {
    "membership": "Decides x in s_u(X) for every listed point",
    "su-finite": "Computes s_u(X) for a finite group X",
    "radical": "Bounds the radical of s_u(T) and reports the MAP / minAP flags",
    "separate": "Builds a character separating a point from the graph G_u",
    "gu-perp": "Lists generators of G_u^⊥ and checks them on the graph",
    "akm": "Enumerates A(k, m), or the smallest k reaching the listed points",
    "neighborhood": "Decides y in A*_{n_0} + ... + A*_{n_d}",
    "witness-exa1": "Builds the escape (or unbounded) witness of a sequence ω",
    "gclosure": "Finds the block characters separating z from the closure of T_1^H",
    "kronecker": "Finds the first character approximating the targets within ε",
    "relation": "Looks for an integer relation between points of T",
    "wordcheck": "Checks the ℓ1 word cancellation up to n_0",
}

add_logging_option = click.option(
    "-l",
    "--logging-level",
    type=click.Choice(list(logging._nameToLevel), case_sensitive=False),
    help="Logging level to apply. Logs are emitted to stderr",
    default="warning",
)


class CliRational(ParamType):
    """
    A tiny wrapper for click to parse `p/q` literals.
    """

    name = "rational"

    def convert(self, value: Any, param: Parameter | None, ctx: Context | None) -> Fraction:
        _ = param
        _ = ctx
        if isinstance(value, Fraction):
            return value
        try:
            return parse_fraction(str(value))
        except CharsubInputError as exc:
            self.fail(f"{value} is not a rational literal: {exc}")


class CliExistingPath(ParamType):
    """
    A tiny wrapper for click to verify that spec files exist.
    """

    name = "existing_path"

    def convert(self, value: Any, param: Parameter | None, ctx: Context | None) -> Path:
        _ = param
        _ = ctx
        path = Path(value)
        if not path.is_file():
            self.fail(f"{value} not found")
        return path


@contextmanager
def wrap_charsub_errors() -> Generator[None, None, None]:
    """
    Captures `CharsubError` exceptions, displays them to the user
    in a nicer way and exits with the matching code.
    """
    try:
        yield
    except CharsubBudgetError as exc:
        click.echo("/!\\  [charsub] Search budget exhausted:", err=True)
        click.echo(str(exc), err=True)
        sys.exit(BUDGET_EXIT_CODE)
    except CharsubError as exc:
        click.echo("/!\\  [charsub] An error occurred:", err=True)
        click.echo(str(exc), err=True)
        sys.exit(INPUT_ERROR_EXIT_CODE)


def spec_options(func: Callable[..., Any]) -> Callable[..., Any]:
    options = [
        click.option("--spec", "spec_path", type=CliExistingPath(), default=None, help="TOML spec file"),
        click.option("--depth", type=int, default=None, help="Search depth"),
        click.option("--eps", type=CliRational(), default=None, help="Tolerance ε as p/q"),
        click.option("--height", type=int, default=None, help="Coefficient height for relations"),
        click.option("--scan-max", type=int, default=None, help="Last character of a Kronecker scan"),
        click.option("--seed", type=int, default=None, help="Seed of randomized checks"),
        click.option("--json-out", type=click.Path(dir_okay=False), default=None, help="Writes the report there"),
        add_logging_option,
    ]
    for option in reversed(options):
        func = option(func)
    return func


def load_spec(spec_path: Path | None, **overrides: Any) -> SpecFile:
    """
    The spec file at `spec_path` (or an empty one) with its parameters
    overridden by the non-None `overrides`.
    """
    spec = load_spec_file(spec_path) if spec_path is not None else SpecFile()
    overrides = {key: value for key, value in overrides.items() if value is not None}
    if overrides:
        spec = dataclasses.replace(spec, params=dataclasses.replace(spec.params, **overrides))
    return spec


def execute(
    command_name: str,
    spec_path: Path | None,
    json_out: str | None,
    logging_level: str,
    **overrides: Any,
) -> None:
    logging.basicConfig(level=logging._nameToLevel[logging_level.upper()])
    try:
        with wrap_charsub_errors():
            spec = load_spec(spec_path, **overrides)
            settings = spec.settings.load_env()
            report = run(command_name, spec, settings)
    finally:
        # contexts only live for the duration of one invocation
        clear_contexts()
    rendered = report.render()
    if json_out is not None:
        Path(json_out).write_text(rendered + "\n", encoding="utf-8")
    click.echo(rendered)
    sys.exit(report.exit_code)


@click.group()
def charsub() -> None:
    """
    Entrypoint for charsub frontend
    """
    enable_global_context()


def _make_command(command_name: str) -> click.Command:
    @spec_options
    def command(spec_path: Path | None, json_out: str | None, logging_level: str, **overrides: Any) -> None:
        execute(command_name, spec_path, json_out, logging_level, **overrides)

    command.__doc__ = COMMAND_HELP[command_name]
    return charsub.command(name=command_name)(command)


for _name in COMMANDS:
    _make_command(_name)
