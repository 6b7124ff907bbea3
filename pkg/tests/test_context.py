"""
Unit tests for the context management.

@date: 14.10.2026
@author: Baptiste Pestourie
"""

from __future__ import annotations

from typing import Generator

import pytest

from charsub.circle import canonicalize, surd
from charsub.commands import run
from charsub.config import Settings, SpecFile
from charsub.context import (
    TaskTrace,
    add_trace_if_enabled,
    clear_contexts,
    create_context_if_enabled,
    enable_global_context,
    get_context,
    is_global_context_enabled,
    reset_contexts,
)
from charsub.diophantine import integer_relation


@pytest.fixture(autouse=True)
def clear_contexts_before_and_after() -> Generator[None, None, None]:
    clear_contexts()
    try:
        yield
    finally:
        clear_contexts()


def test_global_context_toggling() -> None:
    assert is_global_context_enabled() is False
    enable_global_context()
    assert is_global_context_enabled() is True
    reset_contexts()
    assert is_global_context_enabled() is True
    clear_contexts()
    assert is_global_context_enabled() is False


def test_get_global_context() -> None:
    assert get_context() is None
    enable_global_context()
    ctx1 = get_context()
    ctx2 = get_context()
    assert ctx1 is ctx2
    clear_contexts()
    assert get_context() is None


def test_traces_are_opt_in() -> None:
    assert add_trace_if_enabled("orbit search", "mod 3") is None
    enable_global_context()
    trace = add_trace_if_enabled("orbit search", "mod 3")
    assert isinstance(trace, TaskTrace)
    trace.comment("cycle (1,2)")
    ctx = get_context()
    assert ctx is not None
    assert ctx.trace_lines() == ["orbit search; mod 3; cycle (1,2)"]
    reset_contexts()
    assert get_context() is not ctx
    assert get_context().trace_lines() == []  # type: ignore[union-attr]


def test_library_calls_leave_traces() -> None:
    enable_global_context()
    integer_relation([canonicalize(1, 3), canonicalize(1, 6)], height=5)
    integer_relation([surd(0, 1, 2, 1)], height=5)
    ctx = get_context()
    assert ctx is not None
    lines = ctx.trace_lines()
    assert len(lines) == 2
    assert all(line.startswith("Integer relation") for line in lines)
    rendered = ctx.render()
    assert rendered.count("> Integer relation") == 2


class DummyContext:
    def render(self) -> str:
        return "dummy"


def test_get_context() -> None:
    enable_global_context()
    ctx1 = create_context_if_enabled("ctx1", DummyContext)
    ctx2 = create_context_if_enabled("ctx2", DummyContext)
    assert isinstance(ctx1, DummyContext)
    assert isinstance(ctx2, DummyContext)
    assert ctx1 is not ctx2
    assert get_context("ctx1") is ctx1
    assert get_context("ctx2") is ctx2
    global_ctx = get_context()
    assert global_ctx is not None
    rendered = global_ctx.render()
    assert rendered.count("dummy") == 2


def test_settings_as_persistent_context() -> None:
    enable_global_context()
    settings = create_context_if_enabled("settings", Settings(workers=2))
    assert settings is not None
    global_ctx = get_context()
    assert global_ctx is not None
    assert "workers = 2" in global_ctx.render()


def test_runs_start_from_a_fresh_context() -> None:
    spec = SpecFile.from_text('[input]\nsequence = "geometric(1,2)"\npoints = ["1/3"]\n')
    assert run("membership", spec).trace == []
    assert get_context() is None

    enable_global_context()
    first = run("membership", spec, Settings(workers=3))
    second = run("membership", spec, Settings(workers=3))
    assert first.trace and first.trace == second.trace
    settings = get_context("settings")
    assert isinstance(settings, Settings) and settings.workers == 3
