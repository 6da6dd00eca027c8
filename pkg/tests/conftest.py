from __future__ import annotations

from pathlib import Path

import pytest

from applscript.backends import MockBackend, load_script
from applscript.compiler import compile_source
from applscript.interpreter import Interpreter, RuntimeEnv

EXAMPLES = Path(__file__).resolve().parent.parent / "src" / "applscript" / "examples"
EXAMPLE_NAMES = ["fig1", "cotsc", "react", "chat", "sot", "memwalker", "definitions"]


def example_source(name: str) -> str:
    return (EXAMPLES / f"{name}.apl").read_text(encoding="utf-8")


def example_script(name: str):
    path = EXAMPLES / f"{name}.responses.json"
    return load_script(path) if path.exists() else []


def run_source(source: str, entry=None, args=(), script=None, seed=0, latency_ms=0, **env_kwargs):
    backend = env_kwargs.pop("backend", None) or MockBackend(seed=seed, latency_ms=latency_ms, script=load_script(script))
    interp = Interpreter(compile_source(source), RuntimeEnv(backend=backend, seed=seed, **env_kwargs))
    value = interp.run(entry, args)
    return interp, value


def run_example(name: str, seed=0, latency_ms=0, **env_kwargs):
    backend = env_kwargs.pop("backend", None) or MockBackend(seed=seed, latency_ms=latency_ms, script=example_script(name))
    return run_source(example_source(name), backend=backend, seed=seed, **env_kwargs)


@pytest.fixture
def examples_dir() -> Path:
    return EXAMPLES


ACCEPTANCE_RESULTS: dict[int, tuple[str, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_RESULTS):
        status, detail = ACCEPTANCE_RESULTS[number]
        terminalreporter.write_line(f"{status} criterion {number:>2}: {detail}")
