from __future__ import annotations

import json
import random

import jsonschema
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from applscript.backends import MockBackend
from applscript.compiler import compile_source
from applscript.errors import InvalidStages, ReplayMismatch
from applscript.interpreter import Interpreter, RuntimeEnv, to_python
from applscript.trace import (
    ReplayCache,
    SpeedupStage,
    TraceEvent,
    TraceLog,
    estimate_speedup,
    export_chrome_trace,
    lifecycles,
    report,
)

from conftest import example_script, example_source, run_example

CHROME_SCHEMA = {
    "type": "object",
    "required": ["traceEvents"],
    "properties": {
        "traceEvents": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["name", "ph", "ts", "pid", "tid"],
                "properties": {
                    "name": {"type": "string"},
                    "ph": {"enum": ["B", "E", "X"]},
                    "ts": {"type": "integer", "minimum": 0},
                    "dur": {"type": "integer", "minimum": 0},
                    "pid": {"type": "integer"},
                    "tid": {"type": "integer"},
                    "args": {"type": "object"},
                },
                "if": {"properties": {"ph": {"const": "X"}}},
                "then": {"required": ["dur"]},
            },
        }
    },
}


def recorded(name, tmp_path, seed=0, latency_ms=0):
    path = tmp_path / f"{name}.trace.jsonl"
    log = TraceLog(path, seed=seed)
    interp, value = run_example(name, seed=seed, latency_ms=latency_ms, trace=log)
    log.close()
    return path, interp, value


def replay(name, cache, seed=0, source=None):
    backend = MockBackend(seed=seed, script=example_script(name))
    interp = Interpreter(compile_source(source or example_source(name)), RuntimeEnv(backend=backend, seed=seed, replay=cache))
    value = interp.run()
    return backend, interp, value


def test_event_counts(tmp_path):
    path, interp, _ = recorded("cotsc", tmp_path)
    log = TraceLog.load(path)
    for kind in ("SendRequest", "CommitRequest", "FinishRequest"):
        assert len(log.of_kind(kind)) == 10
    assert log.header["seed"] == 0 and "run_id" in log.header
    assert all(lc.send.timestamp_us <= lc.commit.timestamp_us <= lc.finish.timestamp_us for lc in lifecycles(log).values())


def test_every_prefix_loads(tmp_path):
    path, _, _ = recorded("fig1", tmp_path)
    text = path.read_text()
    full = len(TraceLog.loads(text).events)
    for cut in range(0, len(text), 37):
        log = TraceLog.loads(text[:cut])
        assert len(log.events) <= full


def test_truncated_tail_is_dropped(tmp_path):
    path, _, _ = recorded("fig1", tmp_path)
    text = path.read_text()
    torn = text[: text.rstrip("\n").rfind("\n") + 10]
    assert len(TraceLog.loads(torn).events) == len(TraceLog.loads(text).events) - 1


def test_unknown_event_rejected():
    with pytest.raises(ValueError):
        TraceLog().record("Bogus")
    with pytest.raises(ValueError):
        TraceEvent.from_dict({"event": "Bogus", "ts": 0})


def test_strict_replay_zero_calls(tmp_path):
    path, first, value = recorded("cotsc", tmp_path)
    backend, interp, again = replay("cotsc", ReplayCache(TraceLog.load(path)))
    assert backend.calls == 0
    assert (interp.scheduler.hits, interp.scheduler.live) == (10, 0)
    assert to_python(again) == to_python(value)


def test_strict_replay_missing_finish_goes_live(tmp_path):
    path, _, value = recorded("cotsc", tmp_path)
    lines = path.read_text().splitlines(keepends=True)
    last = max(i for i, line in enumerate(lines) if '"FinishRequest"' in line)
    del lines[last]
    path.write_text("".join(lines))
    backend, interp, again = replay("cotsc", ReplayCache(TraceLog.load(path)))
    assert backend.calls == 1 and interp.scheduler.live == 1
    assert to_python(again) == to_python(value)


def test_strict_replay_detects_divergence(tmp_path):
    path, _, _ = recorded("cotsc", tmp_path)
    source = example_source("cotsc").replace("Let's think step by step", "Think it over")
    with pytest.raises(ReplayMismatch):
        replay("cotsc", ReplayCache(TraceLog.load(path)), source=source)


def test_strict_divergence_with_live_fallback(tmp_path):
    path, _, _ = recorded("cotsc", tmp_path)
    source = example_source("cotsc").replace("Let's think step by step", "Think it over")
    backend, interp, _ = replay("cotsc", ReplayCache(TraceLog.load(path), fallback_live=True), source=source)
    assert backend.calls == 10


def shuffle_finish_lines(path, seed=3):
    lines = path.read_text().splitlines(keepends=True)
    finishes = [line for line in lines if '"FinishRequest"' in line]
    rest = [line for line in lines if '"FinishRequest"' not in line]
    random.Random(seed).shuffle(finishes)
    path.write_text("".join(rest + finishes))
    return [json.loads(line)["request_id"] for line in finishes]


def test_nonstrict_shuffle_preserves_multiset(tmp_path):
    path, _, value = recorded("cotsc", tmp_path)
    order = shuffle_finish_lines(path)
    assert order != sorted(order)
    backend, interp, again = replay("cotsc", ReplayCache(TraceLog.load(path), "nonstrict"))
    assert backend.calls == 0
    assert sorted(to_python(again)) == sorted(to_python(value))
    assert to_python(again) != to_python(value)


def test_nonstrict_groups_do_not_cross_serve():
    log = TraceLog()
    for rid, temp, text in [(0, 0.1, "cold"), (1, 0.9, "hot")]:
        body = {"model": "m", "messages": [{"role": "user", "content": "q"}], "temperature": temp}
        log.record("CommitRequest", rid, {"request": body})
        log.record("FinishRequest", rid, {"response": {"text": text, "tool_calls": []}})
    cache = ReplayCache(log, "nonstrict")
    assert len(cache.groups) == 2

    class Req:
        def __init__(self, temp):
            self.temp = temp

        def canonical_json(self):
            from applscript.backends.base import canonical_json

            return canonical_json({"model": "m", "messages": [{"role": "user", "content": "q"}], "temperature": self.temp})

    assert cache.lookup(Req(0.9)).text == "hot"
    assert cache.lookup(Req(0.9)) is None
    assert cache.lookup(Req(0.1)).text == "cold"


def test_chrome_export_empty():
    assert export_chrome_trace(TraceLog()) == '{"traceEvents":[]}'


def test_chrome_export_schema_and_pattern(tmp_path):
    _, interp, _ = recorded("fig1", tmp_path, latency_ms=30)
    doc = json.loads(export_chrome_trace(interp.trace))
    jsonschema.validate(doc, CHROME_SCHEMA)
    gens = {e["name"]: e for e in doc["traceEvents"] if e["ph"] == "X"}
    assert set(gens) == {"gen#0", "gen#1", "gen#2"}
    a, b = gens["gen#1"], gens["gen#2"]
    assert a["ts"] < b["ts"] + b["dur"] and b["ts"] < a["ts"] + a["dur"]
    assert gens["gen#0"]["ts"] + gens["gen#0"]["dur"] <= min(a["ts"], b["ts"])
    assert a["tid"] != b["tid"]
    functions = [e["name"] for e in doc["traceEvents"] if e["ph"] == "B"]
    assert functions.count("get_answer") == 2


def test_chrome_export_is_compact(tmp_path):
    _, interp, _ = recorded("fig1", tmp_path)
    text = export_chrome_trace(interp.trace)
    assert ", " not in text and ": " not in text.replace(': "', "")


@pytest.mark.parametrize(
    "stages, expected",
    [
        ([(1.0, 10)], 10.0),
        ([(0.5, 1), (0.5, 2)], 4 / 3),
        ([(0.25, 1), (0.75, 3)], 2.0),
        ([SpeedupStage(0.1, 1), SpeedupStage(0.9, 9)], 5.0),
    ],
)
def test_estimate_speedup(stages, expected):
    assert estimate_speedup(stages) == pytest.approx(expected, abs=1e-12)


def test_estimate_speedup_exact_single_stage():
    assert estimate_speedup([(1.0, 10)]) == 10.0


@pytest.mark.parametrize(
    "stages",
    [[], [(0.0, 2), (1.0, 1)], [(1.2, 2)], [(1.0, 0.5)], [(0.5, 2), (0.4, 2)]],
)
def test_estimate_speedup_invalid(stages):
    with pytest.raises(InvalidStages):
        estimate_speedup(stages)


@st.composite
def stage_lists(draw):
    n = draw(st.integers(1, 8))
    weights = draw(st.lists(st.floats(0.01, 1.0), min_size=n, max_size=n))
    total = sum(weights)
    fractions = [w / total for w in weights]
    speeds = draw(st.lists(st.floats(1.0, 64.0), min_size=n, max_size=n))
    return list(zip(fractions, speeds))


@settings(max_examples=200, deadline=None)
@given(stage_lists())
def test_estimate_speedup_matches_direct_evaluation(stages):
    direct = 1.0 / sum(p / s for p, s in stages)
    assert estimate_speedup(stages) == pytest.approx(direct, rel=1e-12, abs=1e-12)


def test_report_tree(tmp_path):
    _, interp, _ = recorded("fig1", tmp_path)
    text = report(interp.trace)
    lines = text.splitlines()
    assert lines[0].startswith("main")
    assert lines[1].startswith("  answer_questions")
    assert sum(1 for line in lines if line.lstrip().startswith("gen#")) == 3
    assert lines[2].startswith("    gen#0")
    assert sum(1 for line in lines if line.startswith("      gen#")) == 2
    assert lines[-1] == "requests: 3 (3 finished)"


def test_report_marks_cached_on_replay(tmp_path):
    path, _, _ = recorded("fig1", tmp_path)
    _, interp, _ = replay("fig1", ReplayCache(TraceLog.load(path)))
    assert report(interp.trace).count("cached") == 3
