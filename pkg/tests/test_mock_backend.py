from __future__ import annotations

import time

import pytest

from applscript.backends import GenerationRequest, MockBackend, NativeTool, load_script, mock_complete
from applscript.backends.toolspec import build_tool_spec
from applscript.errors import BackendError
from applscript.tools import is_lucky


def req(content="hello", **kw):
    r = GenerationRequest.from_messages([{"role": "user", "content": content}], **kw)
    r.request_id = kw.pop("request_id", 0) if "request_id" in kw else 0
    return r


def test_deterministic():
    a = mock_complete(req(), seed=3)
    b = mock_complete(req(), seed=3)
    assert a == b
    assert a.text.startswith("mock-") and len(a.text) == len("mock-") + 8
    assert mock_complete(req(), seed=4).text != a.text


def test_sampled_requests_differ_by_id():
    r1, r2 = req(temperature=0.7), req(temperature=0.7)
    r2.request_id = 1
    assert mock_complete(r1).text != mock_complete(r2).text
    g1, g2 = req(), req()
    g2.request_id = 1
    assert mock_complete(g1).text == mock_complete(g2).text


def test_required_tool_call_is_synthesized():
    spec = build_tool_spec(NativeTool.from_function(is_lucky))
    resp = mock_complete(req(tool_specs=[spec], tool_choice="required"))
    assert [(c["name"], c["arguments"]) for c in resp.tool_calls] == [("is_lucky", {"x": 0})]
    assert resp.finish_reason == "tool_calls"


def test_tool_choice_none_has_no_calls():
    spec = build_tool_spec(NativeTool.from_function(is_lucky))
    script = load_script([{"match": "lucky", "text": "t", "tool_calls": [{"name": "is_lucky", "arguments": {"x": 1}}]}])
    resp = mock_complete(req("lucky?", tool_specs=[spec], tool_choice="none"), script=script)
    assert resp.tool_calls == [] and resp.text == "t"
    auto = mock_complete(req("lucky?", tool_specs=[spec], tool_choice="auto"), script=script)
    assert auto.tool_calls[0]["arguments"] == {"x": 1}


def test_script_first_match_wins_and_expands_groups():
    script = load_script(
        {"rules": [{"match": r"point (\d+)", "text": r"expanded \g<1>"}, {"match": "point", "text": "never"}]}
    )
    assert mock_complete(req("write point 3"), script=script).text == "expanded 3"
    assert mock_complete(req("name extraction"), script=script).text.startswith("mock-")


def test_fig1_script_text():
    script = load_script([{"match": "Extract the name of the author", "text": "Leonardo da Vinci."}])
    assert mock_complete(req("Extract the name of the author from the quotation below"), script=script).text == (
        "Leonardo da Vinci."
    )


def test_latency_injection():
    t0 = time.perf_counter()
    mock_complete(req(), latency_ms=50)
    elapsed = time.perf_counter() - t0
    assert 0.05 <= elapsed < 0.05 + 0.05


def test_injected_failure():
    backend = MockBackend(fail_on={1})
    ok = req()
    backend.complete(ok)
    bad = req()
    bad.request_id = 1
    with pytest.raises(BackendError):
        backend.complete(bad)
    assert backend.calls == 2


def test_script_rule_without_match():
    with pytest.raises(ValueError):
        load_script([{"text": "x"}])
