from __future__ import annotations

import threading
import time

import pytest
from hypothesis import given, settings

from applscript.backends.base import GenerationRequest, GenerationResponse
from applscript.errors import GenerationFailed, QueueClosed
from applscript.futures import (
    BooleanFuture,
    GenerationHandle,
    Pending,
    Scheduler,
    StringFuture,
    concat,
    delegate_fallback,
    force_bool,
    materialize,
)

from strategies import futures, resolved_handle


def test_concat_lists_segments():
    h = GenerationHandle(0)
    s = StringFuture(["a", Pending(h)])
    t = StringFuture(["b", "c"])
    assert concat(StringFuture(["a"]), t).segments == ("abc",)  # adjacent ready text merges
    u = concat(s, StringFuture([Pending(h), "c"]))
    assert len(u.segments) == 4
    assert concat(s, StringFuture()).segments == s.segments


def test_materialize_ready_and_empty():
    assert materialize(StringFuture(["The answer is ", "42"])) == "The answer is 42"
    assert StringFuture().materialize() == ""


def test_materialize_pending():
    h = GenerationHandle(3)
    s = StringFuture(["A: ", Pending(h)])
    assert not s.is_ready()
    threading.Timer(0.05, lambda: h.set_result(GenerationResponse(text="ok"))).start()
    assert s.materialize() == "A: ok"
    assert s.is_ready()


def test_format_spec_applies_after_resolution():
    s = StringFuture([Pending(resolved_handle("ab"), ">4")])
    assert s.materialize() == "  ab"


def test_materialize_failure_carries_request_id():
    h = GenerationHandle(5)
    h.set_error("boom")
    with pytest.raises(GenerationFailed) as info:
        StringFuture(["x", Pending(h)]).materialize()
    assert info.value.request_id == 5 and "boom" in info.value.error


def test_cache_does_not_recontact_producer():
    h = resolved_handle("v")
    calls = []
    orig = h.text
    h.text = lambda: calls.append(1) or orig()
    s = StringFuture([Pending(h)])
    assert s.materialize() == s.materialize() == "v"
    assert len(calls) == 1


def test_boolean_future_basics():
    assert force_bool(BooleanFuture("==", "x", "x")) is True
    s = StringFuture(["q", Pending(resolved_handle("z"))])
    assert BooleanFuture("!=", s, s).force() is False
    assert BooleanFuture("<", "a", "b").force() is True


def test_boolean_future_waits_and_forces_once():
    h = GenerationHandle(0)
    b = BooleanFuture("==", StringFuture.pending(h), "yes")
    threading.Timer(0.05, lambda: h.set_result(GenerationResponse(text="yes"))).start()
    assert bool(b) is True
    h.response = GenerationResponse(text="no")  # forced value is cached
    assert b.force() is True


def test_boolean_future_rejects_unknown_op():
    with pytest.raises(ValueError):
        BooleanFuture("<=", "a", "b")


def test_delegate_fallback():
    assert delegate_fallback(StringFuture(["ab", "c"]), "length") == 3
    assert delegate_fallback(StringFuture(["prefix", Pending(resolved_handle("!"))]), "contains", "prefix")
    assert delegate_fallback(StringFuture(), "uppercase") == ""
    assert delegate_fallback("abcdef", "slice", 1, 3) == "bc"
    with pytest.raises(AttributeError):
        delegate_fallback("x", "rot13")


@settings(max_examples=300, deadline=None)
@given(futures(), futures())
def test_homomorphism(s, t):
    (fs, os_), (ft, ot) = s, t
    assert materialize(concat(fs, ft)) == materialize(fs) + materialize(ft) == os_ + ot


@settings(max_examples=300, deadline=None)
@given(futures(), futures(), futures())
def test_associativity(a, b, c):
    (fa, _), (fb, _), (fc, _) = a, b, c
    assert materialize(concat(concat(fa, fb), fc)) == materialize(concat(fa, concat(fb, fc)))


@settings(max_examples=200, deadline=None)
@given(futures())
def test_identity_and_idempotence(s):
    fs, oracle = s
    assert materialize(concat(fs, StringFuture())) == materialize(concat(StringFuture(), fs)) == oracle
    first = fs.materialize()
    assert fs.materialize() is first


# -- scheduler -------------------------------------------------------------
class SleepBackend:
    def __init__(self, delay: float, text="ok"):
        self.delay = delay
        self.text = text
        self.calls = 0
        self.lock = threading.Lock()

    def complete(self, request):
        with self.lock:
            self.calls += 1
        time.sleep(self.delay)
        return GenerationResponse(text=f"{self.text}{request.request_id}")


def _req(messages=None, prompt=None):
    if prompt is not None:
        return GenerationRequest(prompt=prompt)
    return GenerationRequest.from_messages(messages or [{"role": "user", "content": "hi"}])


def test_schedule_returns_immediately_and_ids_are_ordered():
    backend = SleepBackend(0.1)
    with Scheduler(backend, pool_size=16) as sched:
        t0 = time.perf_counter()
        handles = [sched.schedule(_req()) for _ in range(10)]
        assert time.perf_counter() - t0 < 0.05
        assert [h.request_id for h in handles] == list(range(10))
        sched.drain()
        elapsed = time.perf_counter() - t0
    assert elapsed < 0.1 + 0.15
    assert [h.text() for h in handles] == [f"ok{i}" for i in range(10)]


def test_pool_of_one_serializes():
    backend = SleepBackend(0.03)
    with Scheduler(backend, pool_size=1) as sched:
        t0 = time.perf_counter()
        for _ in range(5):
            sched.schedule(_req())
        sched.drain()
        assert time.perf_counter() - t0 >= 5 * 0.03


def test_dependent_request_waits_for_dependency():
    from applscript.context import PromptRecord
    from applscript.trace import TraceLog

    log = TraceLog()
    backend = SleepBackend(0.05)
    with Scheduler(backend, pool_size=4, trace=log) as sched:
        first = sched.schedule(_req())
        prompt = (PromptRecord("user", StringFuture(["Q: ", Pending(first)])),)
        second = sched.schedule(_req(prompt=prompt))
        sched.drain()
    commits = {e.request_id: e.timestamp_us for e in log.of_kind("CommitRequest")}
    finishes = {e.request_id: e.timestamp_us for e in log.of_kind("FinishRequest")}
    assert commits[1] >= finishes[0]
    assert second.response is not None
    assert second.text() == "ok1"


def test_failed_dependency_poisons_dependent_only():
    from applscript.context import PromptRecord

    class FailFirst(SleepBackend):
        def complete(self, request):
            if request.request_id == 0:
                raise RuntimeError("down")
            return super().complete(request)

    with Scheduler(FailFirst(0.0), pool_size=2) as sched:
        bad = sched.schedule(_req())
        dep = sched.schedule(_req(prompt=(PromptRecord("user", StringFuture.pending(bad)),)))
        ok = sched.schedule(_req())
        sched.drain()
    assert bad.status == "failed" and dep.status == "failed"
    assert ok.text() == "ok2"
    with pytest.raises(GenerationFailed) as info:
        dep.result()
    assert "gen#0" in info.value.error


def test_schedule_after_shutdown():
    sched = Scheduler(SleepBackend(0), pool_size=1)
    sched.shutdown()
    with pytest.raises(QueueClosed):
        sched.schedule(_req())
