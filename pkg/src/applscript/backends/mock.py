"""Deterministic mock backend with scripted responses and latency injection."""

from __future__ import annotations

import hashlib
import json
import re
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable

from ..errors import BackendError
from .base import GenerationRequest, GenerationResponse, canonical_json
from .toolspec import default_arguments


@dataclass
class ScriptRule:
    pattern: re.Pattern
    text: str | None = None
    tool_calls: list[dict] | None = None


def load_script(source: str | Path | list | dict | None) -> list[ScriptRule]:
    """Load a scripted-response table.

    Accepts a path to a JSON file, or already-decoded JSON: either a list of
    rules or ``{"rules": [...]}``.  Each rule is
    ``{"match": <regex>, "text": <str>, "tool_calls": [{"name", "arguments"}]}``.
    """
    if source is None:
        return []
    if isinstance(source, (str, Path)):
        data = json.loads(Path(source).read_text(encoding="utf-8"))
    else:
        data = source
    if isinstance(data, dict):
        data = data.get("rules", [])
    rules = []
    for i, item in enumerate(data):
        if "match" not in item:
            raise ValueError(f"script rule {i} has no 'match' pattern")
        rules.append(ScriptRule(re.compile(item["match"], re.S), item.get("text"), item.get("tool_calls")))
    return rules


def _usage(request: GenerationRequest, text: str) -> dict:
    prompt_tokens = sum(len((m.get("content") or "").split()) for m in request.messages or [])
    return {"prompt_tokens": prompt_tokens, "completion_tokens": len(text.split())}


def request_digest(request: GenerationRequest, seed: int) -> str:
    """Hash of the canonical request and seed; sampled requests also mix in their id."""
    key = canonical_json(request.payload()) + f"|seed={seed}"
    if request.temperature and request.temperature > 0:
        key += f"|sample={request.request_id}"
    return hashlib.sha256(key.encode("utf-8")).hexdigest()


def mock_complete(
    request: GenerationRequest,
    seed: int = 0,
    latency_ms: float = 0,
    script: Iterable[ScriptRule] | None = None,
) -> GenerationResponse:
    """Produce a deterministic response for ``request``."""
    if request.messages is None:
        request.commit()
    digest = request_digest(request, seed)
    rule_text = None
    rule_calls = None
    last_user = request.last_user_message()
    for rule in script or ():
        m = rule.pattern.search(last_user)
        if m:
            rule_text = m.expand(rule.text) if rule.text is not None else None
            rule_calls = rule.tool_calls
            break
    synthesized = f"mock-{digest[:8]}"
    specs = list(request.tool_specs)
    choice = (request.tool_choice or "auto") if specs else "none"
    calls: list[dict] = []
    if choice == "required":
        if rule_calls:
            calls = [dict(c) for c in rule_calls]
        else:
            calls = [{"name": specs[0].name, "arguments": default_arguments(specs[0])}]
        text = ""
    elif choice == "auto" and rule_calls:
        calls = [dict(c) for c in rule_calls]
        text = rule_text or ""
    else:
        text = rule_text if rule_text is not None else synthesized
    for i, call in enumerate(calls):
        call.setdefault("id", f"call_{digest[:8]}_{i}")
        call.setdefault("arguments", {})
    if latency_ms:
        time.sleep(latency_ms / 1000.0)
    return GenerationResponse(
        text=text,
        tool_calls=[{"id": c["id"], "name": c["name"], "arguments": c["arguments"]} for c in calls],
        finish_reason="tool_calls" if calls else "stop",
        usage=_usage(request, text),
    )


@dataclass
class MockBackend:
    seed: int = 0
    latency_ms: float = 0
    script: list[ScriptRule] = field(default_factory=list)
    # request ids that fail with an injected error
    fail_on: set[int] = field(default_factory=set)
    calls: int = 0
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    @classmethod
    def from_script_file(cls, path: str | Path | None, **kwargs: Any) -> MockBackend:
        return cls(script=load_script(path), **kwargs)

    def complete(self, request: GenerationRequest) -> GenerationResponse:
        with self._lock:
            self.calls += 1
        if request.request_id in self.fail_on:
            if self.latency_ms:
                time.sleep(self.latency_ms / 1000.0)
            raise BackendError(f"injected failure for gen#{request.request_id}")
        return mock_complete(request, self.seed, self.latency_ms, self.script)
