"""Request/response types shared by every generation backend."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from typing import Any, Protocol

from ..context import PromptRecord, dependencies, to_wire

DEFAULT_MODEL = "gpt-4o-mini"
DEFAULT_TEMPERATURE = 0.0
DEFAULT_MAX_TOKENS = 256
TOOL_CHOICES = ("none", "auto", "required")


def default_model() -> str:
    return os.environ.get("APPL_MODEL") or DEFAULT_MODEL


def canonical_json(obj: Any) -> str:
    """Stable JSON text: sorted keys, no insignificant whitespace."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


@dataclass
class GenerationResponse:
    text: str = ""
    tool_calls: list[dict] = field(default_factory=list)
    finish_reason: str = "stop"
    usage: dict = field(default_factory=lambda: {"prompt_tokens": 0, "completion_tokens": 0})

    def to_dict(self) -> dict:
        return {
            "text": self.text,
            "tool_calls": [dict(c) for c in self.tool_calls],
            "finish_reason": self.finish_reason,
            "usage": dict(self.usage),
        }

    @classmethod
    def from_dict(cls, data: dict) -> GenerationResponse:
        return cls(
            text=data.get("text", ""),
            tool_calls=[dict(c) for c in data.get("tool_calls", [])],
            finish_reason=data.get("finish_reason", "stop"),
            usage=dict(data.get("usage", {})),
        )


@dataclass
class GenerationRequest:
    """One LLM call.  ``prompt`` may hold unresolved futures until :meth:`commit`."""

    prompt: tuple[PromptRecord, ...] | None = None
    model: str = field(default_factory=default_model)
    temperature: float = DEFAULT_TEMPERATURE
    max_tokens: int = DEFAULT_MAX_TOKENS
    stop: list[str] | None = None
    tool_choice: str | None = None
    tool_specs: list = field(default_factory=list)
    origin: dict = field(default_factory=dict)
    request_id: int | None = None
    messages: list[dict] | None = None
    created_at: int | None = None
    committed_at: int | None = None
    finished_at: int | None = None
    handle: Any = None

    @classmethod
    def from_messages(cls, messages: list[dict], **params: Any) -> GenerationRequest:
        return cls(prompt=None, messages=[dict(m) for m in messages], **params)

    def dependencies(self) -> list:
        return dependencies(self.prompt) if self.prompt is not None else []

    def commit(self, timestamp_us: int | None = None) -> None:
        """Materialize the prompt snapshot into concrete wire messages."""
        if self.prompt is not None:
            self.messages = to_wire(self.prompt)
        elif self.messages is None:
            self.messages = []
        self.committed_at = timestamp_us if timestamp_us is not None else self.created_at

    def payload(self) -> dict:
        """Chat-completions body for this request (requires a committed prompt)."""
        if self.messages is None:
            raise RuntimeError("request has not been committed")
        body: dict[str, Any] = {
            "model": self.model,
            "messages": self.messages,
            "temperature": self.temperature,
            "max_tokens": self.max_tokens,
        }
        if self.stop is not None:
            body["stop"] = list(self.stop)
        if self.tool_specs:
            body["tools"] = [s.to_dict() for s in self.tool_specs]
            body["tool_choice"] = self.tool_choice or "auto"
        return body

    def canonical_json(self) -> str:
        return canonical_json(self.payload())

    def last_user_message(self) -> str:
        for msg in reversed(self.messages or []):
            if msg.get("role") == "user":
                return msg.get("content") or ""
        return ""


class Backend(Protocol):
    def complete(self, request: GenerationRequest) -> GenerationResponse: ...
