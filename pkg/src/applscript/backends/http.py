"""OpenAI-compatible chat-completions client with retry and backoff."""

from __future__ import annotations

import json
import logging
import os
import time
from typing import Any

import httpx

from ..errors import BackendError, ToolCallParseError
from .base import GenerationRequest, GenerationResponse, canonical_json

log = logging.getLogger(__name__)

DEFAULT_BASE_URL = "https://api.openai.com/v1"
RETRY_STATUSES = frozenset({429, 500, 502, 503, 504})


def parse_tool_calls(raw: Any) -> list[dict]:
    """Extract ``[{id, name, arguments}]`` from a chat-completions body or message."""
    if isinstance(raw, (str, bytes)):
        raw = json.loads(raw)
    message = raw
    if isinstance(raw, dict) and "choices" in raw:
        choices = raw.get("choices") or [{}]
        message = choices[0].get("message") or {}
    calls = (message or {}).get("tool_calls") or []
    out = []
    for call in calls:
        fn = call.get("function") or {}
        text = fn.get("arguments")
        if isinstance(text, dict):
            args = text
        else:
            try:
                args = json.loads(text) if text else {}
            except (TypeError, json.JSONDecodeError):
                raise ToolCallParseError(f"malformed arguments for tool call {fn.get('name')!r}", str(text)) from None
            if not isinstance(args, dict):
                raise ToolCallParseError(f"arguments for tool call {fn.get('name')!r} are not an object", str(text))
        out.append({"id": call.get("id", ""), "name": fn.get("name", ""), "arguments": args})
    return out


def parse_response(body: dict) -> GenerationResponse:
    choices = body.get("choices") or []
    if not choices:
        raise BackendError("response has no choices", body=json.dumps(body)[:500])
    message = choices[0].get("message") or {}
    usage = body.get("usage") or {}
    return GenerationResponse(
        text=message.get("content") or "",
        tool_calls=parse_tool_calls(body),
        finish_reason=choices[0].get("finish_reason") or "stop",
        usage={
            "prompt_tokens": int(usage.get("prompt_tokens", 0)),
            "completion_tokens": int(usage.get("completion_tokens", 0)),
        },
    )


class HttpBackend:
    """POSTs requests to ``<base_url>/chat/completions``.

    Transport errors, 429 and 5xx are retried with exponential backoff;
    other error statuses fail immediately.
    """

    def __init__(
        self,
        base_url: str | None = None,
        api_key: str | None = None,
        timeout: float = 60.0,
        max_attempts: int = 3,
        backoff: float = 0.5,
        client: httpx.Client | None = None,
    ):
        self.base_url = (base_url or os.environ.get("APPL_BASE_URL") or DEFAULT_BASE_URL).rstrip("/")
        self.api_key = api_key if api_key is not None else os.environ.get("APPL_API_KEY", "")
        self.max_attempts = max_attempts
        self.backoff = backoff
        self._client = client or httpx.Client(timeout=timeout)

    @property
    def url(self) -> str:
        return f"{self.base_url}/chat/completions"

    def build_body(self, request: GenerationRequest) -> bytes:
        if request.messages is None:
            request.commit()
        return canonical_json(request.payload()).encode("utf-8")

    def complete(self, request: GenerationRequest) -> GenerationResponse:
        body = self.build_body(request)
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        last_error: BackendError | None = None
        for attempt in range(self.max_attempts):
            if attempt:
                time.sleep(self.backoff * (2 ** (attempt - 1)))
            try:
                resp = self._client.post(self.url, content=body, headers=headers)
            except httpx.TransportError as exc:
                last_error = BackendError(f"transport error: {exc}")
                log.warning("attempt %d/%d failed: %s", attempt + 1, self.max_attempts, exc)
                continue
            if resp.status_code == 200:
                try:
                    return parse_response(resp.json())
                except json.JSONDecodeError:
                    raise BackendError("response is not valid JSON", 200, resp.text[:500]) from None
            err = BackendError(f"HTTP {resp.status_code} from {self.url}", resp.status_code, resp.text[:500])
            if resp.status_code not in RETRY_STATUSES:
                raise err
            log.warning("attempt %d/%d got HTTP %d", attempt + 1, self.max_attempts, resp.status_code)
            last_error = err
        assert last_error is not None
        raise last_error

    def close(self) -> None:
        self._client.close()


def http_complete(request: GenerationRequest, **kwargs: Any) -> GenerationResponse:
    backend = HttpBackend(**kwargs)
    try:
        return backend.complete(request)
    finally:
        backend.close()
