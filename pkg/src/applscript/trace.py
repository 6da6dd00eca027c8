"""Request lifecycle tracing, replay caches, timeline export and speedup estimation."""

from __future__ import annotations

import json
import math
import platform
import threading
import time
import uuid
from collections import defaultdict, deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Any, Iterable

from .backends.base import GenerationResponse, canonical_json
from .errors import InvalidStages, ReplayMismatch

EVENT_KINDS = ("SendRequest", "CommitRequest", "FinishRequest", "FunctionEnter", "FunctionExit")
REQUEST_EVENTS = ("SendRequest", "CommitRequest", "FinishRequest")


@dataclass
class TraceEvent:
    kind: str
    request_id: int | None
    timestamp_us: int
    payload: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"event": self.kind, "request_id": self.request_id, "ts": self.timestamp_us, "payload": self.payload}

    @classmethod
    def from_dict(cls, data: dict) -> TraceEvent:
        if data.get("event") not in EVENT_KINDS:
            raise ValueError(f"unknown trace event {data.get('event')!r}")
        return cls(data["event"], data.get("request_id"), int(data["ts"]), data.get("payload") or {})


def _tool_versions() -> dict:
    from . import __version__

    return {"applscript": __version__, "python": platform.python_version()}


class TraceLog:
    """Append-only event log, mirrored line-by-line to a JSONL file when a path is given.

    Every record is flushed before :meth:`record` returns, so a log cut off at
    any point is still loadable.
    """

    def __init__(self, path: str | Path | None = None, seed: int | None = None, run_id: str | None = None):
        self.header = {
            "run_id": run_id or uuid.uuid4().hex,
            "seed": seed,
            "started_at": time.time(),
            "tool_versions": _tool_versions(),
        }
        self.events: list[TraceEvent] = []
        self.path = Path(path) if path is not None else None
        self._origin = time.perf_counter_ns()
        self._lock = threading.Lock()
        self._fh: IO[str] | None = None
        if self.path is not None:
            self._fh = self.path.open("w", encoding="utf-8")
            self._write({"header": self.header})

    def now(self) -> int:
        """Microseconds since the log was opened (monotonic)."""
        return (time.perf_counter_ns() - self._origin) // 1000

    def _write(self, obj: dict) -> None:
        assert self._fh is not None
        self._fh.write(json.dumps(obj, ensure_ascii=False) + "\n")
        self._fh.flush()

    def record(
        self,
        kind: str,
        request_id: int | None = None,
        payload: dict | None = None,
        timestamp_us: int | None = None,
    ) -> TraceEvent:
        if kind not in EVENT_KINDS:
            raise ValueError(f"unknown trace event {kind!r}")
        event = TraceEvent(kind, request_id, self.now() if timestamp_us is None else timestamp_us, payload or {})
        self.append(event)
        return event

    def append(self, event: TraceEvent) -> None:
        with self._lock:
            self.events.append(event)
            if self._fh is not None:
                self._write(event.to_dict())

    def close(self) -> None:
        with self._lock:
            if self._fh is not None:
                self._fh.close()
                self._fh = None

    def __enter__(self) -> TraceLog:
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def of_kind(self, kind: str) -> list[TraceEvent]:
        return [e for e in self.events if e.kind == kind]

    @classmethod
    def from_events(cls, events: Iterable[TraceEvent], header: dict | None = None) -> TraceLog:
        log = cls()
        if header:
            log.header = dict(header)
        log.events = list(events)
        return log

    @classmethod
    def load(cls, path: str | Path) -> TraceLog:
        """Read a JSONL log; a torn or corrupt tail line ends the log."""
        text = Path(path).read_text(encoding="utf-8")
        return cls.loads(text)

    @classmethod
    def loads(cls, text: str) -> TraceLog:
        header: dict = {}
        events = []
        for i, line in enumerate(text.split("\n")):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                if i == 0 and "header" in obj:
                    header = obj["header"]
                    continue
                events.append(TraceEvent.from_dict(obj))
            except (json.JSONDecodeError, ValueError, KeyError, TypeError):
                break
        return cls.from_events(events, header)


def record(log: TraceLog, event: TraceEvent) -> None:
    log.append(event)


@dataclass
class _Lifecycle:
    send: TraceEvent | None = None
    commit: TraceEvent | None = None
    finish: TraceEvent | None = None


def lifecycles(log: TraceLog) -> dict[int, _Lifecycle]:
    out: dict[int, _Lifecycle] = {}
    for e in log.events:
        if e.kind not in REQUEST_EVENTS or e.request_id is None:
            continue
        lc = out.setdefault(e.request_id, _Lifecycle())
        setattr(lc, {"SendRequest": "send", "CommitRequest": "commit", "FinishRequest": "finish"}[e.kind], e)
    return dict(sorted(out.items()))


class ReplayCache:
    """Serves recorded responses in place of backend calls.

    strict: keyed by request id, and the re-run request must match the recorded one.
    nonstrict: grouped by the full committed request; hits pop FIFO from their group.
    """

    def __init__(self, log: TraceLog, mode: str = "strict", fallback_live: bool = False):
        if mode not in ("strict", "nonstrict"):
            raise ValueError(f"unknown replay mode {mode!r}")
        self.mode = mode
        self.fallback_live = fallback_live
        self._lock = threading.Lock()
        self.by_id: dict[int, tuple[str, GenerationResponse]] = {}
        self.groups: dict[str, deque[GenerationResponse]] = defaultdict(deque)
        commits: dict[int, str] = {}
        for e in log.events:
            if e.kind == "CommitRequest" and e.request_id is not None:
                commits[e.request_id] = canonical_json(e.payload["request"])
            elif e.kind == "FinishRequest" and e.request_id in commits and "response" in e.payload:
                key = commits[e.request_id]
                resp = GenerationResponse.from_dict(e.payload["response"])
                self.by_id[e.request_id] = (key, resp)
                self.groups[key].append(resp)
        self.hits = 0
        self.misses = 0

    def __len__(self) -> int:
        return len(self.by_id)

    def lookup(self, request) -> GenerationResponse | None:
        key = request.canonical_json()
        with self._lock:
            if self.mode == "strict":
                entry = self.by_id.get(request.request_id)
                if entry is not None and entry[0] != key:
                    if not self.fallback_live:
                        raise ReplayMismatch(request.request_id, entry[0], key)
                    entry = None
                resp = entry[1] if entry is not None else None
            else:
                group = self.groups.get(key)
                resp = group.popleft() if group else None
            if resp is None:
                self.misses += 1
            else:
                self.hits += 1
            return resp


def replay_strict(log: TraceLog, fallback_live: bool = False) -> ReplayCache:
    return ReplayCache(log, "strict", fallback_live)


def replay_nonstrict(log: TraceLog) -> ReplayCache:
    return ReplayCache(log, "nonstrict")


def chrome_events(log: TraceLog) -> list[dict]:
    events = []
    for e in log.events:
        if e.kind in ("FunctionEnter", "FunctionExit"):
            events.append(
                {
                    "name": e.payload.get("function", "?"),
                    "ph": "B" if e.kind == "FunctionEnter" else "E",
                    "ts": e.timestamp_us,
                    "pid": 1,
                    "tid": 0,
                }
            )
    for rid, lc in lifecycles(log).items():
        if lc.finish is None:
            continue
        start = lc.commit or lc.send
        if start is None:
            continue
        args: dict[str, Any] = {"request_id": rid}
        if "error" in lc.finish.payload:
            args["error"] = lc.finish.payload["error"]
        if lc.finish.payload.get("cached"):
            args["cached"] = True
        events.append(
            {
                "name": f"gen#{rid}",
                "ph": "X",
                "ts": start.timestamp_us,
                "dur": max(0, lc.finish.timestamp_us - start.timestamp_us),
                "pid": 1,
                "tid": int(lc.finish.payload.get("worker", 0)),
                "args": args,
            }
        )
    return events


def export_chrome_trace(log: TraceLog) -> str:
    """Timeline JSON for the Chrome trace viewer (``chrome://tracing``)."""
    return json.dumps({"traceEvents": chrome_events(log)}, separators=(",", ":"))


@dataclass(frozen=True)
class SpeedupStage:
    fraction: float  # share of sequential runtime, in (0, 1]
    parallelism: float  # speedup of this stage, >= 1


def estimate_speedup(stages: Iterable[SpeedupStage | tuple[float, float]]) -> float:
    """Amdahl estimate ``1 / sum(p_i / s_i)`` over program stages."""
    items = [s if isinstance(s, SpeedupStage) else SpeedupStage(*s) for s in stages]
    if not items:
        raise InvalidStages("at least one stage is required")
    for s in items:
        if not (0 < s.fraction <= 1):
            raise InvalidStages(f"stage fraction {s.fraction} is outside (0, 1]")
        if s.parallelism < 1:
            raise InvalidStages(f"stage parallelism {s.parallelism} is below 1")
    if abs(math.fsum(s.fraction for s in items) - 1.0) > 1e-9:
        raise InvalidStages("stage fractions must sum to 1")
    return 1.0 / math.fsum(s.fraction / s.parallelism for s in items)


def _prompt_chars(lc: _Lifecycle) -> int:
    if lc.commit is None:
        return 0
    msgs = lc.commit.payload.get("request", {}).get("messages", [])
    return sum(len(m.get("content") or "") for m in msgs)


def _request_line(rid: int, lc: _Lifecycle) -> str:
    parts = [f"gen#{rid}", f"prompt={_prompt_chars(lc)} chars"]
    if lc.finish is not None:
        start = lc.commit or lc.send
        dur = (lc.finish.timestamp_us - start.timestamp_us) / 1000.0 if start else 0.0
        parts.append(f"duration={dur:.1f} ms")
        if "error" in lc.finish.payload:
            parts.append(f"error={lc.finish.payload['error']}")
        else:
            usage = lc.finish.payload.get("response", {}).get("usage", {})
            parts.append(f"tokens={usage.get('prompt_tokens', 0)}+{usage.get('completion_tokens', 0)}")
            if lc.finish.payload.get("cached"):
                parts.append("cached")
    else:
        parts.append("unfinished")
    return "  ".join(parts)


def report(log: TraceLog) -> str:
    """Indented call tree of functions and the generation requests they issued."""
    reqs = lifecycles(log)
    children: dict[Any, list[tuple[str, Any]]] = defaultdict(list)
    names: dict[Any, str] = {}
    spans: dict[Any, list[int | None]] = {}
    for e in log.events:
        if e.kind == "FunctionEnter":
            frame = e.payload.get("frame")
            names[frame] = e.payload.get("function", "?")
            spans[frame] = [e.timestamp_us, None]
            children[e.payload.get("parent")].append(("frame", frame))
        elif e.kind == "FunctionExit":
            frame = e.payload.get("frame")
            if frame in spans:
                spans[frame][1] = e.timestamp_us
        elif e.kind == "SendRequest":
            children[e.payload.get("frame")].append(("request", e.request_id))
    lines: list[str] = []

    def emit(frame: Any, depth: int) -> None:
        for kind, ref in children.get(frame, []):
            pad = "  " * depth
            if kind == "request":
                lines.append(pad + _request_line(ref, reqs.get(ref, _Lifecycle())))
            else:
                start, end = spans[ref]
                dur = f"  {(end - start) / 1000.0:.1f} ms" if end is not None else ""
                lines.append(f"{pad}{names[ref]}{dur}")
                emit(ref, depth + 1)

    emit(None, 0)
    n_done = sum(1 for lc in reqs.values() if lc.finish is not None)
    lines.append(f"requests: {len(reqs)} ({n_done} finished)")
    return "\n".join(lines) + "\n"
