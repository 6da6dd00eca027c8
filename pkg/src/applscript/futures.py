"""Lazy string/boolean futures and the worker pool that resolves generations."""

from __future__ import annotations

import logging
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Callable, Iterable, Union

from .errors import APPLError, GenerationFailed, QueueClosed, ReplayMismatch

log = logging.getLogger(__name__)

DEFAULT_POOL_SIZE = 16


class GenerationHandle:
    """Completion slot for one scheduled generation request."""

    def __init__(self, request_id: int):
        self.request_id = request_id
        self.status = "queued"
        self.response: Any = None
        self.error: str | None = None
        self.exception: BaseException | None = None
        self._cond = threading.Condition()
        self._callbacks: list[Callable[[GenerationHandle], None]] = []

    @property
    def done(self) -> bool:
        return self.status in ("done", "failed")

    def _finish(self, status: str) -> None:
        with self._cond:
            if self.done:
                raise RuntimeError(f"gen#{self.request_id} resolved twice")
            self.status = status
            callbacks, self._callbacks = self._callbacks, []
            self._cond.notify_all()
        for cb in callbacks:
            cb(self)

    def set_running(self) -> None:
        with self._cond:
            self.status = "running"

    def set_result(self, response: Any) -> None:
        self.response = response
        self._finish("done")

    def set_error(self, message: str, exception: BaseException | None = None) -> None:
        self.error = message
        self.exception = exception
        self._finish("failed")

    def add_done_callback(self, cb: Callable[[GenerationHandle], None]) -> None:
        with self._cond:
            if not self.done:
                self._callbacks.append(cb)
                return
        cb(self)

    def wait(self, timeout: float | None = None) -> bool:
        with self._cond:
            return self._cond.wait_for(lambda: self.done, timeout)

    def result(self) -> Any:
        self.wait()
        if self.status == "failed":
            if isinstance(self.exception, ReplayMismatch):
                raise self.exception
            raise GenerationFailed(self.request_id, self.error or "unknown error")
        return self.response

    def text(self) -> str:
        return self.result().text

    def __repr__(self) -> str:
        return f"<gen#{self.request_id} {self.status}>"


class Pending:
    """A not-yet-resolved segment: the text of a generation, optionally formatted."""

    __slots__ = ("handle", "spec")

    def __init__(self, handle: GenerationHandle, spec: str | None = None):
        self.handle = handle
        self.spec = spec

    def resolve(self) -> str:
        text = self.handle.text()
        return format(text, self.spec) if self.spec else text

    def __repr__(self) -> str:
        return f"pending(gen#{self.handle.request_id}{':' + self.spec if self.spec else ''})"


Segment = Union[str, Pending]


class StringFuture:
    """An ordered list of ready strings and pending generations, joined lazily."""

    __slots__ = ("segments", "_text", "_lock")

    def __init__(self, segments: Iterable[str | Pending] = ()):
        segs = []
        for s in segments:
            if isinstance(s, str):
                if s == "":
                    continue
                if segs and isinstance(segs[-1], str):
                    segs[-1] += s
                    continue
            elif not isinstance(s, Pending):
                raise TypeError(f"invalid StringFuture segment: {s!r}")
            segs.append(s)
        self.segments: tuple = tuple(segs)
        self._text: str | None = None
        self._lock = threading.Lock()
        if not any(isinstance(s, Pending) for s in self.segments):
            self._text = "".join(self.segments)

    @classmethod
    def ready(cls, text: str) -> StringFuture:
        return cls([text])

    @classmethod
    def pending(cls, handle: GenerationHandle, spec: str | None = None) -> StringFuture:
        return cls([Pending(handle, spec)])

    def concat(self, other: StringFuture | str) -> StringFuture:
        other_segs = (other,) if isinstance(other, str) else other.segments
        return StringFuture(self.segments + tuple(other_segs))

    def __add__(self, other):
        if isinstance(other, (StringFuture, str)):
            return self.concat(other)
        return NotImplemented

    def __radd__(self, other):
        if isinstance(other, str):
            return StringFuture.ready(other).concat(self)
        return NotImplemented

    def handles(self) -> list[GenerationHandle]:
        return [s.handle for s in self.segments if isinstance(s, Pending)]

    def is_ready(self) -> bool:
        return self._text is not None or all(h.done for h in self.handles())

    def materialize(self) -> str:
        """Block until every pending segment resolves and return the joined text."""
        if self._text is not None:
            return self._text
        with self._lock:
            if self._text is None:
                self._text = "".join(s if isinstance(s, str) else s.resolve() for s in self.segments)
        return self._text

    def __str__(self) -> str:
        return self.materialize()

    def __repr__(self) -> str:
        if self._text is not None:
            return f"StringFuture({self._text!r})"
        return f"StringFuture({list(self.segments)!r})"


def materialize(s: StringFuture | str) -> str:
    return s if isinstance(s, str) else s.materialize()


def concat(s: StringFuture, t: StringFuture) -> StringFuture:
    return s.concat(t)


_BOOL_OPS: dict[str, Callable[[Any, Any], bool]] = {
    "==": lambda a, b: a == b,
    "!=": lambda a, b: a != b,
    "<": lambda a, b: a < b,
    ">": lambda a, b: a > b,
}


class BooleanFuture:
    """A comparison over string futures, evaluated once when forced."""

    def __init__(self, op: str, left: StringFuture | str, right: StringFuture | str):
        if op not in _BOOL_OPS:
            raise ValueError(f"unsupported lazy comparison {op!r}")
        self.op = op
        self.left = left
        self.right = right
        self._value: bool | None = None
        self._lock = threading.Lock()

    def force(self) -> bool:
        if self._value is None:
            with self._lock:
                if self._value is None:
                    self._value = _BOOL_OPS[self.op](materialize(self.left), materialize(self.right))
        return self._value

    def __bool__(self) -> bool:
        return self.force()

    def __repr__(self) -> str:
        return f"BooleanFuture({self.op}, forced={self._value is not None})"


def force_bool(b: BooleanFuture | bool) -> bool:
    return b if isinstance(b, bool) else b.force()


_FALLBACK_OPS: dict[str, Callable[..., Any]] = {
    "length": len,
    "contains": lambda s, sub: sub in s,
    "slice": lambda s, start, stop=None: s[start:stop],
    "index": lambda s, i: s[i],
    "uppercase": str.upper,
    "lowercase": str.lower,
    "strip": str.strip,
    "lstrip": str.lstrip,
    "rstrip": str.rstrip,
    "split": str.split,
    "splitlines": str.splitlines,
    "startswith": str.startswith,
    "endswith": str.endswith,
    "replace": str.replace,
    "count": str.count,
    "find": str.find,
    "upper": str.upper,
    "lower": str.lower,
}


def delegate_fallback(s: StringFuture | str, op: str, *args: Any) -> Any:
    """Apply a string operation with no lazy rule by materializing first."""
    try:
        fn = _FALLBACK_OPS[op]
    except KeyError:
        raise AttributeError(f"string has no operation {op!r}") from None
    return fn(materialize(s), *args)


def fallback_ops() -> frozenset[str]:
    return frozenset(_FALLBACK_OPS)


class Scheduler:
    """Dispatches generation requests to a bounded worker pool.

    A request is handed to a worker only once every generation its prompt
    references has resolved, so workers never block on each other.
    """

    def __init__(
        self,
        backend,
        pool_size: int = DEFAULT_POOL_SIZE,
        trace=None,
        replay=None,
        clock: Callable[[], int] | None = None,
    ):
        if pool_size < 1:
            raise ValueError("pool_size must be >= 1")
        self.backend = backend
        self.pool_size = pool_size
        self.trace = trace
        self.replay = replay
        if clock is None:
            clock = trace.now if trace is not None else _default_clock()
        self.clock = clock
        self._pool = ThreadPoolExecutor(max_workers=pool_size, thread_name_prefix="gen-worker")
        self._next_id = 0
        self._handles: list[GenerationHandle] = []
        self._closed = False
        self._lock = threading.Lock()
        self.hits = 0
        self.live = 0
        self.fatal: BaseException | None = None

    @property
    def handles(self) -> list[GenerationHandle]:
        return list(self._handles)

    def schedule(self, request) -> GenerationHandle:
        """Allocate an id, log SendRequest and queue ``request``; never blocks."""
        if self._closed:
            raise QueueClosed("scheduler is shut down")
        request.request_id = self._next_id
        self._next_id += 1
        request.created_at = self.clock()
        handle = GenerationHandle(request.request_id)
        request.handle = handle
        self._handles.append(handle)
        if self.trace is not None:
            self.trace.record(
                "SendRequest",
                request.request_id,
                {"function": request.origin.get("function"), "frame": request.origin.get("frame")},
                timestamp_us=request.created_at,
            )
        deps = [h for h in request.dependencies() if not h.done]
        if not deps:
            self._submit(request, handle)
            return handle
        remaining = [len(deps)]
        lock = threading.Lock()

        def on_dep_done(_h: GenerationHandle) -> None:
            with lock:
                remaining[0] -= 1
                ready = remaining[0] == 0
            if ready:
                self._submit(request, handle)

        for dep in deps:
            dep.add_done_callback(on_dep_done)
        return handle

    def _submit(self, request, handle: GenerationHandle) -> None:
        try:
            self._pool.submit(self._run, request, handle)
        except RuntimeError:
            handle.set_error("scheduler shut down before dispatch", QueueClosed("scheduler is shut down"))

    def _worker_id(self) -> int:
        name = threading.current_thread().name
        try:
            return int(name.rsplit("_", 1)[1]) + 1
        except (IndexError, ValueError):
            return 0

    def _run(self, request, handle: GenerationHandle) -> None:
        handle.set_running()
        worker = self._worker_id()
        try:
            request.commit(self.clock())
        except GenerationFailed as exc:
            self._fail(request, handle, worker, f"dependency gen#{exc.request_id} failed: {exc.error}", exc)
            return
        except BaseException as exc:  # noqa: BLE001
            self._fail(request, handle, worker, f"{type(exc).__name__}: {exc}", exc)
            return
        if self.trace is not None:
            self.trace.record(
                "CommitRequest",
                request.request_id,
                {"request": request.payload(), "worker": worker},
                timestamp_us=request.committed_at,
            )
        try:
            response = None
            if self.replay is not None:
                response = self.replay.lookup(request)
            if response is not None:
                with self._lock:
                    self.hits += 1
                cached = True
            else:
                with self._lock:
                    self.live += 1
                response = self.backend.complete(request)
                cached = False
        except ReplayMismatch as exc:
            with self._lock:
                if self.fatal is None:
                    self.fatal = exc
            self._fail(request, handle, worker, str(exc), exc)
            return
        except BaseException as exc:  # noqa: BLE001
            self._fail(request, handle, worker, f"{type(exc).__name__}: {exc}", exc)
            return
        request.finished_at = self.clock()
        if self.trace is not None:
            payload = {"response": response.to_dict(), "worker": worker}
            if cached:
                payload["cached"] = True
            self.trace.record("FinishRequest", request.request_id, payload, timestamp_us=request.finished_at)
        handle.set_result(response)

    def _fail(self, request, handle: GenerationHandle, worker: int, message: str, exc: BaseException) -> None:
        request.finished_at = self.clock()
        log.debug("gen#%d failed: %s", request.request_id, message)
        if self.trace is not None:
            self.trace.record(
                "FinishRequest",
                request.request_id,
                {"error": message, "worker": worker},
                timestamp_us=request.finished_at,
            )
        handle.set_error(message, exc)

    def drain(self, timeout: float | None = None) -> None:
        """Wait until every scheduled request has resolved."""
        deadline = None if timeout is None else time.monotonic() + timeout
        for h in list(self._handles):
            left = None if deadline is None else max(0.0, deadline - time.monotonic())
            if not h.wait(left):
                raise APPLError(f"timed out waiting for gen#{h.request_id}")

    def shutdown(self) -> None:
        self._closed = True
        self._pool.shutdown(wait=True)

    def __enter__(self) -> Scheduler:
        return self

    def __exit__(self, *exc) -> None:
        self.shutdown()


def _default_clock() -> Callable[[], int]:
    origin = time.perf_counter_ns()
    return lambda: (time.perf_counter_ns() - origin) // 1000
