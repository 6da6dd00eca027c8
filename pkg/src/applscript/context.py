"""Prompt contexts: role-tagged records, compositor formatting and context passing."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Iterable

from .errors import DSLRuntimeError, PromptifyError
from .futures import BooleanFuture, StringFuture

ROLES = ("system", "user", "assistant", "tool")
DEFAULT_DELIMITER = "\n"
DEFAULT_ROLE = "user"


@dataclass(frozen=True)
class PromptRecord:
    role: str
    content: StringFuture
    origin: str = "captured"  # captured | generated | tool-result
    # joins this record to the previous one when both land in the same message
    sep: str = DEFAULT_DELIMITER
    tool_calls: Any = None  # generation handle whose response carries tool calls
    tool_call_id: str | None = None

    def __post_init__(self):
        if self.content is None:
            raise ValueError("record content must not be None")
        if self.role not in ROLES:
            raise ValueError(f"unknown role {self.role!r}")

    @property
    def mergeable(self) -> bool:
        return self.role != "tool" and self.tool_calls is None


_LETTERS = "abcdefghijklmnopqrstuvwxyz"


@dataclass(frozen=True)
class Compositor:
    delimiter: str = DEFAULT_DELIMITER
    indent: str = ""
    indexing: str = "none"  # none | numbered | dashed | lettered | custom
    prefix: str = ""  # label for indexing="custom"
    prolog: str | None = None
    epilog: str | None = None
    # an inline frame is a single item of its parent (used to join f-string parts)
    inline: bool = False

    def __post_init__(self):
        if self.indexing not in ("none", "numbered", "dashed", "lettered", "custom"):
            raise ValueError(f"unknown indexing {self.indexing!r}")

    def label(self, index: int) -> str:
        if self.indexing == "numbered":
            return f"{index}. "
        if self.indexing == "dashed":
            return "- "
        if self.indexing == "lettered":
            n, out = index, ""
            while n > 0:
                n, r = divmod(n - 1, 26)
                out = _LETTERS[r] + out
            return f"{out}. "
        if self.indexing == "custom":
            return self.prefix
        return ""


def join_compositor() -> Compositor:
    return Compositor(delimiter="", inline=True)


@dataclass
class _Frame:
    compositor: Compositor
    count: int = 0
    started: bool = False


@dataclass(frozen=True)
class Definition:
    name: str
    description: str | None = None

    def __call__(self, desc: str | None = None) -> DefinitionInstance:
        return instantiate(self, desc if desc is not None else (self.description or ""))

    def __promptify__(self) -> StringFuture:
        return StringFuture.ready(self.name)


@dataclass(frozen=True)
class DefinitionInstance:
    definition: Definition
    description: str

    def __promptify__(self) -> StringFuture:
        return StringFuture.ready(f"{self.definition.name}: {self.description}")


def define(name: str | StringFuture, description: str | StringFuture | None = None) -> Definition:
    """Create a Definition; a future-valued name is materialized here."""
    text = name if isinstance(name, str) else promptify(name).materialize()
    desc = None if description is None else promptify(description).materialize()
    return Definition(text, desc)


def instantiate(d: Definition, desc: str | StringFuture) -> DefinitionInstance:
    return DefinitionInstance(d, promptify(desc).materialize())


class RecordsBundle:
    """An immutable snapshot of prompt records, as returned by records()/convo()."""

    def __init__(self, records: Iterable[PromptRecord] = ()):
        self.records: tuple[PromptRecord, ...] = tuple(records)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, RecordsBundle):
            return NotImplemented
        return self.records == other.records

    def text(self) -> StringFuture:
        out = StringFuture()
        for i, rec in enumerate(self.records):
            if i:
                out = out.concat(rec.sep)
            out = out.concat(rec.content)
        return out

    def __promptify__(self) -> StringFuture:
        return self.text()

    def to_json(self) -> str:
        return json.dumps(to_json_messages(self), ensure_ascii=False)

    def __repr__(self) -> str:
        return f"RecordsBundle({len(self.records)} records)"


def promptify(value: Any, delimiter: str = DEFAULT_DELIMITER) -> StringFuture:
    """Convert a runtime value to prompt text."""
    if isinstance(value, StringFuture):
        return value
    if isinstance(value, str):
        return StringFuture.ready(value)
    if value is None:
        return StringFuture.ready("None")
    if isinstance(value, bool):
        return StringFuture.ready("True" if value else "False")
    if isinstance(value, int):
        return StringFuture.ready(str(value))
    if isinstance(value, float):
        return StringFuture.ready(repr(value))
    if isinstance(value, BooleanFuture):
        return StringFuture.ready("True" if value.force() else "False")
    if isinstance(value, (list, tuple)):
        out = StringFuture()
        for i, item in enumerate(value):
            if i:
                out = out.concat(delimiter)
            out = out.concat(promptify(item, delimiter))
        return out
    hook = getattr(value, "__promptify__", None)
    if hook is not None:
        return hook()
    raise PromptifyError(f"cannot convert {type(value).__name__} value to a prompt")


class PromptContext:
    """Per-function prompt scratchpad.

    ``inherited`` is the read-only conversation received from the caller;
    ``records`` are the local captures.  The visible conversation is their
    concatenation.
    """

    def __init__(self, inherited: Iterable[PromptRecord] = ()):
        self.inherited: tuple[PromptRecord, ...] = tuple(inherited)
        self.records: list[PromptRecord] = []
        self.role_scope: str = DEFAULT_ROLE
        self.role_depth = 0
        self.compositor_stack: list[_Frame] = []

    @property
    def item_counters(self) -> list[int]:
        return [f.count for f in self.compositor_stack]

    def convo(self) -> list[PromptRecord]:
        return list(self.inherited) + self.records

    # -- formatting ----------------------------------------------------
    def _indent(self, level: int) -> str:
        return "".join(f.compositor.indent for f in self.compositor_stack[: level + 1] if not f.compositor.inline)

    def _start_sep(self, level: int) -> str:
        """Separator in front of the first piece emitted inside frame ``level + 1``."""
        while level >= 0:
            f = self.compositor_stack[level]
            if f.started:
                return f.compositor.delimiter
            level -= 1
        return DEFAULT_DELIMITER

    def _mark_started(self, level: int) -> None:
        for f in self.compositor_stack[: level + 1]:
            f.started = True

    def _item(self, level: int) -> tuple[str, str]:
        if level < 0:
            return DEFAULT_DELIMITER, ""
        f = self.compositor_stack[level]
        comp = f.compositor
        if comp.inline:
            f.count += 1
            if f.count > 1:
                return comp.delimiter, ""
            sep, prefix = self._item(level - 1)
            self._mark_started(level)
            return sep, prefix
        sep = comp.delimiter if f.started else self._start_sep(level - 1)
        self._mark_started(level)
        f.count += 1
        return sep, self._indent(level) + comp.label(f.count)

    def _append(self, rec: PromptRecord) -> None:
        self.records.append(rec)

    def append_text(self, text: StringFuture, origin: str = "captured") -> None:
        sep, prefix = self._item(len(self.compositor_stack) - 1)
        content = StringFuture.ready(prefix).concat(text) if prefix else text
        self._append(PromptRecord(self.role_scope, content, origin, sep))

    def capture(self, value: Any) -> None:
        """Append ``value`` to the prompt under the current role and formatting."""
        if value is None:
            return
        if isinstance(value, RecordsBundle):
            for i, rec in enumerate(value.records):
                if i == 0:
                    sep = self._start_sep(len(self.compositor_stack) - 1)
                    self._mark_started(len(self.compositor_stack) - 1)
                    rec = PromptRecord(rec.role, rec.content, rec.origin, sep, rec.tool_calls, rec.tool_call_id)
                self._append(rec)
            return
        if isinstance(value, (list, tuple)):
            for item in value:
                self.capture(item)
            return
        as_record = getattr(value, "__record__", None)
        if as_record is not None:
            rec = as_record()
            if rec is not None:
                self._append(rec)
                return
        origin = getattr(value, "record_origin", "captured")
        self.append_text(promptify(value, self.delimiter), origin)

    @property
    def delimiter(self) -> str:
        return self.compositor_stack[-1].compositor.delimiter if self.compositor_stack else DEFAULT_DELIMITER

    def push_compositor(self, comp: Compositor) -> None:
        self.compositor_stack.append(_Frame(comp))
        level = len(self.compositor_stack) - 1
        if comp.prolog is not None:
            sep = self._start_sep(level - 1)
            self._mark_started(level)
            self._append(PromptRecord(self.role_scope, StringFuture.ready(self._indent(level) + comp.prolog), "captured", sep))

    def pop_compositor(self) -> None:
        if not self.compositor_stack:
            raise RuntimeError("pop_compositor without a matching push")
        level = len(self.compositor_stack) - 1
        f = self.compositor_stack[level]
        if f.compositor.epilog is not None:
            sep = f.compositor.delimiter if f.started else self._start_sep(level - 1)
            self._mark_started(level)
            self._append(
                PromptRecord(self.role_scope, StringFuture.ready(self._indent(level) + f.compositor.epilog), "captured", sep)
            )
        self.compositor_stack.pop()

    def push_role(self, role: str) -> None:
        if role not in ROLES:
            raise DSLRuntimeError(f"unknown role {role!r}")
        if self.compositor_stack or self.role_depth:
            raise DSLRuntimeError("role changers can only be used as the outermost scope")
        self.role_depth += 1
        self.role_scope = role

    def pop_role(self) -> None:
        self.role_depth -= 1
        self.role_scope = DEFAULT_ROLE


def capture(ctx: PromptContext, value: Any) -> None:
    ctx.capture(value)


def push_compositor(ctx: PromptContext, comp: Compositor) -> None:
    ctx.push_compositor(comp)


def pop_compositor(ctx: PromptContext) -> None:
    ctx.pop_compositor()


def records(ctx: PromptContext) -> RecordsBundle:
    return RecordsBundle(ctx.records)


def convo(ctx: PromptContext) -> RecordsBundle:
    return RecordsBundle(ctx.convo())


def derive_context(
    parent: PromptContext | None,
    mode: str,
    callee_identity: Any = None,
    resume_store: dict | None = None,
) -> PromptContext:
    """Build the callee's context for one of the passing modes new/copy/same/resume."""
    if mode == "new":
        return PromptContext()
    if mode == "copy":
        return PromptContext(parent.convo() if parent is not None else ())
    if mode == "same":
        if parent is None:
            return PromptContext()
        return parent
    if mode == "resume":
        if resume_store is None:
            raise ValueError("resume mode needs a resume store")
        ctx = resume_store.get(callee_identity)
        if ctx is None:
            ctx = PromptContext(parent.convo() if parent is not None else ())
            resume_store[callee_identity] = ctx
        return ctx
    raise ValueError(f"unknown context mode {mode!r}")


@dataclass
class Message:
    role: str
    content: StringFuture
    tool_calls: Any = None
    tool_call_id: str | None = None
    parts: list[PromptRecord] = field(default_factory=list)


def merge_records(recs: Iterable[PromptRecord]) -> list[Message]:
    """Group consecutive same-role records into chat messages (lazily)."""
    out: list[Message] = []
    prev: PromptRecord | None = None
    for rec in recs:
        if prev is not None and out and rec.mergeable and prev.mergeable and rec.role == prev.role:
            msg = out[-1]
            msg.content = msg.content.concat(rec.sep).concat(rec.content)
            msg.parts.append(rec)
        else:
            out.append(Message(rec.role, rec.content, rec.tool_calls, rec.tool_call_id, [rec]))
        prev = rec
    return out


def _records_of(bundle) -> Iterable[PromptRecord]:
    return bundle.records if isinstance(bundle, RecordsBundle) else bundle


def render_messages(bundle) -> list[tuple[str, str]]:
    """Materialize a bundle into ``(role, text)`` chat messages."""
    return [(m.role, m.content.materialize()) for m in merge_records(_records_of(bundle))]


def to_wire(bundle) -> list[dict]:
    """Chat-completions message array, including tool-call metadata."""
    out = []
    for m in merge_records(_records_of(bundle)):
        msg: dict[str, Any] = {"role": m.role, "content": m.content.materialize()}
        if m.tool_calls is not None:
            calls = m.tool_calls.result().tool_calls
            if calls:
                msg["tool_calls"] = [
                    {
                        "id": c["id"],
                        "type": "function",
                        "function": {"name": c["name"], "arguments": json.dumps(c["arguments"], sort_keys=True)},
                    }
                    for c in calls
                ]
        if m.tool_call_id is not None:
            msg["tool_call_id"] = m.tool_call_id
        out.append(msg)
    return out


def to_json_messages(bundle) -> list[dict]:
    return [{"role": role, "content": text} for role, text in render_messages(bundle)]


def dependencies(recs: Iterable[PromptRecord]) -> list:
    """Generation handles referenced by ``recs`` (content or tool-call metadata)."""
    seen: dict[int, Any] = {}
    for rec in recs:
        for h in rec.content.handles():
            seen.setdefault(id(h), h)
        if rec.tool_calls is not None:
            seen.setdefault(id(rec.tool_calls), rec.tool_calls)
    return list(seen.values())
