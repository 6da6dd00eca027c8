"""Tree-walking evaluator for compiled APPL-script programs."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Any, Callable

from . import ir
from .backends.base import TOOL_CHOICES, GenerationRequest, default_model
from .backends.mock import MockBackend
from .backends.toolspec import NativeTool, ToolParam, build_tool_spec, decode_arguments
from .context import (
    Compositor,
    Definition,
    DefinitionInstance,
    PromptContext,
    PromptRecord,
    RecordsBundle,
    define,
    derive_context,
    join_compositor,
    promptify,
)
from .errors import (
    APPLError,
    DocstringParseError,
    DSLRuntimeError,
    GenerationFailed,
    UnknownTool,
)
from .futures import DEFAULT_POOL_SIZE, BooleanFuture, Pending, Scheduler, StringFuture, delegate_fallback, fallback_ops
from .tools import default_tools
from .trace import TraceLog

DEFAULT_RECURSION_LIMIT = 256


# -- runtime values ------------------------------------------------------
class GenerationResult:
    """The value of ``gen()``: a pending text plus any tool calls the model makes."""

    record_origin = "generated"

    def __init__(self, handle, request: GenerationRequest, tools: dict[str, NativeTool]):
        self.handle = handle
        self.request = request
        self.tools = tools
        self.text = StringFuture.pending(handle)

    @property
    def may_call_tools(self) -> bool:
        return bool(self.request.tool_specs) and self.request.tool_choice != "none"

    def tool_calls(self) -> list[dict]:
        return list(self.handle.result().tool_calls)

    def __promptify__(self) -> StringFuture:
        return self.text

    def __record__(self) -> PromptRecord | None:
        # a response that may carry tool calls becomes an assistant turn of its own
        if not self.may_call_tools:
            return None
        return PromptRecord("assistant", self.text, "generated", tool_calls=self.handle)

    def __repr__(self) -> str:
        return f"<generation gen#{self.handle.request_id}>"


@dataclass
class ToolMessage:
    tool_call_id: str
    name: str
    content: StringFuture
    value: Any = None

    def __promptify__(self) -> StringFuture:
        return self.content

    def __record__(self) -> PromptRecord:
        return PromptRecord("tool", self.content, "tool-result", tool_call_id=self.tool_call_id)


@dataclass(frozen=True)
class RoleScope:
    role: str


@dataclass(frozen=True)
class CompositorScope:
    compositor: Compositor


class _Builtin:
    def __init__(self, name: str, func: Callable[..., Any], needs_ctx: bool = False):
        self.name = name
        self.func = func
        self.needs_ctx = needs_ctx

    def __repr__(self) -> str:
        return f"<builtin {self.name}>"


class _BoundMethod:
    def __init__(self, name: str, func: Callable[..., Any]):
        self.name = name
        self.func = func

    def __repr__(self) -> str:
        return f"<method {self.name}>"


@dataclass
class Frame:
    name: str
    id: int
    ctx: PromptContext | None
    locals: dict[str, Any] = field(default_factory=dict)
    line: int = 0


class _Return(Exception):
    def __init__(self, value: Any):
        self.value = value


@dataclass
class RuntimeEnv:
    backend: Any = None
    trace: TraceLog | None = None
    pool_size: int = DEFAULT_POOL_SIZE
    tools: dict[str, NativeTool] = field(default_factory=default_tools)
    seed: int = 0
    replay: Any = None
    model: str | None = None
    recursion_limit: int = DEFAULT_RECURSION_LIMIT


# -- value helpers -------------------------------------------------------
def _as_text(v: Any) -> StringFuture | None:
    if isinstance(v, StringFuture):
        return v
    if isinstance(v, str):
        return StringFuture.ready(v)
    if isinstance(v, GenerationResult):
        return v.text
    return None


def to_python(v: Any) -> Any:
    """Convert a runtime value to a plain Python value (blocks on futures)."""
    text = _as_text(v)
    if text is not None:
        return text.materialize()
    if isinstance(v, BooleanFuture):
        return v.force()
    if isinstance(v, list):
        return [to_python(x) for x in v]
    if isinstance(v, ToolMessage):
        return v.content.materialize()
    return v


def from_python(v: Any) -> Any:
    if isinstance(v, str):
        return StringFuture.ready(v)
    if isinstance(v, (list, tuple)):
        return [from_python(x) for x in v]
    return v


def truthy(v: Any) -> bool:
    if isinstance(v, BooleanFuture):
        return v.force()
    text = _as_text(v)
    if text is not None:
        return text.materialize() != ""
    if isinstance(v, RecordsBundle):
        return len(v) > 0
    return bool(v)


def type_name(v: Any) -> str:
    if v is None:
        return "none"
    if isinstance(v, bool):
        return "boolean"
    if isinstance(v, int):
        return "integer"
    if isinstance(v, float):
        return "float"
    if isinstance(v, (StringFuture, str)):
        return "string"
    if isinstance(v, BooleanFuture):
        return "boolean"
    if isinstance(v, list):
        return "list"
    if isinstance(v, RecordsBundle):
        return "records"
    if isinstance(v, Definition):
        return "definition"
    if isinstance(v, DefinitionInstance):
        return "definition-instance"
    if isinstance(v, GenerationResult):
        return "generation-result"
    if isinstance(v, ToolMessage):
        return "tool-message"
    if isinstance(v, (ir.IrFunction, _Builtin, _BoundMethod, NativeTool)):
        return "callable"
    return type(v).__name__


def _indent_arg(indent: Any) -> str:
    if isinstance(indent, int) and not isinstance(indent, bool):
        return " " * indent
    return to_python(indent) or ""


def _opt_text(v: Any) -> str | None:
    return None if v is None else promptify(v).materialize()


# -- interpreter -----------------------------------------------------------
class Interpreter:
    def __init__(self, program: ir.IrProgram, env: RuntimeEnv | None = None):
        self.program = program
        self.env = env or RuntimeEnv()
        self.backend = self.env.backend if self.env.backend is not None else MockBackend(seed=self.env.seed)
        self.trace = self.env.trace if self.env.trace is not None else TraceLog(seed=self.env.seed)
        self.scheduler = Scheduler(self.backend, self.env.pool_size, trace=self.trace, replay=self.env.replay)
        self.globals: dict[str, Any] = {}
        self.resume_store: dict[Any, PromptContext] = {}
        self.stack: list[Frame] = []
        self._frame_ids = itertools.count(1)
        self.entry_context: PromptContext | None = None
        self.builtins = self._make_builtins()

    # -- errors ----------------------------------------------------------
    def error(self, message: str, cls: type[DSLRuntimeError] = DSLRuntimeError) -> DSLRuntimeError:
        return cls(message, [(f.name, f.line) for f in self.stack])

    def _attach(self, exc: DSLRuntimeError) -> DSLRuntimeError:
        if not exc.frames:
            exc.frames = [(f.name, f.line) for f in self.stack]
        return exc

    # -- program entry ---------------------------------------------------
    def run(self, entry: str | None = None, args: list[Any] | tuple = ()) -> Any:
        """Run module statements, then ``entry``; drains all generations before returning."""
        try:
            module = Frame("<module>", 0, None, self.globals)
            self.stack.append(module)
            try:
                self.exec_block(self.program.module_body, module)
            finally:
                self.stack.pop()
            name = entry or self.program.entry
            if name is None:
                self.scheduler.drain()
                return None
            fn = self.program.functions.get(name)
            if fn is None:
                available = ", ".join(sorted(self.program.functions)) or "none"
                raise DSLRuntimeError(f"entry function '{name}' not found (available: {available})")
            self.entry_context = PromptContext() if fn.needs_ctx else None
            result = self.invoke(fn, [from_python(a) for a in args], {}, self.entry_context, None)
            self.scheduler.drain()
            if self.scheduler.fatal is not None:
                raise self.scheduler.fatal
            return result
        finally:
            try:
                self.scheduler.drain()
            except APPLError:
                pass
            self.scheduler.shutdown()

    # -- calls -----------------------------------------------------------
    def invoke(
        self,
        fn: ir.IrFunction,
        args: list[Any],
        kwargs: dict[str, Any],
        ctx: PromptContext | None,
        parent: Frame | None,
    ) -> Any:
        if len(self.stack) > self.env.recursion_limit:
            raise self.error(f"maximum recursion depth ({self.env.recursion_limit}) exceeded")
        frame = Frame(fn.name, next(self._frame_ids), ctx, line=fn.line)
        self._bind(fn, frame, args, kwargs)
        self.trace.record(
            "FunctionEnter", None, {"function": fn.name, "frame": frame.id, "parent": parent.id if parent and parent.id else None}
        )
        self.stack.append(frame)
        try:
            self.exec_block(fn.body, frame)
            result = None
        except _Return as ret:
            result = ret.value
        except DSLRuntimeError as exc:
            raise self._attach(exc)
        finally:
            self.stack.pop()
            self.trace.record("FunctionExit", None, {"function": fn.name, "frame": frame.id})
        return result

    def _bind(self, fn: ir.IrFunction, frame: Frame, args: list[Any], kwargs: dict[str, Any]) -> None:
        params = fn.params
        if len(args) > len(params):
            raise self.error(f"{fn.name}() takes {len(params)} positional argument(s) but {len(args)} were given")
        for p, a in zip(params, args):
            frame.locals[p.name] = a
        for k, v in kwargs.items():
            if k not in {p.name for p in params}:
                raise self.error(f"{fn.name}() got an unexpected keyword argument '{k}'")
            if k in frame.locals:
                raise self.error(f"{fn.name}() got multiple values for argument '{k}'")
            frame.locals[k] = v
        for p in params:
            if p.name not in frame.locals:
                if p.default is None:
                    raise self.error(f"{fn.name}() missing required argument '{p.name}'")
                frame.locals[p.name] = self.eval(p.default, Frame("<module>", 0, None, self.globals))

    def call_function(self, fn: ir.IrFunction, args: list[Any], kwargs: dict[str, Any], caller: Frame) -> Any:
        """Call a DSL function from ``caller``, deriving the callee's prompt context."""
        ctx = None
        if fn.needs_ctx:
            if caller.ctx is None:
                raise self.error(f"ppl function '{fn.name}' needs a prompt context but was called from {caller.name}")
            ctx = derive_context(caller.ctx, fn.ctx_mode, fn.name, self.resume_store)
        return self.invoke(fn, args, kwargs, ctx, caller)

    def call_value(self, func: Any, args: list[Any], kwargs: dict[str, Any], frame: Frame) -> Any:
        if isinstance(func, ir.IrFunction):
            return self.call_function(func, args, kwargs, frame)
        if isinstance(func, _Builtin):
            if func.needs_ctx and frame.ctx is None:
                raise self.error(f"'{func.name}' requires a prompt context")
            try:
                return func.func(frame, *args, **kwargs)
            except TypeError as exc:
                raise self.error(f"{func.name}(): {exc}") from None
        if isinstance(func, _BoundMethod):
            try:
                return from_python(func.func(*[to_python(a) for a in args], **{k: to_python(v) for k, v in kwargs.items()}))
            except (TypeError, ValueError, IndexError) as exc:
                raise self.error(f"{func.name}(): {exc}") from None
        if isinstance(func, Definition):
            if len(args) + len(kwargs) > 1 or (kwargs and "desc" not in kwargs):
                raise self.error(f"definition '{func.name}' takes a single 'desc' argument")
            desc = kwargs.get("desc", args[0] if args else None)
            return func(desc)
        if isinstance(func, NativeTool):
            py_args = [to_python(a) for a in args]
            py_kwargs = {k: to_python(v) for k, v in kwargs.items()}
            try:
                return from_python(func.func(*py_args, **py_kwargs))
            except TypeError as exc:
                raise self.error(f"{func.name}(): {exc}") from None
        raise self.error(f"{type_name(func)} value is not callable")

    # -- statements ------------------------------------------------------
    def exec_block(self, body: list[ir.Stmt], frame: Frame) -> None:
        for stmt in body:
            self.exec(stmt, frame)

    def exec(self, s: ir.Stmt, frame: Frame) -> None:
        frame.line = s.line
        if isinstance(s, ir.Capture):
            value = self.eval(s.expr, frame)
            assert frame.ctx is not None
            frame.ctx.capture(value)
        elif isinstance(s, ir.Eval):
            self.eval(s.expr, frame)
        elif isinstance(s, ir.Assign):
            frame.locals[s.name] = self.eval(s.expr, frame)
        elif isinstance(s, ir.Return):
            raise _Return(self.eval(s.expr, frame) if s.expr is not None else None)
        elif isinstance(s, ir.Pass):
            pass
        elif isinstance(s, ir.With):
            self.exec_with(s, frame)
        elif isinstance(s, ir.For):
            for item in self.iterate(self.eval(s.iter, frame)):
                frame.locals[s.var] = item
                self.exec_block(s.body, frame)
        elif isinstance(s, ir.If):
            self.exec_block(s.body if truthy(self.eval(s.test, frame)) else s.orelse, frame)
        else:  # pragma: no cover
            raise self.error(f"unknown statement {type(s).__name__}")

    def exec_with(self, s: ir.With, frame: Frame) -> None:
        scope = self.eval(s.scope, frame)
        ctx = frame.ctx
        assert ctx is not None
        if isinstance(scope, RoleScope):
            ctx.push_role(scope.role)
            pop = ctx.pop_role
        elif isinstance(scope, CompositorScope):
            ctx.push_compositor(scope.compositor)
            pop = ctx.pop_compositor
        else:
            raise self.error(f"{type_name(scope)} value cannot be used as a 'with' scope")
        try:
            self.exec_block(s.body, frame)
        finally:
            pop()

    def iterate(self, v: Any) -> list[Any]:
        if isinstance(v, list):
            return list(v)
        text = _as_text(v)
        if text is not None:
            return [StringFuture.ready(c) for c in text.materialize()]
        if isinstance(v, RecordsBundle):
            return [RecordsBundle([r]) for r in v]
        raise self.error(f"cannot iterate over a {type_name(v)} value")

    # -- expressions -----------------------------------------------------
    def lookup(self, name: str, frame: Frame) -> Any:
        if name in frame.locals:
            return frame.locals[name]
        if name in self.globals:
            return self.globals[name]
        if name in self.program.functions:
            return self.program.functions[name]
        if name in self.env.tools:
            return self.env.tools[name]
        if name in self.builtins:
            return self.builtins[name]
        raise self.error(f"name '{name}' is not defined")

    def eval(self, e: ir.Expr, frame: Frame) -> Any:
        if isinstance(e, ir.Const):
            return StringFuture.ready(e.value) if isinstance(e.value, str) else e.value
        if isinstance(e, ir.Name):
            return self.lookup(e.id, frame)
        if isinstance(e, ir.FStr):
            return self.eval_fstring(e, frame)
        if isinstance(e, ir.Call):
            func = self.eval(e.func, frame)
            args = [self.eval(a, frame) for a in e.args]
            kwargs = {k: self.eval(v, frame) for k, v in e.kwargs}
            return self.call_value(func, args, kwargs, frame)
        if isinstance(e, ir.NamedExpr):
            value = self.eval(e.value, frame)
            frame.locals[e.name] = value
            return value
        if isinstance(e, ir.BinOp):
            return self.binop(e.op, self.eval(e.left, frame), self.eval(e.right, frame))
        if isinstance(e, ir.Cmp):
            return self.compare(e.op, self.eval(e.left, frame), self.eval(e.right, frame))
        if isinstance(e, ir.ListLit):
            return [self.eval(i, frame) for i in e.items]
        if isinstance(e, ir.ListComp):
            return self.eval_listcomp(e, frame)
        if isinstance(e, ir.Attr):
            return self.attribute(self.eval(e.value, frame), e.name)
        if isinstance(e, ir.Index):
            return self.index(self.eval(e.value, frame), self.eval(e.index, frame))
        raise self.error(f"unknown expression {type(e).__name__}")  # pragma: no cover

    def eval_fstring(self, e: ir.FStr, frame: Frame) -> StringFuture:
        out = StringFuture()
        for part in e.parts:
            if isinstance(part, str):
                out = out.concat(part)
                continue
            value = self.eval(part.expr, frame)
            out = out.concat(self.format_field(value, part.spec))
        return out

    def format_field(self, value: Any, spec: str | None) -> StringFuture:
        if not spec:
            return promptify(value)
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            try:
                return StringFuture.ready(format(value, spec))
            except ValueError as exc:
                raise self.error(f"invalid format spec {spec!r}: {exc}") from None
        text = promptify(value)
        segs = text.segments
        if len(segs) == 1 and isinstance(segs[0], Pending) and segs[0].spec is None:
            return StringFuture([Pending(segs[0].handle, spec)])
        try:
            return StringFuture.ready(format(text.materialize(), spec))
        except ValueError as exc:
            raise self.error(f"invalid format spec {spec!r}: {exc}") from None

    def eval_listcomp(self, e: ir.ListComp, frame: Frame) -> list[Any]:
        items = self.iterate(self.eval(e.iter, frame))
        missing = object()
        saved = frame.locals.get(e.var, missing)
        out = []
        try:
            for item in items:
                frame.locals[e.var] = item
                out.append(self.eval(e.elt, frame))
        finally:
            if saved is missing:
                frame.locals.pop(e.var, None)
            else:
                frame.locals[e.var] = saved
        return out

    def binop(self, op: str, a: Any, b: Any) -> Any:
        ta, tb = _as_text(a), _as_text(b)
        if op == "+" and ta is not None and tb is not None:
            return ta.concat(tb)
        if op == "*" and (ta is not None) != (tb is not None):
            text, n = (ta, b) if ta is not None else (tb, a)
            if isinstance(n, int) and not isinstance(n, bool):
                return StringFuture.ready(text.materialize() * n)
        if ta is None and tb is None and not isinstance(a, bool) and not isinstance(b, bool):
            numeric = (int, float)
            if isinstance(a, numeric) and isinstance(b, numeric):
                return {"+": a + b, "-": a - b, "*": a * b}[op]
            if isinstance(a, list) and isinstance(b, list) and op == "+":
                return a + b
            if op == "*" and isinstance(a, list) and isinstance(b, int):
                return a * b
        raise self.error(f"unsupported operand types for {op}: {type_name(a)} and {type_name(b)}")

    def compare(self, op: str, a: Any, b: Any) -> Any:
        ta, tb = _as_text(a), _as_text(b)
        if ta is not None and tb is not None:
            return BooleanFuture(op, ta, tb)
        if isinstance(a, BooleanFuture):
            a = a.force()
        if isinstance(b, BooleanFuture):
            b = b.force()
        if op == "==":
            return ta is None and tb is None and a == b
        if op == "!=":
            return not (ta is None and tb is None and a == b)
        try:
            return a < b if op == "<" else a > b
        except TypeError:
            raise self.error(f"'{op}' not supported between {type_name(a)} and {type_name(b)}") from None

    def attribute(self, v: Any, name: str) -> Any:
        if isinstance(v, GenerationResult):
            if name == "run_tool_calls":
                return _Builtin("run_tool_calls", lambda _frame: self.run_tool_calls(v))
        elif isinstance(v, ToolMessage):
            if name == "content":
                return v.content
            if name == "name":
                return StringFuture.ready(v.name)
        elif isinstance(v, (StringFuture, str)):
            if name in fallback_ops():
                return _BoundMethod(name, lambda *args: delegate_fallback(v, name, *args))
        elif isinstance(v, (Definition, DefinitionInstance)) and name in ("name", "description"):
            d = v if isinstance(v, Definition) else v.definition
            text = getattr(d, name) if name == "name" or isinstance(v, Definition) else v.description
            return from_python(text)
        raise self.error(f"{type_name(v)} value has no attribute '{name}'")

    def index(self, v: Any, i: Any) -> Any:
        if isinstance(i, bool) or not isinstance(i, int):
            raise self.error(f"indices must be integers, not {type_name(i)}")
        try:
            if isinstance(v, list):
                return v[i]
            text = _as_text(v)
            if text is not None:
                return StringFuture.ready(delegate_fallback(text, "index", i))
            if isinstance(v, RecordsBundle):
                return RecordsBundle([v.records[i]])
        except IndexError:
            raise self.error(f"{type_name(v)} index {i} out of range") from None
        raise self.error(f"{type_name(v)} value is not subscriptable")

    # -- generation and tools --------------------------------------------
    def _tool(self, v: Any) -> NativeTool:
        if isinstance(v, NativeTool):
            return v
        if isinstance(v, ir.IrFunction):
            if v.needs_ctx:
                raise self.error(f"ppl function '{v.name}' cannot be used as a tool")
            fn = v
            params = [ToolParam(p.name, p.annotation) if p.default is None else ToolParam(p.name, p.annotation, None) for p in fn.params]

            def run(**kwargs: Any) -> Any:
                caller = self.stack[-1] if self.stack else Frame("<tool>", 0, None)
                return to_python(self.call_function(fn, [], {k: from_python(x) for k, x in kwargs.items()}, caller))

            return NativeTool(fn.name, params, fn.docstring or "", run)
        raise self.error(f"{type_name(v)} value cannot be used as a tool")

    def gen(self, frame: Frame, *args: Any, **kwargs: Any) -> GenerationResult:
        if args:
            raise self.error("gen() takes keyword arguments only")
        allowed = {"model", "temperature", "max_tokens", "stop", "tools", "tool_choice"}
        for k in kwargs:
            if k not in allowed:
                raise self.error(f"gen() got an unexpected keyword argument '{k}'")
        ctx = frame.ctx
        assert ctx is not None
        tools = [self._tool(t) for t in (kwargs.get("tools") or [])]
        choice = _opt_text(kwargs.get("tool_choice"))
        if choice is not None and choice not in TOOL_CHOICES:
            raise self.error(f"tool_choice must be one of {', '.join(TOOL_CHOICES)}, got {choice!r}")
        if choice == "required" and not tools:
            raise self.error("tool_choice='required' needs at least one tool")
        try:
            specs = [build_tool_spec(t) for t in tools]
        except DocstringParseError as exc:
            raise self.error(str(exc)) from None
        params: dict[str, Any] = {}
        if kwargs.get("temperature") is not None:
            params["temperature"] = float(to_python(kwargs["temperature"]))
        if kwargs.get("max_tokens") is not None:
            params["max_tokens"] = int(to_python(kwargs["max_tokens"]))
        if kwargs.get("stop") is not None:
            stop = to_python(kwargs["stop"])
            params["stop"] = [stop] if isinstance(stop, str) else list(stop)
        model = _opt_text(kwargs.get("model")) or self.env.model or default_model()
        request = GenerationRequest(
            prompt=tuple(ctx.convo()),
            model=model,
            tool_choice=choice,
            tool_specs=specs,
            origin={"function": frame.name, "frame": frame.id},
            **params,
        )
        handle = self.scheduler.schedule(request)
        return GenerationResult(handle, request, {t.name: t for t in tools})

    def run_tool_calls(self, result: Any) -> list[ToolMessage]:
        if not isinstance(result, GenerationResult):
            raise self.error(f"run_tool_calls() expects a generation result, got {type_name(result)}")
        try:
            calls = result.tool_calls()
        except GenerationFailed:
            raise
        out = []
        for call in calls:
            name = call["name"]
            tool = result.tools.get(name) or self.env.tools.get(name)
            if tool is None:
                raise self.error(f"model called unknown tool '{name}'", UnknownTool)
            try:
                value = tool.func(**decode_arguments(tool, call.get("arguments", {})))
            except DSLRuntimeError as exc:
                raise self._attach(exc)
            content = promptify(from_python(value)).materialize()
            out.append(ToolMessage(call.get("id", ""), name, StringFuture.ready(content), value))
        return out

    # -- builtin registry ------------------------------------------------
    def _make_builtins(self) -> dict[str, _Builtin]:
        b: dict[str, _Builtin] = {}

        def reg(name: str, needs_ctx: bool = False):
            def deco(fn):
                b[name] = _Builtin(name, fn, needs_ctx)
                return fn

            return deco

        b["gen"] = _Builtin("gen", self.gen, True)

        @reg("records", True)
        def _records(frame):
            return RecordsBundle(frame.ctx.records)

        @reg("convo", True)
        def _convo(frame):
            return RecordsBundle(frame.ctx.convo())

        @reg("define")
        def _define(frame, name, description=None):
            return define(promptify(name), None if description is None else promptify(description))

        @reg("run_tool_calls")
        def _run_tool_calls(frame, result):
            return self.run_tool_calls(result)

        @reg("range")
        def _range(frame, *args):
            if not all(isinstance(a, int) and not isinstance(a, bool) for a in args):
                raise self.error("range() arguments must be integers")
            return list(range(*args))

        @reg("len")
        def _len(frame, v):
            if isinstance(v, (list, RecordsBundle)):
                return len(v)
            text = _as_text(v)
            if text is None:
                raise self.error(f"{type_name(v)} value has no length")
            return delegate_fallback(text, "length")

        @reg("str")
        def _str(frame, v):
            return promptify(v)

        for role_name, role in (("AIRole", "assistant"), ("SystemRole", "system"), ("UserRole", "user")):
            b[role_name] = _Builtin(role_name, lambda frame, _r=role: RoleScope(_r), True)

        @reg("Str", True)
        def _join(frame):
            return CompositorScope(join_compositor())

        def _list_scope(indexing):
            def make(frame, indent=0, delimiter="\n"):
                return CompositorScope(Compositor(to_python(delimiter), _indent_arg(indent), indexing))

            return make

        b["NumberedList"] = _Builtin("NumberedList", _list_scope("numbered"), True)
        b["DashList"] = _Builtin("DashList", _list_scope("dashed"), True)
        b["LetteredList"] = _Builtin("LetteredList", _list_scope("lettered"), True)

        @reg("Tagged", True)
        def _tagged(frame, tag, indent=0):
            t = promptify(tag).materialize()
            return CompositorScope(Compositor("\n", _indent_arg(indent), "none", prolog=f"<{t}>", epilog=f"</{t}>"))

        @reg("Compositor", True)
        def _compositor(frame, delimiter="\n", indent=0, indexing="none", prefix="", prolog=None, epilog=None):
            try:
                comp = Compositor(
                    to_python(delimiter),
                    _indent_arg(indent),
                    to_python(indexing),
                    to_python(prefix),
                    _opt_text(prolog),
                    _opt_text(epilog),
                )
            except ValueError as exc:
                raise self.error(str(exc)) from None
            return CompositorScope(comp)

        return b


def run_program(
    program: ir.IrProgram,
    entry: str | None = None,
    args: list[Any] | tuple = (),
    env: RuntimeEnv | None = None,
) -> Any:
    """Evaluate ``entry`` (default: the program's entry) and return its value."""
    return Interpreter(program, env).run(entry, args)
