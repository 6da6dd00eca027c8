"""Executable intermediate representation produced by the compiler."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Union


# -- expressions --------------------------------------------------------
@dataclass
class Const:
    value: Any
    line: int = 0


@dataclass
class FieldRef:
    expr: Expr
    spec: str | None = None


@dataclass
class FStr:
    parts: list[Union[str, FieldRef]]
    line: int = 0


@dataclass
class Name:
    id: str
    line: int = 0


@dataclass
class Call:
    func: Expr
    args: list[Expr]
    kwargs: list[tuple[str, Expr]]
    pass_ctx: bool = False
    line: int = 0


@dataclass
class Attr:
    value: Expr
    name: str
    line: int = 0


@dataclass
class Index:
    value: Expr
    index: Expr
    line: int = 0


@dataclass
class BinOp:
    op: str
    left: Expr
    right: Expr
    line: int = 0


@dataclass
class Cmp:
    op: str
    left: Expr
    right: Expr
    line: int = 0


@dataclass
class ListLit:
    items: list[Expr]
    line: int = 0


@dataclass
class ListComp:
    elt: Expr
    var: str
    iter: Expr
    line: int = 0


@dataclass
class NamedExpr:
    name: str
    value: Expr
    line: int = 0


Expr = Union[Const, FStr, Name, Call, Attr, Index, BinOp, Cmp, ListLit, ListComp, NamedExpr]


# -- statements ---------------------------------------------------------
@dataclass
class Capture:
    """Evaluate ``expr`` and append the result to the frame's prompt context."""

    expr: Expr
    line: int = 0


@dataclass
class Eval:
    expr: Expr
    line: int = 0


@dataclass
class Assign:
    name: str
    expr: Expr
    line: int = 0


@dataclass
class Return:
    expr: Expr | None
    line: int = 0


@dataclass
class Pass:
    line: int = 0


@dataclass
class With:
    scope: Expr
    body: list[Stmt]
    line: int = 0


@dataclass
class For:
    var: str
    iter: Expr
    body: list[Stmt]
    line: int = 0


@dataclass
class If:
    test: Expr
    body: list[Stmt]
    orelse: list[Stmt]
    line: int = 0


Stmt = Union[Capture, Eval, Assign, Return, Pass, With, For, If]


@dataclass
class IrParam:
    name: str
    annotation: str | None = None
    default: Expr | None = None


@dataclass
class IrFunction:
    name: str
    params: list[IrParam]
    ctx_mode: str  # new | copy | same | resume | none
    body: list[Stmt]
    needs_ctx: bool
    docstring: str | None = None
    line: int = 0


@dataclass
class IrProgram:
    functions: dict[str, IrFunction] = field(default_factory=dict)
    entry: str | None = None
    module_body: list[Stmt] = field(default_factory=list)


# -- debug dump ----------------------------------------------------------
def _fmt_expr(e: Expr) -> str:
    if isinstance(e, Const):
        return repr(e.value)
    if isinstance(e, Name):
        return e.id
    if isinstance(e, FStr):
        parts = []
        for p in e.parts:
            if isinstance(p, str):
                parts.append(repr(p))
            else:
                parts.append("{" + _fmt_expr(p.expr) + (f":{p.spec}" if p.spec is not None else "") + "}")
        return "fstr(" + ", ".join(parts) + ")"
    if isinstance(e, Call):
        args = [_fmt_expr(a) for a in e.args] + [f"{k}={_fmt_expr(v)}" for k, v in e.kwargs]
        if e.pass_ctx:
            args.append("<ctx>")
        return f"{_fmt_expr(e.func)}({', '.join(args)})"
    if isinstance(e, Attr):
        return f"{_fmt_expr(e.value)}.{e.name}"
    if isinstance(e, Index):
        return f"{_fmt_expr(e.value)}[{_fmt_expr(e.index)}]"
    if isinstance(e, (BinOp, Cmp)):
        return f"({_fmt_expr(e.left)} {e.op} {_fmt_expr(e.right)})"
    if isinstance(e, ListLit):
        return "[" + ", ".join(_fmt_expr(i) for i in e.items) + "]"
    if isinstance(e, ListComp):
        return f"[{_fmt_expr(e.elt)} for {e.var} in {_fmt_expr(e.iter)}]"
    if isinstance(e, NamedExpr):
        return f"({e.name} := {_fmt_expr(e.value)})"
    raise TypeError(e)


def _fmt_body(body: list[Stmt], depth: int, out: list[str]) -> None:
    pad = "  " * depth
    for s in body:
        if isinstance(s, Capture):
            out.append(f"{pad}capture {_fmt_expr(s.expr)}")
        elif isinstance(s, Eval):
            out.append(f"{pad}eval {_fmt_expr(s.expr)}")
        elif isinstance(s, Assign):
            out.append(f"{pad}{s.name} = {_fmt_expr(s.expr)}")
        elif isinstance(s, Return):
            out.append(f"{pad}return" + (f" {_fmt_expr(s.expr)}" if s.expr is not None else ""))
        elif isinstance(s, Pass):
            out.append(f"{pad}pass")
        elif isinstance(s, With):
            out.append(f"{pad}with {_fmt_expr(s.scope)}:")
            _fmt_body(s.body, depth + 1, out)
        elif isinstance(s, For):
            out.append(f"{pad}for {s.var} in {_fmt_expr(s.iter)}:")
            _fmt_body(s.body, depth + 1, out)
        elif isinstance(s, If):
            out.append(f"{pad}if {_fmt_expr(s.test)}:")
            _fmt_body(s.body, depth + 1, out)
            if s.orelse:
                out.append(f"{pad}else:")
                _fmt_body(s.orelse, depth + 1, out)


def dump_ir(program: IrProgram) -> str:
    out: list[str] = []
    if program.module_body:
        out.append("module:")
        _fmt_body(program.module_body, 1, out)
    for fn in program.functions.values():
        params = ", ".join(p.name for p in fn.params)
        out.append(f"function {fn.name}({params}) ctx={fn.ctx_mode} needs_ctx={str(fn.needs_ctx).lower()}:")
        _fmt_body(fn.body, 1, out)
    if program.entry:
        out.append(f"entry: {program.entry}")
    return "\n".join(out) + "\n"
