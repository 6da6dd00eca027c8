"""AST -> IR pipeline: f-string splitting, statement capture, context injection."""

from __future__ import annotations

from . import ir
from .errors import CompileError
from .frontend import nodes as n
from .frontend.lexer import tokenize
from .frontend.nodes import Node
from .frontend.parser import parse

# Builtins that read or write the caller's prompt context.
CONTEXT_BUILTINS = frozenset({"gen", "records", "convo"})
SCOPE_BUILTINS = frozenset(
    {"AIRole", "SystemRole", "UserRole", "Str", "NumberedList", "DashList", "LetteredList", "Tagged", "Compositor"}
)
CONSTANTS = {"None": None, "True": True, "False": False}

# name of the compositor used to join the parts of a split f-string
JOIN_SCOPE = "Str"


def _is_ppl(fn: Node) -> bool:
    return fn.kind == n.FUNCTION_DEF and fn.attrs.get("ctx") is not None


def _body_slice(fn: Node) -> int:
    return sum(1 for c in fn.children if c.kind in (n.DECORATOR, n.PARAM))


def _map_blocks(stmts: list[Node], fn) -> list[Node]:
    """Apply ``fn`` (stmt -> list of stmts) to every statement, recursing into blocks."""
    out: list[Node] = []
    for stmt in stmts:
        if stmt.kind in (n.WITH, n.FOR):
            head, *body = stmt.children
            stmt = stmt.copy(children=[head] + _map_blocks(body, fn))
        elif stmt.kind == n.IF:
            test, *blocks = stmt.children
            stmt = stmt.copy(children=[test] + [b.copy(children=_map_blocks(b.children, fn)) for b in blocks])
        out.extend(fn(stmt))
    return out


def _map_ppl_bodies(module: Node, fn) -> Node:
    children = []
    for top in module.children:
        if _is_ppl(top):
            k = _body_slice(top)
            top = top.copy(children=top.children[:k] + _map_blocks(top.children[k:], fn))
        children.append(top)
    return module.copy(children=children)


def _split_one(stmt: Node) -> list[Node]:
    if stmt.kind not in (n.EXPR_STMT, n.CAPTURE) or stmt.children[0].kind != n.FSTRING:
        return [stmt]
    fstr = stmt.children[0]
    parts = fstr.children
    fields = [p for p in parts if p.kind == n.FSTRING_FIELD]
    if not fields:
        text = "".join(p.attrs["value"] for p in parts)
        return [stmt.copy(children=[Node(n.STRING_LIT, [], {"value": text}, fstr.span)])]
    if len(parts) == 1:
        return [stmt]
    group = []
    for part in parts:
        if part.kind == n.STRING_LIT:
            group.append(stmt.copy(children=[part]))
        else:
            group.append(stmt.copy(children=[Node(n.FSTRING, [part], {}, part.span)]))
    scope = Node(n.CALL, [Node(n.NAME, [], {"id": JOIN_SCOPE}, fstr.span)], {}, fstr.span)
    return [Node(n.WITH, [scope] + group, {}, stmt.span)]


def split_fstrings(ast: Node) -> Node:
    """Expand standalone f-strings in ppl functions into in-order part captures."""
    return _map_ppl_bodies(ast, _split_one)


def _wrap_one(stmt: Node) -> list[Node]:
    if stmt.kind == n.EXPR_STMT:
        return [stmt.copy(kind=n.CAPTURE)]
    return [stmt]


def wrap_expression_statements(ast: Node) -> Node:
    """Turn every expression statement inside a ppl function into a capture."""
    return _map_ppl_bodies(ast, _wrap_one)


class _Lowering:
    def __init__(self, ppl_names: set[str]):
        self.ppl_names = ppl_names
        self.in_ppl = False
        self.where = "module level"

    def fail(self, msg: str, node: Node) -> CompileError:
        return CompileError(msg, node.span[0], node.span[1])

    def expr(self, node: Node) -> ir.Expr:
        k = node.kind
        line = node.span[0]
        if k == n.NAME:
            name = node.attrs["id"]
            if name in CONSTANTS:
                return ir.Const(CONSTANTS[name], line)
            return ir.Name(name, line)
        if k == n.NUMBER_LIT:
            return ir.Const(node.attrs["value"], line)
        if k == n.STRING_LIT:
            return ir.Const(node.attrs["value"], line)
        if k == n.FSTRING:
            parts: list = []
            for p in node.children:
                if p.kind == n.STRING_LIT:
                    parts.append(p.attrs["value"])
                else:
                    parts.append(ir.FieldRef(self.expr(p.children[0]), p.attrs.get("spec")))
            return ir.FStr(parts, line)
        if k == n.NAMED_CAPTURE:
            return ir.NamedExpr(node.attrs["name"], self.expr(node.children[0]), line)
        if k == n.BINOP:
            return ir.BinOp(node.attrs["op"], self.expr(node.children[0]), self.expr(node.children[1]), line)
        if k == n.COMPARE:
            return ir.Cmp(node.attrs["op"], self.expr(node.children[0]), self.expr(node.children[1]), line)
        if k == n.LIST_EXPR:
            return ir.ListLit([self.expr(c) for c in node.children], line)
        if k == n.LIST_COMP:
            return ir.ListComp(self.expr(node.children[0]), node.attrs["var"], self.expr(node.children[1]), line)
        if k == n.ATTRIBUTE:
            return ir.Attr(self.expr(node.children[0]), node.attrs["name"], line)
        if k == n.SUBSCRIPT:
            return ir.Index(self.expr(node.children[0]), self.expr(node.children[1]), line)
        if k == n.CALL:
            func, *rest = node.children
            args = [self.expr(a) for a in rest if a.kind != n.KEYWORD]
            kwargs = [(a.attrs["name"], self.expr(a.children[0])) for a in rest if a.kind == n.KEYWORD]
            pass_ctx = False
            if func.kind == n.NAME:
                name = func.attrs["id"]
                if name in CONTEXT_BUILTINS or name in SCOPE_BUILTINS:
                    if not self.in_ppl:
                        raise self.fail(f"'{name}' requires a prompt context and cannot be used at {self.where}", node)
                    pass_ctx = True
                elif name in self.ppl_names:
                    pass_ctx = self.in_ppl
            return ir.Call(self.expr(func), args, kwargs, pass_ctx, line)
        raise self.fail(f"unexpected {k} in expression position", node)

    def stmts(self, nodes: list[Node]) -> list[ir.Stmt]:
        return [self.stmt(s) for s in nodes]

    def stmt(self, node: Node) -> ir.Stmt:
        k = node.kind
        line = node.span[0]
        if k == n.CAPTURE:
            return ir.Capture(self.expr(node.children[0]), line)
        if k == n.EXPR_STMT:
            return ir.Eval(self.expr(node.children[0]), line)
        if k == n.ASSIGN:
            return ir.Assign(node.attrs["name"], self.expr(node.children[0]), line)
        if k == n.RETURN:
            if self.where == "module level":
                raise self.fail("'return' outside function", node)
            return ir.Return(self.expr(node.children[0]) if node.children else None, line)
        if k == n.PASS:
            return ir.Pass(line)
        if k == n.WITH:
            scope, *body = node.children
            if not self.in_ppl:
                raise self.fail(f"'with' scopes require a prompt context and cannot be used at {self.where}", node)
            return ir.With(self.expr(scope), self.stmts(body), line)
        if k == n.FOR:
            it, *body = node.children
            return ir.For(node.attrs["var"], self.expr(it), self.stmts(body), line)
        if k == n.IF:
            test, body, *orelse = node.children
            return ir.If(self.expr(test), self.stmts(body.children), self.stmts(orelse[0].children) if orelse else [], line)
        if k == n.FUNCTION_DEF:
            raise self.fail("nested function definitions are not supported", node)
        raise self.fail(f"unexpected {k} in statement position", node)

    def function(self, node: Node) -> ir.IrFunction:
        name = node.attrs["name"]
        ppl = _is_ppl(node)
        self.in_ppl = ppl
        self.where = f"function '{name}' (not a ppl function)"
        params = []
        for p in node.children:
            if p.kind == n.PARAM:
                default = self.expr(p.children[0]) if p.children else None
                params.append(ir.IrParam(p.attrs["name"], p.attrs.get("annotation"), default))
        if len({p.name for p in params}) != len(params):
            raise self.fail(f"duplicate parameter name in '{name}'", node)
        body_nodes = node.children[_body_slice(node):]
        docstring = None
        if not ppl and body_nodes and body_nodes[0].kind == n.EXPR_STMT and body_nodes[0].children[0].kind == n.STRING_LIT:
            docstring = body_nodes[0].children[0].attrs["value"]
            body_nodes = body_nodes[1:]
        body = self.stmts(body_nodes)
        mode = node.attrs["ctx"] if ppl else "none"
        return ir.IrFunction(name, params, mode, body, needs_ctx=ppl, docstring=docstring, line=node.span[0])


def inject_context(ast: Node) -> ir.IrProgram:
    """Lower the transformed AST to IR, threading the context slot through calls."""
    ppl_names = {c.attrs["name"] for c in ast.children if _is_ppl(c)}
    program = ir.IrProgram()
    low = _Lowering(ppl_names)
    for top in ast.children:
        if top.kind == n.FUNCTION_DEF:
            name = top.attrs["name"]
            if name in program.functions:
                raise CompileError(f"function '{name}' defined twice", top.span[0], top.span[1])
            program.functions[name] = low.function(top)
        else:
            low.in_ppl = False
            low.where = "module level"
            program.module_body.append(low.stmt(top))
    if "main" in program.functions:
        program.entry = "main"
    verify(program)
    return program


def _iter_exprs(e: ir.Expr):
    yield e
    if isinstance(e, ir.FStr):
        for p in e.parts:
            if isinstance(p, ir.FieldRef):
                yield from _iter_exprs(p.expr)
    elif isinstance(e, ir.Call):
        yield from _iter_exprs(e.func)
        for a in e.args:
            yield from _iter_exprs(a)
        for _, v in e.kwargs:
            yield from _iter_exprs(v)
    elif isinstance(e, ir.Attr):
        yield from _iter_exprs(e.value)
    elif isinstance(e, ir.Index):
        yield from _iter_exprs(e.value)
        yield from _iter_exprs(e.index)
    elif isinstance(e, (ir.BinOp, ir.Cmp)):
        yield from _iter_exprs(e.left)
        yield from _iter_exprs(e.right)
    elif isinstance(e, ir.ListLit):
        for i in e.items:
            yield from _iter_exprs(i)
    elif isinstance(e, ir.ListComp):
        yield from _iter_exprs(e.elt)
        yield from _iter_exprs(e.iter)
    elif isinstance(e, ir.NamedExpr):
        yield from _iter_exprs(e.value)


def _iter_stmt_exprs(body: list[ir.Stmt]):
    for s in body:
        yield s, None
        if isinstance(s, (ir.Capture, ir.Eval, ir.Assign)):
            yield s, s.expr
        elif isinstance(s, ir.Return) and s.expr is not None:
            yield s, s.expr
        elif isinstance(s, ir.With):
            yield s, s.scope
            yield from _iter_stmt_exprs(s.body)
        elif isinstance(s, ir.For):
            yield s, s.iter
            yield from _iter_stmt_exprs(s.body)
        elif isinstance(s, ir.If):
            yield s, s.test
            yield from _iter_stmt_exprs(s.body)
            yield from _iter_stmt_exprs(s.orelse)


def verify(program: ir.IrProgram) -> None:
    """Check that no instruction touches a context slot its function lacks."""
    bodies = [("module level", program.module_body, False)]
    bodies += [(fn.name, fn.body, fn.needs_ctx) for fn in program.functions.values()]
    for fn in program.functions.values():
        for p in fn.params:
            if p.default is not None:
                bodies.append((fn.name, [ir.Eval(p.default, fn.line)], False))
    for where, body, has_ctx in bodies:
        if has_ctx:
            continue
        for stmt, expr in _iter_stmt_exprs(body):
            if expr is None:
                if isinstance(stmt, (ir.Capture, ir.With)):
                    raise CompileError(f"context-dependent statement without a context slot in {where}", stmt.line)
                continue
            for sub in _iter_exprs(expr):
                if isinstance(sub, ir.Call) and sub.pass_ctx:
                    raise CompileError(f"call passes an undefined context slot in {where}", sub.line)


def compile_ast(ast: Node) -> ir.IrProgram:
    return inject_context(wrap_expression_statements(split_fstrings(ast)))


def compile_source(source: str) -> ir.IrProgram:
    """Full pipeline: tokenize, parse, split f-strings, wrap statements, inject context."""
    return compile_ast(parse(tokenize(source)))
