"""Canonical source printer; ``parse(tokenize(pretty_print(t)))`` equals ``t``."""

from __future__ import annotations

from . import nodes as n
from .nodes import Node

INDENT = "    "

_PRECEDENCE = {"==": 1, "!=": 1, "<": 1, ">": 1, "+": 2, "-": 2, "*": 3}
_ATOM = 5


def quote_string(value: str, quote: str = '"', fstring: bool = False) -> str:
    out = []
    for ch in value:
        if ch == "\\":
            out.append("\\\\")
        elif ch == "\n":
            out.append("\\n")
        elif ch == "\t":
            out.append("\\t")
        elif ch == quote:
            out.append("\\" + ch)
        elif fstring and ch in "{}":
            out.append(ch * 2)
        else:
            out.append(ch)
    return quote + "".join(out) + quote


def _precedence(node: Node) -> int:
    if node.kind in (n.BINOP, n.COMPARE):
        return _PRECEDENCE[node.attrs["op"]]
    if node.kind == n.NUMBER_LIT and node.attrs["value"] < 0:
        return 4
    return _ATOM


class _Printer:
    def __init__(self, quote: str = '"'):
        self.quote = quote

    def expr(self, node: Node, min_prec: int = 0) -> str:
        text = self._expr(node)
        return f"({text})" if _precedence(node) < min_prec else text

    def _expr(self, node: Node) -> str:
        k = node.kind
        if k == n.NAME:
            return node.attrs["id"]
        if k == n.NUMBER_LIT:
            return repr(node.attrs["value"])
        if k == n.STRING_LIT:
            return quote_string(node.attrs["value"], self.quote)
        if k == n.FSTRING:
            inner = _Printer(quote="'" if self.quote == '"' else '"')
            body = []
            for part in node.children:
                if part.kind == n.STRING_LIT:
                    body.append(quote_string(part.attrs["value"], self.quote, fstring=True)[1:-1])
                else:
                    spec = part.attrs.get("spec")
                    text = inner.expr(part.children[0])
                    body.append("{" + text + (":" + spec if spec is not None else "") + "}")
            return "f" + self.quote + "".join(body) + self.quote
        if k == n.NAMED_CAPTURE:
            return f"({node.attrs['name']} := {self.expr(node.children[0])})"
        if k in (n.BINOP, n.COMPARE):
            prec = _PRECEDENCE[node.attrs["op"]]
            left, right = node.children
            return f"{self.expr(left, prec)} {node.attrs['op']} {self.expr(right, prec + 1)}"
        if k == n.CALL:
            func, *rest = node.children
            args = [self.expr(a) if a.kind != n.KEYWORD else f"{a.attrs['name']}={self.expr(a.children[0])}" for a in rest]
            return f"{self.expr(func, _ATOM)}({', '.join(args)})"
        if k == n.ATTRIBUTE:
            return f"{self.expr(node.children[0], _ATOM)}.{node.attrs['name']}"
        if k == n.SUBSCRIPT:
            return f"{self.expr(node.children[0], _ATOM)}[{self.expr(node.children[1])}]"
        if k == n.LIST_EXPR:
            return "[" + ", ".join(self.expr(c) for c in node.children) + "]"
        if k == n.LIST_COMP:
            elt, it = node.children
            return f"[{self.expr(elt)} for {node.attrs['var']} in {self.expr(it)}]"
        raise ValueError(f"not an expression node: {k}")

    def stmts(self, body: list[Node], depth: int) -> list[str]:
        lines: list[str] = []
        for stmt in body:
            lines.extend(self.stmt(stmt, depth))
        return lines

    def stmt(self, node: Node, depth: int) -> list[str]:
        pad = INDENT * depth
        k = node.kind
        if k in (n.EXPR_STMT, n.CAPTURE):
            return [pad + self.expr(node.children[0])]
        if k == n.ASSIGN:
            return [f"{pad}{node.attrs['name']} = {self.expr(node.children[0])}"]
        if k == n.RETURN:
            return [pad + "return" + (" " + self.expr(node.children[0]) if node.children else "")]
        if k == n.PASS:
            return [pad + "pass"]
        if k == n.WITH:
            scope, *body = node.children
            return [f"{pad}with {self.expr(scope)}:"] + self.stmts(body, depth + 1)
        if k == n.FOR:
            it, *body = node.children
            return [f"{pad}for {node.attrs['var']} in {self.expr(it)}:"] + self.stmts(body, depth + 1)
        if k == n.IF:
            return self.if_stmt(node, depth, "if")
        if k == n.FUNCTION_DEF:
            return self.function_def(node, depth)
        raise ValueError(f"not a statement node: {k}")

    def if_stmt(self, node: Node, depth: int, keyword: str) -> list[str]:
        pad = INDENT * depth
        test, body, *orelse = node.children
        lines = [f"{pad}{keyword} {self.expr(test)}:"] + self.stmts(body.children, depth + 1)
        if orelse:
            block = orelse[0]
            if len(block.children) == 1 and block.children[0].kind == n.IF:
                lines += self.if_stmt(block.children[0], depth, "elif")
            else:
                lines += [f"{pad}else:"] + self.stmts(block.children, depth + 1)
        return lines

    def function_def(self, node: Node, depth: int) -> list[str]:
        pad = INDENT * depth
        lines = []
        params = []
        body = []
        for child in node.children:
            if child.kind == n.DECORATOR:
                if child.attrs.get("called"):
                    args = ", ".join(f"{k.attrs['name']}={self.expr(k.children[0])}" for k in child.children)
                    lines.append(f"{pad}@ppl({args})")
                else:
                    lines.append(f"{pad}@ppl")
            elif child.kind == n.PARAM:
                text = child.attrs["name"]
                if child.attrs.get("annotation"):
                    text += f": {child.attrs['annotation']}"
                if child.children:
                    text += f"={self.expr(child.children[0])}"
                params.append(text)
            else:
                body.append(child)
        lines.append(f"{pad}def {node.attrs['name']}({', '.join(params)}):")
        lines += self.stmts(body, depth + 1) if body else [pad + INDENT + "pass"]
        return lines


def pretty_print(node: Node) -> str:
    """Render an AST back to canonical APPL-script source text."""
    printer = _Printer()
    if node.kind != n.MODULE:
        if node.kind in (n.EXPR_STMT, n.ASSIGN, n.RETURN, n.PASS, n.WITH, n.FOR, n.IF, n.FUNCTION_DEF, n.CAPTURE):
            return "\n".join(printer.stmt(node, 0)) + "\n"
        return printer.expr(node)
    chunks = []
    for stmt in node.children:
        text = "\n".join(printer.stmt(stmt, 0))
        if stmt.kind == n.FUNCTION_DEF and chunks:
            text = "\n" + text
        chunks.append(text)
    return "\n".join(chunks) + ("\n" if chunks else "")
