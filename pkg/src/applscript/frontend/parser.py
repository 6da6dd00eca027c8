"""Recursive-descent parser producing :class:`Node` trees."""

from __future__ import annotations

from ..errors import ParseError
from . import lexer as lx
from . import nodes as n
from .lexer import FieldSource, Token, tokenize_expression
from .nodes import Node

_COMPARE_OPS = ("==", "!=", "<", ">")


class Parser:
    def __init__(self, tokens: list[Token]):
        if not tokens or tokens[-1].kind != lx.EOF:
            raise ParseError("token stream must end with an end-of-file token")
        self.tokens = tokens
        self.pos = 0

    # -- token helpers -------------------------------------------------
    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def at(self, kind: str, text: str | None = None) -> bool:
        tok = self.tok
        return tok.kind == kind and (text is None or tok.text == text)

    def at_delim(self, text: str) -> bool:
        return self.at(lx.DELIM, text)

    def at_op(self, text: str) -> bool:
        return self.at(lx.OP, text)

    def at_kw(self, text: str) -> bool:
        return self.at(lx.KEYWORD, text)

    def advance(self) -> Token:
        tok = self.tok
        if tok.kind != lx.EOF:
            self.pos += 1
        return tok

    def fail(self, expected: str, tok: Token | None = None) -> ParseError:
        tok = tok or self.tok
        found = tok.kind if tok.kind in (lx.EOF, lx.NEWLINE, lx.INDENT, lx.DEDENT) else repr(tok.text)
        return ParseError(f"expected {expected}, found {found}", tok.line, tok.column)

    def expect(self, kind: str, text: str | None = None, what: str | None = None) -> Token:
        if not self.at(kind, text):
            raise self.fail(what or (repr(text) if text else kind))
        return self.advance()

    # -- module and statements ----------------------------------------
    def parse_module(self) -> Node:
        body = []
        while not self.at(lx.EOF):
            if self.at(lx.NEWLINE):
                self.advance()
                continue
            if self.at(lx.INDENT):
                raise ParseError("unexpected indent", self.tok.line, self.tok.column)
            body.append(self.statement())
        return Node(n.MODULE, body, {}, (1, 1))

    def statement(self) -> Node:
        tok = self.tok
        if self.at_delim("@") or self.at_kw("def"):
            return self.function_def()
        if self.at_kw("with"):
            return self.with_stmt()
        if self.at_kw("for"):
            return self.for_stmt()
        if self.at_kw("if"):
            return self.if_stmt()
        if tok.kind == lx.KEYWORD and tok.text in ("elif", "else"):
            raise ParseError(f"'{tok.text}' without matching 'if'", tok.line, tok.column)
        stmt = self.simple_statement()
        if not self.at(lx.EOF):
            self.expect(lx.NEWLINE, what="end of line")
        return stmt

    def simple_statement(self) -> Node:
        tok = self.tok
        span = (tok.line, tok.column)
        if self.at_kw("return"):
            self.advance()
            if self.at(lx.NEWLINE) or self.at(lx.EOF):
                return Node(n.RETURN, [], {}, span)
            return Node(n.RETURN, [self.expression()], {}, span)
        if self.at_kw("pass"):
            self.advance()
            return Node(n.PASS, [], {}, span)
        if tok.kind == lx.NAME and self.tokens[self.pos + 1].kind == lx.OP and self.tokens[self.pos + 1].text == "=":
            self.advance()
            self.advance()
            return Node(n.ASSIGN, [self.expression()], {"name": tok.text}, span)
        return Node(n.EXPR_STMT, [self.expression()], {}, span)

    def block(self) -> list[Node]:
        self.expect(lx.DELIM, ":")
        if not self.at(lx.NEWLINE):
            stmt = self.simple_statement()
            if not self.at(lx.EOF):
                self.expect(lx.NEWLINE, what="end of line")
            return [stmt]
        self.advance()
        if not self.at(lx.INDENT):
            raise self.fail("an indented block")
        self.advance()
        body = []
        while not self.at(lx.DEDENT) and not self.at(lx.EOF):
            if self.at(lx.NEWLINE):
                self.advance()
                continue
            body.append(self.statement())
        if self.at(lx.DEDENT):
            self.advance()
        return body

    def function_def(self) -> Node:
        children: list[Node] = []
        attrs: dict = {"ctx": None}
        start = self.tok
        if self.at_delim("@"):
            at = self.advance()
            name = self.expect(lx.NAME, what="decorator name")
            if name.text != "ppl":
                raise ParseError(f"unsupported decorator '@{name.text}'", name.line, name.column)
            deco = Node(n.DECORATOR, [], {"name": "ppl", "called": False}, (at.line, at.column))
            mode = "new"
            if self.at_delim("("):
                self.advance()
                deco.attrs["called"] = True
                if not self.at_delim(")"):
                    key = self.expect(lx.NAME, what="'ctx'")
                    if key.text != "ctx":
                        raise ParseError(f"unknown ppl argument '{key.text}'", key.line, key.column)
                    self.expect(lx.OP, "=")
                    val = self.expect(lx.STRING, what="a context mode string")
                    if val.value not in n.CTX_MODES:
                        raise ParseError(
                            f"unknown context mode {val.value!r}; expected one of {', '.join(n.CTX_MODES)}",
                            val.line,
                            val.column,
                        )
                    mode = val.value
                    lit = Node(n.STRING_LIT, [], {"value": val.value}, (val.line, val.column))
                    deco.children.append(Node(n.KEYWORD, [lit], {"name": "ctx"}, (key.line, key.column)))
                self.expect(lx.DELIM, ")")
            self.expect(lx.NEWLINE, what="end of line after decorator")
            attrs["ctx"] = mode
            children.append(deco)
        def_tok = self.expect(lx.KEYWORD, "def")
        name = self.expect(lx.NAME, what="function name")
        attrs["name"] = name.text
        self.expect(lx.DELIM, "(")
        seen_default = False
        while not self.at_delim(")"):
            ptok = self.expect(lx.NAME, what="parameter name")
            pattrs = {"name": ptok.text, "annotation": None}
            pchildren = []
            if self.at_delim(":"):
                self.advance()
                pattrs["annotation"] = self.expect(lx.NAME, what="type name").text
            if self.at_op("="):
                self.advance()
                pchildren.append(self.expression())
                seen_default = True
            elif seen_default:
                raise ParseError("non-default parameter follows default parameter", ptok.line, ptok.column)
            children.append(Node(n.PARAM, pchildren, pattrs, (ptok.line, ptok.column)))
            if not self.at_delim(")"):
                self.expect(lx.DELIM, ",")
        self.advance()
        children.extend(self.block())
        span = (start.line, start.column) if start is not def_tok else (def_tok.line, def_tok.column)
        return Node(n.FUNCTION_DEF, children, attrs, span)

    def with_stmt(self) -> Node:
        tok = self.advance()
        scope = self.expression()
        return Node(n.WITH, [scope] + self.block(), {}, (tok.line, tok.column))

    def for_stmt(self) -> Node:
        tok = self.advance()
        var = self.expect(lx.NAME, what="loop variable")
        self.expect(lx.KEYWORD, "in")
        iterable = self.expression()
        return Node(n.FOR, [iterable] + self.block(), {"var": var.text}, (tok.line, tok.column))

    def if_stmt(self) -> Node:
        tok = self.advance()
        test = self.expression()
        body_tok = self.tok
        body = Node(n.BLOCK, self.block(), {}, (body_tok.line, body_tok.column))
        children = [test, body]
        if self.at_kw("elif"):
            elif_tok = self.tok
            children.append(Node(n.BLOCK, [self.if_stmt()], {}, (elif_tok.line, elif_tok.column)))
        elif self.at_kw("else"):
            else_tok = self.advance()
            children.append(Node(n.BLOCK, self.block(), {}, (else_tok.line, else_tok.column)))
        return Node(n.IF, children, {}, (tok.line, tok.column))

    # -- expressions ---------------------------------------------------
    def expression(self) -> Node:
        left = self.sum_expr()
        if self.tok.kind == lx.OP and self.tok.text in _COMPARE_OPS:
            op = self.advance()
            right = self.sum_expr()
            return Node(n.COMPARE, [left, right], {"op": op.text}, left.span)
        return left

    def sum_expr(self) -> Node:
        left = self.term()
        while self.at_op("+") or self.at_op("-"):
            op = self.advance()
            left = Node(n.BINOP, [left, self.term()], {"op": op.text}, left.span)
        return left

    def term(self) -> Node:
        left = self.unary()
        while self.at_op("*"):
            op = self.advance()
            left = Node(n.BINOP, [left, self.unary()], {"op": op.text}, left.span)
        return left

    def unary(self) -> Node:
        if self.at_op("-"):
            tok = self.advance()
            if not self.at(lx.NUMBER):
                raise self.fail("a number after unary '-'")
            num = self.advance()
            return Node(n.NUMBER_LIT, [], {"value": -num.value}, (tok.line, tok.column))
        return self.postfix()

    def postfix(self) -> Node:
        node = self.atom()
        while True:
            if self.at_delim("("):
                node = self.call(node)
            elif self.at_delim("."):
                self.advance()
                attr = self.expect(lx.NAME, what="attribute name")
                node = Node(n.ATTRIBUTE, [node], {"name": attr.text}, node.span)
            elif self.at_delim("["):
                self.advance()
                index = self.expression()
                self.expect(lx.DELIM, "]")
                node = Node(n.SUBSCRIPT, [node, index], {}, node.span)
            else:
                return node

    def call(self, func: Node) -> Node:
        self.advance()
        args: list[Node] = []
        kwargs: list[Node] = []
        while not self.at_delim(")"):
            tok = self.tok
            nxt = self.tokens[self.pos + 1]
            if tok.kind == lx.NAME and nxt.kind == lx.OP and nxt.text == "=":
                self.advance()
                self.advance()
                if any(k.attrs["name"] == tok.text for k in kwargs):
                    raise ParseError(f"keyword argument repeated: {tok.text}", tok.line, tok.column)
                kwargs.append(Node(n.KEYWORD, [self.expression()], {"name": tok.text}, (tok.line, tok.column)))
            else:
                if kwargs:
                    raise ParseError("positional argument follows keyword argument", tok.line, tok.column)
                args.append(self.expression())
            if not self.at_delim(")"):
                self.expect(lx.DELIM, ",", what="',' or ')'")
        self.advance()
        return Node(n.CALL, [func] + args + kwargs, {}, func.span)

    def atom(self) -> Node:
        tok = self.tok
        span = (tok.line, tok.column)
        if tok.kind == lx.NAME:
            self.advance()
            return Node(n.NAME, [], {"id": tok.text}, span)
        if tok.kind == lx.NUMBER:
            self.advance()
            return Node(n.NUMBER_LIT, [], {"value": tok.value}, span)
        if tok.kind == lx.STRING:
            self.advance()
            return Node(n.STRING_LIT, [], {"value": tok.value}, span)
        if tok.kind == lx.FSTRING:
            self.advance()
            return self.fstring(tok)
        if self.at_delim("("):
            self.advance()
            if self.tok.kind == lx.NAME and self.tokens[self.pos + 1].kind == lx.OP and self.tokens[self.pos + 1].text == ":=":
                name = self.advance()
                self.advance()
                value = self.expression()
                self.expect(lx.DELIM, ")")
                return Node(n.NAMED_CAPTURE, [value], {"name": name.text}, span)
            inner = self.expression()
            self.expect(lx.DELIM, ")")
            return inner
        if self.at_delim("["):
            return self.list_display()
        raise self.fail("an expression")

    def list_display(self) -> Node:
        tok = self.advance()
        span = (tok.line, tok.column)
        if self.at_delim("]"):
            self.advance()
            return Node(n.LIST_EXPR, [], {}, span)
        first = self.expression()
        if self.at_kw("for"):
            self.advance()
            var = self.expect(lx.NAME, what="loop variable")
            self.expect(lx.KEYWORD, "in")
            iterable = self.expression()
            if self.at_kw("for") or self.at_kw("if"):
                raise self.fail("']' (only single-clause comprehensions are supported)")
            self.expect(lx.DELIM, "]")
            return Node(n.LIST_COMP, [first, iterable], {"var": var.text}, span)
        items = [first]
        while not self.at_delim("]"):
            self.expect(lx.DELIM, ",", what="',' or ']'")
            if self.at_delim("]"):
                break
            items.append(self.expression())
        self.advance()
        return Node(n.LIST_EXPR, items, {}, span)

    def fstring(self, tok: Token) -> Node:
        parts: list[Node] = []
        for part in tok.value:
            if isinstance(part, FieldSource):
                sub = Parser(tokenize_expression(part.source, part.line, part.column))
                expr = sub.expression()
                if not sub.at(lx.EOF):
                    raise sub.fail("'}' closing the f-string field")
                parts.append(Node(n.FSTRING_FIELD, [expr], {"spec": part.spec}, (part.line, part.column)))
            else:
                parts.append(Node(n.STRING_LIT, [], {"value": part}, (tok.line, tok.column)))
        return Node(n.FSTRING, parts, {}, (tok.line, tok.column))


def parse(tokens: list[Token]) -> Node:
    """Parse a token stream (from :func:`tokenize`) into a Module node."""
    return Parser(tokens).parse_module()


def parse_source(source: str) -> Node:
    return parse(lx.tokenize(source))
