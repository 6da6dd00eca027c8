"""Tokenizer for APPL-script source with Python-style indentation."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

from ..errors import LexError, ParseError

KEYWORDS = frozenset({"def", "return", "with", "for", "in", "if", "elif", "else", "pass"})

# token kinds
KEYWORD = "keyword"
NAME = "identifier"
STRING = "string-literal"
FSTRING = "fstring-part"
NUMBER = "number"
OP = "operator"
DELIM = "delimiter"
INDENT = "indent"
DEDENT = "dedent"
NEWLINE = "newline"
EOF = "eof"

_OPERATORS = (":=", "==", "!=", "+", "-", "*", "<", ">", "=")
_DELIMITERS = "()[],:.@"
_ESCAPES = {"n": "\n", "t": "\t", '"': '"', "'": "'", "\\": "\\"}


@dataclass(frozen=True)
class FieldSource:
    """Raw text of one ``{...}`` field inside an f-string."""

    source: str
    spec: str | None
    line: int
    column: int


@dataclass
class Token:
    kind: str
    text: str
    line: int
    column: int
    value: Any = field(default=None, compare=False)

    def __repr__(self) -> str:
        return f"Token({self.kind}, {self.text!r}, {self.line}:{self.column})"


class _Lexer:
    def __init__(self, source: str, line: int = 1, column: int = 1, indent_aware: bool = True):
        self.src = source
        self.pos = 0
        self.line = line
        self.col = column
        self.indent_aware = indent_aware
        self.tokens: list[Token] = []
        self.depth = 0
        self.indents = [0]
        self.indent_char: str | None = None

    def error(self, msg: str, line: int | None = None, col: int | None = None) -> LexError:
        return LexError(msg, line or self.line, col or self.col)

    def peek(self, offset: int = 0) -> str:
        i = self.pos + offset
        return self.src[i] if i < len(self.src) else ""

    def advance(self, n: int = 1) -> str:
        out = self.src[self.pos:self.pos + n]
        for ch in out:
            if ch == "\n":
                self.line += 1
                self.col = 1
            else:
                self.col += 1
        self.pos += n
        return out

    def emit(self, kind: str, text: str, line: int, col: int, value: Any = None) -> None:
        self.tokens.append(Token(kind, text, line, col, value))

    def run(self) -> list[Token]:
        at_line_start = self.indent_aware
        while self.pos < len(self.src):
            if at_line_start and self.depth == 0:
                at_line_start = False
                if self.handle_indentation():
                    continue
            ch = self.peek()
            if ch == "\n":
                line, col = self.line, self.col
                self.advance()
                if self.depth == 0 and self.indent_aware:
                    if self.tokens and self.tokens[-1].kind not in (NEWLINE, INDENT, DEDENT):
                        self.emit(NEWLINE, "\n", line, col)
                    at_line_start = True
                continue
            if ch in " \t":
                self.advance()
                continue
            if ch == "#":
                while self.pos < len(self.src) and self.peek() != "\n":
                    self.advance()
                continue
            if ch == "\\" and self.peek(1) == "\n":
                self.advance(2)
                continue
            self.lex_token()
        if self.indent_aware:
            if self.tokens and self.tokens[-1].kind not in (NEWLINE, DEDENT):
                self.emit(NEWLINE, "", self.line, self.col)
            while len(self.indents) > 1:
                self.indents.pop()
                self.emit(DEDENT, "", self.line, self.col)
        self.emit(EOF, "", self.line, self.col)
        return self.tokens

    def handle_indentation(self) -> bool:
        """Measure leading whitespace; returns True when the line is blank."""
        start = self.pos
        line = self.line
        while self.peek() in (" ", "\t") and self.peek() != "":
            self.advance()
        ws = self.src[start:self.pos]
        nxt = self.peek()
        if nxt in ("\n", "#", ""):
            return True
        if " " in ws and "\t" in ws:
            raise self.error("indentation mixes tabs and spaces", line, 1)
        if ws:
            if self.indent_char is None:
                self.indent_char = ws[0]
            elif ws[0] != self.indent_char:
                raise self.error("inconsistent use of tabs and spaces in indentation", line, 1)
        width = len(ws)
        if width > self.indents[-1]:
            self.indents.append(width)
            self.emit(INDENT, ws, line, 1)
        else:
            while width < self.indents[-1]:
                self.indents.pop()
                self.emit(DEDENT, "", line, 1)
            if width != self.indents[-1]:
                raise ParseError("unindent does not match any outer indentation level", line, 1)
        return False

    def lex_token(self) -> None:
        ch = self.peek()
        line, col = self.line, self.col
        if ch.isalpha() or ch == "_":
            if ch in "fF" and self.peek(1) in ("'", '"'):
                self.advance()
                self.lex_string(line, col, fstring=True)
                return
            start = self.pos
            while self.peek().isalnum() or self.peek() == "_":
                self.advance()
            word = self.src[start:self.pos]
            self.emit(KEYWORD if word in KEYWORDS else NAME, word, line, col)
            return
        if ch.isdigit():
            self.lex_number(line, col)
            return
        if ch in ("'", '"'):
            self.lex_string(line, col, fstring=False)
            return
        for op in _OPERATORS:
            if self.src.startswith(op, self.pos):
                self.advance(len(op))
                self.emit(OP, op, line, col)
                return
        if ch in _DELIMITERS:
            self.advance()
            if ch in "([":
                self.depth += 1
            elif ch in ")]":
                if self.depth == 0:
                    raise self.error(f"unmatched {ch!r}", line, col)
                self.depth -= 1
            self.emit(DELIM, ch, line, col)
            return
        raise self.error(f"illegal character {ch!r}", line, col)

    def lex_number(self, line: int, col: int) -> None:
        start = self.pos
        while self.peek().isdigit():
            self.advance()
        is_float = False
        if self.peek() == "." and self.peek(1).isdigit():
            is_float = True
            self.advance()
            while self.peek().isdigit():
                self.advance()
        text = self.src[start:self.pos]
        if self.peek().isalpha() or self.peek() == "_":
            raise self.error(f"invalid number literal {text + self.peek()!r}")
        self.emit(NUMBER, text, line, col, float(text) if is_float else int(text))

    def read_escape(self) -> str:
        self.advance()  # backslash
        ch = self.peek()
        if ch == "":
            raise self.error("unterminated string")
        if ch not in _ESCAPES:
            raise self.error(f"unsupported escape sequence '\\{ch}'")
        self.advance()
        return _ESCAPES[ch]

    def lex_string(self, line: int, col: int, fstring: bool) -> None:
        quote = self.peek()
        triple = self.src.startswith(quote * 3, self.pos)
        delim = quote * 3 if triple else quote
        start_pos = self.pos - (1 if fstring else 0)
        self.advance(len(delim))
        parts: list[str | FieldSource] = []
        buf: list[str] = []
        while True:
            ch = self.peek()
            if ch == "":
                raise self.error("unterminated string", line, col)
            if self.src.startswith(delim, self.pos):
                self.advance(len(delim))
                break
            if ch == "\n" and not triple:
                raise self.error("unterminated string", line, col)
            if ch == "\\":
                buf.append(self.read_escape())
                continue
            if fstring and ch == "{":
                if self.peek(1) == "{":
                    self.advance(2)
                    buf.append("{")
                    continue
                if buf:
                    parts.append("".join(buf))
                    buf = []
                parts.append(self.lex_field(quote))
                continue
            if fstring and ch == "}":
                if self.peek(1) == "}":
                    self.advance(2)
                    buf.append("}")
                    continue
                raise self.error("single '}' is not allowed in f-string")
            buf.append(self.advance())
        text = self.src[start_pos:self.pos]
        if fstring:
            if buf:
                parts.append("".join(buf))
            self.emit(FSTRING, text, line, col, parts)
        else:
            self.emit(STRING, text, line, col, "".join(buf))

    def lex_field(self, quote: str) -> FieldSource:
        self.advance()  # opening brace
        line, col = self.line, self.col
        start = self.pos
        depth = 0
        spec_start = None
        while True:
            ch = self.peek()
            if ch == "" or ch == "\n":
                raise self.error("unterminated f-string field", line, col)
            if spec_start is None:
                if ch in "([{":
                    depth += 1
                elif ch in ")]}":
                    if depth == 0 and ch == "}":
                        break
                    depth -= 1
                elif ch in ("'", '"'):
                    if ch == quote:
                        raise self.error("f-string field reuses the enclosing quote character")
                    prev = self.src[self.pos - 1] if self.pos > start else ""
                    prev2 = self.src[self.pos - 2] if self.pos - 1 > start else ""
                    if prev and prev in "fF" and not (prev2.isalnum() or prev2 == "_"):
                        raise ParseError("nested f-strings are not supported", self.line, self.col)
                    self.advance()
                    while self.peek() != ch:
                        if self.peek() in ("", "\n"):
                            raise self.error("unterminated string in f-string field", line, col)
                        if self.peek() == "\\":
                            self.advance()
                        self.advance()
                elif ch == ":" and depth == 0 and self.peek(1) != "=":
                    spec_start = self.pos
                elif ch == "!" and depth == 0 and self.peek(1) != "=":
                    raise self.error("f-string conversions are not supported")
            elif ch == "}":
                break
            elif ch == "{":
                raise self.error("nested fields in format specs are not supported")
            self.advance()
        end = self.pos
        self.advance()  # closing brace
        if spec_start is None:
            source, spec = self.src[start:end], None
        else:
            source, spec = self.src[start:spec_start], self.src[spec_start + 1:end]
        if not source.strip():
            raise self.error("empty expression in f-string field", line, col)
        return FieldSource(source, spec, line, col)


def tokenize(source: str) -> list[Token]:
    """Split ``source`` into tokens, emitting indent/dedent tokens for block structure."""
    source = source.replace("\r\n", "\n").replace("\r", "\n")
    return _Lexer(source).run()


def tokenize_expression(source: str, line: int, column: int) -> list[Token]:
    """Tokenize an f-string field; no indentation or newline tokens are produced."""
    lexer = _Lexer(source, line, column, indent_aware=False)
    lexer.depth = 1
    return lexer.run()
