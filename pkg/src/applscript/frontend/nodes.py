"""Uniform AST node used by the parser, the printer and the compiler passes."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Iterator

CTX_MODES = ("new", "copy", "same", "resume")

# Node inventory.  Every syntactic element is one of these kinds.
MODULE = "Module"
FUNCTION_DEF = "FunctionDef"
DECORATOR = "Decorator"
PARAM = "Param"
EXPR_STMT = "ExprStmt"
ASSIGN = "Assign"
NAMED_CAPTURE = "NamedCapture"
RETURN = "Return"
PASS = "Pass"
WITH = "With"
FOR = "For"
IF = "If"
BLOCK = "Block"
CALL = "Call"
KEYWORD = "Keyword"
FSTRING = "FString"
FSTRING_FIELD = "FStringField"
STRING_LIT = "StringLit"
NUMBER_LIT = "NumberLit"
NAME = "Name"
BINOP = "BinOp"
COMPARE = "Compare"
LIST_EXPR = "ListExpr"
LIST_COMP = "ListComp"
ATTRIBUTE = "Attribute"
SUBSCRIPT = "Subscript"
# introduced by the compiler's statement-wrapping pass
CAPTURE = "Capture"


@dataclass(eq=False)
class Node:
    kind: str
    children: list[Node] = field(default_factory=list)
    attrs: dict[str, Any] = field(default_factory=dict)
    span: tuple[int, int] = (0, 0)

    def __eq__(self, other: object) -> bool:
        # structural equality; spans are ignored
        if not isinstance(other, Node):
            return NotImplemented
        return (
            self.kind == other.kind
            and self.attrs == other.attrs
            and len(self.children) == len(other.children)
            and all(a == b for a, b in zip(self.children, other.children))
        )

    __hash__ = None  # type: ignore[assignment]

    @property
    def line(self) -> int:
        return self.span[0]

    def walk(self) -> Iterator[Node]:
        yield self
        for child in self.children:
            yield from child.walk()

    def copy(self, **changes: Any) -> Node:
        return Node(
            changes.get("kind", self.kind),
            changes.get("children", list(self.children)),
            changes.get("attrs", dict(self.attrs)),
            changes.get("span", self.span),
        )

    def __repr__(self) -> str:
        attrs = ", ".join(f"{k}={v!r}" for k, v in self.attrs.items())
        inner = ", ".join(repr(c) for c in self.children)
        parts = [p for p in (attrs, inner) if p]
        return f"{self.kind}({'; '.join(parts)})"


def ast_size(node: Node) -> int:
    """Number of nodes in the subtree rooted at ``node``."""
    return 1 + sum(ast_size(child) for child in node.children)
