from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Union

from .lexer import Token

NODE_KINDS = frozenset({
    "TranslationUnit", "FunctionDef", "Declaration", "ForStmt", "WhileStmt",
    "IfStmt", "CompoundStmt", "ExprStmt", "ReturnStmt", "GotoStmt",
    "LabelStmt", "PragmaDirective", "CallExpr", "Identifier", "Other",
})


@dataclass(frozen=True)
class SourceSpan:
    file_id: object
    byte_start: int
    byte_end: int
    line_start: int
    line_end: int

    def contains(self, other: "SourceSpan") -> bool:
        return self.byte_start <= other.byte_start and other.byte_end <= self.byte_end


Piece = Union[Token, "AstNode"]


@dataclass(eq=False)
class AstNode:
    """A node over a contiguous run of tokens.

    ``pieces`` interleaves the node's own tokens with its child nodes in
    source order, so printing a node never needs the original text.
    """

    kind: str
    span: SourceSpan
    pieces: list = field(default_factory=list)
    attrs: dict = field(default_factory=dict)

    @property
    def children(self) -> list["AstNode"]:
        return [p for p in self.pieces if isinstance(p, AstNode)]

    def tokens(self) -> Iterator[Token]:
        for p in self.pieces:
            if isinstance(p, AstNode):
                yield from p.tokens()
            else:
                yield p

    @property
    def text(self) -> str:
        """Verbatim source of the node, without the first token's leading trivia."""
        toks = list(self.tokens())
        if not toks:
            return ""
        return toks[0].text + "".join(t.lead + t.text for t in toks[1:])

    def walk(self) -> Iterator["AstNode"]:
        yield self
        for c in self.children:
            yield from c.walk()

    # ForStmt slots
    def slot(self, name: str) -> "AstNode":
        assert self.kind == "ForStmt"
        return self.children[("init", "cond", "step", "body").index(name)]

    def __repr__(self) -> str:
        return f"AstNode({self.kind}, {self.span.byte_start}:{self.span.byte_end})"


def print_tree(node: AstNode) -> str:
    """Regenerate source text from the tree (trivia included)."""
    return "".join(t.lead + t.text for t in node.tokens())


def structure(node: AstNode):
    """Hashable structural signature used for round-trip comparisons."""
    leaf_text = node.text if node.kind in ("Identifier", "PragmaDirective") or node.attrs.get("opaque") else None
    return (
        node.kind,
        leaf_text,
        node.attrs.get("name"),
        node.attrs.get("construct"),
        tuple(structure(c) for c in node.children),
    )


def structurally_equal(a: AstNode, b: AstNode) -> bool:
    return structure(a) == structure(b)
