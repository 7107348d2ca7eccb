"""Recursive-descent parser for the practical C subset.

Expressions are kept as token trees: the parser only distinguishes
identifier references and calls, which is all the loop extractor needs.
Function bodies that fall outside the subset degrade to opaque ``Other``
nodes; only unbalanced braces at file scope are fatal.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .ast import AstNode, SourceSpan
from .lexer import LexError, Token, tokenize


class ParseError(ValueError):
    pass


class _Fail(Exception):
    """Internal: the construct at hand is outside the subset."""


STORAGE = frozenset({"typedef", "extern", "static", "auto", "register", "_Thread_local", "__thread"})
QUALIFIERS = frozenset({
    "const", "volatile", "restrict", "__restrict", "__restrict__", "__const",
    "__volatile__", "_Atomic", "inline", "__inline", "__inline__", "_Noreturn",
    "__extension__",
})
BASE_TYPES = frozenset({
    "void", "char", "short", "int", "long", "float", "double", "signed", "unsigned",
    "_Bool", "_Complex", "__signed__", "__int128", "__float128", "_Float16",
    "_Float32", "_Float64", "_Float128", "_Float32x", "_Float64x", "__builtin_va_list",
})
ARITH_TYPES = BASE_TYPES - {"void", "__builtin_va_list"}
GROUPED_SPEC = frozenset({
    "__attribute__", "__attribute", "__declspec", "_Alignas", "__asm__", "__asm",
    "asm", "typeof", "__typeof__", "__typeof",
})
ASSIGN_OPS = frozenset({"=", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<=", ">>="})
_CLOSER = {"(": ")", "[": "]", "{": "}"}


@dataclass
class DeclSpec:
    start: int
    end: int
    storage: set = field(default_factory=set)
    tag_kind: str | None = None
    tag_name: str | None = None
    tag_body: tuple | None = None
    enumerators: list = field(default_factory=list)
    type_names: list = field(default_factory=list)

    @property
    def is_typedef(self) -> bool:
        return "typedef" in self.storage


@dataclass
class Declarator:
    start: int
    end: int = -1
    name: str | None = None
    name_index: int | None = None
    direct: list = field(default_factory=list)
    params: list | None = None
    kr_names: list | None = None
    init: tuple | None = None

    @property
    def is_function(self) -> bool:
        return bool(self.direct) and self.direct[0] == "("

    @property
    def is_direct_array(self) -> bool:
        return bool(self.direct) and self.direct[0] == "["


class Parser:
    def __init__(self, source: str, file_id=None, known_typedefs=()):
        try:
            self.toks = tokenize(source)
        except LexError as exc:
            raise ParseError(str(exc)) from exc
        self.file_id = file_id
        self.pos = 0
        self.scopes: list[dict] = [{}]
        self.known_typedefs = set(known_typedefs)

    # -- token helpers -------------------------------------------------
    def peek(self, k: int = 0) -> Token:
        i = min(self.pos + k, len(self.toks) - 1)
        return self.toks[i]

    def at(self, text: str) -> bool:
        t = self.toks[self.pos]
        return t.text == text and t.kind in ("op", "kw")

    def advance(self) -> Token:
        t = self.toks[self.pos]
        if t.kind == "eof":
            raise _Fail("unexpected end of input")
        self.pos += 1
        return t

    def expect(self, text: str) -> Token:
        if not self.at(text):
            raise _Fail(f"expected {text!r} at line {self.peek().line}, got {self.peek().text!r}")
        return self.advance()

    def node(self, kind: str, pieces: list, attrs=None, at: int | None = None) -> AstNode:
        first = last = None
        for p in pieces:
            t = _first_token(p)
            if t is not None:
                first = t
                break
        for p in reversed(pieces):
            t = _last_token(p)
            if t is not None:
                last = t
                break
        if first is None:
            anchor = self.toks[self.pos if at is None else at]
            span = SourceSpan(self.file_id, anchor.start, anchor.start, anchor.line, anchor.line)
        else:
            span = SourceSpan(self.file_id, first.start, last.end, first.line, last.end_line)
        return AstNode(kind, span, pieces, dict(attrs or {}))

    def balanced(self, pieces: list) -> None:
        """Consume a bracketed group as raw tokens."""
        opener = self.advance()
        pieces.append(opener)
        closer = _CLOSER[opener.text]
        depth = 1
        while depth:
            t = self.advance()
            pieces.append(t)
            if t.kind == "op":
                if t.text in _CLOSER:
                    depth += 1
                elif t.text in (")", "]", "}"):
                    depth -= 1
        if pieces[-1].text != closer:
            raise _Fail("mismatched brackets")

    # -- scopes --------------------------------------------------------
    def is_typedef(self, name: str) -> bool:
        for scope in reversed(self.scopes):
            if name in scope:
                return scope[name]
        return name in self.known_typedefs

    def declare(self, name: str, is_typedef: bool) -> None:
        self.scopes[-1][name] = is_typedef

    # -- entry ---------------------------------------------------------
    def parse_unit(self) -> AstNode:
        pieces: list = []
        while self.peek().kind != "eof":
            t = self.peek()
            if t.kind == "dir":
                pieces.append(self.directive())
            elif t.text == ";" and t.kind == "op":
                pieces.append(self.node("Other", [self.advance()], {"construct": "empty"}))
            elif t.text in ("}", ")", "]") and t.kind == "op":
                raise ParseError(f"unbalanced {t.text!r} at file scope, line {t.line}")
            else:
                pieces.append(self.external_declaration())
        pieces.append(self.toks[-1])  # eof carries trailing trivia
        unit = self.node("TranslationUnit", pieces)
        unit.attrs["tokens"] = self.toks
        return unit

    def directive(self) -> AstNode:
        t = self.advance()
        kind = "PragmaDirective" if t.directive == "pragma" else "Other"
        return self.node(kind, [t], {"directive": t.directive})

    def external_declaration(self) -> AstNode:
        start = self.pos
        depth = len(self.scopes)
        try:
            return self.declaration(file_scope=True, allow_function=True)
        except _Fail:
            del self.scopes[depth:]
            self.pos = start
            return self.opaque_toplevel()

    def opaque_toplevel(self) -> AstNode:
        pieces: list = []
        depth = 0
        while True:
            t = self.peek()
            if t.kind == "eof":
                if depth:
                    raise ParseError(f"unbalanced braces at file scope (opened before line {t.line})")
                break
            if t.kind == "dir" and depth == 0 and pieces:
                break
            self.pos += 1
            pieces.append(t)
            if t.kind != "op":
                continue
            if t.text in _CLOSER:
                depth += 1
            elif t.text in (")", "]", "}"):
                depth -= 1
                if depth < 0:
                    raise ParseError(f"unbalanced {t.text!r} at file scope, line {t.line}")
                if depth == 0 and t.text == "}":
                    nxt = self.peek()
                    if not (nxt.kind == "id" or nxt.text in (";", "*", ",", "=", "__attribute__")):
                        break
            elif t.text == ";" and depth == 0:
                break
        return self.node("Other", pieces, {"opaque": True})

    # -- declarations --------------------------------------------------
    def looks_like_declaration(self) -> bool:
        t = self.peek()
        if t.kind == "kw":
            return t.text in STORAGE or t.text in QUALIFIERS or t.text in BASE_TYPES or t.text in (
                "struct", "union", "enum", "__attribute__", "__attribute", "typeof",
                "__typeof__", "__typeof", "_Alignas", "__declspec", "_Static_assert")
        if t.kind != "id":
            return False
        nxt = self.peek(1)
        if self.is_typedef(t.text):
            return not (nxt.text in ASSIGN_OPS or nxt.text in (":", ".", "->", "++", "--", "[", ")", ",", ";", "("))
        j = 1
        while self.peek(j).text in ("*", "const", "volatile", "restrict", "__restrict"):
            j += 1
        cand = self.peek(j)
        if cand.kind != "id" or self.is_typedef(cand.text):
            return False
        follow = self.peek(j + 1).text
        if j == 1:
            return follow not in (":",)
        return follow in ("=", ";", ",", "[", "__attribute__")

    def specifiers(self, pieces: list, required: bool = True) -> DeclSpec:
        spec = DeclSpec(self.pos, self.pos)
        has_type = False
        while True:
            t = self.peek()
            if t.kind == "kw" and t.text in STORAGE:
                spec.storage.add(t.text)
                pieces.append(self.advance())
            elif t.kind == "kw" and t.text == "_Atomic" and self.peek(1).text == "(":
                pieces.append(self.advance())
                self.balanced(pieces)
                has_type = True
            elif t.kind == "kw" and t.text in QUALIFIERS:
                pieces.append(self.advance())
            elif t.kind == "kw" and t.text in BASE_TYPES:
                pieces.append(self.advance())
                has_type = True
            elif t.kind == "kw" and t.text in GROUPED_SPEC:
                pieces.append(self.advance())
                if self.at("("):
                    self.balanced(pieces)
                if t.text in ("typeof", "__typeof__", "__typeof"):
                    has_type = True
            elif t.kind == "kw" and t.text in ("struct", "union", "enum"):
                self.tag_specifier(pieces, spec)
                has_type = True
            elif t.kind == "id" and not has_type and self.is_typedef(t.text):
                pieces.append(self.node("Identifier", [self.advance()], {"name": t.text, "role": "type"}))
                spec.type_names.append(t.text)
                has_type = True
            elif t.kind == "id" and not has_type and self._assumed_type_name():
                pieces.append(self.node("Identifier", [self.advance()], {"name": t.text, "role": "type", "assumed": True}))
                spec.type_names.append(t.text)
                has_type = True
            else:
                break
        spec.end = self.pos
        if required and spec.end == spec.start:
            raise _Fail(f"expected declaration specifiers at line {self.peek().line}")
        return spec

    def _assumed_type_name(self) -> bool:
        """An unknown identifier directly followed by a declarator."""
        j = 1
        while self.peek(j).text in ("*", "const", "volatile", "restrict", "__restrict", "__restrict__"):
            j += 1
        cand = self.peek(j)
        if cand.kind == "id" and not self.is_typedef(cand.text):
            return j == 1 or self.peek(j + 1).text in ("=", ";", ",", "[", ")", "__attribute__")
        return j > 1 and cand.text in (")", ",")

    def tag_specifier(self, pieces: list, spec: DeclSpec) -> None:
        kw = self.advance()
        pieces.append(kw)
        spec.tag_kind = kw.text
        while self.peek().text in ("__attribute__", "__attribute", "__declspec", "_Alignas"):
            pieces.append(self.advance())
            if self.at("("):
                self.balanced(pieces)
        if self.peek().kind == "id":
            spec.tag_name = self.advance().text
            pieces.append(self.toks[self.pos - 1])
        if self.at("{"):
            body_start = self.pos
            if kw.text == "enum":
                self.enum_body(pieces, spec)
            else:
                self.balanced(pieces)
            spec.tag_body = (body_start, self.pos)
        elif spec.tag_name is None:
            raise _Fail("anonymous tag without body")

    def enum_body(self, pieces: list, spec: DeclSpec) -> None:
        pieces.append(self.expect("{"))
        while not self.at("}"):
            name = self.advance()
            if name.kind != "id":
                raise _Fail("bad enumerator")
            spec.enumerators.append(name.text)
            self.declare(name.text, False)
            pieces.append(name)
            if self.at("="):
                pieces.append(self.advance())
                pieces.append(self.expr_node({",", "}"}))
            if self.at(","):
                pieces.append(self.advance())
        pieces.append(self.expect("}"))

    def declarator(self, pieces: list, d: Declarator, abstract: bool = False) -> None:
        while True:
            t = self.peek()
            if t.text == "*" and t.kind == "op":
                pieces.append(self.advance())
            elif t.kind == "kw" and (t.text in QUALIFIERS or t.text in ("__attribute__", "__attribute")):
                pieces.append(self.advance())
                if self.at("("):
                    self.balanced(pieces)
            else:
                break
        found_here = False
        t = self.peek()
        if t.kind == "id" and not (abstract and self.is_typedef(t.text)):
            d.name = t.text
            d.name_index = self.pos
            pieces.append(self.advance())
            found_here = True
        elif self.at("(") and self._nested_declarator():
            pieces.append(self.advance())
            self.declarator(pieces, d, abstract)
            pieces.append(self.expect(")"))
        elif not abstract:
            raise _Fail(f"expected declarator at line {t.line}, got {t.text!r}")
        while True:
            if self.at("["):
                pieces.append(self.advance())
                if not self.at("]"):
                    pieces.append(self.expr_node({"]"}))
                pieces.append(self.expect("]"))
                if found_here:
                    d.direct.append("[")
            elif self.at("("):
                params, kr = self.param_list(pieces)
                if found_here:
                    if not d.direct:
                        d.params = params
                        d.kr_names = kr
                    d.direct.append("(")
            else:
                break

    def _nested_declarator(self) -> bool:
        nxt = self.peek(1)
        if nxt.text in ("*", "(", "[", "^"):
            return True
        if nxt.kind == "id" and not self.is_typedef(nxt.text):
            return True
        return nxt.kind == "kw" and nxt.text in ("__attribute__", "__attribute")

    def param_list(self, pieces: list):
        pieces.append(self.expect("("))
        params: list = []
        kr = None
        self.scopes.append({})
        try:
            if self.peek().kind == "id" and not self.is_typedef(self.peek().text) and self.peek(1).text in (",", ")"):
                kr = []
                while not self.at(")"):
                    tok = self.advance()
                    pieces.append(tok)
                    if tok.kind == "id":
                        kr.append(tok.text)
            while not self.at(")"):
                if self.at("..."):
                    pieces.append(self.advance())
                    continue
                sub: list = []
                spec = self.specifiers(sub)
                d = Declarator(self.pos)
                self.declarator(sub, d, abstract=True)
                d.end = self.pos
                while self.peek().text in ("__attribute__", "__attribute"):
                    sub.append(self.advance())
                    self.balanced(sub)
                if d.name:
                    self.declare(d.name, False)
                params.append(self.node("Declaration", sub, {"spec": spec, "declarators": [d], "param": True}))
                pieces.append(params[-1])
                if self.at(","):
                    pieces.append(self.advance())
                elif not self.at(")"):
                    raise _Fail("bad parameter list")
        finally:
            self.scopes.pop()
        pieces.append(self.expect(")"))
        return params, kr

    def declaration(self, file_scope: bool = False, allow_function: bool = False, in_for: bool = False) -> AstNode:
        pieces: list = []
        if self.at("_Static_assert"):
            pieces.append(self.advance())
            self.balanced(pieces)
            pieces.append(self.expect(";"))
            return self.node("Declaration", pieces, {"spec": None, "declarators": [], "file_scope": file_scope})
        spec = self.specifiers(pieces)
        declarators: list[Declarator] = []
        if not self.at(";"):
            while True:
                d = Declarator(self.pos)
                self.declarator(pieces, d)
                d.end = self.pos
                while self.peek().kind == "kw" and self.peek().text in GROUPED_SPEC:
                    pieces.append(self.advance())
                    if self.at("("):
                        self.balanced(pieces)
                    d.end = self.pos
                if allow_function and not declarators and d.is_function and (self.at("{") or self._kr_decls(d)):
                    return self.function_def(pieces, spec, d)
                if self.at("="):
                    pieces.append(self.advance())
                    init_start = self.pos
                    pieces.append(self.expr_node({",", ";"}))
                    d.init = (init_start, self.pos)
                declarators.append(d)
                if d.name:
                    self.declare(d.name, spec.is_typedef)
                if self.at(","):
                    pieces.append(self.advance())
                    continue
                break
        pieces.append(self.expect(";"))
        attrs = {"spec": spec, "declarators": declarators, "file_scope": file_scope}
        return self.node("Declaration", pieces, attrs)

    def _kr_decls(self, d: Declarator) -> bool:
        return bool(d.kr_names) and self.looks_like_declaration()

    def function_def(self, pieces: list, spec: DeclSpec, d: Declarator) -> AstNode:
        d.end = self.pos
        self.declare(d.name, False)
        attrs = {"name": d.name, "spec": spec, "declarator": d, "params": d.params or []}
        if not self.at("{"):
            # K&R parameter declarations: keep the function but treat the body as opaque
            attrs["kr"] = True
            while not self.at("{"):
                pieces.append(self.advance())
        self.scopes.append({})
        for p in d.params or []:
            for pd in p.attrs["declarators"]:
                if pd.name:
                    self.declare(pd.name, False)
        depth = len(self.scopes)
        body_start = self.pos
        try:
            body = self.compound()
        except _Fail as exc:
            del self.scopes[depth:]
            self.pos = body_start
            raw: list = []
            self.balanced(raw)
            body = self.node("Other", raw, {"opaque": True, "reason": str(exc)})
        self.scopes.pop()
        pieces.append(body)
        return self.node("FunctionDef", pieces, attrs)

    # -- statements ----------------------------------------------------
    def compound(self) -> AstNode:
        pieces = [self.expect("{")]
        self.scopes.append({})
        try:
            while not self.at("}"):
                if self.peek().kind == "eof":
                    raise _Fail("unterminated block")
                pieces.append(self.block_item())
        finally:
            self.scopes.pop()
        pieces.append(self.expect("}"))
        return self.node("CompoundStmt", pieces)

    def block_item(self) -> AstNode:
        t = self.peek()
        if t.kind == "dir":
            return self.directive()
        if t.kind == "id" and self.peek(1).text == ":" and not self.is_typedef(t.text):
            return self.statement()
        if self.looks_like_declaration():
            return self.declaration()
        return self.statement()

    def statement(self) -> AstNode:
        t = self.peek()
        text = t.text
        if t.kind == "dir":
            return self.directive()
        if t.kind == "op" and text == "{":
            return self.compound()
        if t.kind == "op" and text == ";":
            return self.node("ExprStmt", [self.advance()])
        if t.kind == "kw":
            if text == "for":
                return self.for_stmt()
            if text == "while":
                pieces = [self.advance(), self.expect("(")]
                pieces += [self.expr_node({")"}), self.expect(")")]
                pieces.append(self.statement())
                return self.node("WhileStmt", pieces)
            if text == "do":
                pieces = [self.advance(), self.statement(), self.expect("while"), self.expect("(")]
                pieces += [self.expr_node({")"}), self.expect(")"), self.expect(";")]
                return self.node("Other", pieces, {"construct": "do"})
            if text == "if":
                pieces = [self.advance(), self.expect("(")]
                pieces += [self.expr_node({")"}), self.expect(")"), self.statement()]
                if self.at("else"):
                    pieces += [self.advance(), self.statement()]
                return self.node("IfStmt", pieces)
            if text == "switch":
                pieces = [self.advance(), self.expect("(")]
                pieces += [self.expr_node({")"}), self.expect(")"), self.statement()]
                return self.node("Other", pieces, {"construct": "switch"})
            if text in ("case", "default"):
                pieces = [self.advance()]
                if text == "case":
                    pieces.append(self.expr_node({":"}))
                pieces.append(self.expect(":"))
                if not self.at("}"):
                    pieces.append(self.statement())
                return self.node("Other", pieces, {"construct": "case"})
            if text == "return":
                pieces = [self.advance()]
                if not self.at(";"):
                    pieces.append(self.expr_node({";"}))
                pieces.append(self.expect(";"))
                return self.node("ReturnStmt", pieces)
            if text == "goto":
                pieces = [self.advance()]
                if self.at("*"):
                    pieces.append(self.expr_node({";"}))
                else:
                    label = self.advance()
                    pieces.append(label)
                pieces.append(self.expect(";"))
                return self.node("GotoStmt", pieces, {"label": pieces[1].text if isinstance(pieces[1], Token) else None})
            if text in ("break", "continue"):
                return self.node("Other", [self.advance(), self.expect(";")], {"construct": text})
            if text in ("asm", "__asm__", "__asm"):
                pieces = [self.advance()]
                while not self.at("("):
                    pieces.append(self.advance())
                self.balanced(pieces)
                pieces.append(self.expect(";"))
                return self.node("Other", pieces, {"opaque": True, "construct": "asm"})
        if t.kind == "id" and self.peek(1).text == ":":
            label = self.advance()
            pieces = [label, self.advance()]
            if not self.at("}"):
                pieces.append(self.statement())
            return self.node("LabelStmt", pieces, {"name": label.text})
        pieces = [self.expr_node({";"}), self.expect(";")]
        return self.node("ExprStmt", pieces)

    def for_stmt(self) -> AstNode:
        pieces = [self.advance(), self.expect("(")]
        self.scopes.append({})
        try:
            if self.looks_like_declaration():
                pieces.append(self.declaration(in_for=True))
            else:
                pieces.append(self.expr_node({";"}))
                pieces.append(self.expect(";"))
            pieces.append(self.expr_node({";"}))
            pieces.append(self.expect(";"))
            pieces.append(self.expr_node({")"}))
            pieces.append(self.expect(")"))
            pieces.append(self.statement())
        finally:
            self.scopes.pop()
        return self.node("ForStmt", pieces)

    # -- expressions ---------------------------------------------------
    def expr_node(self, stops: set) -> AstNode:
        at = self.pos
        return self.node("Other", self.expr_pieces(stops), {"role": "expr"}, at=at)

    def expr_pieces(self, stops: set) -> list:
        pieces: list = []
        while True:
            t = self.peek()
            if t.kind == "eof":
                raise _Fail("unexpected end of input in expression")
            if t.kind == "dir":
                raise _Fail(f"directive inside expression at line {t.line}")
            if t.kind == "op" and t.text in stops:
                return pieces
            if t.kind == "op" and t.text in _CLOSER:
                if t.text == "(" and self.peek(1).text == "{":
                    raise _Fail("statement expression")
                pieces.append(self.advance())
                pieces.extend(self.expr_pieces({_CLOSER[t.text]}))
                pieces.append(self.expect(_CLOSER[t.text]))
            elif t.kind == "op" and t.text in (")", "]", "}"):
                raise _Fail(f"unbalanced {t.text!r} at line {t.line}")
            elif t.kind == "id":
                prev = self.toks[self.pos - 1] if self.pos else None
                if prev is not None and prev.text in (".", "->", "struct", "union", "enum") and prev.kind in ("op", "kw"):
                    pieces.append(self.advance())
                elif self.peek(1).text == "(" and self.peek(1).kind == "op":
                    ident = self.node("Identifier", [self.advance()], {"name": t.text, "role": "callee"})
                    call = [ident, self.advance()]
                    call.extend(self.expr_pieces({")"}))
                    call.append(self.expect(")"))
                    pieces.append(self.node("CallExpr", call, {"name": t.text}))
                else:
                    role = "type" if self.is_typedef(t.text) else "ref"
                    pieces.append(self.node("Identifier", [self.advance()], {"name": t.text, "role": role}))
            else:
                pieces.append(self.advance())


def _first_token(p):
    if isinstance(p, Token):
        return p if p.kind != "eof" else None
    for q in p.pieces:
        t = _first_token(q)
        if t is not None:
            return t
    return None


def _last_token(p):
    if isinstance(p, Token):
        return p if p.kind != "eof" else None
    for q in reversed(p.pieces):
        t = _last_token(q)
        if t is not None:
            return t
    return None


def parse_unit(source_text: str, file_id=None, known_typedefs=()) -> AstNode:
    """Parse one C file into a ``TranslationUnit``.

    Raises ParseError only for structural breakage at file scope.
    """
    return Parser(source_text, file_id, known_typedefs).parse_unit()
