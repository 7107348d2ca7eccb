"""Loop-nest discovery and symbol resolution over a parsed unit."""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .ast import AstNode
from .headers import HeaderInfo
from .lexer import join_tokens
from .parser import ARITH_TYPES, GROUPED_SPEC, QUALIFIERS, STORAGE, Declarator, DeclSpec

_MACRO_NAME = re.compile(r"#\s*(?:define|undef)\s+([A-Za-z_]\w*)")

CATEGORIES = (
    "local", "global_var", "function", "static_fn", "static_var", "parameter",
    "typedef_name", "enum_constant",
)


class UnknownSymbol(LookupError):
    def __init__(self, name: str):
        super().__init__(f"no visible declaration for {name!r}")
        self.name = name


@dataclass
class SymbolInfo:
    name: str
    category: str
    declared_type: str
    is_primitive: bool
    origin: str = field(default="file", compare=False)
    scope: str = field(default="file", compare=False)
    decl: Declarator | None = field(default=None, compare=False, repr=False)
    spec: DeclSpec | None = field(default=None, compare=False, repr=False)
    node: AstNode | None = field(default=None, compare=False, repr=False)


def find_for_nests(unit: AstNode) -> list[tuple[AstNode, str, int]]:
    """Outermost ``for`` statements per function, in source order."""
    assert unit.kind == "TranslationUnit"
    found: list[tuple[AstNode, str, int]] = []

    def visit(node: AstNode, fn: str) -> None:
        if node.kind == "ForStmt":
            found.append((node, fn, len(found)))
            return
        for c in node.children:
            visit(c, fn)

    for item in unit.children:
        if item.kind == "FunctionDef":
            body = item.children[-1]
            if body.kind == "CompoundStmt":
                visit(body, item.attrs["name"])
    return found


def parent_map(unit: AstNode) -> dict:
    pm = unit.attrs.get("_parents")
    if pm is None:
        pm = {}
        for n in unit.walk():
            for c in n.children:
                pm[id(c)] = n
        unit.attrs["_parents"] = pm
    return pm


def ancestors(node: AstNode, unit: AstNode) -> list[tuple[AstNode, AstNode]]:
    """(ancestor, child-on-path) pairs from the innermost outwards."""
    pm = parent_map(unit)
    out = []
    cur = node
    while id(cur) in pm:
        parent = pm[id(cur)]
        out.append((parent, cur))
        cur = parent
    return out


def enclosing_function(node: AstNode, unit: AstNode) -> AstNode | None:
    for anc, _ in ancestors(node, unit):
        if anc.kind == "FunctionDef":
            return anc
    return None


def outer_reference_nodes(nest: AstNode) -> dict[str, tuple[str, list[AstNode]]]:
    """name -> (role, every Identifier node) for uses not declared inside ``nest``.

    The role is 'callee' if the name is ever called, 'type' if it is only
    used as a type name, otherwise 'ref'.  Insertion order is first use.
    """
    refs: dict[str, list] = {}

    def visit(node: AstNode, scopes: list) -> None:
        k = node.kind
        if k == "Identifier":
            name = node.attrs["name"]
            if not any(name in s for s in scopes):
                role = node.attrs.get("role", "ref")
                entry = refs.setdefault(name, [role, []])
                entry[1].append(node)
                if role == "callee" or (role == "ref" and entry[0] == "type"):
                    entry[0] = role
            return
        if k == "Declaration":
            if node.attrs.get("param"):
                return
            for c in node.children:
                visit(c, scopes)
            spec = node.attrs.get("spec")
            for d in node.attrs.get("declarators", []):
                if d.name:
                    scopes[-1].add(d.name)
            if spec is not None:
                scopes[-1].update(spec.enumerators)
            return
        if k in ("CompoundStmt", "ForStmt"):
            scopes = scopes + [set()]
        for c in node.children:
            visit(c, scopes)

    visit(nest, [set()])
    return {name: (role, nodes) for name, (role, nodes) in refs.items()}


def outer_references(nest: AstNode) -> list[tuple[str, str, AstNode]]:
    """(name, role, first Identifier node) for each outside name, in first-use order."""
    return [(name, role, nodes[0]) for name, (role, nodes) in outer_reference_nodes(nest).items()]


def declared_inside(nest: AstNode) -> set[str]:
    names = set()
    for n in nest.walk():
        if n.kind == "Declaration" and not n.attrs.get("param"):
            for d in n.attrs.get("declarators", []):
                if d.name:
                    names.add(d.name)
            if n.attrs.get("spec") is not None:
                names.update(n.attrs["spec"].enumerators)
    return names


class Resolver:
    """Resolves names visible at a point inside a function of ``unit``."""

    def __init__(self, unit: AstNode, headers: HeaderInfo | None = None):
        self.unit = unit
        self.toks = unit.attrs["tokens"]
        self.headers = headers or HeaderInfo()
        self.file_macros = {}
        for t in self.toks:
            if t.kind == "dir" and t.directive in ("define", "undef"):
                m = _MACRO_NAME.match(t.text)
                if m:
                    self.file_macros.setdefault(m.group(1), []).append((t.start, t.directive))

    # -- type helpers --------------------------------------------------
    def spec_words(self, spec: DeclSpec) -> list[str]:
        words = []
        skip = 0
        for i in range(spec.start, spec.end):
            t = self.toks[i]
            if skip:
                if t.text == "(":
                    skip += 1
                elif t.text == ")":
                    skip -= 1
                    if skip == 1:
                        skip = 0
                continue
            if t.text in GROUPED_SPEC and t.text not in ("typeof", "__typeof__", "__typeof"):
                if i + 1 < spec.end and self.toks[i + 1].text == "(":
                    skip = 1
                continue
            if t.text in STORAGE or t.text in ("inline", "__inline", "__inline__", "_Noreturn", "__extension__"):
                continue
            words.append(t.text)
        return words

    def derived_tokens(self, d: Declarator, adjust_param: bool = False) -> list[str]:
        out = []
        for i in range(d.start, d.end):
            if i == d.name_index:
                out.append("\0")
                continue
            out.append(self.toks[i].text)
        if adjust_param and d.is_direct_array:
            k = out.index("\0") + 1
            depth = 0
            j = k
            while j < len(out):
                if out[j] == "[":
                    depth += 1
                elif out[j] == "]":
                    depth -= 1
                    if depth == 0:
                        break
                j += 1
            out = out[:k - 1] + ["(", "*", "\0", ")"] + out[j + 1:]
        return out

    def type_text(self, spec: DeclSpec, d: Declarator, adjust_param: bool = False) -> str:
        derived = [t for t in self.derived_tokens(d, adjust_param) if t != "\0"]
        if derived == ["(", "*", ")"]:
            derived = ["*"]
        return join_tokens(self.spec_words(spec) + derived)

    def is_arith_spec(self, spec: DeclSpec, before: int) -> bool:
        words = [w for w in self.spec_words(spec) if w not in QUALIFIERS]
        if not words:
            return False
        if all(w in ARITH_TYPES for w in words):
            return True
        if len(words) == 1 and words[0] in spec.type_names:
            return self.typedef_is_arith(words[0], before)
        return False

    def typedef_is_arith(self, name: str, before: int) -> bool:
        found = self._file_lookup(name, before)
        if found is not None:
            node, spec, d = found
            if spec is not None and spec.is_typedef and d is not None:
                derived = [t for t in self.derived_tokens(d) if t not in ("\0",) and t not in QUALIFIERS]
                return not derived and self.is_arith_spec(spec, node.span.byte_start)
            return False
        return bool(self.headers.typedefs.get(name))

    def primitive(self, spec: DeclSpec, d: Declarator, before: int, adjust_param: bool = False) -> bool:
        derived = [t for t in self.derived_tokens(d, adjust_param)
                   if t != "\0" and t not in QUALIFIERS]
        if derived == ["(", "*", ")"]:
            derived = ["*"]
        if derived not in ([], ["*"]):
            return False
        return self.is_arith_spec(spec, before)

    # -- lookup --------------------------------------------------------
    def is_macro(self, name: str, pos: int) -> bool:
        if name in self.file_macros:
            events = [e for e in self.file_macros[name] if e[0] < pos]
            return bool(events) and events[-1][1] == "define"
        return name in self.headers.macros

    def _file_lookup(self, name: str, before: int, functions_anywhere: bool = False):
        items = self.unit.children
        hit = None
        for item in items:
            if item.span.byte_start >= before and not functions_anywhere:
                break
            after = item.span.byte_start >= before
            if item.kind == "Declaration":
                spec = item.attrs.get("spec")
                if spec is None:
                    continue
                if not after and name in spec.enumerators:
                    hit = (item, spec, None)
                for d in item.attrs["declarators"]:
                    if d.name == name and (not after or d.is_function):
                        if hit is None or not after:
                            hit = (item, spec, d)
            elif item.kind == "FunctionDef" and item.attrs["name"] == name:
                if hit is None or not after or hit[2] is None or not hit[2].is_function:
                    hit = (item, item.attrs["spec"], item.attrs["declarator"])
        return hit

    def _block_lookup(self, name: str, node: AstNode):
        for anc, child in ancestors(node, self.unit):
            if anc.kind == "CompoundStmt":
                items = anc.children
                idx = next(i for i, c in enumerate(items) if c is child)
                for item in reversed(items[:idx]):
                    if item.kind != "Declaration":
                        continue
                    spec = item.attrs.get("spec")
                    if spec is not None and name in spec.enumerators:
                        return ("block", item, spec, None)
                    for d in reversed(item.attrs["declarators"]):
                        if d.name == name:
                            return ("block", item, spec, d)
            elif anc.kind == "ForStmt":
                init = anc.children[0]
                if child is not init and init.kind == "Declaration":
                    for d in init.attrs["declarators"]:
                        if d.name == name:
                            return ("block", init, init.attrs["spec"], d)
            elif anc.kind == "FunctionDef":
                for p in anc.attrs["params"]:
                    for d in p.attrs["declarators"]:
                        if d.name == name:
                            return ("param", p, p.attrs["spec"], d)
                return None
        return None

    def resolve(self, name: str, at: AstNode, role: str = "ref") -> SymbolInfo | None:
        """Classify ``name`` as seen from node ``at``; None for macros."""
        pos = at.span.byte_start
        if self.is_macro(name, pos):
            return None
        hit = self._block_lookup(name, at)
        if hit is not None:
            scope, node, spec, d = hit
            return self._make(name, scope, node, spec, d, pos)
        fn = enclosing_function(at, self.unit)
        before = fn.span.byte_start if fn is not None else pos
        found = self._file_lookup(name, before)
        if found is None and role == "callee":
            found = self._file_lookup(name, before, functions_anywhere=True)
        if found is not None:
            node, spec, d = found
            return self._make(name, "file", node, spec, d, before)
        h = self.headers
        if name in h.typedefs:
            return SymbolInfo(name, "typedef_name", name, h.typedefs[name], origin="header", scope="header")
        if name in h.functions:
            return SymbolInfo(name, "function", "", False, origin="header", scope="header")
        if name in h.globals:
            ty, prim = h.globals[name]
            return SymbolInfo(name, "global_var", ty, prim, origin="header", scope="header")
        if name in h.enum_constants:
            return SymbolInfo(name, "enum_constant", "int", True, origin="header", scope="header")
        if role == "callee":
            return SymbolInfo(name, "function", "", False, origin="implicit", scope="header")
        if role == "type":
            return SymbolInfo(name, "typedef_name", name, False, origin="assumed", scope="header")
        raise UnknownSymbol(name)

    def _make(self, name, scope, node, spec, d, before) -> SymbolInfo:
        if d is None:
            return SymbolInfo(name, "enum_constant", "int", True, scope=scope, spec=spec, node=node)
        is_param = scope == "param"
        ty = self.type_text(spec, d, adjust_param=is_param)
        if spec.is_typedef:
            prim = not [t for t in self.derived_tokens(d) if t != "\0" and t not in QUALIFIERS] and \
                self.is_arith_spec(spec, before)
            return SymbolInfo(name, "typedef_name", ty, prim, scope=scope, decl=d, spec=spec, node=node)
        if d.is_function:
            static = "static" in spec.storage and scope == "file"
            cat = "static_fn" if static else "function"
            return SymbolInfo(name, cat, ty, False, scope=scope, decl=d, spec=spec, node=node)
        prim = self.primitive(spec, d, before, adjust_param=is_param)
        if is_param:
            cat = "parameter"
        elif scope == "file":
            cat = "static_var" if "static" in spec.storage else "global_var"
        else:
            cat = "global_var" if "extern" in spec.storage else "local"
        return SymbolInfo(name, cat, ty, prim, scope=scope, decl=d, spec=spec, node=node)


def collect_symbols(nest_root: AstNode, unit: AstNode, headers: HeaderInfo | None = None,
                    resolver: Resolver | None = None) -> list[SymbolInfo]:
    """Every outside-declared identifier referenced in the nest, classified.

    Macros are not declarations and are left out.  Raises UnknownSymbol
    when a name resolves nowhere.
    """
    resolver = resolver or Resolver(unit, headers)
    out = []
    for name, role, _ in outer_references(nest_root):
        sym = resolver.resolve(name, nest_root, role)
        if sym is not None:
            out.append(sym)
    return out
