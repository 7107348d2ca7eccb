"""Loop-nest outlining: eligibility, loop files, and base-file rewriting."""

from __future__ import annotations

import bisect
import re

from ..cparse.ast import AstNode, print_tree
from ..cparse.headers import HeaderInfo
from ..cparse.lexer import join_tokens
from ..cparse.parser import ASSIGN_OPS, GROUPED_SPEC, STORAGE
from ..cparse.symbols import (
    Resolver, SymbolInfo, UnknownSymbol, declared_inside, enclosing_function,
    find_for_nests, outer_reference_nodes, parent_map, ancestors,
)
from . import omp
from .model import ExtractedFunctionSig, ExtractionFault, LoopNest, Param

NEST_BEGIN = "/* mc:nest-begin */"
NEST_END = "/* mc:nest-end */"

_FUNC_NAMES = frozenset({"__func__", "__FUNCTION__", "__PRETTY_FUNCTION__"})
_DEFINE = re.compile(r"#\s*define\s+([A-Za-z_]\w*)(\(([^)]*)\))?(.*)", re.S)
_LOOP_CONSTRUCTS = frozenset({"for", "simd", "loop", "taskloop", "distribute"})
_SKIP_SPEC = frozenset({"inline", "__inline", "__inline__", "_Noreturn"})


class _UnitContext:
    """Per-unit lookups shared by all nests of a file."""

    def __init__(self, unit: AstNode, headers: HeaderInfo | None):
        self.unit = unit
        self.toks = unit.attrs["tokens"]
        self.starts = [t.start for t in self.toks]
        self.resolver = Resolver(unit, headers)
        self.identifiers = {t.text for t in self.toks if t.kind == "id"}
        self.macros: dict[str, list] = {}
        self.threadprivate: set[str] = set()
        for t in self.toks:
            if t.kind != "dir":
                continue
            if t.directive == "define":
                m = _DEFINE.match(re.sub(r"\\\r?\n", " ", t.text))
                if m:
                    params = [p.strip() for p in m.group(3).split(",")] if m.group(2) else []
                    self.macros.setdefault(m.group(1), []).append((t.start, params, m.group(4)))
            elif t.directive == "pragma" and "threadprivate" in omp.directive_words(t.text):
                args = re.search(r"threadprivate\s*\(([^)]*)\)", t.text)
                if args:
                    self.threadprivate.update(re.findall(r"[A-Za-z_]\w*", args.group(1)))

    def index_at(self, pos: int) -> int:
        return bisect.bisect_left(self.starts, pos)

    def macro_body(self, name: str, pos: int):
        defs = [d for d in self.macros.get(name, ()) if d[0] < pos]
        return defs[-1] if defs else None

    def if_depth(self, pos: int) -> int:
        depth = 0
        for t in self.toks[:self.index_at(pos)]:
            if t.kind == "dir":
                if t.directive in ("if", "ifdef", "ifndef"):
                    depth += 1
                elif t.directive == "endif":
                    depth -= 1
        return depth


def _context(unit: AstNode, headers: HeaderInfo | None = None) -> _UnitContext:
    ctx = unit.attrs.get("_mc_ctx")
    if ctx is None:
        ctx = unit.attrs["_mc_ctx"] = _UnitContext(unit, headers)
    return ctx


# -- nest discovery ------------------------------------------------------

def _attached_pragmas(root: AstNode, unit: AstNode) -> list[AstNode]:
    parent = parent_map(unit).get(id(root))
    if parent is None or parent.kind != "CompoundStmt":
        return []
    items = parent.children
    k = next(i for i, c in enumerate(items) if c is root)
    out = []
    while k > 0 and items[k - 1].kind == "PragmaDirective":
        k -= 1
        out.insert(0, items[k])
    return out


def _omp_regions(root: AstNode, unit: AstNode) -> list[tuple[str, AstNode]]:
    """(pragma text, governed statement) for omp constructs enclosing the nest."""
    out = []
    for anc, child in ancestors(root, unit):
        if anc.kind == "FunctionDef":
            break
        if anc.kind != "CompoundStmt" or child is root:
            continue
        items = anc.children
        k = next(i for i, c in enumerate(items) if c is child)
        while k > 0 and items[k - 1].kind == "PragmaDirective":
            k -= 1
            if omp.is_omp(items[k].text):
                out.append((items[k].text, child))
    return out


def sanitize_id(text: str) -> str:
    return re.sub(r"\W", "_", text)


def _unique(base: str, taken: set) -> str:
    name, n = base, 1
    while name in taken:
        n += 1
        name = f"{base}_{n}"
    taken.add(name)
    return name


def nest_symbols(nest: LoopNest, unit: AstNode, headers: HeaderInfo | None = None) -> list[SymbolInfo]:
    """Outside symbols of the nest, including names reached through file macros
    and omp clause expressions.  Raises UnknownSymbol like collect_symbols."""
    ctx = _context(unit, headers)
    root = nest.root
    res = ctx.resolver
    inside = declared_inside(root)
    out: dict[str, SymbolInfo] = {}
    pending: list[tuple[str, str, bool]] = []  # (name, role, must resolve)
    for name, (role, _nodes) in outer_reference_nodes(root).items():
        if name not in _FUNC_NAMES:
            pending.append((name, role, True))
    for p in nest.pragmas + [n for n in root.walk() if n.kind == "PragmaDirective"]:
        pending.extend((n, "ref", False) for n in omp.clause_expression_names(p.text))
    seen_macros = set()
    while pending:
        name, role, strict = pending.pop(0)
        if name in out or (not strict and name in inside):
            continue
        try:
            sym = res.resolve(name, root, role)
        except UnknownSymbol:
            if strict:
                raise
            continue
        if sym is not None:
            out[name] = sym
            continue
        body = ctx.macro_body(name, root.span.byte_start)
        if body is None or name in seen_macros:
            continue
        seen_macros.add(name)
        _, params, text = body
        for ident in re.findall(r"[A-Za-z_]\w*", re.sub(r'"(?:[^"\\]|\\.)*"', "", text)):
            if ident not in params and ident not in inside and ident != "__VA_ARGS__":
                pending.append((ident, "ref", False))
    return list(out.values())


def analyze_unit(unit: AstNode, stem: str, headers: HeaderInfo | None = None,
                 min_loop_lines: int = 1, taken: set | None = None) -> list[LoopNest]:
    """Find every outermost for-nest of ``unit`` and classify its eligibility."""
    taken = set() if taken is None else taken
    _context(unit, headers)
    nests = []
    for root, fn, ordinal in find_for_nests(unit):
        loop_id = _unique(sanitize_id(f"{stem}_{fn}_L{ordinal}"), taken)
        pragmas = _attached_pragmas(root, unit)
        omp_text = "\n".join(p.text for p in pragmas if omp.is_omp(p.text)) or None
        nest = LoopNest(loop_id, root.span, fn, root=root, pragmas=pragmas, ordinal=ordinal,
                        omp_pragma=omp_text, in_omp_region=bool(_omp_regions(root, unit)))
        try:
            nest.symbols = nest_symbols(nest, unit, headers)
        except UnknownSymbol as exc:
            nest.symbol_error = exc.name
        nest.eligible, nest.ineligibility_reasons = check_eligibility(nest, unit, min_loop_lines)
        nests.append(nest)
    return nests


# -- eligibility ---------------------------------------------------------

def check_eligibility(nest: LoopNest, unit: AstNode, min_loop_lines: int = 1) -> tuple[bool, list[str]]:
    reasons: list[str] = []

    def add(r: str) -> None:
        if r not in reasons:
            reasons.append(r)

    def visit(node: AstNode, in_switch: bool) -> None:
        k = node.kind
        if k == "ReturnStmt":
            add("has_return")
        elif k == "GotoStmt":
            add("has_goto")
        elif k == "LabelStmt":
            add("has_label")
        elif k == "Other":
            if node.attrs.get("opaque"):
                add("unsupported_construct")
            if node.attrs.get("directive"):
                add("has_directive")
            construct = node.attrs.get("construct")
            if construct == "switch":
                in_switch = True
            elif construct == "case" and not in_switch:
                add("has_case_label")
        for c in node.children:
            visit(c, in_switch)

    root = nest.root
    visit(root, False)
    if any(t.kind == "id" and t.text in _FUNC_NAMES for t in root.tokens()):
        add("uses_func_name")
    ctx = _context(unit)
    for sym in nest.symbols:
        if sym.category == "static_fn":
            add("uses_static_fn")
        elif sym.category == "static_var":
            add("uses_static_var")
        if sym.spec is not None and "register" in sym.spec.storage:
            add("register_var")
        if sym.category in ("typedef_name", "enum_constant") and sym.scope in ("block", "param"):
            add("local_type")
        if sym.name in ctx.threadprivate and sym.category not in ("function", "typedef_name"):
            add("threadprivate")
    if nest.symbol_error is not None:
        add("unknown_symbol")
    if ctx.if_depth(nest.region_start) > 0:
        add("conditional_context")
    if nest.span.line_end - nest.span.line_start + 1 < min_loop_lines:
        add("below_min_lines")
    if "extraction_fault" in nest.ineligibility_reasons:
        add("extraction_fault")
    return (not reasons, reasons)


# -- declaration text ----------------------------------------------------

def _spec_text(ctx: _UnitContext, spec, keep_anonymous_body: bool = False) -> str:
    toks = ctx.toks
    words = []
    i = spec.start
    while i < spec.end:
        t = toks[i]
        if spec.tag_body and i == spec.tag_body[0]:
            if spec.tag_name is None:
                if not keep_anonymous_body:
                    raise ExtractionFault("declaration uses an anonymous struct/union/enum type")
                words.extend(x.text for x in toks[i:spec.tag_body[1]])
            i = spec.tag_body[1]
            continue
        if t.text in GROUPED_SPEC and t.text not in ("typeof", "__typeof__", "__typeof"):
            i += 1
            if i < spec.end and toks[i].text == "(":
                depth = 0
                while i < spec.end:
                    depth += toks[i].text == "("
                    depth -= toks[i].text == ")"
                    i += 1
                    if depth == 0:
                        break
            continue
        if t.text not in STORAGE and t.text not in _SKIP_SPEC:
            words.append(t.text)
        i += 1
    return join_tokens(words)


def _declarator_text(ctx: _UnitContext, d, replace: dict[str, str], name_text: str,
                     adjust_param: bool = False) -> str:
    """Declarator tokens with the declared name replaced and bracketed identifiers rewritten."""
    out = []
    depth = 0
    for tok in ctx.resolver.derived_tokens(d, adjust_param):
        if tok == "\0":
            out.append(name_text)
            continue
        if tok == "[":
            depth += 1
        elif tok == "]":
            depth -= 1
        elif depth and tok in replace:
            tok = replace[tok]
        out.append(tok)
    return join_tokens(out)


def _bracket_names(ctx: _UnitContext, d, adjust_param: bool) -> list[str]:
    names, depth = [], 0
    for tok in ctx.resolver.derived_tokens(d, adjust_param):
        if tok == "[":
            depth += 1
        elif tok == "]":
            depth -= 1
        elif depth and re.fullmatch(r"[A-Za-z_]\w*", tok) and tok not in names:
            names.append(tok)
    return names


def _item_text(ctx: _UnitContext, first: int, last: int) -> str:
    toks = ctx.toks
    return toks[first].text + "".join(t.lead + t.text for t in toks[first + 1:last])


def _type_part(ctx: _UnitContext, item: AstNode) -> str | None:
    """The part of a file-scope declaration that introduces types, if any."""
    spec = item.attrs.get("spec")
    if spec is None or spec.is_typedef:
        return item.text
    if not item.attrs["declarators"]:
        return item.text if (spec.tag_body or spec.tag_name) else None
    if spec.tag_body and (spec.tag_name or spec.tag_kind == "enum"):
        kw = next(i for i in range(spec.start, spec.tag_body[0]) if ctx.toks[i].text == spec.tag_kind)
        return _item_text(ctx, kw, spec.tag_body[1]) + ";"
    return None


def _plain_tokens(ctx: _UnitContext, start: int, end: int) -> list[str]:
    """Token texts in [start, end) with attribute groups removed."""
    out = []
    i = start
    while i < end:
        t = ctx.toks[i]
        if t.text in GROUPED_SPEC and t.text not in ("typeof", "__typeof__", "__typeof"):
            i += 1
            depth = 0
            while i < end and (depth or ctx.toks[i].text == "("):
                depth += ctx.toks[i].text == "("
                depth -= ctx.toks[i].text == ")"
                i += 1
            continue
        out.append(t.text)
        i += 1
    return out


def _extern_decl(ctx: _UnitContext, spec, d) -> str:
    if d.is_function and d.kr_names is not None:
        head = join_tokens(_plain_tokens(ctx, d.start, d.name_index + 1))
        return f"extern {_spec_text(ctx, spec)} {head}();"
    decl = join_tokens(_plain_tokens(ctx, d.start, d.end))
    return f"extern {_spec_text(ctx, spec, keep_anonymous_body=True)} {decl};"


# -- extraction ----------------------------------------------------------

def _written_names(root: AstNode) -> set[str]:
    toks = list(root.tokens())
    out = set()
    for i, t in enumerate(toks):
        if t.kind != "id":
            continue
        nxt = toks[i + 1].text if i + 1 < len(toks) else ""
        prv = toks[i - 1].text if i else ""
        if nxt in ASSIGN_OPS or nxt in ("++", "--") or prv in ("++", "--"):
            out.add(t.text)
    return out


def _address_taken(fn: AstNode) -> set[str]:
    toks = list(fn.tokens())
    return {toks[i + 1].text for i, t in enumerate(toks[:-1])
            if t.kind == "op" and t.text == "&" and toks[i + 1].kind == "id"}


def _control_vars(root: AstNode, count: int) -> set[str]:
    out = set()
    node = root
    for _ in range(max(count, 1)):
        if node is None or node.kind != "ForStmt":
            break
        init = node.slot("init")
        if init.kind != "Declaration":
            ident = next((n for n in init.walk() if n.kind == "Identifier"), None)
            if ident is not None:
                out.add(ident.attrs["name"])
        body = node.slot("body")
        while body.kind == "CompoundStmt" and len(body.children) == 1:
            body = body.children[0]
        node = body
    return out


def _check_local_types(ctx: _UnitContext, sym: SymbolInfo, root: AstNode, fn: AstNode) -> None:
    spec = sym.spec
    if spec.tag_body and sym.scope != "file":
        raise ExtractionFault(f"{sym.name} has a block-scope struct/union/enum type")
    if spec.tag_name:
        for n in fn.walk():
            s = n.attrs.get("spec") if n.kind == "Declaration" else None
            if s is not None and s.tag_body and s.tag_name == spec.tag_name:
                raise ExtractionFault(f"type of {sym.name} is declared inside {fn.attrs['name']}")
    for tname in spec.type_names:
        if ctx.resolver._block_lookup(tname, root) is not None:
            raise ExtractionFault(f"type of {sym.name} uses block-scope typedef {tname}")


def _fresh(base: str, ctx: _UnitContext, used: set) -> str:
    name = base
    while name in ctx.identifiers or name in used:
        name += "_"
    used.add(name)
    return name


def extract_loop(nest: LoopNest, unit: AstNode, headers: HeaderInfo | None = None,
                 origin: str | None = None) -> tuple[str, ExtractedFunctionSig]:
    """Generate the clean loop file for an eligible nest."""
    if not nest.eligible:
        raise ExtractionFault(f"{nest.loop_id} is not eligible: {', '.join(nest.ineligibility_reasons)}")
    ctx = _context(unit, headers)
    root = nest.root
    fn = enclosing_function(root, unit)
    written = _written_names(root)
    addr = _address_taken(fn)
    regions = _omp_regions(root, unit)
    region_private = set()
    for text, _ in regions:
        region_private |= omp.data_clause_names(text)
    attached_words = [w for p in nest.pragmas for w in omp.directive_words(p.text)]
    control = set()
    if _LOOP_CONSTRUCTS & set(attached_words):
        collapse = re.search(r"collapse\s*\(\s*(\d+)", nest.omp_pragma or "")
        control = _control_vars(root, int(collapse.group(1)) if collapse else 1)

    def localizable(sym: SymbolInfo) -> bool:
        if not sym.is_primitive or sym.category not in ("local", "parameter") or sym.name in addr:
            return False
        if not regions:
            return True
        if sym.name not in written or sym.name in region_private or sym.name in control:
            return True
        return sym.node is not None and any(stmt.span.contains(sym.node.span) for _, stmt in regions)

    param_syms: list[SymbolInfo] = []
    extern_globals: dict[str, SymbolInfo] = {}
    needed_functions: set[str] = set()
    for sym in nest.symbols:
        cat = sym.category
        if cat in ("local", "parameter"):
            param_syms.append(sym)
        elif cat == "global_var" and sym.origin == "file":
            # written globals defined elsewhere travel by reference; the rest use extern
            if sym.name in written and "extern" in sym.spec.storage:
                param_syms.append(sym)
            else:
                extern_globals[sym.name] = sym
        elif cat == "function" and sym.origin == "file":
            needed_functions.add(sym.name)
        elif cat in ("typedef_name", "enum_constant") and sym.scope in ("block", "param"):
            raise ExtractionFault(f"{sym.name} is declared at block scope")

    # array extents of by-reference parameters may name other locals
    by_name = {s.name: s for s in param_syms}
    size_deps: list[SymbolInfo] = []
    for sym in list(param_syms):
        if sym.decl is None:
            continue
        for dep in _bracket_names(ctx, sym.decl, sym.category == "parameter"):
            if dep in by_name or ctx.resolver.is_macro(dep, sym.node.span.byte_start):
                continue
            try:
                dsym = ctx.resolver.resolve(dep, root)
            except UnknownSymbol as exc:
                raise ExtractionFault(f"array extent {dep} of {sym.name} is not visible") from exc
            if dsym is None:
                continue
            if dsym.category in ("local", "parameter"):
                by_name[dep] = dsym
                size_deps.append(dsym)
            elif dsym.category == "global_var" and dsym.origin == "file":
                extern_globals.setdefault(dep, dsym)
            elif dsym.category in ("static_var", "static_fn"):
                raise ExtractionFault(f"array extent of {sym.name} uses static {dep}")

    for sym in param_syms + size_deps:
        _check_local_types(ctx, sym, root, fn)

    prims = [s for s in param_syms if s.is_primitive] + size_deps
    others = [s for s in param_syms if not s.is_primitive]
    ordered = prims + others
    used: set = set()
    c_names = {s.name: _fresh(f"{s.name}_ref", ctx, used) for s in ordered}
    replace = {name: f"(*{c})" for name, c in c_names.items()}
    localized = [s.name for s in ordered if localizable(s)]
    indirect = [s.name for s in ordered if s.name not in localized]

    params = []
    for s in ordered:
        adjust = s.category == "parameter"
        decl = f"{_spec_text(ctx, s.spec)} {_declarator_text(ctx, s.decl, replace, f'(*{c_names[s.name]})', adjust)}"
        plain = _declarator_text(ctx, s.decl, {}, "(*)", adjust)
        if plain.endswith("(*)") and "(" not in plain[:-3] and "[" not in plain:
            plain = plain[:-3] + "*"
        params.append(Param(s.name, f"{_spec_text(ctx, s.spec)} {plain}", True, c_names[s.name], decl))

    _check_name_reuse(root, indirect)
    sig = ExtractedFunctionSig(f"mc_loop_{nest.loop_id}", params, localized, indirect)

    present = {s.name for s in nest.symbols}
    indirect_set = set(indirect)
    try:
        pragma_lines = [omp.sanitize(p.text, present, indirect_set) for p in nest.pragmas]
        inner_present = present | declared_inside(root)
        nest_text = _nest_text(root, lambda t: omp.sanitize(t, inner_present, indirect_set))
    except omp.ClauseConflict as exc:
        raise ExtractionFault(str(exc)) from exc

    body = []
    for s in ordered:
        if s.name in localized:
            local = _declarator_text(ctx, s.decl, {}, s.name, s.category == "parameter")
            body.append(f"    {_spec_text(ctx, s.spec)} {local} = *{c_names[s.name]};")
    for name in indirect:
        body.append(f"#define {name} (*{c_names[name]})")
    body.append(f"    {NEST_BEGIN}")
    body.extend(pragma_lines)
    body.append(_indent_of(root) + nest_text)
    body.append(f"    {NEST_END}")
    for name in reversed(indirect):
        body.append(f"#undef {name}")
    for s in ordered:
        if s.name in localized and s.name in written and not (regions and s.name in control):
            body.append(f"    *{c_names[s.name]} = {s.name};")

    where = f"{origin}:{nest.span.line_start}" if origin else f"line {nest.span.line_start}"
    lines = [f"/* loop {nest.loop_id} outlined from {where} */"]
    lines.extend(_prefix(ctx, fn, nest, extern_globals, needed_functions))
    lines.append("")
    lines.append(sig.prototype)
    lines.append("{")
    lines.extend(body)
    lines.append("}")
    return "\n".join(lines) + "\n", sig


def _indent_of(root: AstNode) -> str:
    first = next(root.tokens())
    lead = first.lead.rsplit("\n", 1)[-1]
    return lead if lead.strip() == "" else ""


def _nest_text(root: AstNode, fix_pragma) -> str:
    toks = list(root.tokens())
    parts = []
    for i, t in enumerate(toks):
        text = t.text
        if t.kind == "dir" and t.directive == "pragma":
            text = fix_pragma(text)
        parts.append(text if i == 0 else t.lead + text)
    return "".join(parts)


def _check_name_reuse(root: AstNode, names: list[str]) -> None:
    """A name accessed through a macro must not appear as a member, label or tag in the nest."""
    refs = outer_reference_nodes(root)
    for name in names:
        ok_tokens = {id(tok) for node in refs.get(name, ("", []))[1] for tok in node.tokens()}
        for tok in root.tokens():
            if tok.kind == "id" and tok.text == name and id(tok) not in ok_tokens:
                raise ExtractionFault(f"{name} is reused inside the nest with another meaning")


def _prefix(ctx: _UnitContext, fn: AstNode, nest: LoopNest, extern_globals: dict,
            needed_functions: set) -> list[str]:
    """File-scope context for the loop file, in original order."""
    out: list[str] = []
    emitted_fns: set[str] = set()
    for item in ctx.unit.children:
        if item is fn:
            break
        if item.kind == "PragmaDirective":
            if re.match(r"#\s*pragma\s+pack\b", item.text):
                out.append(item.text)
        elif item.kind == "Other" and item.attrs.get("directive"):
            out.append(item.text)
        elif item.kind == "Declaration":
            part = _type_part(ctx, item)
            if part is not None:
                out.append(part)
            spec = item.attrs.get("spec")
            for d in item.attrs.get("declarators", []):
                if spec is None or spec.is_typedef or not d.name:
                    continue
                if d.is_function and d.name in needed_functions:
                    out.append(_extern_decl(ctx, spec, d))
                    emitted_fns.add(d.name)
                elif not d.is_function and d.name in extern_globals:
                    out.append(_extern_decl(ctx, spec, d))
        elif item.kind == "FunctionDef":
            name = item.attrs["name"]
            if name in needed_functions:
                out.append(_extern_decl(ctx, item.attrs["spec"], item.attrs["declarator"]))
                emitted_fns.add(name)
            out.extend(_inner_directives(ctx, item.span.byte_start, item.span.byte_end))
    out.extend(_inner_directives(ctx, fn.span.byte_start, nest.region_start))
    # functions only declared after the enclosing one
    for item in ctx.unit.children:
        if item.span.byte_start < fn.span.byte_start:
            continue
        if item.kind == "FunctionDef" and item.attrs["name"] in needed_functions - emitted_fns:
            out.append(_extern_decl(ctx, item.attrs["spec"], item.attrs["declarator"]))
            emitted_fns.add(item.attrs["name"])
        elif item.kind == "Declaration" and item.attrs.get("spec") is not None:
            for d in item.attrs["declarators"]:
                if d.is_function and d.name in needed_functions - emitted_fns:
                    out.append(_extern_decl(ctx, item.attrs["spec"], d))
                    emitted_fns.add(d.name)
    return out


def _inner_directives(ctx: _UnitContext, start: int, end: int) -> list[str]:
    return [t.text for t in ctx.toks[ctx.index_at(start):ctx.index_at(end)]
            if t.kind == "dir" and t.directive != "pragma"]


# -- base rewrite --------------------------------------------------------

def rewrite_base(unit: AstNode, nests: list[LoopNest], sigs: list[ExtractedFunctionSig]) -> str:
    """Replace each eligible nest by a call to its outlined function."""
    eligible = [n for n in nests if n.eligible]
    if len(eligible) != len(sigs):
        raise ValueError(f"{len(sigs)} signatures for {len(eligible)} eligible nests")
    src = print_tree(unit)
    edits: list[tuple[int, int, str]] = []
    protos: dict[int, list[str]] = {}
    for nest, sig in zip(eligible, sigs):
        edits.append((nest.region_start, nest.span.byte_end, sig.call))
        fn = enclosing_function(nest.root, unit)
        protos.setdefault(fn.span.byte_start, []).append(f"extern {sig.prototype};\n")
    for pos, lines in protos.items():
        edits.append((pos, pos, "".join(lines)))
    for start, end, text in sorted(edits, key=lambda e: (e[0], e[1]), reverse=True):
        src = src[:start] + text + src[end:]
    return src


def extern_prototypes(sigs: list[ExtractedFunctionSig]) -> list[str]:
    return [f"extern {s.prototype};" for s in sigs]
