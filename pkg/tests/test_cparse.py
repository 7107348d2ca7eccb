from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from harness import CORPUS, corpus_programs
from metacc.cparse import ParseError, parse_unit, print_tree, structurally_equal, tokenize
from metacc.cparse.symbols import UnknownSymbol, collect_symbols, find_for_nests


def kinds(node):
    return [n.kind for n in node.walk()]


def test_minimal_function_with_for():
    unit = parse_unit("int main(){for(int i=0;i<4;i++) s+=i; return 0;}", "t.c")
    fns = [n for n in unit.children if n.kind == "FunctionDef"]
    assert len(fns) == 1
    assert kinds(fns[0]).count("ForStmt") == 1


def test_for_has_four_slots():
    unit = parse_unit("void f(void){ for(;;) ; }", "t.c")
    loop = next(n for n in unit.walk() if n.kind == "ForStmt")
    assert [loop.slot(s).kind for s in ("init", "cond", "step")]
    assert len(loop.children) == 4


def test_goto_and_label_nodes():
    unit = parse_unit("int f(){goto L; L: return 1;}", "t.c")
    ks = kinds(unit)
    assert "GotoStmt" in ks and "LabelStmt" in ks and "ReturnStmt" in ks


def test_unbalanced_file_scope_braces():
    with pytest.raises(ParseError):
        parse_unit("int f() { int x; ", "t.c")


def test_unparseable_body_degrades_to_other():
    unit = parse_unit("int f(){ for(i=0;i<3;i++) { @@@ } return 0; }\nint g(){return 1;}", "t.c")
    assert any(n.kind == "FunctionDef" and n.attrs.get("name") == "g" for n in unit.children)


@pytest.mark.parametrize("src", corpus_programs(), ids=lambda p: p.name)
def test_corpus_round_trip(src):
    text = src.read_text()
    unit = parse_unit(text, src.name)
    printed = print_tree(unit)
    assert [t.text for t in tokenize(printed)] == [t.text for t in tokenize(text)]
    assert structurally_equal(parse_unit(printed, src.name), unit)


@pytest.mark.parametrize("src", corpus_programs(), ids=lambda p: p.name)
def test_span_containment(src):
    unit = parse_unit(src.read_text(), src.name)
    for node in unit.walk():
        assert node.span.byte_start <= node.span.byte_end
        assert node.span.line_start <= node.span.line_end
        for c in node.children:
            assert node.span.contains(c.span)
    roots = find_for_nests(unit)
    for (a, _, i), (b, _, j) in zip(roots, roots[1:]):
        assert i < j and a.span.byte_end <= b.span.byte_start


def test_nesting_collapses_to_root():
    unit = parse_unit("void f(int n, double *a){ int i,j,k;"
                      " for(i=0;i<n;i++) for(j=0;j<n;j++) for(k=0;k<n;k++) a[i]+=1; }", "t.c")
    assert len(find_for_nests(unit)) == 1


def test_sibling_loops_ordinals():
    unit = parse_unit("int main(){ int i, s=0; for(i=0;i<3;i++) s++; for(i=0;i<3;i++) s--; return s; }", "t.c")
    assert [(fn, k) for _, fn, k in find_for_nests(unit)] == [("main", 0), ("main", 1)]


def test_for_inside_while_is_a_root():
    unit = parse_unit("void f(int n){ int i; while(n--) { for(i=0;i<n;i++) ; } }", "t.c")
    assert len(find_for_nests(unit)) == 1


def test_lu_fixture_nests():
    unit = parse_unit((CORPUS / "lu.c").read_text(), "lu.c")
    assert [fn for _, fn, _ in find_for_nests(unit)] == ["fill", "fill", "lu", "lu"]


def _symbols(src, ordinal=0, headers=None):
    unit = parse_unit(src, "t.c")
    root = find_for_nests(unit)[ordinal][0]
    return {s.name: s for s in collect_symbols(root, unit, headers)}


def test_symbols_exclude_loop_locals():
    syms = _symbols("void f(int n, double *A){ for(int i=0;i<n;i++) A[i]=0; }")
    assert set(syms) == {"n", "A"}
    assert syms["A"].category == "parameter" and syms["A"].is_primitive


def test_header_function_symbol():
    from metacc.cparse.headers import HeaderInfo
    info = HeaderInfo()
    info.functions.add("sqrt")
    syms = _symbols("void f(int n, double *A){ int i; for(i=0;i<n;i++) A[i]=sqrt(A[i]); }", headers=info)
    assert syms["sqrt"].category == "function"


def test_static_var_symbol():
    syms = _symbols("static double tmp[8];\nvoid f(void){ int i; for(i=0;i<8;i++) tmp[i]=i; }")
    assert syms["tmp"].category == "static_var"


def test_unknown_symbol():
    with pytest.raises(UnknownSymbol):
        _symbols("void f(void){ int i; for(i=0;i<8;i++) nowhere[i]=i; }")


def test_struct_type_is_not_primitive():
    syms = _symbols("struct p { int x; };\nvoid f(struct p *q, int n){ int i; for(i=0;i<n;i++) q[i].x=i; }")
    assert not syms["q"].is_primitive
    assert syms["n"].is_primitive


# generated programs: printing reproduces the input exactly and re-parses to the same tree

_names = st.sampled_from(["a", "b", "n", "x", "s"])


@st.composite
def statements(draw, depth=0):
    kind = draw(st.sampled_from(["assign", "for", "if", "block"] if depth < 3 else ["assign"]))
    v = draw(_names)
    if kind == "assign":
        return f"{v} = {v} + {draw(st.integers(0, 9))};"
    if kind == "for":
        body = draw(statements(depth + 1))
        return f"for (i{depth} = 0; i{depth} < {draw(st.integers(1, 5))}; i{depth}++) {body}"
    if kind == "if":
        return f"if ({v} > {draw(st.integers(0, 9))}) {draw(statements(depth + 1))}"
    inner = " ".join(draw(st.lists(statements(depth + 1), max_size=3)))
    return "{ " + inner + " }"


@settings(max_examples=60, deadline=None)
@given(st.lists(statements(), min_size=1, max_size=4))
def test_generated_round_trip(stmts):
    src = ("int a, b, n, x, s;\nvoid f(void)\n{\n    int i0, i1, i2;\n    "
           + "\n    ".join(stmts) + "\n}\n")
    unit = parse_unit(src, "g.c")
    assert print_tree(unit) == src
    assert structurally_equal(parse_unit(print_tree(unit), "g.c"), unit)
    starts = [r.span.byte_start for r, _, _ in find_for_nests(unit)]
    assert starts == sorted(starts)
