"""Parser, type checker, printer, and substitution."""

from __future__ import annotations

import pytest
from hypothesis import given, settings, strategies as st

from synthion.lang import nodes as N
from synthion.lang import parse, print_program, typecheck
from synthion.lang.printer import print_expr
from helpers import LIST_DEFS, UNARY_SRC, load


def test_adt_parse_shape():
    prog, diags = parse("type Num = Z() | S(pred: Num)")
    assert diags == []
    adt = prog.adts[0]
    assert adt.name == "Num"
    assert [(c.name, c.arity) for c in adt.constructors] == [("Z", 0), ("S", 1)]


def test_parse_error_reports_position():
    prog, diags = parse("def f(): Int = { }")
    assert prog is None
    assert len(diags) == 1
    assert "expected expression" in diags[0].message
    assert diags[0].line == 1


def test_unknown_character_diagnostic():
    prog, diags = parse("type A = B() $")
    assert prog is None
    assert any("unexpected character" in d.message for d in diags)


def test_list_benchmark_parses_with_choose_sites():
    src = LIST_DEFS + """
def insert(in1: List, v: Int): List = {
  choose ((out: List) => content(out) == content(in1) ++ Set(v))
}
def delete(in1: List, v: Int): List = {
  choose ((out: List) => content(out) == content(in1) -- Set(v))
}
def union(in1: List, in2: List): List = {
  choose ((out: List) => content(out) == content(in1) ++ content(in2))
}
def diff(in1: List, in2: List): List = {
  choose ((out: List) => content(out) == content(in1) -- content(in2))
}
def split(list: List): (List, List) = {
  choose ((res: (List, List)) =>
    val s1 = size(res._1);
    val s2 = size(res._2);
    abs(s1 - s2) <= 1 && s1 + s2 == size(list) &&
    content(res._1) ++ content(res._2) == content(list))
}
"""
    tp = load(src)
    assert len(tp.program.adts) == 1
    assert len(tp.program.functions) == 9
    holes = [f for f in tp.program.functions if isinstance(f.body, N.Choose)]
    assert len(holes) == 5
    assert [s.site_id for s in tp.choose_sites] == [
        "insert/0", "delete/0", "union/0", "diff/0", "split/0"]


def test_typecheck_value_postcondition_types():
    tp = load(UNARY_SRC)
    value = tp.function("value")
    assert value.return_type == N.INT
    binder, post = value.postcondition
    assert post.ty == N.BOOL


def test_typecheck_split_out_params():
    tp = load(LIST_DEFS + """
def split(list: List): (List, List) = {
  choose ((res: (List, List)) => content(res._1) ++ content(res._2) == content(list))
}
""")
    site = tp.site("split/0")
    (name, ty), = site.choose.out_params
    assert ty == N.TupleType((N.AdtType("List"), N.AdtType("List")))


def test_type_mismatch_diagnostic():
    prog, _ = parse(LIST_DEFS + "\ndef f(): List = { Cons(true, Nil()) }")
    tp, diags = typecheck(prog)
    assert tp is None
    assert any("expected" in d.message.lower() or "found" in d.message.lower()
               for d in diags)


def test_unknown_identifier_diagnostic():
    prog, _ = parse("def f(x: Int): Int = { y }")
    tp, diags = typecheck(prog)
    assert tp is None
    assert "unknown identifier y" in diags[0].message


def test_arity_mismatch_diagnostic():
    prog, _ = parse(LIST_DEFS + "\ndef f(): List = { Cons(1) }")
    tp, diags = typecheck(prog)
    assert tp is None
    assert "arguments" in diags[0].message


def test_round_trip_benchmark_sources():
    for src in (UNARY_SRC, LIST_DEFS):
        prog, diags = parse(src)
        assert diags == []
        printed = print_program(prog)
        prog2, diags2 = parse(printed)
        assert diags2 == []
        assert print_program(prog2) == printed
        assert N.expr_key(prog.functions[0].body) == N.expr_key(prog2.functions[0].body)


def test_substitution_example_from_problem_one():
    # (x >= 0 && a + x <= 5)[x -> 0]
    prog, _ = parse("def f(a: Int, x: Int): Bool = { x >= 0 && a + x <= 5 }")
    body = prog.functions[0].body
    out = N.substitute(body, {"x": N.IntLit(0)})
    assert print_expr(out) == "0 <= 0 && a + 0 <= 5"


def test_substitution_identity():
    prog, _ = parse("def f(a: Int): Int = { a + 1 }")
    body = prog.functions[0].body
    assert N.substitute(body, {}) is body


def test_substitution_respects_shadowing():
    prog, _ = parse("def f(x: Int): Int = { val x = 1; x }")
    body = prog.functions[0].body
    out = N.substitute(body, {"x": N.IntLit(2)})
    assert N.expr_key(out) == N.expr_key(body)


def test_substitution_avoids_capture():
    # (val y = 1; x + y)[x -> y] must not capture the outer y
    e = N.Let("y", N.IntLit(1), N.BinOp("+", N.Var("x"), N.Var("y")))
    out = N.substitute(e, {"x": N.Var("y")})
    assert isinstance(out, N.Let)
    assert out.name != "y"
    assert N.free_vars(out) == {"y"}


# -- property tests ------------------------------------------------------------

_names = st.sampled_from(["a", "b", "c", "x", "y"])


def _exprs(depth: int = 3):
    base = st.one_of(
        _names.map(N.Var),
        st.integers(-5, 5).map(N.IntLit),
    )
    if depth == 0:
        return base
    sub = _exprs(depth - 1)
    return st.one_of(
        base,
        st.tuples(sub, sub).map(lambda t: N.BinOp("+", t[0], t[1])),
        st.tuples(_names, sub, sub).map(lambda t: N.Let(t[0], t[1], t[2])),
    )


@given(_exprs(), _names, st.integers(-3, 3))
@settings(max_examples=200, deadline=None)
def test_free_vars_after_substitution(e, x, k):
    out = N.substitute(e, {x: N.IntLit(k)})
    assert x not in N.free_vars(out) or x not in N.free_vars(e)
    assert N.free_vars(out) <= (N.free_vars(e) - {x}) | set()


@given(_exprs(), _names, _names, st.integers(-3, 3), st.integers(-3, 3))
@settings(max_examples=200, deadline=None)
def test_substitution_composes_on_disjoint_domains(e, x, y, kx, ky):
    if x == y:
        return
    m1 = {x: N.IntLit(kx)}
    m2 = {y: N.IntLit(ky)}
    lhs = N.substitute(N.substitute(e, m1), m2)
    rhs = N.substitute(e, {x: N.IntLit(kx), y: N.IntLit(ky)})
    assert N.expr_key(lhs) == N.expr_key(rhs)


@given(_exprs())
@settings(max_examples=200, deadline=None)
def test_print_parse_round_trip_exprs(e):
    src = f"def f(a: Int, b: Int, c: Int, x: Int, y: Int): Int = {{ {print_expr(e)} }}"
    prog, diags = parse(src)
    assert diags == []
    assert N.expr_key(prog.functions[0].body) == N.expr_key(e)
