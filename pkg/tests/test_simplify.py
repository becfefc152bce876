"""Readability rewrites preserve meaning."""

from __future__ import annotations

import itertools
import random

from synthion.interp import eval_expr
from synthion.lang import nodes as N
from synthion.lang.parser import Parser, tokenize, _resolve_ctors
from synthion.streams import model_stream
from synthion.synthesis import simplify
from synthion.values import IntVal, Value
from helpers import LIST_DEFS, load


def pexpr(tp, s: str) -> N.Expr:
    toks, d = tokenize(s)
    assert not d
    p = Parser(toks)
    e = p.expr()
    prog = N.Program(tp.program.adts, [N.FunDef("__t", [], N.INT, e)])
    _resolve_ctors(prog)
    return prog.functions[0].body


def test_if_true_reduces():
    tp = load(LIST_DEFS)
    e = N.If(N.BoolLit(True), N.Var("x"), N.Var("y"))
    assert N.expr_key(simplify(tp, e)) == N.expr_key(N.Var("x"))


def test_tuple_select_of_literal():
    tp = load(LIST_DEFS)
    e = N.TupleSel(N.TupleCtor([N.Var("a"), N.Var("b")]), 1)
    assert N.expr_key(simplify(tp, e)) == N.expr_key(N.Var("a"))


def test_reflexive_equality_of_calls():
    tp = load(LIST_DEFS)
    e = pexpr(tp, "content(r) == content(r)")
    assert N.expr_key(simplify(tp, e)) == N.expr_key(N.BoolLit(True))


def test_set_identities():
    tp = load(LIST_DEFS)
    assert N.expr_key(simplify(tp, pexpr(tp, "s ++ Set()"))) == N.expr_key(N.Var("s"))
    assert N.expr_key(simplify(tp, pexpr(tp, "Set() -- s"))) == N.expr_key(N.SetLit([]))


def test_constant_call_folding():
    tp = load(LIST_DEFS)
    e = pexpr(tp, "content(Nil())")
    assert N.expr_key(simplify(tp, e)) == N.expr_key(N.SetLit([]))
    e2 = pexpr(tp, "size(Cons(1, Cons(2, Nil())))")
    assert N.expr_key(simplify(tp, e2)) == N.expr_key(N.IntLit(2))


def test_match_of_known_constructor():
    tp = load(LIST_DEFS)
    e = pexpr(tp, "Cons(x, Nil()) match { case Nil() => 0 case Cons(h, t) => h }")
    assert N.expr_key(simplify(tp, e)) == N.expr_key(N.Var("x"))


def test_zero_times_pure():
    tp = load(LIST_DEFS)
    e = pexpr(tp, "0 * x")
    assert N.expr_key(simplify(tp, e)) == N.expr_key(N.IntLit(0))


def test_simplify_preserves_evaluation_randomized():
    tp = load(LIST_DEFS)
    rng = random.Random(3)
    LIST = N.AdtType("List")

    def rand_expr(depth=3):
        if depth == 0:
            return rng.choice([N.Var("a"), N.IntLit(rng.randint(-2, 2))])
        k = rng.randint(0, 5)
        if k == 0:
            return N.BinOp("+", rand_expr(depth - 1), rand_expr(depth - 1))
        if k == 1:
            return N.BinOp("*", N.IntLit(rng.choice([0, 1, rng.randint(-2, 2)])),
                           rand_expr(depth - 1))
        if k == 2:
            return N.If(N.BoolLit(rng.random() < 0.5),
                        rand_expr(depth - 1), rand_expr(depth - 1))
        if k == 3:
            return N.Let("tmp", rand_expr(depth - 1), N.Var("tmp"))
        if k == 4:
            return N.Call("size", [N.Var("l")])
        return N.TupleSel(N.TupleCtor([rand_expr(depth - 1), N.IntLit(1)]), 1)

    envs = list(itertools.islice(
        model_stream(tp, [("a", N.INT), ("l", LIST)]), 12))
    checked = 0
    for _ in range(400):
        e = rand_expr()
        s = simplify(tp, e)
        for m in envs:
            v1 = eval_expr(tp, m, e)
            v2 = eval_expr(tp, m, s)
            if isinstance(v1, Value):
                assert v1 == v2, (e, s, m)
                checked += 1
    assert checked > 1000
