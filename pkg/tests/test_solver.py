"""Solver verdicts: core fragment, unfolding, validation gate."""

from __future__ import annotations

import itertools
import random

import pytest

from synthion.interp import eval_predicate
from synthion.lang import nodes as N
from synthion.lang.nodes import BinOp, BoolLit, Call, CtorApp, IntLit, SetLit, UnOp, Var
from synthion.solver import (Budget, Invalid, Sat, Unknown, Unsat, Valid,
                             check_sat, check_valid, core_check)
from synthion.values import AdtVal, IntVal, format_value
from helpers import LIST_DEFS, UNARY_SRC, load, load_with

LIST = N.AdtType("List")
NUM = N.AdtType("Num")


def test_core_unsat_linear():
    tp = load(LIST_DEFS)
    f = BinOp("&&", BinOp("<=", IntLit(0), Var("x")),
              BinOp("<=", BinOp("+", IntLit(7), Var("x")), IntLit(5)))
    assert isinstance(core_check(tp, f, {"x": N.INT}), Unsat)


def test_core_ctor_distinctness():
    tp = load(LIST_DEFS)
    f = BinOp("==", CtorApp("Cons", [Var("h"), Var("t")]), CtorApp("Nil", []))
    assert isinstance(core_check(tp, f, {"h": N.INT, "t": LIST}), Unsat)


def test_core_rejects_calls():
    tp = load(LIST_DEFS)
    with pytest.raises(ValueError):
        core_check(tp, Call("size", [Var("l")]), {"l": LIST})


def test_empty_content_model_is_nil():
    tp = load(LIST_DEFS)
    f = BinOp("==", Call("content", [Var("x")]), SetLit([]))
    v = check_sat(tp, f, {"x": LIST}, Budget(time_limit=5))
    assert isinstance(v, Sat)
    assert v.model["x"] == AdtVal("Nil", ())


def test_value_postcondition_proved_fast():
    tp = load(UNARY_SRC)
    f = BinOp("<=", IntLit(0), Call("value", [Var("n")]))
    v = check_valid(tp, f, {"n": NUM}, Budget(time_limit=3))
    assert isinstance(v, Valid)


def test_sorted_two_element_witness():
    tp = load(LIST_DEFS)
    f = BinOp("&&", Call("isSorted", [Var("l")]),
              BinOp("==", Call("size", [Var("l")]), IntLit(2)))
    v = check_sat(tp, f, {"l": LIST}, Budget(time_limit=5))
    assert isinstance(v, Sat)
    l = v.model["l"]
    assert l.ctor == "Cons" and l.fields[1].ctor == "Cons"
    assert l.fields[0].value <= l.fields[1].fields[0].value


def test_reflexive_content_witness():
    tp = load(LIST_DEFS)
    f = BinOp("==", Call("content", [Var("x")]), Call("content", [Var("a")]))
    v = check_sat(tp, f, {"x": LIST, "a": LIST}, Budget(time_limit=5))
    assert isinstance(v, Sat)
    assert eval_predicate(tp, v.model, f) is True


def test_validity_reports_counterexample():
    tp = load(LIST_DEFS)
    # claim: every list is sorted — refuted
    f = Call("isSorted", [Var("l")])
    v = check_valid(tp, f, {"l": LIST}, Budget(time_limit=5))
    assert isinstance(v, Invalid)
    assert eval_predicate(tp, v.counterexample, f) is False


def test_true_is_valid():
    tp = load(LIST_DEFS)
    assert isinstance(check_valid(tp, BoolLit(True), {}, Budget(time_limit=2)), Valid)


def test_unknown_on_hard_nonlinear():
    tp = load("def dummy(): Int = { 0 }")
    x, y, z = Var("x"), Var("y"), Var("z")
    # x*x + y*y == z*z with side conditions beyond the refinement budget is
    # at worst Unknown, never a wrong verdict
    f = BinOp("&&",
              BinOp("==", BinOp("*", x, x), BinOp("*", y, z)),
              BinOp("&&", BinOp("<", IntLit(3), x), BinOp("<", x, IntLit(5))))
    v = check_sat(tp, f, {"x": N.INT, "y": N.INT, "z": N.INT},
                  Budget(time_limit=5, phase0_attempts=0))
    if isinstance(v, Sat):
        assert eval_predicate(tp, v.model, f) is True
    else:
        assert isinstance(v, (Unknown, Unsat))
        assert not isinstance(v, Unsat)


# -- randomized oracle agreement (scaled-down; the full run is acceptance) ----

def _random_formula(rng: random.Random, depth: int = 2) -> N.Expr:
    def atom():
        kind = rng.choice(["cmp", "cmp", "eqlist", "member"])
        if kind == "cmp":
            l = _int_term(rng)
            r = _int_term(rng)
            return BinOp(rng.choice(["<", "<=", "==", "!="]), l, r)
        if kind == "eqlist":
            return BinOp(rng.choice(["==", "!="]), _list_term(rng), _list_term(rng))
        return BinOp("in", _int_term(rng), SetLit([_int_term(rng)]))

    def go(d):
        if d == 0:
            return atom()
        op = rng.choice(["&&", "||", "not", "atom"])
        if op == "atom":
            return atom()
        if op == "not":
            return UnOp("not", go(d - 1))
        return BinOp(op, go(d - 1), go(d - 1))

    return go(depth)


def _int_term(rng):
    k = rng.choice(["lit", "var", "sum"])
    if k == "lit":
        return IntLit(rng.randint(-4, 4))
    if k == "var":
        return Var(rng.choice(["i", "j"]))
    return BinOp("+", Var(rng.choice(["i", "j"])), IntLit(rng.randint(-4, 4)))


def _list_term(rng, depth=2):
    if depth == 0 or rng.random() < 0.35:
        return Var("l") if rng.random() < 0.6 else CtorApp("Nil", [])
    return CtorApp("Cons", [_int_term(rng), _list_term(rng, depth - 1)])


def _all_lists(max_len, elems):
    for k in range(max_len + 1):
        for xs in itertools.product(elems, repeat=k):
            v = AdtVal("Nil", ())
            for x in reversed(xs):
                v = AdtVal("Cons", (IntVal(x), v))
            yield v


def test_core_agrees_with_brute_force_sample():
    tp = load(LIST_DEFS)
    rng = random.Random(42)
    env = {"l": LIST, "i": N.INT, "j": N.INT}
    lists = list(_all_lists(2, range(-2, 3)))
    ints = range(-3, 4)
    for _ in range(60):
        f = _random_formula(rng)
        verdict = core_check(tp, f, env)
        brute = None
        for l in lists:
            for i in ints:
                for j in ints:
                    m = {"l": l, "i": IntVal(i), "j": IntVal(j)}
                    if eval_predicate(tp, m, f) is True:
                        brute = m
                        break
                if brute:
                    break
            if brute:
                break
        if isinstance(verdict, Sat):
            assert eval_predicate(tp, verdict.model, f) is True
        elif isinstance(verdict, Unsat):
            assert brute is None, (f, brute)
        else:
            pytest.fail(f"unexpected Unknown for {f!r}: {verdict.reason}")
