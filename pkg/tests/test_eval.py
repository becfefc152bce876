"""Evaluator semantics, contracts, fuel."""

from __future__ import annotations

import pytest

from synthion.interp import (ContractViolation, FuelExhausted, MatchFailure,
                             eval_call, eval_expr, eval_predicate)
from synthion.lang import nodes as N
from synthion.values import AdtVal, BoolVal, IntVal, SetVal, mk_set
from helpers import LIST_DEFS, UNARY_SRC, load, load_with


def num(n: int) -> AdtVal:
    v = AdtVal("Z", ())
    for _ in range(n):
        v = AdtVal("S", (v,))
    return v


def lst(*xs: int) -> AdtVal:
    v = AdtVal("Nil", ())
    for x in reversed(xs):
        v = AdtVal("Cons", (IntVal(x), v))
    return v


def test_value_of_two():
    tp = load(UNARY_SRC)
    assert eval_call(tp, "value", [num(2)]) == IntVal(2)


def test_content_deduplicates():
    tp = load(LIST_DEFS)
    assert eval_call(tp, "content", [lst(1, 1)]) == mk_set([1])


def test_is_sorted_cases():
    tp = load(LIST_DEFS)
    assert eval_call(tp, "isSorted", [lst(1, 2)]) == BoolVal(True)
    assert eval_call(tp, "isSorted", [lst(2, 1)]) == BoolVal(False)


def test_fuel_exhaustion_is_an_outcome():
    tp = load_with("""
def spin(n: Int): Int = { spin(n + 1) }
""")
    out = eval_call(tp, "spin", [IntVal(0)], fuel=10_000)
    assert isinstance(out, FuelExhausted)


def test_match_failure_outcome():
    tp = load_with("""
def partial(l: List): Int = { l match { case Cons(h, t) => h } }
""")
    out = eval_call(tp, "partial", [lst()])
    assert isinstance(out, MatchFailure)


def test_predicate_true_under_any_env():
    tp = load(LIST_DEFS)
    assert eval_predicate(tp, {}, N.BoolLit(True)) is True


def test_contract_checking_require():
    tp = load_with("""
def takePos(x: Int): Int = {
  require(x >= 0)
  x
}
def caller(): Int = { takePos(0 - 5) }
""")
    ok = eval_call(tp, "caller", [], check_contracts=False)
    assert ok == IntVal(-5)
    bad = eval_call(tp, "caller", [], check_contracts=True)
    assert isinstance(bad, ContractViolation)
    assert bad.which == "require"
    assert bad.site == "takePos"


def test_contract_checking_ensuring():
    tp = load_with("""
def bogus(x: Int): Int = {
  x
  ensuring (res => res >= 0)
}
def caller(): Int = { bogus(0 - 3) }
""")
    bad = eval_call(tp, "caller", [], check_contracts=True)
    assert isinstance(bad, ContractViolation)
    assert bad.which == "ensuring"


def test_determinism_and_fuel_monotonicity():
    tp = load(LIST_DEFS)
    l = lst(3, 1, 2)
    results = set()
    for fuel in (200, 1000, 10_000):
        r = eval_call(tp, "size", [l], fuel=fuel)
        results.add(r)
    assert results == {IntVal(3)}


def test_guards_are_checked_under_pattern_bindings():
    tp = load(LIST_DEFS)
    # the guarded isSorted definition relies on guard order
    assert eval_call(tp, "isSorted", [lst(5, 5)]) == BoolVal(True)


def test_set_operators():
    tp = load_with("""
def ops(a: SetInt, b: SetInt): SetInt = { (a ++ b) -- (a & b) }
""")
    out = eval_call(tp, "ops", [mk_set([1, 2]), mk_set([2, 3])])
    assert out == mk_set([1, 3])


def test_tuple_select():
    tp = load_with("""
def pair(x: Int): (Int, Int) = { (x, x + 1) }
def second(x: Int): Int = { pair(x)._2 }
""")
    assert eval_call(tp, "second", [IntVal(4)]) == IntVal(5)
