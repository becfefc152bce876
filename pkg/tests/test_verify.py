"""VC generation, termination checking, verification reports."""

from __future__ import annotations

from synthion.interp import ContractViolation, eval_call
from synthion.lang import nodes as N
from synthion.solver import Budget
from synthion.values import AdtVal, IntVal
from synthion.verify import (Terminating, TerminationUnknown, check_termination,
                             generate_vcs, terminating_functions, verify_function)
from helpers import LIST_DEFS, UNARY_SRC, load, load_with


def test_value_vcs_shape():
    tp = load(UNARY_SRC)
    vcs = generate_vcs(tp, "value")
    kinds = [vc.kind for vc in vcs]
    assert kinds[0] == "termination"
    assert kinds.count("postcondition") == 1
    assert kinds.count("match-exhaustiveness") == 1


def test_call_precondition_vc_emitted():
    tp = load_with("""
def insertSorted(lst: List, v: Int): List = {
  require(isSorted(lst))
  lst match {
    case Nil() => Cons(v, Nil())
    case Cons(h, t) => Cons(h, insertSorted(t, v))
  }
}
""")
    vcs = generate_vcs(tp, "insertSorted")
    assert any(vc.kind == "call-precondition" and "insertSorted" in vc.note
               for vc in vcs)


def test_termination_structural_descent():
    tp = load(LIST_DEFS)
    assert isinstance(check_termination(tp, "size"), Terminating)
    assert isinstance(check_termination(tp, "isSorted"), Terminating)


def test_termination_loop_unknown():
    tp = load_with("def loop(n: List): List = { loop(n) }")
    assert isinstance(check_termination(tp, "loop"), TerminationUnknown)


def test_termination_accumulator_style():
    tp = load(UNARY_SRC + """
def addImpl(x: Num, y: Num): Num = {
  x match { case Z() => y case S(p) => addImpl(p, S(y)) }
}
""")
    r = check_termination(tp, "addImpl")
    assert isinstance(r, Terminating)
    assert r.position == 0


def test_terminating_set_excludes_holes_and_loops():
    tp = load(UNARY_SRC + """
def spin(x: Num): Num = { spin(x) }
""")
    ts = terminating_functions(tp)
    assert "value" in ts
    assert "spin" not in ts
    assert "add" not in ts  # choose-bodied


def test_verify_value_all_valid_quickly():
    tp = load(UNARY_SRC)
    report = verify_function(tp, "value", Budget(time_limit=3.0))
    assert report.all_valid
    assert sum(o.seconds for o in report.outcomes) < 3.0


def test_verify_exhaustive_match_valid():
    tp = load(UNARY_SRC + """
def toInt(n: Num): Int = {
  n match { case Z() => 0 case S(p) => 1 + toInt(p) }
}
""")
    report = verify_function(tp, "toInt", Budget(time_limit=3.0))
    by_kind = {o.vc.kind: o for o in report.outcomes}
    assert by_kind["match-exhaustiveness"].status == "valid"


def test_verify_nonexhaustive_match_invalid():
    tp = load(LIST_DEFS + """
def headOf(l: List): Int = {
  l match { case Cons(h, t) => h }
}
""")
    report = verify_function(tp, "headOf", Budget(time_limit=3.0))
    by_kind = {o.vc.kind: o for o in report.outcomes}
    assert by_kind["match-exhaustiveness"].status == "invalid"
    cex = by_kind["match-exhaustiveness"].counterexample
    assert cex["l"] == AdtVal("Nil", ())


def test_delete_returning_input_is_refuted_and_confirmed():
    tp = load(LIST_DEFS + """
def badDelete(in1: List, v: Int): List = {
  in1
  ensuring (out => content(out) == content(in1) -- Set(v))
}
""")
    report = verify_function(tp, "badDelete", Budget(time_limit=5.0))
    post = [o for o in report.outcomes if o.vc.kind == "postcondition"][0]
    assert post.status == "invalid"
    cex = post.counterexample
    # the evaluator confirms the violation under contract checking
    out = eval_call(tp, "badDelete", [cex["in1"], cex["v"]], check_contracts=True)
    assert isinstance(out, ContractViolation)
    # smallest witness has v inside the list
    flat = []
    node = cex["in1"]
    while node.ctor == "Cons":
        flat.append(node.fields[0])
        node = node.fields[1]
    assert cex["v"] in flat


def test_bad_precondition_call_detected():
    tp = load_with("""
def needsSorted(l: List): Int = {
  require(isSorted(l))
  size(l)
}
def caller(l: List): Int = { needsSorted(l) }
""")
    report = verify_function(tp, "caller", Budget(time_limit=5.0))
    pre = [o for o in report.outcomes if o.vc.kind == "call-precondition"][0]
    assert pre.status == "invalid"
