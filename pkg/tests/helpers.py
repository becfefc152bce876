"""Shared fixtures: benchmark-flavoured programs used across the test suite."""

from __future__ import annotations

from synthion.lang import parse, typecheck
from synthion.lang.check import TypedProgram

UNARY_SRC = """
type Num = Z() | S(pred: Num)

def value(n: Num): Int = {
  n match { case Z() => 0 case S(p) => 1 + value(p) }
  ensuring (res => res >= 0)
}

def add(x: Num, y: Num): Num = {
  choose ((r: Num) => value(r) == value(x) + value(y))
}

def distinct(x: Num, y: Num): Num = {
  choose ((r: Num) => value(r) != value(x) && value(r) != value(y))
}

def mult(x: Num, y: Num): Num = {
  choose ((r: Num) => value(r) == value(x) * value(y))
}
"""

LIST_DEFS = """
type List = Nil() | Cons(head: Int, tail: List)

def size(l: List): Int = {
  l match { case Nil() => 0 case Cons(h, t) => 1 + size(t) }
  ensuring (res => res >= 0)
}

def content(l: List): SetInt = {
  l match { case Nil() => Set() case Cons(h, t) => Set(h) ++ content(t) }
}

def abs(i: Int): Int = {
  if (i < 0) -i else i
  ensuring (res => res >= 0)
}

def isSorted(list: List): Bool = {
  list match {
    case Nil() => true
    case Cons(x, Nil()) => true
    case Cons(x1, xs @ Cons(x2, rest)) if x1 > x2 => false
    case Cons(x, xs) => isSorted(xs)
  }
}
"""


def load(src: str) -> TypedProgram:
    prog, diags = parse(src)
    assert prog is not None, diags
    tp, tdiags = typecheck(prog)
    assert tp is not None, tdiags
    return tp


def load_with(extra: str, base: str = LIST_DEFS) -> TypedProgram:
    return load(base + "\n" + extra)
