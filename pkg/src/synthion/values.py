"""Runtime values and models (finite variable assignments)."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

from .lang import nodes as N


class Value:
    pass


@dataclass(frozen=True)
class IntVal(Value):
    value: int


@dataclass(frozen=True)
class BoolVal(Value):
    value: bool


@dataclass(frozen=True)
class SetVal(Value):
    elements: tuple[int, ...]  # strictly sorted, duplicate-free

    def __post_init__(self):
        assert all(a < b for a, b in zip(self.elements, self.elements[1:]))


def mk_set(xs) -> SetVal:
    return SetVal(tuple(sorted(set(xs))))


@dataclass(frozen=True)
class AdtVal(Value):
    ctor: str
    fields: tuple[Value, ...]


@dataclass(frozen=True)
class TupleVal(Value):
    elements: tuple[Value, ...]


Model = dict[str, Value]


def value_type(v: Value, program) -> N.TypeExpr:
    if isinstance(v, IntVal):
        return N.INT
    if isinstance(v, BoolVal):
        return N.BOOL
    if isinstance(v, SetVal):
        return N.SETINT
    if isinstance(v, AdtVal):
        adt, _ = program.ctor_owner(v.ctor)
        return N.AdtType(adt.name)
    if isinstance(v, TupleVal):
        return N.TupleType(tuple(value_type(x, program) for x in v.elements))
    raise TypeError(v)


def value_to_expr(v: Value) -> N.Expr:
    """Literal expression denoting the value."""
    if isinstance(v, IntVal):
        return N.IntLit(v.value)
    if isinstance(v, BoolVal):
        return N.BoolLit(v.value)
    if isinstance(v, SetVal):
        return N.SetLit([N.IntLit(x) for x in v.elements])
    if isinstance(v, AdtVal):
        return N.CtorApp(v.ctor, [value_to_expr(x) for x in v.fields])
    if isinstance(v, TupleVal):
        return N.TupleCtor([value_to_expr(x) for x in v.elements])
    raise TypeError(v)


def value_size(v: Value) -> int:
    """Constructor count plus integer magnitude ranks; the enumeration measure."""
    if isinstance(v, IntVal):
        return int_rank(v.value)
    if isinstance(v, BoolVal):
        return 1 if v.value else 0
    if isinstance(v, SetVal):
        return len(v.elements) + sum(int_rank(x) for x in v.elements)
    if isinstance(v, AdtVal):
        return 1 + sum(value_size(x) for x in v.fields)
    if isinstance(v, TupleVal):
        return sum(value_size(x) for x in v.elements)
    raise TypeError(v)


def int_rank(n: int) -> int:
    """Position of n in the schedule 0, 1, -1, 2, -2, ..."""
    if n == 0:
        return 0
    return 2 * n - 1 if n > 0 else -2 * n


def int_of_rank(r: int) -> int:
    if r == 0:
        return 0
    return (r + 1) // 2 if r % 2 == 1 else -(r // 2)


def format_value(v: Value) -> str:
    if isinstance(v, IntVal):
        return str(v.value)
    if isinstance(v, BoolVal):
        return "true" if v.value else "false"
    if isinstance(v, SetVal):
        return "Set(" + ", ".join(str(x) for x in v.elements) + ")"
    if isinstance(v, AdtVal):
        return v.ctor + "(" + ", ".join(format_value(x) for x in v.fields) + ")"
    if isinstance(v, TupleVal):
        return "(" + ", ".join(format_value(x) for x in v.elements) + ")"
    raise TypeError(v)
