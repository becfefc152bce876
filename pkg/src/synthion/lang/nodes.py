"""Abstract syntax for the mini functional language.

Expressions carry an optional resolved type filled in by the type checker;
structural equality ignores it.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, fields
from typing import Iterator, Optional


# ---------------------------------------------------------------------------
# Types
# ---------------------------------------------------------------------------

class TypeExpr:
    """Base class for types; instances are immutable and hashable."""

    def __repr__(self) -> str:
        from .printer import print_type
        return print_type(self)


@dataclass(frozen=True)
class IntType(TypeExpr):
    pass


@dataclass(frozen=True)
class BoolType(TypeExpr):
    pass


@dataclass(frozen=True)
class SetIntType(TypeExpr):
    pass


@dataclass(frozen=True)
class AdtType(TypeExpr):
    name: str


@dataclass(frozen=True)
class TupleType(TypeExpr):
    elements: tuple[TypeExpr, ...]

    def __post_init__(self) -> None:
        assert len(self.elements) >= 2, "tuple arity must be >= 2"


INT = IntType()
BOOL = BoolType()
SETINT = SetIntType()


# ---------------------------------------------------------------------------
# Declarations
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CtorDef:
    name: str
    fields: tuple[tuple[str, TypeExpr], ...]

    @property
    def arity(self) -> int:
        return len(self.fields)


@dataclass(frozen=True)
class AdtDef:
    name: str
    constructors: tuple[CtorDef, ...]

    def ctor(self, name: str) -> CtorDef:
        for c in self.constructors:
            if c.name == name:
                return c
        raise KeyError(name)


@dataclass
class FunDef:
    name: str
    params: list[tuple[str, TypeExpr]]
    return_type: TypeExpr
    body: "Expr"
    precondition: Optional["Expr"] = None
    postcondition: Optional[tuple[str, "Expr"]] = None  # (binder, expr)

    @property
    def param_names(self) -> list[str]:
        return [n for n, _ in self.params]


@dataclass
class Program:
    adts: list[AdtDef]
    functions: list[FunDef]

    def adt(self, name: str) -> AdtDef:
        for a in self.adts:
            if a.name == name:
                return a
        raise KeyError(name)

    def function(self, name: str) -> FunDef:
        for f in self.functions:
            if f.name == name:
                return f
        raise KeyError(name)

    def ctor_owner(self, ctor_name: str) -> tuple[AdtDef, CtorDef]:
        for a in self.adts:
            for c in a.constructors:
                if c.name == ctor_name:
                    return a, c
        raise KeyError(ctor_name)


# ---------------------------------------------------------------------------
# Patterns
# ---------------------------------------------------------------------------

class Pattern:
    pass


@dataclass
class Wildcard(Pattern):
    pass


@dataclass
class Binder(Pattern):
    name: str
    sub: Optional[Pattern] = None  # binder-at form: name @ sub


@dataclass
class CtorPattern(Pattern):
    ctor: str
    subpatterns: list[Pattern]


@dataclass
class LiteralPattern(Pattern):
    value: "Expr"  # IntLit or BoolLit


def pattern_binders(p: Pattern) -> list[str]:
    if isinstance(p, Wildcard) or isinstance(p, LiteralPattern):
        return []
    if isinstance(p, Binder):
        return [p.name] + (pattern_binders(p.sub) if p.sub else [])
    if isinstance(p, CtorPattern):
        out: list[str] = []
        for s in p.subpatterns:
            out.extend(pattern_binders(s))
        return out
    raise TypeError(p)


# ---------------------------------------------------------------------------
# Expressions
# ---------------------------------------------------------------------------

@dataclass
class Expr:
    """Base expression; `ty` is filled by the type checker."""

    def __post_init__(self) -> None:
        pass

    ty: Optional[TypeExpr] = field(default=None, init=False, compare=False, repr=False)

    def __repr__(self) -> str:
        from .printer import print_expr
        return print_expr(self)


@dataclass(repr=False)
class Var(Expr):
    name: str


@dataclass(repr=False)
class IntLit(Expr):
    value: int


@dataclass(repr=False)
class BoolLit(Expr):
    value: bool


@dataclass(repr=False)
class SetLit(Expr):
    elements: list[Expr]


@dataclass(repr=False)
class UnOp(Expr):
    op: str  # "neg" | "not"
    operand: Expr


@dataclass(repr=False)
class BinOp(Expr):
    op: str  # + - * < <= == != && || ++ -- & in  (> >= normalized by parser)
    left: Expr
    right: Expr


@dataclass(repr=False)
class If(Expr):
    cond: Expr
    then: Expr
    els: Expr


@dataclass(repr=False)
class Let(Expr):
    name: str
    bound: Expr
    body: Expr


@dataclass(repr=False)
class MatchCase:
    pattern: Pattern
    guard: Optional[Expr]
    body: Expr


@dataclass(repr=False)
class Match(Expr):
    scrutinee: Expr
    cases: list[MatchCase]


@dataclass(repr=False)
class Call(Expr):
    fun: str
    args: list[Expr]


@dataclass(repr=False)
class CtorApp(Expr):
    ctor: str
    args: list[Expr]


@dataclass(repr=False)
class TupleCtor(Expr):
    args: list[Expr]


@dataclass(repr=False)
class TupleSel(Expr):
    tup: Expr
    index: int  # 1-based


@dataclass(repr=False)
class Choose(Expr):
    out_params: list[tuple[str, TypeExpr]]
    predicate: Expr
    site_id: Optional[str] = None  # "<fun>/<ordinal>" assigned by the checker


COMPARISON_OPS = {"<", "<=", "==", "!="}
SET_OPS = {"++", "--", "&"}
ARITH_OPS = {"+", "-", "*"}
BOOL_OPS = {"&&", "||"}


def children(e: Expr) -> Iterator[Expr]:
    if isinstance(e, (Var, IntLit, BoolLit)):
        return
    elif isinstance(e, SetLit):
        yield from e.elements
    elif isinstance(e, UnOp):
        yield e.operand
    elif isinstance(e, BinOp):
        yield e.left
        yield e.right
    elif isinstance(e, If):
        yield e.cond
        yield e.then
        yield e.els
    elif isinstance(e, Let):
        yield e.bound
        yield e.body
    elif isinstance(e, Match):
        yield e.scrutinee
        for c in e.cases:
            if c.guard is not None:
                yield c.guard
            yield c.body
    elif isinstance(e, (Call, CtorApp, TupleCtor)):
        yield from e.args
    elif isinstance(e, TupleSel):
        yield e.tup
    elif isinstance(e, Choose):
        yield e.predicate
    else:
        raise TypeError(e)


def walk(e: Expr) -> Iterator[Expr]:
    yield e
    for c in children(e):
        yield from walk(c)


def expr_size(e: Expr) -> int:
    """Node count of the syntax tree."""
    return sum(1 for _ in walk(e))


def free_vars(e: Expr) -> set[str]:
    if isinstance(e, Var):
        return {e.name}
    if isinstance(e, Let):
        return free_vars(e.bound) | (free_vars(e.body) - {e.name})
    if isinstance(e, Match):
        out = free_vars(e.scrutinee)
        for c in e.cases:
            bound = set(pattern_binders(c.pattern))
            inner = free_vars(c.body)
            if c.guard is not None:
                inner |= free_vars(c.guard)
            out |= inner - bound
        return out
    if isinstance(e, Choose):
        bound = {n for n, _ in e.out_params}
        return free_vars(e.predicate) - bound
    out: set[str] = set()
    for c in children(e):
        out |= free_vars(c)
    return out


def called_functions(e: Expr) -> set[str]:
    return {n.fun for n in walk(e) if isinstance(n, Call)}


_fresh_counter = itertools.count(1)


def fresh_name(base: str, avoid: set[str]) -> str:
    if base not in avoid:
        return base
    while True:
        cand = f"{base}_{next(_fresh_counter)}"
        if cand not in avoid:
            return cand


def _copy_with(e: Expr, **updates) -> Expr:
    kwargs = {}
    for f in fields(e):
        if not f.init:
            continue
        kwargs[f.name] = updates.get(f.name, getattr(e, f.name))
    out = type(e)(**kwargs)
    out.ty = e.ty
    return out


def substitute(e: Expr, binding: dict[str, Expr]) -> Expr:
    """Capture-avoiding simultaneous substitution of variables."""
    if not binding:
        return e
    replacement_fvs: set[str] = set()
    for r in binding.values():
        replacement_fvs |= free_vars(r)

    def go(e: Expr, binding: dict[str, Expr]) -> Expr:
        if isinstance(e, Var):
            if e.name in binding:
                return binding[e.name]
            return e
        if isinstance(e, Let):
            bound = go(e.bound, binding)
            inner = {k: v for k, v in binding.items() if k != e.name}
            name = e.name
            body = e.body
            if name in replacement_fvs and any(k in free_vars(body) for k in inner):
                avoid = replacement_fvs | free_vars(body) | set(inner)
                new_name = fresh_name(name, avoid)
                body = go(body, {name: Var(new_name)})
                name = new_name
            if inner:
                body = go(body, inner)
            return _copy_with(e, name=name, bound=bound, body=body)
        if isinstance(e, Match):
            scrut = go(e.scrutinee, binding)
            new_cases = []
            for c in e.cases:
                binders = set(pattern_binders(c.pattern))
                inner = {k: v for k, v in binding.items() if k not in binders}
                pat, guard, body = c.pattern, c.guard, c.body
                clash = binders & replacement_fvs
                if clash and inner:
                    used = free_vars(body) | (free_vars(guard) if guard else set())
                    if any(k in used for k in inner):
                        ren: dict[str, Expr] = {}
                        avoid = replacement_fvs | used | set(inner) | binders
                        names: dict[str, str] = {}
                        for b in sorted(clash):
                            nb = fresh_name(b, avoid)
                            avoid.add(nb)
                            names[b] = nb
                            ren[b] = Var(nb)
                        pat = _rename_pattern(pat, names)
                        guard = go(guard, ren) if guard else None
                        body = go(body, ren)
                if inner:
                    guard = go(guard, inner) if guard else None
                    body = go(body, inner)
                new_cases.append(MatchCase(pat, guard, body))
            return _copy_with(e, scrutinee=scrut, cases=new_cases)
        if isinstance(e, Choose):
            bound = {n for n, _ in e.out_params}
            inner = {k: v for k, v in binding.items() if k not in bound}
            if not inner:
                return e
            # choose binders never clash with replacements in practice; guard anyway
            assert not (bound & replacement_fvs), "choose binder capture"
            return _copy_with(e, predicate=go(e.predicate, inner))
        if isinstance(e, (IntLit, BoolLit)):
            return e
        updates: dict = {}
        if isinstance(e, SetLit):
            updates["elements"] = [go(x, binding) for x in e.elements]
        elif isinstance(e, UnOp):
            updates["operand"] = go(e.operand, binding)
        elif isinstance(e, BinOp):
            updates["left"] = go(e.left, binding)
            updates["right"] = go(e.right, binding)
        elif isinstance(e, If):
            updates["cond"] = go(e.cond, binding)
            updates["then"] = go(e.then, binding)
            updates["els"] = go(e.els, binding)
        elif isinstance(e, (Call, CtorApp, TupleCtor)):
            updates["args"] = [go(x, binding) for x in e.args]
        elif isinstance(e, TupleSel):
            updates["tup"] = go(e.tup, binding)
        else:
            raise TypeError(e)
        return _copy_with(e, **updates)

    return go(e, dict(binding))


def _rename_pattern(p: Pattern, names: dict[str, str]) -> Pattern:
    if isinstance(p, Wildcard) or isinstance(p, LiteralPattern):
        return p
    if isinstance(p, Binder):
        return Binder(names.get(p.name, p.name),
                      _rename_pattern(p.sub, names) if p.sub else None)
    if isinstance(p, CtorPattern):
        return CtorPattern(p.ctor, [_rename_pattern(s, names) for s in p.subpatterns])
    raise TypeError(p)


def expr_key(e: Expr):
    """Hashable structural key (ignores type annotations)."""
    if isinstance(e, Var):
        return ("v", e.name)
    if isinstance(e, IntLit):
        return ("i", e.value)
    if isinstance(e, BoolLit):
        return ("b", e.value)
    if isinstance(e, SetLit):
        return ("s",) + tuple(expr_key(x) for x in e.elements)
    if isinstance(e, UnOp):
        return ("u", e.op, expr_key(e.operand))
    if isinstance(e, BinOp):
        return ("o", e.op, expr_key(e.left), expr_key(e.right))
    if isinstance(e, If):
        return ("if", expr_key(e.cond), expr_key(e.then), expr_key(e.els))
    if isinstance(e, Let):
        return ("let", e.name, expr_key(e.bound), expr_key(e.body))
    if isinstance(e, Match):
        return ("m", expr_key(e.scrutinee),
                tuple((_pat_key(c.pattern),
                       expr_key(c.guard) if c.guard else None,
                       expr_key(c.body)) for c in e.cases))
    if isinstance(e, Call):
        return ("c", e.fun) + tuple(expr_key(x) for x in e.args)
    if isinstance(e, CtorApp):
        return ("k", e.ctor) + tuple(expr_key(x) for x in e.args)
    if isinstance(e, TupleCtor):
        return ("t",) + tuple(expr_key(x) for x in e.args)
    if isinstance(e, TupleSel):
        return ("sel", e.index, expr_key(e.tup))
    if isinstance(e, Choose):
        return ("ch", tuple(n for n, _ in e.out_params), expr_key(e.predicate))
    raise TypeError(e)


def _pat_key(p: Pattern):
    if isinstance(p, Wildcard):
        return ("_",)
    if isinstance(p, Binder):
        return ("bind", p.name, _pat_key(p.sub) if p.sub else None)
    if isinstance(p, CtorPattern):
        return ("ctor", p.ctor) + tuple(_pat_key(s) for s in p.subpatterns)
    if isinstance(p, LiteralPattern):
        return ("lit", expr_key(p.value))
    raise TypeError(p)


def structurally_equal(a: Expr, b: Expr) -> bool:
    return expr_key(a) == expr_key(b)


# Convenience constructors used across the code base.

def conj(*parts: Expr) -> Expr:
    flat = [p for p in parts if not (isinstance(p, BoolLit) and p.value)]
    if not flat:
        return BoolLit(True)
    out = flat[0]
    for p in flat[1:]:
        out = BinOp("&&", out, p)
    return out


def disj(*parts: Expr) -> Expr:
    if not parts:
        return BoolLit(False)
    out = parts[0]
    for p in parts[1:]:
        out = BinOp("||", out, p)
    return out


def neg(e: Expr) -> Expr:
    if isinstance(e, BoolLit):
        return BoolLit(not e.value)
    if isinstance(e, UnOp) and e.op == "not":
        return e.operand
    return UnOp("not", e)


def conjuncts(e: Expr) -> list[Expr]:
    if isinstance(e, BinOp) and e.op == "&&":
        return conjuncts(e.left) + conjuncts(e.right)
    return [e]


def disjuncts(e: Expr) -> list[Expr]:
    if isinstance(e, BinOp) and e.op == "||":
        return disjuncts(e.left) + disjuncts(e.right)
    return [e]
