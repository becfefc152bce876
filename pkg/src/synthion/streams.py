"""Fair enumerators: ground values, models of a path condition, typed terms.

Value enumeration is size-stratified: every stratum is finite, so any value of
size s appears within the first B(s) outputs where B(s) is the total count of
values of size at most s.  Integers enumerate as 0, 1, -1, 2, -2, ...; booleans
false then true; sets by cardinality-plus-element-rank; constructor terms count
one per constructor application.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterator, Optional

from .lang import nodes as N
from .values import (AdtVal, BoolVal, IntVal, Model, SetVal, TupleVal, Value,
                     int_of_rank, mk_set)


def _type_key(t: N.TypeExpr):
    if isinstance(t, N.IntType):
        return ("int",)
    if isinstance(t, N.BoolType):
        return ("bool",)
    if isinstance(t, N.SetIntType):
        return ("set",)
    if isinstance(t, N.AdtType):
        return ("adt", t.name)
    if isinstance(t, N.TupleType):
        return ("tuple",) + tuple(_type_key(x) for x in t.elements)
    raise TypeError(t)


def values_of_size(program, t: N.TypeExpr, size: int) -> list[Value]:
    """All values of t with exactly the given size, in canonical order."""
    memo = getattr(program, "_value_memo", None)
    if memo is None:
        memo = {}
        program._value_memo = memo
    per_size = memo.setdefault(_type_key(t), {})
    if size in per_size:
        return per_size[size]
    out: list[Value] = []
    if isinstance(t, N.IntType):
        out = [IntVal(int_of_rank(size))]
    elif isinstance(t, N.BoolType):
        if size == 0:
            out = [BoolVal(False)]
        elif size == 1:
            out = [BoolVal(True)]
    elif isinstance(t, N.SetIntType):
        out = [mk_set(c) for c in _set_combos(size)]
    elif isinstance(t, N.AdtType):
        adt = program.adt(t.name)
        for ctor in adt.constructors:
            if size < 1:
                continue
            for combo in _field_combos(program, [ft for _, ft in ctor.fields],
                                       size - 1):
                out.append(AdtVal(ctor.name, tuple(combo)))
    elif isinstance(t, N.TupleType):
        out = [TupleVal(tuple(c))
               for c in _field_combos(program, list(t.elements), size)]
    else:
        raise TypeError(t)
    per_size[size] = out
    return out


def _set_combos(size: int) -> Iterator[list[int]]:
    """Distinct-int element lists with cardinality + total rank == size."""
    def rec(budget: int, min_rank: int) -> Iterator[list[int]]:
        yield []
        for r in range(min_rank, budget):
            # one element of rank r costs 1 + r
            if 1 + r <= budget:
                for rest in rec(budget - 1 - r, r + 1):
                    yield [int_of_rank(r)] + rest

    for combo in rec(size, 0):
        cost = len(combo) + sum(_rank_of_val(x) for x in combo)
        if cost == size:
            yield combo


def _rank_of_val(n: int) -> int:
    from .values import int_rank
    return int_rank(n)


def _field_combos(program, types: list[N.TypeExpr], budget: int) -> Iterator[list[Value]]:
    """Tuples of values with sizes summing to exactly budget, first field major."""
    if not types:
        if budget == 0:
            yield []
        return
    head, rest = types[0], types[1:]
    for s in range(budget + 1):
        heads = values_of_size(program, head, s)
        if not heads:
            continue
        for tail in _field_combos(program, rest, budget - s):
            for h in heads:
                yield [h] + tail


def value_stream(program, t: N.TypeExpr) -> Iterator[Value]:
    """Distinct values in non-decreasing size; never exhausts for recursive types."""
    limit = _max_size(t)
    for size in itertools.count(0):
        if limit is not None and size > limit:
            return
        yield from values_of_size(program, t, size)


def _max_size(t: N.TypeExpr) -> Optional[int]:
    """Finite upper bound on sizes when the type is finite (Bool only here)."""
    if isinstance(t, N.BoolType):
        return 1
    if isinstance(t, N.TupleType):
        subs = [_max_size(x) for x in t.elements]
        if all(s is not None for s in subs):
            return sum(subs)  # type: ignore[arg-type]
    return None


def is_finite_adt(program, name: str) -> bool:
    adt = program.adt(name)
    return all(
        not any(isinstance(ft, N.AdtType) for _, ft in c.fields)
        and all(isinstance(ft, N.BoolType) for _, ft in c.fields)
        for c in adt.constructors)


def model_stream(program, variables: list[tuple[str, N.TypeExpr]],
                 path_condition: Optional[N.Expr] = None,
                 fuel: int = 10_000,
                 max_attempts: int = 200_000,
                 choose_oracle=None) -> Iterator[Model]:
    """Fair product of per-variable streams filtered by the path condition."""
    from .interp import eval_predicate
    names = [n for n, _ in variables]
    types = [t for _, t in variables]
    attempts = 0
    if not variables:
        m: Model = {}
        if path_condition is None or eval_predicate(program, m, path_condition, fuel,
                                                    choose_oracle=choose_oracle) is True:
            yield m
        return
    for total in itertools.count(0):
        if attempts >= max_attempts:
            return
        produced_any = False
        for combo in _field_combos(program, types, total):
            produced_any = True
            attempts += 1
            m = dict(zip(names, combo))
            if path_condition is None or eval_predicate(program, m, path_condition, fuel,
                                                        choose_oracle=choose_oracle) is True:
                yield m
            if attempts >= max_attempts:
                return
        # every type has values at unboundedly many sizes except pure-bool
        # shapes; stop once nothing can be produced anymore
        if not produced_any and total > 4 and all(_max_size(t) is not None for t in types):
            return


# --- typed expression enumeration --------------------------------------------


@dataclass
class EnumConfig:
    call_penalty: int = 2
    max_weight: int = 30
    comparisons: bool = True          # comparison/membership atoms at Bool goal
    negations: bool = True            # "!" over boolean atoms
    include_literals: bool = True


@dataclass
class CallableFun:
    fun: N.FunDef
    # per-position restriction to these variable names (None = unrestricted)
    arg_restrictions: Optional[dict[int, set[str]]] = None


class ExprStream:
    """Weight-ordered enumeration of well-typed expressions.

    Weight is the node count plus a penalty per function call.  Enumeration is
    deterministic; no expression appears twice.
    """

    def __init__(self, program, goal: N.TypeExpr,
                 variables: list[tuple[str, N.TypeExpr]],
                 functions: Optional[list[CallableFun]] = None,
                 config: Optional[EnumConfig] = None):
        self.program = program
        self.goal = goal
        self.variables = variables
        self.functions = functions or []
        self.config = config or EnumConfig()
        self._memo: dict[tuple, list[N.Expr]] = {}
        self._seen: set = set()

    def __iter__(self) -> Iterator[N.Expr]:
        cfg = self.config
        for w in range(1, cfg.max_weight + 1):
            for e in self._of_weight(self.goal, w, top=True):
                k = N.expr_key(e)
                if k in self._seen:
                    continue
                self._seen.add(k)
                yield e

    def _of_weight(self, t: N.TypeExpr, w: int, top: bool = False) -> list[N.Expr]:
        key = (_type_key(t), w, top)
        if key in self._memo:
            return self._memo[key]
        out: list[N.Expr] = []
        cfg = self.config
        if w >= 1:
            if cfg.include_literals:
                for lit in self._literals(t):
                    if self._weight_of_literal(lit) == w:
                        out.append(lit)
            if w == 1:
                for name, vt in self.variables:
                    if vt == t:
                        out.append(N.Var(name))
            if w == 2:
                # tuple component access
                for name, vt in self.variables:
                    if isinstance(vt, N.TupleType):
                        for i, et in enumerate(vt.elements):
                            if et == t:
                                out.append(N.TupleSel(N.Var(name), i + 1))
        if isinstance(t, N.AdtType):
            adt = self.program.adt(t.name)
            for ctor in adt.constructors:
                for args in self._args_of_weight([ft for _, ft in ctor.fields], w - 1):
                    out.append(N.CtorApp(ctor.name, args))
        if isinstance(t, N.TupleType):
            for args in self._args_of_weight(list(t.elements), w - 1):
                out.append(N.TupleCtor(args))
        if isinstance(t, N.BoolType) and cfg.comparisons and top:
            out.extend(self._bool_atoms(w))
        # calls
        for cf in self.functions:
            f = cf.fun
            if f.return_type != t:
                continue
            base = 1 + cfg.call_penalty
            for args in self._call_args(cf, w - base):
                out.append(N.Call(f.name, args))
        self._memo[key] = out
        return out

    def _literals(self, t: N.TypeExpr) -> list[N.Expr]:
        if isinstance(t, N.IntType):
            return [N.IntLit(0), N.IntLit(1), N.IntLit(-1)]
        if isinstance(t, N.BoolType):
            return [N.BoolLit(True), N.BoolLit(False)]
        if isinstance(t, N.SetIntType):
            return [N.SetLit([])]
        return []

    def _weight_of_literal(self, e: N.Expr) -> int:
        if isinstance(e, N.IntLit) and e.value == -1:
            return 2  # reachable via unary minus
        return 1

    def _args_of_weight(self, types: list[N.TypeExpr], budget: int) -> Iterator[list[N.Expr]]:
        if not types:
            if budget == 0:
                yield []
            return
        head, rest = types[0], types[1:]
        for w in range(1, budget - len(rest) + 1):
            for h in self._of_weight(head, w):
                for tail in self._args_of_weight(rest, budget - w):
                    yield [h] + tail

    def _call_args(self, cf: CallableFun, budget: int) -> Iterator[list[N.Expr]]:
        f = cf.fun
        types = [pt for _, pt in f.params]
        restr = cf.arg_restrictions or {}

        def rec(i: int, budget: int) -> Iterator[list[N.Expr]]:
            if i == len(types):
                if budget == 0:
                    yield []
                return
            remaining = len(types) - i - 1
            if i in restr:
                if budget >= 1 + remaining:
                    for name in sorted(restr[i]):
                        for tail in rec(i + 1, budget - 1):
                            yield [N.Var(name)] + tail
                return
            for w in range(1, budget - remaining + 1):
                for h in self._of_weight(types[i], w):
                    for tail in rec(i + 1, budget - w):
                        yield [h] + tail

        yield from rec(0, budget)

    def _bool_atoms(self, w: int) -> list[N.Expr]:
        out: list[N.Expr] = []
        cfg = self.config
        int_vars = [(n, t) for n, t in self.variables if isinstance(t, N.IntType)]
        # comparisons between int terms: weight = 1 + w(l) + w(r)
        if w >= 3:
            budget = w - 1
            pieces: list[N.Expr] = []
            for wl in range(1, budget):
                pieces.extend(self._of_weight(N.INT, wl))
            for op in ("==", "<", "<="):
                for l in pieces:
                    wl = self._w(l)
                    for r in self._of_weight(N.INT, budget - wl):
                        if op == "==" and N.expr_key(l) >= N.expr_key(r):
                            continue
                        out.append(N.BinOp(op, l, r))
            # membership
            for l in pieces:
                wl = self._w(l)
                for r in self._of_weight(N.SETINT, budget - wl):
                    out.append(N.BinOp("in", l, r))
            # ADT equalities: var-to-var and var-to-term
            adt_vars = [(n, t) for n, t in self.variables if isinstance(t, N.AdtType)]
            for (n1, t1), (n2, t2) in itertools.combinations(adt_vars, 2):
                if t1 == t2 and w == 3:
                    out.append(N.BinOp("==", N.Var(n1), N.Var(n2)))
            for n1, t1 in adt_vars:
                for r in self._of_weight(t1, w - 2):
                    if not isinstance(r, N.Var):
                        out.append(N.BinOp("==", N.Var(n1), r))
        if cfg.negations and w >= 2:
            for inner in self._of_weight(N.BOOL, w - 1, top=True):
                if isinstance(inner, (N.BinOp, N.Call)):
                    out.append(N.UnOp("not", inner))
        return out

    def _w(self, e: N.Expr) -> int:
        n = 0
        for sub in N.walk(e):
            n += 1
            if isinstance(sub, N.Call):
                n += self.config.call_penalty
            if isinstance(sub, N.IntLit) and sub.value == -1:
                n += 1
        return n


def expr_stream(program, goal: N.TypeExpr,
                variables: list[tuple[str, N.TypeExpr]],
                functions: Optional[list[CallableFun]] = None,
                config: Optional[EnumConfig] = None) -> Iterator[N.Expr]:
    return iter(ExprStream(program, goal, variables, functions, config))
