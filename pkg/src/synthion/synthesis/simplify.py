"""Semantics-preserving readability rewrites for synthesized code."""

from __future__ import annotations

from typing import Optional

from ..lang import nodes as N
from ..lang.check import TypedProgram
from ..interp import eval_expr, match_pattern
from ..values import Value, value_to_expr


def _is_pure(e: N.Expr) -> bool:
    """Syntactically total: safe to drop or duplicate."""
    return all(not isinstance(sub, (N.Call, N.Match, N.Choose)) for sub in N.walk(e))


def _is_atom(e: N.Expr) -> bool:
    return isinstance(e, (N.Var, N.IntLit, N.BoolLit))


def simplify(program: TypedProgram, e: N.Expr, rounds: int = 6) -> N.Expr:
    from ..verify import terminating_functions
    foldable = terminating_functions(program)
    for _ in range(rounds):
        out = _pass(program, e, foldable)
        if N.expr_key(out) == N.expr_key(e):
            return out
        e = out
    return e


def _pass(tp: TypedProgram, e: N.Expr, foldable: set[str]) -> N.Expr:
    e = _map_children(tp, e, foldable)

    folded = _try_fold(tp, e, foldable)
    if folded is not None:
        return folded

    if isinstance(e, N.If):
        if isinstance(e.cond, N.BoolLit):
            return e.then if e.cond.value else e.els
    if isinstance(e, N.UnOp):
        if e.op == "not":
            if isinstance(e.operand, N.BoolLit):
                return N.BoolLit(not e.operand.value)
            if isinstance(e.operand, N.UnOp) and e.operand.op == "not":
                return e.operand.operand
        if e.op == "neg" and isinstance(e.operand, N.IntLit):
            return N.IntLit(-e.operand.value)
    if isinstance(e, N.BinOp):
        out = _binop_identities(e, foldable)
        if out is not None:
            return out
    if isinstance(e, N.Let):
        if _is_atom(e.bound):
            return N.substitute(e.body, {e.name: e.bound})
        if e.name not in N.free_vars(e.body) and _is_pure(e.bound):
            return e.body
    if isinstance(e, N.TupleSel) and isinstance(e.tup, N.TupleCtor):
        others = [a for i, a in enumerate(e.tup.args) if i != e.index - 1]
        if all(_is_pure(a) for a in others):
            return e.tup.args[e.index - 1]
    if isinstance(e, N.Match):
        out = _match_known_ctor(e)
        if out is not None:
            return out
        out = _match_constant_bodies(tp, e)
        if out is not None:
            return out
    return e


def _map_children(tp: TypedProgram, e: N.Expr, foldable: set[str]) -> N.Expr:
    def go(x: N.Expr) -> N.Expr:
        return _pass(tp, x, foldable)

    if isinstance(e, (N.Var, N.IntLit, N.BoolLit)):
        return e
    if isinstance(e, N.SetLit):
        return _with_ty(e, N.SetLit([go(x) for x in e.elements]))
    if isinstance(e, N.UnOp):
        return _with_ty(e, N.UnOp(e.op, go(e.operand)))
    if isinstance(e, N.BinOp):
        return _with_ty(e, N.BinOp(e.op, go(e.left), go(e.right)))
    if isinstance(e, N.If):
        return _with_ty(e, N.If(go(e.cond), go(e.then), go(e.els)))
    if isinstance(e, N.Let):
        return _with_ty(e, N.Let(e.name, go(e.bound), go(e.body)))
    if isinstance(e, N.Match):
        cases = [N.MatchCase(c.pattern, go(c.guard) if c.guard else None, go(c.body))
                 for c in e.cases]
        return _with_ty(e, N.Match(go(e.scrutinee), cases))
    if isinstance(e, N.Call):
        return _with_ty(e, N.Call(e.fun, [go(a) for a in e.args]))
    if isinstance(e, N.CtorApp):
        return _with_ty(e, N.CtorApp(e.ctor, [go(a) for a in e.args]))
    if isinstance(e, N.TupleCtor):
        return _with_ty(e, N.TupleCtor([go(a) for a in e.args]))
    if isinstance(e, N.TupleSel):
        return _with_ty(e, N.TupleSel(go(e.tup), e.index))
    if isinstance(e, N.Choose):
        return e
    raise TypeError(e)


def _with_ty(old: N.Expr, new: N.Expr) -> N.Expr:
    new.ty = old.ty
    return new


def _try_fold(tp: TypedProgram, e: N.Expr, foldable: set[str]) -> Optional[N.Expr]:
    """Evaluate closed subexpressions built from total functions."""
    if isinstance(e, (N.IntLit, N.BoolLit, N.Var)):
        return None
    if isinstance(e, N.SetLit) and not e.elements:
        return None
    if N.free_vars(e):
        return None
    if any(isinstance(sub, N.Choose) for sub in N.walk(e)):
        return None
    if not all(c in foldable for c in N.called_functions(e)):
        return None
    v = eval_expr(tp, {}, e, fuel=20_000)
    if isinstance(v, Value):
        out = value_to_expr(v)
        out.ty = e.ty
        if N.expr_size(out) <= N.expr_size(e):
            return out
    return None


def _binop_identities(e: N.BinOp, foldable: set[str]) -> Optional[N.Expr]:
    op, l, r = e.op, e.left, e.right

    def pure_total(x: N.Expr) -> bool:
        return all(not isinstance(s, (N.Match, N.Choose)) for s in N.walk(x)) and \
            all(c in foldable for c in N.called_functions(x))

    if op == "&&":
        if isinstance(l, N.BoolLit):
            return r if l.value else N.BoolLit(False)
        if isinstance(r, N.BoolLit) and r.value:
            return l
    if op == "||":
        if isinstance(l, N.BoolLit):
            return N.BoolLit(True) if l.value else r
        if isinstance(r, N.BoolLit) and not r.value:
            return l
    if op == "+":
        if isinstance(l, N.IntLit) and l.value == 0:
            return r
        if isinstance(r, N.IntLit) and r.value == 0:
            return l
    if op == "-":
        if isinstance(r, N.IntLit) and r.value == 0:
            return l
    if op == "*":
        if isinstance(l, N.IntLit) and l.value == 1:
            return r
        if isinstance(r, N.IntLit) and r.value == 1:
            return l
        if isinstance(l, N.IntLit) and l.value == 0 and pure_total(r):
            return N.IntLit(0)
        if isinstance(r, N.IntLit) and r.value == 0 and pure_total(l):
            return N.IntLit(0)
    if op in ("++", "--", "&"):
        l_empty = isinstance(l, N.SetLit) and not l.elements
        r_empty = isinstance(r, N.SetLit) and not r.elements
        if op == "++":
            if l_empty:
                return r
            if r_empty:
                return l
        if op == "--":
            if r_empty:
                return l
            if l_empty and pure_total(r):
                return _typed_empty()
        if op == "&" and (l_empty or r_empty):
            if pure_total(l) and pure_total(r):
                return _typed_empty()
    if op == "==" and pure_total(l) and N.expr_key(l) == N.expr_key(r):
        return N.BoolLit(True)
    if op == "!=" and pure_total(l) and N.expr_key(l) == N.expr_key(r):
        return N.BoolLit(False)
    return None


def _typed_empty() -> N.Expr:
    out = N.SetLit([])
    out.ty = N.SETINT
    return out


def _match_known_ctor(e: N.Match) -> Optional[N.Expr]:
    """Reduce a match whose scrutinee is a constructor application."""
    scrut = e.scrutinee
    if not isinstance(scrut, (N.CtorApp, N.IntLit, N.BoolLit)):
        return None

    def static_match(pat: N.Pattern, s: N.Expr):
        """("yes", binds) | "no" | "unknown" """
        if isinstance(pat, N.Wildcard):
            return ("yes", {})
        if isinstance(pat, N.Binder):
            out = {pat.name: s}
            if pat.sub is not None:
                inner = static_match(pat.sub, s)
                if inner == "no" or inner == "unknown":
                    return inner
                out.update(inner[1])
            return ("yes", out)
        if isinstance(pat, N.LiteralPattern):
            if isinstance(s, (N.IntLit, N.BoolLit)):
                return ("yes", {}) if s.value == pat.value.value else "no"
            return "unknown"
        if isinstance(pat, N.CtorPattern):
            if not isinstance(s, N.CtorApp):
                return "unknown"
            if s.ctor != pat.ctor:
                return "no"
            out: dict[str, N.Expr] = {}
            for sub, arg in zip(pat.subpatterns, s.args):
                inner = static_match(sub, arg)
                if inner in ("no", "unknown"):
                    return inner
                out.update(inner[1])
            return ("yes", out)
        raise TypeError(pat)

    for case in e.cases:
        r = static_match(case.pattern, scrut)
        if r == "unknown":
            return None
        if r == "no":
            continue
        binds = r[1]
        if not all(_is_pure(b) for b in binds.values()):
            return None
        if case.guard is not None:
            g = N.substitute(case.guard, binds)
            if isinstance(g, N.BoolLit):
                if not g.value:
                    continue
            else:
                return None  # cannot decide the guard statically
        return N.substitute(case.body, binds)
    return None


def _match_constant_bodies(tp: TypedProgram, e: N.Match) -> Optional[N.Expr]:
    """Exhaustive guard-free match with one identical literal body collapses."""
    if not isinstance(e.scrutinee, N.Var):
        return None
    first = e.cases[0].body
    if not isinstance(first, (N.BoolLit, N.IntLit)):
        return None
    if any(c.guard is not None for c in e.cases):
        return None
    if not all(isinstance(c.body, type(first)) and c.body.value == first.value
               for c in e.cases):
        return None
    # exhaustive by constructors?
    ty = e.scrutinee.ty
    if not isinstance(ty, N.AdtType):
        if any(isinstance(c.pattern, (N.Wildcard, N.Binder)) for c in e.cases):
            return first
        return None
    covered = set()
    for c in e.cases:
        if isinstance(c.pattern, (N.Wildcard, N.Binder)) and \
                (not isinstance(c.pattern, N.Binder) or c.pattern.sub is None):
            return first
        if isinstance(c.pattern, N.CtorPattern) and \
                all(isinstance(s, (N.Wildcard, N.Binder)) and
                    (not isinstance(s, N.Binder) or s.sub is None)
                    for s in c.pattern.subpatterns):
            covered.add(c.pattern.ctor)
    adt = tp.adt(ty.name)
    if {c.name for c in adt.constructors} <= covered:
        return first
    return None
