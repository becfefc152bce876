"""Type checking: annotates expressions, validates declarations, names choose sites.

Match exhaustiveness is deliberately not checked here; it is a verification
condition handled by the verifier.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from . import nodes as N
from .parser import Diagnostic


class TypeError_(Exception):
    def __init__(self, message: str):
        super().__init__(message)
        self.message = message


@dataclass
class ChooseSite:
    site_id: str           # "<fun>/<ordinal>"
    function: str
    choose: N.Choose


@dataclass
class TypedProgram:
    program: N.Program
    choose_sites: list[ChooseSite] = field(default_factory=list)

    @property
    def adts(self) -> list[N.AdtDef]:
        return self.program.adts

    @property
    def functions(self) -> list[N.FunDef]:
        return self.program.functions

    def function(self, name: str) -> N.FunDef:
        return self.program.function(name)

    def adt(self, name: str) -> N.AdtDef:
        return self.program.adt(name)

    def ctor_owner(self, ctor: str) -> tuple[N.AdtDef, N.CtorDef]:
        return self.program.ctor_owner(ctor)

    def site(self, site_id: str) -> ChooseSite:
        for s in self.choose_sites:
            if s.site_id == site_id:
                return s
        raise KeyError(site_id)


def _check_type_wf(t: N.TypeExpr, adts: dict[str, N.AdtDef]) -> None:
    if isinstance(t, N.AdtType):
        if t.name not in adts:
            raise TypeError_(f"unknown type {t.name}")
    elif isinstance(t, N.TupleType):
        for x in t.elements:
            _check_type_wf(x, adts)


def _ctor_recursive_fields(adt: N.AdtDef, ctor: N.CtorDef) -> list[int]:
    return [i for i, (_, t) in enumerate(ctor.fields)
            if isinstance(t, N.AdtType) and t.name == adt.name]


def adt_has_base_ctor(adt: N.AdtDef) -> bool:
    return any(not _ctor_recursive_fields(adt, c) for c in adt.constructors)


class Checker:
    def __init__(self, prog: N.Program):
        self.prog = prog
        self.adts = {a.name: a for a in prog.adts}
        self.funs = {f.name: f for f in prog.functions}
        self.ctors: dict[str, tuple[N.AdtDef, N.CtorDef]] = {}
        self.sites: list[ChooseSite] = []

    def run(self) -> TypedProgram:
        seen_adts: set[str] = set()
        for a in self.prog.adts:
            if a.name in seen_adts:
                raise TypeError_(f"duplicate type {a.name}")
            seen_adts.add(a.name)
            if not a.constructors:
                raise TypeError_(f"type {a.name} has no constructors")
            for c in a.constructors:
                if c.name in self.ctors:
                    raise TypeError_(f"duplicate constructor {c.name}")
                self.ctors[c.name] = (a, c)
                for _, t in c.fields:
                    _check_type_wf(t, self.adts)
            if not adt_has_base_ctor(a):
                raise TypeError_(f"type {a.name} has no non-recursive constructor")
        seen_funs: set[str] = set()
        for f in self.prog.functions:
            if f.name in seen_funs:
                raise TypeError_(f"duplicate function {f.name}")
            if f.name in self.ctors:
                raise TypeError_(f"{f.name} is both a function and a constructor")
            seen_funs.add(f.name)
            for _, t in f.params:
                _check_type_wf(t, self.adts)
            _check_type_wf(f.return_type, self.adts)
        for f in self.prog.functions:
            self.check_fun(f)
        return TypedProgram(self.prog, self.sites)

    def check_fun(self, f: N.FunDef) -> None:
        env = dict(f.params)
        if len(set(f.param_names)) != len(f.params):
            raise TypeError_(f"{f.name}: duplicate parameter names")
        if f.precondition is not None:
            self.check(f.precondition, env, f, expected=N.BOOL)
        self.check(f.body, env, f, expected=f.return_type)
        if f.postcondition is not None:
            binder, post = f.postcondition
            post_env = dict(env)
            post_env[binder] = f.return_type
            self.check(post, post_env, f, expected=N.BOOL)

    def check(self, e: N.Expr, env: dict[str, N.TypeExpr], fun: N.FunDef,
              expected: Optional[N.TypeExpr] = None) -> N.TypeExpr:
        t = self.infer(e, env, fun)
        if expected is not None and t != expected:
            raise TypeError_(
                f"{fun.name}: expected {expected!r} but found {t!r} in {e!r}")
        return t

    def infer(self, e: N.Expr, env: dict[str, N.TypeExpr], fun: N.FunDef) -> N.TypeExpr:
        t = self._infer(e, env, fun)
        e.ty = t
        return t

    def _infer(self, e: N.Expr, env: dict[str, N.TypeExpr], fun: N.FunDef) -> N.TypeExpr:
        if isinstance(e, N.Var):
            if e.name not in env:
                raise TypeError_(f"{fun.name}: unknown identifier {e.name}")
            return env[e.name]
        if isinstance(e, N.IntLit):
            return N.INT
        if isinstance(e, N.BoolLit):
            return N.BOOL
        if isinstance(e, N.SetLit):
            for x in e.elements:
                self.check(x, env, fun, N.INT)
            return N.SETINT
        if isinstance(e, N.UnOp):
            if e.op == "neg":
                self.check(e.operand, env, fun, N.INT)
                return N.INT
            self.check(e.operand, env, fun, N.BOOL)
            return N.BOOL
        if isinstance(e, N.BinOp):
            return self._infer_binop(e, env, fun)
        if isinstance(e, N.If):
            self.check(e.cond, env, fun, N.BOOL)
            t1 = self.infer(e.then, env, fun)
            t2 = self.infer(e.els, env, fun)
            if t1 != t2:
                raise TypeError_(f"{fun.name}: if branches differ: {t1!r} vs {t2!r}")
            return t1
        if isinstance(e, N.Let):
            bt = self.infer(e.bound, env, fun)
            inner = dict(env)
            inner[e.name] = bt
            return self.infer(e.body, inner, fun)
        if isinstance(e, N.Match):
            return self._infer_match(e, env, fun)
        if isinstance(e, N.Call):
            if e.fun not in self.funs:
                raise TypeError_(f"{fun.name}: unknown function {e.fun}")
            callee = self.funs[e.fun]
            if len(e.args) != len(callee.params):
                raise TypeError_(
                    f"{fun.name}: {e.fun} expects {len(callee.params)} arguments, "
                    f"got {len(e.args)}")
            for a, (_, pt) in zip(e.args, callee.params):
                self.check(a, env, fun, pt)
            return callee.return_type
        if isinstance(e, N.CtorApp):
            if e.ctor not in self.ctors:
                raise TypeError_(f"{fun.name}: unknown constructor {e.ctor}")
            adt, ctor = self.ctors[e.ctor]
            if len(e.args) != ctor.arity:
                raise TypeError_(
                    f"{fun.name}: {e.ctor} expects {ctor.arity} arguments, "
                    f"got {len(e.args)}")
            for a, (_, ft) in zip(e.args, ctor.fields):
                self.check(a, env, fun, ft)
            return N.AdtType(adt.name)
        if isinstance(e, N.TupleCtor):
            if len(e.args) < 2:
                raise TypeError_(f"{fun.name}: tuple needs at least two elements")
            return N.TupleType(tuple(self.infer(a, env, fun) for a in e.args))
        if isinstance(e, N.TupleSel):
            tt = self.infer(e.tup, env, fun)
            if not isinstance(tt, N.TupleType):
                raise TypeError_(f"{fun.name}: ._{e.index} applied to non-tuple {tt!r}")
            if not (1 <= e.index <= len(tt.elements)):
                raise TypeError_(f"{fun.name}: tuple index {e.index} out of range")
            return tt.elements[e.index - 1]
        if isinstance(e, N.Choose):
            for _, t in e.out_params:
                _check_type_wf(t, self.adts)
            inner = dict(env)
            for n, t in e.out_params:
                inner[n] = t
            self.check(e.predicate, inner, fun, N.BOOL)
            ordinal = sum(1 for s in self.sites if s.function == fun.name)
            e.site_id = f"{fun.name}/{ordinal}"
            self.sites.append(ChooseSite(e.site_id, fun.name, e))
            if len(e.out_params) == 1:
                return e.out_params[0][1]
            return N.TupleType(tuple(t for _, t in e.out_params))
        raise TypeError_(f"{fun.name}: cannot type {e!r}")

    def _infer_binop(self, e: N.BinOp, env: dict[str, N.TypeExpr], fun: N.FunDef) -> N.TypeExpr:
        op = e.op
        if op in N.ARITH_OPS:
            self.check(e.left, env, fun, N.INT)
            self.check(e.right, env, fun, N.INT)
            return N.INT
        if op in ("<", "<="):
            self.check(e.left, env, fun, N.INT)
            self.check(e.right, env, fun, N.INT)
            return N.BOOL
        if op in ("==", "!="):
            lt = self.infer(e.left, env, fun)
            rt = self.infer(e.right, env, fun)
            if lt != rt:
                raise TypeError_(f"{fun.name}: comparing {lt!r} with {rt!r}")
            return N.BOOL
        if op in N.BOOL_OPS:
            self.check(e.left, env, fun, N.BOOL)
            self.check(e.right, env, fun, N.BOOL)
            return N.BOOL
        if op in N.SET_OPS:
            self.check(e.left, env, fun, N.SETINT)
            self.check(e.right, env, fun, N.SETINT)
            return N.SETINT
        if op == "in":
            self.check(e.left, env, fun, N.INT)
            self.check(e.right, env, fun, N.SETINT)
            return N.BOOL
        raise TypeError_(f"{fun.name}: unknown operator {op}")

    def _infer_match(self, e: N.Match, env: dict[str, N.TypeExpr], fun: N.FunDef) -> N.TypeExpr:
        st = self.infer(e.scrutinee, env, fun)
        result: Optional[N.TypeExpr] = None
        for c in e.cases:
            binders = N.pattern_binders(c.pattern)
            if len(binders) != len(set(binders)):
                raise TypeError_(f"{fun.name}: repeated binder in pattern")
            bound = self._check_pattern(c.pattern, st, fun)
            inner = dict(env)
            inner.update(bound)
            if c.guard is not None:
                self.check(c.guard, inner, fun, N.BOOL)
            bt = self.infer(c.body, inner, fun)
            if result is None:
                result = bt
            elif result != bt:
                raise TypeError_(f"{fun.name}: match cases differ: {result!r} vs {bt!r}")
        if result is None:
            raise TypeError_(f"{fun.name}: match with no cases")
        return result

    def _check_pattern(self, p: N.Pattern, t: N.TypeExpr,
                       fun: N.FunDef) -> dict[str, N.TypeExpr]:
        if isinstance(p, N.Wildcard):
            return {}
        if isinstance(p, N.Binder):
            out = {p.name: t}
            if p.sub is not None:
                out.update(self._check_pattern(p.sub, t, fun))
            return out
        if isinstance(p, N.LiteralPattern):
            lt = N.INT if isinstance(p.value, N.IntLit) else N.BOOL
            if lt != t:
                raise TypeError_(f"{fun.name}: literal pattern of type {lt!r} "
                                 f"against scrutinee of type {t!r}")
            return {}
        if isinstance(p, N.CtorPattern):
            if p.ctor not in self.ctors:
                raise TypeError_(f"{fun.name}: unknown constructor {p.ctor}")
            adt, ctor = self.ctors[p.ctor]
            if not (isinstance(t, N.AdtType) and t.name == adt.name):
                raise TypeError_(f"{fun.name}: pattern {p.ctor} of type {adt.name} "
                                 f"against scrutinee of type {t!r}")
            if len(p.subpatterns) != ctor.arity:
                raise TypeError_(f"{fun.name}: {p.ctor} pattern arity mismatch")
            out: dict[str, N.TypeExpr] = {}
            for sub, (_, ft) in zip(p.subpatterns, ctor.fields):
                out.update(self._check_pattern(sub, ft, fun))
            return out
        raise TypeError_(str(p))


def typecheck(prog: N.Program) -> tuple[Optional[TypedProgram], list[Diagnostic]]:
    """Check a parsed program; diagnostics carry no position (declaration-level)."""
    try:
        return Checker(prog).run(), []
    except TypeError_ as e:
        return None, [Diagnostic(0, 0, e.message)]


def check_expr(tp: TypedProgram, e: N.Expr, env: dict[str, N.TypeExpr],
               expected: Optional[N.TypeExpr] = None) -> N.TypeExpr:
    """(Re)annotate a standalone expression against the program's declarations."""
    chk = Checker(tp.program)
    chk.ctors = {c.name: (a, c) for a in tp.program.adts for c in a.constructors}
    dummy = N.FunDef("<expr>", [], N.BOOL, N.BoolLit(True))
    t = chk.infer(e, env, dummy)
    if expected is not None and t != expected:
        raise TypeError_(f"expected {expected!r} but found {t!r} in {e!r}")
    return t
