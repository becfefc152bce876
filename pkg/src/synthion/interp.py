"""Big-step evaluator with a step budget and optional contract checking.

Failures are reported as EvalOutcome values, never as raised exceptions at the
public entry points.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass
from typing import Optional, Union

from .lang import nodes as N
from .lang.check import TypedProgram
from .values import AdtVal, BoolVal, IntVal, Model, SetVal, TupleVal, Value, mk_set

DEFAULT_FUEL = 100_000

if sys.getrecursionlimit() < 20_000:
    sys.setrecursionlimit(20_000)


class EvalOutcome:
    """Non-value result of an evaluation."""


@dataclass
class MatchFailure(EvalOutcome):
    site: str  # function name or "<expr>"


@dataclass
class ContractViolation(EvalOutcome):
    site: str
    which: str  # "require" | "ensuring"
    witness: Model


@dataclass
class FuelExhausted(EvalOutcome):
    pass


@dataclass
class ChooseEncountered(EvalOutcome):
    site: str


class _Signal(Exception):
    def __init__(self, outcome: EvalOutcome):
        self.outcome = outcome


class _Fuel:
    __slots__ = ("left",)

    def __init__(self, n: int):
        self.left = n

    def tick(self) -> None:
        self.left -= 1
        if self.left < 0:
            raise _Signal(FuelExhausted())


def eval_expr(program: TypedProgram, env: Model, e: N.Expr,
              fuel: int = DEFAULT_FUEL,
              check_contracts: bool = False,
              choose_oracle=None) -> Union[Value, EvalOutcome]:
    """Evaluate e under env; free variables of e must be bound in env.

    choose_oracle(fun_name, arg_values) may supply a value for calls whose
    body is a specification hole; without one such calls are an outcome.
    """
    try:
        return _eval(program, dict(env), e, _Fuel(fuel), check_contracts,
                     choose_oracle)
    except _Signal as s:
        return s.outcome
    except RecursionError:
        return FuelExhausted()


def eval_predicate(program: TypedProgram, env: Model, predicate: N.Expr,
                   fuel: int = DEFAULT_FUEL,
                   check_contracts: bool = False,
                   choose_oracle=None) -> Union[bool, EvalOutcome]:
    """Evaluate a boolean predicate; any outcome other than True is a non-pass."""
    r = eval_expr(program, env, predicate, fuel, check_contracts, choose_oracle)
    if isinstance(r, BoolVal):
        return r.value
    return r


def eval_call(program: TypedProgram, fun_name: str, args: list[Value],
              fuel: int = DEFAULT_FUEL,
              check_contracts: bool = False) -> Union[Value, EvalOutcome]:
    f = program.function(fun_name)
    call = N.Call(fun_name, [N.Var(f"__a{i}") for i in range(len(args))])
    env = {f"__a{i}": v for i, v in enumerate(args)}
    return eval_expr(program, env, call, fuel, check_contracts)


def _eval(p: TypedProgram, env: Model, e: N.Expr, fuel: _Fuel,
          cc: bool, oracle=None) -> Value:
    fuel.tick()
    if isinstance(e, N.Var):
        try:
            return env[e.name]
        except KeyError:
            raise _Signal(MatchFailure(f"unbound {e.name}")) from None
    if isinstance(e, N.IntLit):
        return IntVal(e.value)
    if isinstance(e, N.BoolLit):
        return BoolVal(e.value)
    if isinstance(e, N.SetLit):
        elems = [_as_int(_eval(p, env, x, fuel, cc, oracle)) for x in e.elements]
        return mk_set(elems)
    if isinstance(e, N.UnOp):
        v = _eval(p, env, e.operand, fuel, cc, oracle)
        if e.op == "neg":
            return IntVal(-_as_int(v))
        return BoolVal(not _as_bool(v))
    if isinstance(e, N.BinOp):
        return _eval_binop(p, env, e, fuel, cc, oracle)
    if isinstance(e, N.If):
        c = _as_bool(_eval(p, env, e.cond, fuel, cc, oracle))
        return _eval(p, env, e.then if c else e.els, fuel, cc, oracle)
    if isinstance(e, N.Let):
        v = _eval(p, env, e.bound, fuel, cc, oracle)
        inner = dict(env)
        inner[e.name] = v
        return _eval(p, inner, e.body, fuel, cc, oracle)
    if isinstance(e, N.Match):
        scrut = _eval(p, env, e.scrutinee, fuel, cc, oracle)
        for case in e.cases:
            bound = match_pattern(case.pattern, scrut)
            if bound is None:
                continue
            inner = dict(env)
            inner.update(bound)
            if case.guard is not None:
                if not _as_bool(_eval(p, inner, case.guard, fuel, cc, oracle)):
                    continue
            return _eval(p, inner, case.body, fuel, cc, oracle)
        raise _Signal(MatchFailure("<match>"))
    if isinstance(e, N.Call):
        f = p.function(e.fun)
        args = [_eval(p, env, a, fuel, cc, oracle) for a in e.args]
        call_env = {name: v for (name, _), v in zip(f.params, args)}
        if cc and f.precondition is not None:
            if not _as_bool(_eval(p, dict(call_env), f.precondition, fuel, cc, oracle)):
                raise _Signal(ContractViolation(e.fun, "require", dict(call_env)))
        if isinstance(f.body, N.Choose) and oracle is not None:
            w = oracle(e.fun, tuple(args))
            if w is not None:
                return w
        result = _eval(p, call_env, f.body, fuel, cc, oracle)
        if cc and f.postcondition is not None:
            binder, post = f.postcondition
            post_env = dict(call_env)
            post_env[binder] = result
            if not _as_bool(_eval(p, post_env, post, fuel, cc, oracle)):
                raise _Signal(ContractViolation(e.fun, "ensuring", post_env))
        return result
    if isinstance(e, N.CtorApp):
        return AdtVal(e.ctor, tuple(_eval(p, env, a, fuel, cc, oracle) for a in e.args))
    if isinstance(e, N.TupleCtor):
        return TupleVal(tuple(_eval(p, env, a, fuel, cc, oracle) for a in e.args))
    if isinstance(e, N.TupleSel):
        t = _eval(p, env, e.tup, fuel, cc, oracle)
        if not isinstance(t, TupleVal):
            raise _Signal(MatchFailure("tuple selection on non-tuple"))
        return t.elements[e.index - 1]
    if isinstance(e, N.Choose):
        raise _Signal(ChooseEncountered(e.site_id or "<choose>"))
    raise TypeError(e)


def _eval_binop(p: TypedProgram, env: Model, e: N.BinOp, fuel: _Fuel, cc: bool,
                oracle=None) -> Value:
    op = e.op
    if op == "&&":
        if not _as_bool(_eval(p, env, e.left, fuel, cc, oracle)):
            return BoolVal(False)
        return BoolVal(_as_bool(_eval(p, env, e.right, fuel, cc, oracle)))
    if op == "||":
        if _as_bool(_eval(p, env, e.left, fuel, cc, oracle)):
            return BoolVal(True)
        return BoolVal(_as_bool(_eval(p, env, e.right, fuel, cc, oracle)))
    l = _eval(p, env, e.left, fuel, cc, oracle)
    r = _eval(p, env, e.right, fuel, cc, oracle)
    if op == "+":
        return IntVal(_as_int(l) + _as_int(r))
    if op == "-":
        return IntVal(_as_int(l) - _as_int(r))
    if op == "*":
        return IntVal(_as_int(l) * _as_int(r))
    if op == "<":
        return BoolVal(_as_int(l) < _as_int(r))
    if op == "<=":
        return BoolVal(_as_int(l) <= _as_int(r))
    if op == "==":
        return BoolVal(l == r)
    if op == "!=":
        return BoolVal(l != r)
    if op == "++":
        return mk_set(_as_setv(l).elements + _as_setv(r).elements)
    if op == "--":
        rs = set(_as_setv(r).elements)
        return mk_set(x for x in _as_setv(l).elements if x not in rs)
    if op == "&":
        rs = set(_as_setv(r).elements)
        return mk_set(x for x in _as_setv(l).elements if x in rs)
    if op == "in":
        return BoolVal(_as_int(l) in _as_setv(r).elements)
    raise TypeError(op)


def match_pattern(pat: N.Pattern, v: Value) -> Optional[dict[str, Value]]:
    """Bindings if v matches pat, else None."""
    if isinstance(pat, N.Wildcard):
        return {}
    if isinstance(pat, N.Binder):
        out = {pat.name: v}
        if pat.sub is not None:
            inner = match_pattern(pat.sub, v)
            if inner is None:
                return None
            out.update(inner)
        return out
    if isinstance(pat, N.LiteralPattern):
        if isinstance(pat.value, N.IntLit):
            return {} if isinstance(v, IntVal) and v.value == pat.value.value else None
        return {} if isinstance(v, BoolVal) and v.value == pat.value.value else None
    if isinstance(pat, N.CtorPattern):
        if not (isinstance(v, AdtVal) and v.ctor == pat.ctor):
            return None
        out: dict[str, Value] = {}
        for sub, fv in zip(pat.subpatterns, v.fields):
            inner = match_pattern(sub, fv)
            if inner is None:
                return None
            out.update(inner)
        return out
    raise TypeError(pat)


def _as_int(v: Value) -> int:
    if isinstance(v, IntVal):
        return v.value
    raise _Signal(MatchFailure("expected Int"))


def _as_bool(v: Value) -> bool:
    if isinstance(v, BoolVal):
        return v.value
    raise _Signal(MatchFailure("expected Bool"))


def _as_setv(v: Value) -> SetVal:
    if isinstance(v, SetVal):
        return v
    raise _Signal(MatchFailure("expected SetInt"))
