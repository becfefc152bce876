"""Verification conditions, structural termination checking, reports."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional, Union

from .lang import nodes as N
from .lang.check import TypedProgram
from .solver.session import (Budget, CancelToken, CheckResult, Invalid, Unknown,
                             Valid, check_valid)


@dataclass
class VC:
    kind: str          # "termination" | "match-exhaustiveness" | "call-precondition" | "postcondition"
    function: str
    formula: Optional[N.Expr]   # None for termination obligations
    note: str = ""


@dataclass
class VCOutcome:
    vc: VC
    status: str        # "valid" | "invalid" | "unknown"
    counterexample: Optional[dict] = None
    reason: str = ""
    seconds: float = 0.0


@dataclass
class VerificationReport:
    function: str
    outcomes: list[VCOutcome] = field(default_factory=list)

    @property
    def all_valid(self) -> bool:
        return all(o.status == "valid" for o in self.outcomes)


# --- termination ----------------------------------------------------------------

@dataclass
class Terminating:
    position: int


@dataclass
class TerminationUnknown:
    witness: str  # offending call site rendered as text


def _call_graph(program: TypedProgram) -> dict[str, set[str]]:
    out: dict[str, set[str]] = {}
    for f in program.functions:
        calls = N.called_functions(f.body)
        if f.precondition is not None:
            calls |= N.called_functions(f.precondition)
        if f.postcondition is not None:
            calls |= N.called_functions(f.postcondition[1])
        out[f.name] = {c for c in calls}
    return out


def _sccs(graph: dict[str, set[str]]) -> list[set[str]]:
    index: dict[str, int] = {}
    low: dict[str, int] = {}
    stack: list[str] = []
    on: set[str] = set()
    out: list[set[str]] = []
    counter = [0]

    def visit(v: str) -> None:
        index[v] = low[v] = counter[0]
        counter[0] += 1
        stack.append(v)
        on.add(v)
        for w in sorted(graph.get(v, ())):
            if w not in graph:
                continue
            if w not in index:
                visit(w)
                low[v] = min(low[v], low[w])
            elif w in on:
                low[v] = min(low[v], index[w])
        if low[v] == index[v]:
            comp = set()
            while True:
                w = stack.pop()
                on.discard(w)
                comp.add(w)
                if w == v:
                    break
            out.append(comp)

    for v in sorted(graph):
        if v not in index:
            visit(v)
    return out


def _collect_calls(f: N.FunDef):
    """Yield (callee, args, var->(root param, strictly smaller)) at each call site."""
    init = {p: (p, False) for p in f.param_names}

    def pattern_env(pat: N.Pattern, origin: Optional[tuple[str, bool]]):
        env: dict[str, tuple[str, bool]] = {}
        if origin is None:
            return env
        if isinstance(pat, N.Binder):
            env[pat.name] = origin
            if pat.sub is not None:
                env.update(pattern_env(pat.sub, origin))
        elif isinstance(pat, N.CtorPattern):
            root, _ = origin
            for sub in pat.subpatterns:
                env.update(pattern_env(sub, (root, True)))
        return env

    out = []

    def walk(e: N.Expr, env: dict[str, tuple[str, bool]]) -> None:
        if isinstance(e, N.Call):
            out.append((e.fun, e.args, dict(env)))
        if isinstance(e, N.Let):
            walk(e.bound, env)
            inner = dict(env)
            if isinstance(e.bound, N.Var) and e.bound.name in env:
                inner[e.name] = env[e.bound.name]
            else:
                inner.pop(e.name, None)
            walk(e.body, inner)
            return
        if isinstance(e, N.Match):
            walk(e.scrutinee, env)
            origin = env.get(e.scrutinee.name) if isinstance(e.scrutinee, N.Var) else None
            for case in e.cases:
                inner = dict(env)
                inner.update(pattern_env(case.pattern, origin))
                if case.guard is not None:
                    walk(case.guard, inner)
                walk(case.body, inner)
            return
        for c in N.children(e):
            walk(c, env)

    walk(f.body, init)
    return out


def check_termination(program: TypedProgram, fun: Union[str, N.FunDef]):
    """Structural-descent check; Terminating or TerminationUnknown."""
    f = program.function(fun) if isinstance(fun, str) else fun
    graph = _call_graph(program)
    comp = next((c for c in _sccs(graph) if f.name in c), {f.name})
    recursive = f.name in graph.get(f.name, set()) or len(comp) > 1
    if not recursive:
        return Terminating(-1)
    members = {name: program.function(name) for name in comp}
    arities = {name: len(g.params) for name, g in members.items()}
    max_pos = min(arities.values())
    for k in range(max_pos):
        ok = True
        witness = ""
        for name, g in members.items():
            for callee, args, env in _collect_calls(g):
                if callee not in comp:
                    continue
                a = args[k] if k < len(args) else None
                good = (isinstance(a, N.Var) and a.name in env
                        and env[a.name][0] == g.param_names[k]
                        and env[a.name][1])
                if not good:
                    ok = False
                    witness = f"{name} -> {callee}"
                    break
            if not ok:
                break
        if ok:
            return Terminating(k)
    return TerminationUnknown(witness or f.name)


def terminating_functions(program: TypedProgram) -> set[str]:
    cached = getattr(program, "_terminating_cache", None)
    if cached is None:
        cached = set()
        for f in program.functions:
            if isinstance(f.body, N.Choose):
                continue
            if isinstance(check_termination(program, f), Terminating):
                cached.add(f.name)
        program._terminating_cache = cached
    return cached


# --- VC generation ----------------------------------------------------------------

def generate_vcs(program: TypedProgram, fun: Union[str, N.FunDef]) -> list[VC]:
    f = program.function(fun) if isinstance(fun, str) else fun
    assert not isinstance(f.body, N.Choose), "synthesis holes have no VCs"
    vcs: list[VC] = [VC("termination", f.name, None)]
    pre = f.precondition or N.BoolLit(True)

    # match exhaustiveness: context rebuilt around each match site
    for site, ctx_builder in _match_sites(f.body):
        cover = N.Match(site.scrutinee,
                        [N.MatchCase(c.pattern, c.guard, N.BoolLit(True))
                         for c in site.cases] +
                        [N.MatchCase(N.Wildcard(), None, N.BoolLit(False))])
        vcs.append(VC("match-exhaustiveness", f.name,
                      N.BinOp("||", N.UnOp("not", pre), ctx_builder(cover)),
                      note="match covers all values"))

    # call preconditions
    for callee, args, ctx_builder in _call_sites(program, f.body):
        g = program.function(callee)
        if g.precondition is None:
            continue
        inst = N.substitute(g.precondition,
                            {p: a for (p, _), a in zip(g.params, args)})
        vcs.append(VC("call-precondition", f.name,
                      N.BinOp("||", N.UnOp("not", pre), ctx_builder(inst)),
                      note=f"require of {callee}"))

    if f.postcondition is not None:
        binder, post = f.postcondition
        body_val = N.Let(binder, f.body, post)
        vcs.append(VC("postcondition", f.name,
                      N.BinOp("||", N.UnOp("not", pre), body_val)))
    return vcs


def _match_sites(body: N.Expr):
    """(match node, context builder) pairs; the builder re-wraps an obligation
    in the enclosing binding structure with `true` elsewhere."""
    sites = []

    def go(e: N.Expr, wrap) -> None:
        if isinstance(e, N.Match):
            sites.append((e, wrap))
            for case in e.cases:
                def wrap_case(obl, case=case, e=e, wrap=wrap):
                    inner = N.Match(e.scrutinee,
                                    [N.MatchCase(c.pattern, c.guard,
                                                 obl if c is case else N.BoolLit(True))
                                     for c in e.cases] +
                                    [N.MatchCase(N.Wildcard(), None, N.BoolLit(True))])
                    return wrap(inner)
                go(case.body, wrap_case)
            go(e.scrutinee, wrap)
            return
        if isinstance(e, N.Let):
            go(e.bound, wrap)

            def wrap_let(obl, e=e, wrap=wrap):
                return wrap(N.Let(e.name, e.bound, obl))
            go(e.body, wrap_let)
            return
        if isinstance(e, N.If):
            go(e.cond, wrap)

            def wrap_then(obl, e=e, wrap=wrap):
                return wrap(N.If(e.cond, obl, N.BoolLit(True)))

            def wrap_else(obl, e=e, wrap=wrap):
                return wrap(N.If(e.cond, N.BoolLit(True), obl))
            go(e.then, wrap_then)
            go(e.els, wrap_else)
            return
        for c in N.children(e):
            go(c, wrap)

    go(body, lambda obl: obl)
    return sites


def _call_sites(program: TypedProgram, body: N.Expr):
    sites = []

    def go(e: N.Expr, wrap) -> None:
        if isinstance(e, N.Call):
            sites.append((e.fun, e.args, wrap))
        if isinstance(e, N.Match):
            go(e.scrutinee, wrap)
            for case in e.cases:
                def wrap_case(obl, case=case, e=e, wrap=wrap):
                    inner = N.Match(e.scrutinee,
                                    [N.MatchCase(c.pattern, c.guard,
                                                 obl if c is case else N.BoolLit(True))
                                     for c in e.cases] +
                                    [N.MatchCase(N.Wildcard(), None, N.BoolLit(True))])
                    return wrap(inner)
                if case.guard is not None:
                    go(case.guard, wrap_case)
                go(case.body, wrap_case)
            return
        if isinstance(e, N.Let):
            go(e.bound, wrap)

            def wrap_let(obl, e=e, wrap=wrap):
                return wrap(N.Let(e.name, e.bound, obl))
            go(e.body, wrap_let)
            return
        if isinstance(e, N.If):
            go(e.cond, wrap)

            def wrap_then(obl, e=e, wrap=wrap):
                return wrap(N.If(e.cond, obl, N.BoolLit(True)))

            def wrap_else(obl, e=e, wrap=wrap):
                return wrap(N.If(e.cond, N.BoolLit(True), obl))
            go(e.then, wrap_then)
            go(e.els, wrap_else)
            return
        for c in N.children(e):
            go(c, wrap)

    go(body, lambda obl: obl)
    return sites


def verify_function(program: TypedProgram, fun: Union[str, N.FunDef],
                    budget: Optional[Budget] = None,
                    cancel: Optional[CancelToken] = None) -> VerificationReport:
    f = program.function(fun) if isinstance(fun, str) else fun
    budget = budget or Budget()
    report = VerificationReport(f.name)
    for vc in generate_vcs(program, f):
        t0 = time.monotonic()
        if vc.kind == "termination":
            r = check_termination(program, f)
            if isinstance(r, Terminating):
                report.outcomes.append(VCOutcome(vc, "valid", seconds=time.monotonic() - t0))
            else:
                report.outcomes.append(VCOutcome(vc, "unknown",
                                                 reason=f"no structural descent ({r.witness})",
                                                 seconds=time.monotonic() - t0))
            continue
        env = dict(f.params)
        res = check_valid(program, vc.formula, env, budget, cancel=cancel,
                          minimize_model=True)
        dt = time.monotonic() - t0
        if isinstance(res, Valid):
            report.outcomes.append(VCOutcome(vc, "valid", seconds=dt))
        elif isinstance(res, Invalid):
            report.outcomes.append(VCOutcome(vc, "invalid",
                                             counterexample=res.counterexample,
                                             seconds=dt))
        else:
            report.outcomes.append(VCOutcome(vc, "unknown", reason=res.reason,
                                             seconds=dt))
    return report
