"""Synthesis problems, solutions, and the two-sided validity check."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

from ..lang import nodes as N
from ..lang import parse, print_program
from ..lang.check import TypedProgram, typecheck
from ..solver import (Budget, CancelToken, Invalid, Sat, Unknown, Unsat, Valid,
                      check_sat, check_valid)


@dataclass
class HostSpec:
    """The choose-bodied function a problem descends from; enables guarded
    self-calls in term generators."""
    name: str
    params: list[tuple[str, N.TypeExpr]]


@dataclass
class SynthesisProblem:
    program: TypedProgram
    inputs: list[tuple[str, N.TypeExpr]]
    path_condition: N.Expr
    predicate: N.Expr
    outputs: list[tuple[str, N.TypeExpr]]
    host: Optional[HostSpec] = None
    # host param name -> in-scope variables strictly smaller than it
    smaller: dict[str, set[str]] = field(default_factory=dict)
    branch_depth: int = 0
    allow_recursion: bool = True

    def __post_init__(self) -> None:
        in_names = {n for n, _ in self.inputs}
        out_names = {n for n, _ in self.outputs}
        fv_pred = N.free_vars(self.predicate)
        fv_path = N.free_vars(self.path_condition)
        assert fv_pred <= in_names | out_names, \
            f"predicate mentions {fv_pred - in_names - out_names}"
        assert fv_path <= in_names, f"path mentions {fv_path - in_names}"

    @property
    def output_type(self) -> N.TypeExpr:
        if len(self.outputs) == 1:
            return self.outputs[0][1]
        return N.TupleType(tuple(t for _, t in self.outputs))

    def env(self) -> dict[str, N.TypeExpr]:
        return dict(self.inputs)

    def key(self) -> tuple:
        """Structural identity modulo renaming: inputs are numbered by first
        occurrence in the predicate and path condition, so twin subproblems
        that differ only in fresh binder names share a key."""
        from ..streams import _type_key
        order: list[str] = []
        in_names = {n for n, _ in self.inputs}
        for e in (self.predicate, self.path_condition):
            for sub in N.walk(e):
                if isinstance(sub, N.Var) and sub.name in in_names \
                        and sub.name not in order:
                    order.append(sub.name)
        for n, _ in self.inputs:
            if n not in order:
                order.append(n)
        ren = {n: N.Var(f"@{i}") for i, n in enumerate(order)}
        ren.update({n: N.Var(f"#{i}") for i, (n, _) in enumerate(self.outputs)})
        types = dict(self.inputs)
        return (tuple(_type_key(types[n]) for n in order),
                N.expr_key(N.substitute(self.path_condition, dict(ren))),
                N.expr_key(N.substitute(self.predicate, dict(ren))),
                tuple(_type_key(t) for _, t in self.outputs))

    def predicate_with(self, term: N.Expr) -> N.Expr:
        """predicate[outputs -> term], sharing the term through a binding."""
        return self._with_term(self.predicate, term)

    def _with_term(self, body: N.Expr, term: N.Expr) -> N.Expr:
        if len(self.outputs) == 1:
            name = self.outputs[0][0]
            if isinstance(term, (N.Var, N.IntLit, N.BoolLit)):
                return N.substitute(body, {name: term})
            tmp = N.fresh_name("__out", N.free_vars(body) | {n for n, _ in self.inputs})
            return N.Let(tmp, term, N.substitute(body, {name: N.Var(tmp)}))
        tmp = N.fresh_name("__out", N.free_vars(body) | {n for n, _ in self.inputs})
        binding = {name: N.TupleSel(N.Var(tmp), i + 1)
                   for i, (name, _) in enumerate(self.outputs)}
        return N.Let(tmp, term, N.substitute(body, binding))

    def conjuncts_with(self, term: N.Expr) -> list[N.Expr]:
        """Top-level predicate conjuncts, each with term substituted; checking
        each separately keeps refutation queries within a single theory's
        comfortable fragment."""
        return [self._with_term(c, term) for c in N.conjuncts(self.predicate)]

    def spec_post(self) -> tuple[str, N.Expr]:
        """The predicate as a postcondition over a fresh result binder."""
        binder = N.fresh_name("res", {n for n, _ in self.inputs + self.outputs})
        if len(self.outputs) == 1:
            post = N.substitute(self.predicate, {self.outputs[0][0]: N.Var(binder)})
        else:
            post = N.substitute(self.predicate,
                                {name: N.TupleSel(N.Var(binder), i + 1)
                                 for i, (name, _) in enumerate(self.outputs)})
        return binder, post


@dataclass
class SynthSolution:
    precondition: N.Expr
    term: N.Expr
    defined_funs: list[N.FunDef] = field(default_factory=list)
    proved: bool = True  # False when accepted on an Unknown verdict


def inline_lets(e: N.Expr) -> N.Expr:
    """Substitute let bindings away so the conjunct structure is visible to
    the rules; the language is pure, so duplication preserves meaning."""
    if isinstance(e, N.Let):
        return inline_lets(N.substitute(inline_lets(e.body), {e.name: inline_lets(e.bound)}))
    if isinstance(e, N.BinOp):
        out = N.BinOp(e.op, inline_lets(e.left), inline_lets(e.right))
        out.ty = e.ty
        return out
    if isinstance(e, N.UnOp):
        out = N.UnOp(e.op, inline_lets(e.operand))
        out.ty = e.ty
        return out
    if isinstance(e, N.If):
        out = N.If(inline_lets(e.cond), inline_lets(e.then), inline_lets(e.els))
        out.ty = e.ty
        return out
    return e


def problem_of_choose(program: TypedProgram, site_id: str) -> SynthesisProblem:
    """Root problem of a choose site: path = host require, spec = predicate."""
    site = program.site(site_id)
    host = program.function(site.function)
    assert isinstance(host.body, N.Choose), "only whole-body holes are synthesized"
    pre = host.precondition or N.BoolLit(True)
    smaller = {p: set() for p in host.param_names}
    return SynthesisProblem(
        program=program,
        inputs=list(host.params),
        path_condition=inline_lets(pre),
        predicate=inline_lets(site.choose.predicate),
        outputs=list(site.choose.out_params),
        host=HostSpec(host.name, list(host.params)),
        smaller=smaller,
    )


def extend_program(program: TypedProgram, funs: list[N.FunDef]) -> TypedProgram:
    """Program plus extra definitions, re-checked."""
    if not funs:
        return program
    base = program.program
    merged = N.Program(list(base.adts), list(base.functions) + list(funs))
    # round-trip through the printer to keep a single source of truth
    src = print_program(merged)
    prog, diags = parse(src)
    assert prog is not None, diags
    tp, tdiags = typecheck(prog)
    assert tp is not None, tdiags
    return tp


def exec_posts_for(problem: SynthesisProblem) -> dict[str, tuple[str, N.Expr]]:
    """Specification-as-postcondition map for the function under synthesis."""
    if problem.host is None:
        return {}
    tp = problem.program
    try:
        host = tp.function(problem.host.name)
    except KeyError:
        return {}
    if not isinstance(host.body, N.Choose):
        return {}
    choose = host.body
    binder = "__spec_res"
    if len(choose.out_params) == 1:
        post = N.substitute(choose.predicate,
                            {choose.out_params[0][0]: N.Var(binder)})
    else:
        post = N.substitute(choose.predicate,
                            {name: N.TupleSel(N.Var(binder), i + 1)
                             for i, (name, _) in enumerate(choose.out_params)})
    return {host.name: (binder, post)}


def shrink(tp: TypedProgram, model, pre: N.Expr, goal: N.Expr):
    from ..solver import shrink_model
    return shrink_model(tp, N.conj(pre, N.neg(goal)), model)


def solution_is_valid(problem: SynthesisProblem, solution: SynthSolution,
                      budget: Optional[Budget] = None,
                      cancel: Optional[CancelToken] = None,
                      check_domain: bool = True,
                      minimize: bool = False):
    """Both solution conditions: the term realizes the predicate whenever the
    path condition and precondition hold, and the precondition excludes no
    input that some output could serve.

    Returns Valid | Invalid(model) | Unknown.
    """
    budget = budget or Budget()
    tp = extend_program(problem.program, solution.defined_funs)
    posts = exec_posts_for(problem)
    env = problem.env()

    # relation refinement, one predicate conjunct at a time
    pre = N.conj(problem.path_condition, solution.precondition)
    r = Valid()
    for goal in problem.conjuncts_with(solution.term):
        v = check_sat(tp, N.conj(pre, N.neg(goal)), env, budget,
                      exec_posts=posts, cancel=cancel)
        if isinstance(v, Sat):
            model = shrink(tp, v.model, pre, goal) if minimize else v.model
            return Invalid(model)
        if isinstance(v, Unknown):
            r = Unknown(v.reason)
    if isinstance(r, Invalid):
        return r
    if not check_domain:
        return r if isinstance(r, Valid) else Unknown(getattr(r, "reason", "relation"))

    if isinstance(solution.precondition, N.BoolLit) and solution.precondition.value:
        return r if isinstance(r, Valid) else Unknown(getattr(r, "reason", "relation"))

    # a witness of path /\ !P /\ predicate[fresh outputs] refutes domain preservation
    dom_env = dict(env)
    for name, ty in problem.outputs:
        dom_env[name] = ty
    dom = N.conj(problem.path_condition, N.neg(solution.precondition),
                 problem.predicate)
    d = check_sat(tp, dom, dom_env, budget, exec_posts=posts, cancel=cancel)
    if isinstance(d, Sat):
        cex = {k: v for k, v in d.model.items() if k in dict(problem.inputs)}
        return Invalid(cex)
    if isinstance(r, Valid) and isinstance(d, Unsat):
        return Valid()
    reasons = [getattr(x, "reason", "") for x in (r, d) if isinstance(x, Unknown)]
    return Unknown("; ".join(reasons) or "validation incomplete")
