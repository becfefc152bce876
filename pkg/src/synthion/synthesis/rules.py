"""Deductive synthesis rules: each instantiation decomposes a problem into
subproblems (or closes it outright) together with a reconstruction function.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Optional

from ..lang import nodes as N
from ..solver import Budget, Sat, Unknown, Unsat, Valid, check_sat, check_valid
from ..streams import value_stream
from ..values import value_to_expr
from .cost import branch_weight
from .problem import SynthSolution, SynthesisProblem, exec_posts_for
from .simplify import simplify


@dataclass
class RuleApplication:
    rule_name: str
    subproblems: list[SynthesisProblem]
    reconstruct: Callable[[list[SynthSolution]], Optional[SynthSolution]]
    cost_delta: int
    # closing rules solve the problem themselves when selected by the search
    attempt: Optional[Callable] = None
    # premise chaining: called with solutions so far, returns the next
    # subproblem or None when no further premise is needed
    next_subproblem: Optional[Callable] = None


# -- predicate normalization ----------------------------------------------------

def normalize(e: N.Expr) -> N.Expr:
    """Flatten conjunction/disjunction and push negations to atoms."""
    if isinstance(e, N.UnOp) and e.op == "not":
        inner = e.operand
        if isinstance(inner, N.UnOp) and inner.op == "not":
            return normalize(inner.operand)
        if isinstance(inner, N.BinOp):
            if inner.op == "&&":
                return normalize(N.BinOp("||", N.neg(inner.left), N.neg(inner.right)))
            if inner.op == "||":
                return normalize(N.BinOp("&&", N.neg(inner.left), N.neg(inner.right)))
            if inner.op == "<":
                return normalize(N.BinOp("<=", inner.right, inner.left))
            if inner.op == "<=":
                return normalize(N.BinOp("<", inner.right, inner.left))
            if inner.op == "==":
                return N.BinOp("!=", normalize(inner.left), normalize(inner.right))
            if inner.op == "!=":
                return N.BinOp("==", normalize(inner.left), normalize(inner.right))
        if isinstance(inner, N.BoolLit):
            return N.BoolLit(not inner.value)
        return N.UnOp("not", normalize(inner))
    if isinstance(e, N.BinOp) and e.op in ("&&", "||"):
        return N.BinOp(e.op, normalize(e.left), normalize(e.right))
    return e


def _conjuncts(e: N.Expr) -> list[N.Expr]:
    return N.conjuncts(normalize(e))


def _fresh_names(base_names: list[str], avoid: set[str]) -> list[str]:
    out = []
    taken = set(avoid)
    for b in base_names:
        n = N.fresh_name(b, taken)
        taken.add(n)
        out.append(n)
    return out


# -- One-point ---------------------------------------------------------------------

def rule_one_point(problem: SynthesisProblem, ctx) -> list[RuleApplication]:
    conj = _conjuncts(problem.predicate)
    out_names = [n for n, _ in problem.outputs]
    apps: list[RuleApplication] = []
    for i, c in enumerate(conj):
        if not (isinstance(c, N.BinOp) and c.op == "=="):
            continue
        for x0, t in ((c.left, c.right), (c.right, c.left)):
            if not (isinstance(x0, N.Var) and x0.name in out_names):
                continue
            if x0.name in N.free_vars(t):
                continue
            apps.append(_one_point_app(problem, ctx, i, x0.name, t, conj))
            break
    return apps


def _one_point_app(problem: SynthesisProblem, ctx, idx: int, x0: str,
                   t: N.Expr, conj: list[N.Expr]) -> RuleApplication:
    rest = [c for j, c in enumerate(conj) if j != idx]
    phi = simplify(problem.program,
                   N.substitute(N.conj(*rest), {x0: t}) if rest else N.BoolLit(True))
    remaining = [(n, ty) for n, ty in problem.outputs if n != x0]

    if not remaining:
        # pure precondition problem: the equation witness realizes the output
        def attempt(budget=None, cancel=None):
            return SynthSolution(precondition=phi, term=t)
        return RuleApplication("one-point", [], lambda sols: attempt(),
                               cost_delta=0, attempt=attempt)

    sub = SynthesisProblem(
        program=problem.program, inputs=list(problem.inputs),
        path_condition=problem.path_condition, predicate=phi,
        outputs=remaining, host=problem.host,
        smaller={k: set(v) for k, v in problem.smaller.items()},
        branch_depth=problem.branch_depth)

    def reconstruct(sols: list[SynthSolution]) -> SynthSolution:
        s, = sols
        avoid = (N.free_vars(t) | {n for n, _ in problem.inputs}
                 | {n for n, _ in problem.outputs})
        if len(remaining) == 1:
            binding = {remaining[0][0]: N.Var("__v")}
            tmp = N.fresh_name("__v", avoid)
            binding = {remaining[0][0]: N.Var(tmp)}
        else:
            tmp = N.fresh_name("__v", avoid)
            binding = {name: N.TupleSel(N.Var(tmp), i + 1)
                       for i, (name, _) in enumerate(remaining)}
        pieces = []
        for name, _ in problem.outputs:
            if name == x0:
                pieces.append(N.substitute(t, binding))
            else:
                pieces.append(binding[name])
        term = pieces[0] if len(pieces) == 1 else N.TupleCtor(pieces)
        term = N.Let(tmp, s.term, term)
        return SynthSolution(precondition=s.precondition,
                             term=simplify(problem.program, term),
                             defined_funs=s.defined_funs,
                             proved=s.proved)

    return RuleApplication("one-point", [sub], reconstruct, cost_delta=0)


# -- Ground ------------------------------------------------------------------------

def rule_ground(problem: SynthesisProblem, ctx) -> list[RuleApplication]:
    phi = simplify(problem.program, problem.predicate)
    in_names = {n for n, _ in problem.inputs}
    if N.free_vars(phi) & in_names:
        return []

    def attempt(budget=None, cancel=None):
        env = dict(problem.outputs)
        v = check_sat(problem.program, phi, env,
                      budget or ctx.solver_budget(), cancel=cancel)
        if isinstance(v, Sat):
            pieces = [value_to_expr(v.model[name]) for name, _ in problem.outputs]
            term = pieces[0] if len(pieces) == 1 else N.TupleCtor(pieces)
            return SynthSolution(precondition=N.BoolLit(True), term=term)
        if isinstance(v, Unsat):
            pieces = [value_to_expr(next(iter(value_stream(problem.program, ty))))
                      for _, ty in problem.outputs]
            term = pieces[0] if len(pieces) == 1 else N.TupleCtor(pieces)
            return SynthSolution(precondition=N.BoolLit(False), term=term)
        return None

    return [RuleApplication("ground", [], lambda sols: attempt(),
                            cost_delta=0, attempt=attempt)]


# -- Case-split on a disjunctive predicate -------------------------------------------

MAX_BRANCH_DEPTH = 5


def rule_case_split(problem: SynthesisProblem, ctx) -> list[RuleApplication]:
    if problem.branch_depth >= MAX_BRANCH_DEPTH:
        return []
    disj = N.disjuncts(normalize(problem.predicate))
    if len(disj) < 2:
        return []
    first = simplify(problem.program, disj[0])
    rest = simplify(problem.program, N.disj(*disj[1:]))
    depth = problem.branch_depth

    sub1 = _with(problem, predicate=first, branch_depth=depth + 1)

    def next_subproblem(sols: list[SynthSolution]) -> Optional[SynthesisProblem]:
        if len(sols) >= 2:
            return None
        p1 = simplify(problem.program, sols[0].precondition)
        if isinstance(p1, N.BoolLit) and p1.value:
            return None  # the else branch is unreachable
        return _with(problem,
                     path_condition=simplify(
                         problem.program,
                         N.conj(problem.path_condition, N.neg(p1))),
                     predicate=rest, branch_depth=depth + 1)

    def reconstruct(sols: list[SynthSolution]) -> SynthSolution:
        if len(sols) == 1:
            return sols[0]
        s1, s2 = sols
        pre = simplify(problem.program, N.disj(s1.precondition, s2.precondition))
        term = N.If(s1.precondition, s1.term, s2.term)
        return SynthSolution(pre, simplify(problem.program, term),
                             s1.defined_funs + s2.defined_funs,
                             proved=s1.proved and s2.proved)

    return [RuleApplication("case-split", [sub1], reconstruct,
                            cost_delta=branch_weight(depth),
                            next_subproblem=next_subproblem)]


# -- Equality split -------------------------------------------------------------------

def rule_equality_split(problem: SynthesisProblem, ctx) -> list[RuleApplication]:
    if problem.branch_depth >= MAX_BRANCH_DEPTH:
        return []
    atoms = [a for c in _conjuncts(problem.predicate) for a in _atoms(c)]
    pairs: list[tuple[str, str]] = []
    in_types = dict(problem.inputs)
    path_atoms = {N.expr_key(a) for c in _conjuncts(problem.path_condition)
                  for a in _atoms(c)}
    for a in atoms:
        fv = sorted(N.free_vars(a) & set(in_types))
        for x, y in itertools.combinations(fv, 2):
            if in_types[x] != in_types[y]:
                continue
            if not isinstance(in_types[x], (N.IntType, N.AdtType)):
                continue
            if (x, y) not in pairs:
                pairs.append((x, y))
    apps = []
    for x, y in pairs:
        eq = N.BinOp("==", N.Var(x), N.Var(y))
        ne = N.BinOp("!=", N.Var(x), N.Var(y))
        if N.expr_key(eq) in path_atoms or N.expr_key(ne) in path_atoms:
            continue  # already split on this pair
        depth = problem.branch_depth
        sub_eq = _with(problem,
                       path_condition=N.conj(problem.path_condition, eq),
                       branch_depth=depth + 1)
        sub_ne = _with(problem,
                       path_condition=N.conj(problem.path_condition, ne),
                       branch_depth=depth + 1)

        def reconstruct(sols, eq=eq, ne=ne):
            s1, s2 = sols
            pre = simplify(problem.program,
                           N.disj(N.conj(eq, s1.precondition),
                                  N.conj(ne, s2.precondition)))
            term = N.If(eq, s1.term, s2.term)
            return SynthSolution(pre, simplify(problem.program, term),
                                 s1.defined_funs + s2.defined_funs,
                                 proved=s1.proved and s2.proved)

        apps.append(RuleApplication(f"equality-split {x}={y}", [sub_eq, sub_ne],
                                    reconstruct,
                                    cost_delta=branch_weight(depth)))
    return apps


def _atoms(e: N.Expr) -> list[N.Expr]:
    if isinstance(e, N.BinOp) and e.op in ("&&", "||"):
        return _atoms(e.left) + _atoms(e.right)
    if isinstance(e, N.UnOp) and e.op == "not":
        return _atoms(e.operand)
    return [e]


# -- ADT split ---------------------------------------------------------------------

def rule_adt_split(problem: SynthesisProblem, ctx) -> list[RuleApplication]:
    if problem.branch_depth >= MAX_BRANCH_DEPTH:
        return []
    apps = []
    for name, ty in problem.inputs:
        if not isinstance(ty, N.AdtType):
            continue
        apps.append(_adt_split_app(problem, ctx, name, ty))
    return apps


def _scope_names(problem: SynthesisProblem) -> set[str]:
    out = {n for n, _ in problem.inputs} | {n for n, _ in problem.outputs}
    for f in problem.program.functions:
        out.add(f.name)
    return out


def _root_of(problem: SynthesisProblem, var: str) -> Optional[str]:
    if problem.host and var in {p for p, _ in problem.host.params}:
        return var
    for param, vars_ in problem.smaller.items():
        if var in vars_:
            return param
    return None


def _adt_split_app(problem: SynthesisProblem, ctx, name: str,
                   ty: N.AdtType) -> RuleApplication:
    adt = problem.program.adt(ty.name)
    depth = problem.branch_depth
    root = _root_of(problem, name)
    subs = []
    case_binders: list[list[str]] = []
    for ctor in adt.constructors:
        avoid = _scope_names(problem)
        binders = _fresh_names([fn for fn, _ in ctor.fields], avoid)
        case_binders.append(binders)
        ctor_term = N.CtorApp(ctor.name, [N.Var(b) for b in binders])
        inputs = [(n, t) for n, t in problem.inputs if n != name]
        inputs += [(b, ft) for b, (_, ft) in zip(binders, ctor.fields)]
        smaller = {k: set(v) for k, v in problem.smaller.items()}
        if root is not None:
            smaller.setdefault(root, set()).update(binders)
            for k in smaller:
                smaller[k].discard(name)
        sub = SynthesisProblem(
            program=problem.program, inputs=inputs,
            path_condition=simplify(problem.program,
                                    N.substitute(problem.path_condition,
                                                 {name: ctor_term})),
            predicate=simplify(problem.program,
                               N.substitute(problem.predicate, {name: ctor_term})),
            outputs=list(problem.outputs), host=problem.host,
            smaller=smaller, branch_depth=depth + 1,
            allow_recursion=problem.allow_recursion)
        subs.append(sub)

    def reconstruct(sols: list[SynthSolution]) -> SynthSolution:
        cases = []
        pre_cases = []
        for ctor, binders, s in zip(adt.constructors, case_binders, sols):
            pat = N.CtorPattern(ctor.name, [N.Binder(b) for b in binders])
            cases.append(N.MatchCase(pat, None, s.term))
            pre_cases.append(N.MatchCase(
                N.CtorPattern(ctor.name, [N.Binder(b) for b in binders]),
                None, s.precondition))
        term = N.Match(N.Var(name), cases)
        pre = simplify(problem.program, N.Match(N.Var(name), pre_cases))
        funs = [f for s in sols for f in s.defined_funs]
        return SynthSolution(pre, simplify(problem.program, term), funs,
                             proved=all(s.proved for s in sols))

    return RuleApplication(f"adt-split {name}", subs, reconstruct,
                           cost_delta=branch_weight(depth))


# -- Recursion schema -----------------------------------------------------------------

def _rec_shape(adt: N.AdtDef) -> Optional[tuple[list[N.CtorDef], list[N.CtorDef]]]:
    """(base ctors, recursive ctors with exactly one recursive field)."""
    base, rec = [], []
    for c in adt.constructors:
        rec_fields = [i for i, (_, ft) in enumerate(c.fields)
                      if isinstance(ft, N.AdtType) and ft.name == adt.name]
        if not rec_fields:
            base.append(c)
        elif len(rec_fields) == 1:
            rec.append(c)
        else:
            return None
    if not base or not rec:
        return None
    return base, rec


def rule_adt_rec(problem: SynthesisProblem, ctx) -> list[RuleApplication]:
    if not problem.allow_recursion:
        return []
    if problem.branch_depth > 0:
        # offered on undivided problems only; recursive solutions inside
        # divided branches arise through guarded self-calls instead
        return []
    apps = []
    for name, ty in problem.inputs:
        if not isinstance(ty, N.AdtType):
            continue
        shape = _rec_shape(problem.program.adt(ty.name))
        if shape is None:
            continue
        apps.append(_adt_rec_app(problem, ctx, name, ty, shape))
    return apps


def _inductive_conjuncts(problem: SynthesisProblem, ctx, a0: str, ty: N.AdtType,
                         rec_ctors: list[N.CtorDef]) -> list[N.Expr]:
    """Input-only conjuncts of the path condition and predicate that are
    preserved when a0 steps to its recursive substructure."""
    in_names = {n for n, _ in problem.inputs}
    candidates = []
    for c in _conjuncts(problem.path_condition) + _conjuncts(problem.predicate):
        if isinstance(c, N.BoolLit):
            continue
        if not N.free_vars(c) <= in_names:
            continue
        if N.expr_key(c) in {N.expr_key(x) for x in candidates}:
            continue
        candidates.append(c)
    kept = []
    for c in candidates:
        if a0 not in N.free_vars(c):
            kept.append(c)
            continue
        inductive = True
        for ctor in rec_ctors:
            avoid = _scope_names(problem) | N.free_vars(c)
            binders = _fresh_names([fn for fn, _ in ctor.fields], avoid)
            rec_pos = next(i for i, (_, ft) in enumerate(ctor.fields)
                           if isinstance(ft, N.AdtType) and ft.name == ty.name)
            ctor_term = N.CtorApp(ctor.name, [N.Var(b) for b in binders])
            prem = N.substitute(c, {a0: ctor_term})
            concl = N.substitute(c, {a0: N.Var(binders[rec_pos])})
            env = {n: t for n, t in problem.inputs if n != a0}
            for b, (_, ft) in zip(binders, ctor.fields):
                env[b] = ft
            v = check_valid(problem.program, N.disj(N.neg(prem), concl), env,
                            ctx.quick_budget())
            if not isinstance(v, Valid):
                inductive = False
                break
        if inductive:
            kept.append(c)
    return kept


def _adt_rec_app(problem: SynthesisProblem, ctx, a0: str, ty: N.AdtType,
                 shape) -> RuleApplication:
    base_ctors, rec_ctors = shape
    program = problem.program
    pi2_conjs = _inductive_conjuncts(problem, ctx, a0, ty, rec_ctors)
    pi2 = simplify(program, N.conj(*pi2_conjs)) if pi2_conjs else N.BoolLit(True)
    others = [(n, t) for n, t in problem.inputs if n != a0]
    out_names = [n for n, _ in problem.outputs]
    subs = []
    case_info = []  # (ctor, binders, rec position or None, result names)

    for ctor in base_ctors + rec_ctors:
        avoid = _scope_names(problem) | N.free_vars(pi2)
        binders = _fresh_names([fn for fn, _ in ctor.fields], avoid)
        ctor_term = N.CtorApp(ctor.name, [N.Var(b) for b in binders])
        rec_positions = [i for i, (_, ft) in enumerate(ctor.fields)
                         if isinstance(ft, N.AdtType) and ft.name == ty.name]
        inputs = others + [(b, ft) for b, (_, ft) in zip(binders, ctor.fields)]
        path = N.substitute(pi2, {a0: ctor_term})
        if not rec_positions:
            case_info.append((ctor, binders, None, None))
            sub = SynthesisProblem(
                program=program, inputs=inputs,
                path_condition=simplify(program, path),
                predicate=simplify(program,
                                   N.substitute(problem.predicate, {a0: ctor_term})),
                outputs=list(problem.outputs), host=problem.host,
                smaller={}, branch_depth=problem.branch_depth + 1,
                allow_recursion=False)
        else:
            tail = binders[rec_positions[0]]
            avoid2 = set(avoid) | set(binders)
            r_names = _fresh_names(["r" + (str(i) if i else "")
                                    for i in range(len(out_names))], avoid2)
            case_info.append((ctor, binders, rec_positions[0], r_names))
            hyp_bind = {a0: N.Var(tail)}
            hyp_bind.update({o: N.Var(r) for o, r in zip(out_names, r_names)})
            hypothesis = N.substitute(problem.predicate, hyp_bind)
            inputs2 = ([(r, t) for r, (_, t) in zip(r_names, problem.outputs)]
                       + inputs)
            path_ind = N.conj(path, N.substitute(pi2, {a0: N.Var(tail)}), hypothesis)
            sub = SynthesisProblem(
                program=program, inputs=inputs2,
                path_condition=simplify(program, path_ind),
                predicate=simplify(program,
                                   N.substitute(problem.predicate, {a0: ctor_term})),
                outputs=list(problem.outputs), host=problem.host,
                smaller={}, branch_depth=problem.branch_depth + 1,
                allow_recursion=False)
        subs.append(sub)

    def reconstruct(sols: list[SynthSolution]) -> Optional[SynthSolution]:
        for s in sols:
            pre = simplify(program, s.precondition)
            if not (isinstance(pre, N.BoolLit) and pre.value):
                return None  # premises require unconditional sub-solutions
        rec_name = ctx.fresh_rec_name(problem)
        params = [(a0, ty)] + others
        cases = []
        for (ctor, binders, rec_pos, r_names), s in zip(case_info, sols):
            pat = N.CtorPattern(ctor.name, [N.Binder(b) for b in binders])
            if rec_pos is None:
                cases.append(N.MatchCase(pat, None, s.term))
            else:
                tail = binders[rec_pos]
                call = N.Call(rec_name, [N.Var(tail)] + [N.Var(n) for n, _ in others])
                if len(r_names) == 1:
                    body = N.Let(r_names[0], call, s.term)
                else:
                    tmp = N.fresh_name("__r", set(r_names) | {n for n, _ in params})
                    body = s.term
                    for i, r in reversed(list(enumerate(r_names))):
                        body = N.Let(r, N.TupleSel(N.Var(tmp), i + 1), body)
                    body = N.Let(tmp, call, body)
                cases.append(N.MatchCase(pat, None, body))
        binder, post = problem.spec_post()
        rec_def = N.FunDef(
            rec_name, params, problem.output_type,
            body=N.Match(N.Var(a0), cases),
            precondition=None if _is_true(pi2) else pi2,
            postcondition=(binder, post))
        funs = [f for s in sols for f in s.defined_funs] + [rec_def]
        term = N.Call(rec_name, [N.Var(a0)] + [N.Var(n) for n, _ in others])
        return SynthSolution(pi2, term, funs,
                             proved=all(s.proved for s in sols))

    return RuleApplication(f"recursion on {a0}", subs, reconstruct, cost_delta=2)


def _is_true(e: N.Expr) -> bool:
    return isinstance(e, N.BoolLit) and e.value


def _with(problem: SynthesisProblem, **updates) -> SynthesisProblem:
    kwargs = dict(
        program=problem.program, inputs=list(problem.inputs),
        path_condition=problem.path_condition, predicate=problem.predicate,
        outputs=list(problem.outputs), host=problem.host,
        smaller={k: set(v) for k, v in problem.smaller.items()},
        branch_depth=problem.branch_depth,
        allow_recursion=problem.allow_recursion)
    kwargs.update(updates)
    return SynthesisProblem(**kwargs)
