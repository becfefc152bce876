"""Satisfiability modulo recursive functions.

The session alternates an over-approximation (pending call results
unconstrained, only Unsat trusted) with an under-approximation (paths through
pending calls blocked, only validated Sat trusted), unfolding one layer of
call instances per round, oldest first.  Sat models are always re-checked by
the evaluator before being returned.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field
from typing import Optional, Union

from ..lang import nodes as N
from ..lang.check import TypedProgram
from ..values import Model, SetVal, TupleVal, Value, mk_set
from ..interp import eval_predicate
from . import props as P
from . import terms as T
from . import theory


@dataclass
class Sat:
    model: Model


@dataclass
class Unsat:
    pass


@dataclass
class Unknown:
    reason: str


Verdict = Union[Sat, Unsat, Unknown]


@dataclass
class Valid:
    pass


@dataclass
class Invalid:
    counterexample: Model


CheckResult = Union[Valid, Invalid, Unknown]


@dataclass
class Budget:
    max_unfold_depth: int = 6
    time_limit: float = 3.0
    phase0_attempts: int = 250
    phase0_fuel: int = 30_000
    spurious_cap: int = 8


class CancelToken:
    def __init__(self) -> None:
        self._set = False

    def set(self) -> None:
        self._set = True

    def is_set(self) -> bool:
        return self._set


def _trusted_posts(program: TypedProgram) -> set[str]:
    from ..verify import terminating_functions
    return terminating_functions(program)


class Session:
    def __init__(self, program: TypedProgram, env: dict[str, N.TypeExpr],
                 budget: Optional[Budget] = None,
                 exec_posts: Optional[dict[str, tuple[str, N.Expr]]] = None,
                 cancel: Optional[CancelToken] = None,
                 assume_posts: Optional[set[str]] = None,
                 eval_oracle=None):
        self.program = program
        self.env = env
        self.budget = budget or Budget()
        self.cancel = cancel
        posts = assume_posts if assume_posts is not None else _trusted_posts(program)
        self.minimize_box = 0.5
        self.eval_oracle = eval_oracle
        self.ctx = T.Context(program, posts, exec_posts)
        self.handles = {name: self.ctx.declare_free(name, ty)
                        for name, ty in env.items()}
        self.tainted = False  # a possibly-satisfiable branch was discarded

    # -- public -----------------------------------------------------------

    def check_sat(self, formula: N.Expr, validate: bool = True,
                  phase0: bool = True) -> Verdict:
        deadline = time.monotonic() + self.budget.time_limit
        if phase0:
            r = self._phase0(formula, deadline)
            if r is not None:
                return r
        try:
            f = self.ctx.compile_bool(formula, self.handles, P.TRUE)
        except (ValueError, TypeError, KeyError, AssertionError) as e:
            return Unknown(f"compilation: {e}")
        self.ctx.db.assert_formula(f)

        spurious = 0
        # one free-argument instance unfolds per round, so allow several
        # rounds per configured depth layer
        rounds = self.budget.max_unfold_depth * 3 + 1
        for depth in range(rounds):
            if self._cancelled():
                return Unknown("cancelled")
            if time.monotonic() > deadline:
                return Unknown("timeout")
            pend = self.ctx.pending_instances()
            choose_pend = [i for i in self.ctx.instance_order
                           if i.is_choose_bodied]
            exact = not pend and not choose_pend

            # over-approximation: nothing blocked
            status, payload = self._solve([], want_model=exact, deadline=deadline)
            if status == "unsat":
                if self.tainted:
                    return Unknown("incomplete branch discarded")
                return Unsat()
            if status == "timeout":
                return Unknown("timeout")
            if exact and status == "sat":
                assign, tm = payload
                model = self._extract_model(tm, assign)
                if not validate or eval_predicate(self.program, model, formula,
                                                  self.budget.phase0_fuel,
                                                  choose_oracle=self.eval_oracle) is True:
                    return Sat(model)
                self._block_assignment(assign)
                self.tainted = True
                spurious += 1
                if spurious > self.budget.spurious_cap:
                    return Unknown("model validation kept failing")
                continue
            if exact and status == "giveup":
                return Unknown("beyond the decidable fragment")

            if not exact:
                # under-approximation: block paths through pending calls
                assumptions = [-i.guard for i in pend + choose_pend]
                status, payload = self._solve(assumptions, want_model=True,
                                              deadline=deadline)
                if status == "timeout":
                    return Unknown("timeout")
                if status == "sat":
                    assign, tm = payload
                    model = self._extract_model(tm, assign)
                    if not validate or eval_predicate(self.program, model, formula,
                                                      self.budget.phase0_fuel,
                                                      choose_oracle=self.eval_oracle) is True:
                        return Sat(model)
                    self._block_assignment(assign)
                    self.tainted = True
                    spurious += 1
                    if spurious > self.budget.spurious_cap:
                        return Unknown("model validation kept failing")
                    continue

            if not pend:
                return Unknown("specification holes block all paths")
            self._unfold_step()
        return Unknown("unfolding depth exhausted")

    def _unfold_step(self) -> None:
        """Structural reductions (constructor-headed arguments) are free of
        case splits and unfold eagerly; otherwise the oldest pending instance
        unfolds alone, keeping shape enumeration as lazy as possible."""
        progressed = False
        while True:
            cheap = [i for i in self.ctx.pending_instances()
                     if self._ctor_headed(i)]
            if not cheap:
                break
            for inst in cheap:
                self.ctx.unfold_instance(inst)
            progressed = True
        if not progressed:
            pend = self.ctx.pending_instances()
            if pend:
                self.ctx.unfold_instance(pend[0])

    def _ctor_headed(self, inst: T.CallInstance) -> bool:
        saw_adt = False
        for h in inst.args:
            if h[0] == "adt":
                saw_adt = True
                if not isinstance(h[1], T.AdtCtor):
                    return False
        return saw_adt

    # -- internals ----------------------------------------------------------

    def _cancelled(self) -> bool:
        return self.cancel is not None and self.cancel.is_set()

    def _phase0(self, formula: N.Expr, deadline: float) -> Optional[Verdict]:
        """Optimistic model search by fair enumeration and execution."""
        from ..streams import model_stream
        attempts = self.budget.phase0_attempts
        if attempts <= 0:
            return None
        called = {c for c in N.called_functions(formula)}
        for fn in called:
            try:
                f = self.program.function(fn)
            except KeyError:
                return None
            if isinstance(f.body, N.Choose) and self.eval_oracle is None:
                attempts = min(attempts, 20)
        variables = sorted(self.env.items())
        for m in model_stream(self.program, variables, formula,
                              fuel=self.budget.phase0_fuel,
                              max_attempts=attempts,
                              choose_oracle=self.eval_oracle):
            return Sat(m)
        return None

    def _solve(self, assumptions: list[int], want_model: bool, deadline: float):
        while True:
            if self._cancelled():
                return ("timeout", None)
            try:
                assign = P.dpll(self.ctx.db, assumptions=assumptions,
                                deadline=deadline)
            except TimeoutError:
                return ("timeout", None)
            if assign is None:
                return ("unsat", None)
            if time.monotonic() > deadline:
                return ("timeout", None)
            try:
                res = theory.check(self.ctx, assign, self.program,
                                   want_model=want_model, deadline=deadline)
            except theory.Giveup as g:
                if g.reason == "timeout":
                    return ("timeout", None)
                # abandon this run without polluting the clause database
                return ("giveup", None)
            if res[0] == "model":
                return ("sat", (assign, res[1]))
            core = self._minimize_core(assign, res[1], deadline)
            if not core:
                return ("unsat", None)
            self.ctx.db.add_clause([-l for l in core])

    def _block_assignment(self, assign: list) -> None:
        lits = []
        for var in self.ctx.atoms_by_var:
            if var < len(assign) and assign[var] is not None:
                lits.append(var if assign[var] else -var)
        self.ctx.db.add_clause([-l for l in lits])

    def _minimize_core(self, assign: list, core: list[int],
                       deadline: Optional[float] = None) -> list[int]:
        """Theory-family restriction first, then chunked deletion."""
        lits = list(core)
        budget = 110
        local_deadline = time.monotonic() + self.minimize_box
        if deadline is None or local_deadline < deadline:
            deadline = local_deadline

        def still_conflicts(subset: list[int]) -> bool:
            try:
                res = theory.check(self.ctx, assign, self.program,
                                   want_model=False,
                                   restrict={abs(l) for l in subset})
            except theory.Giveup:
                return False
            return res[0] == "conflict"

        def kind_of(v: int) -> str:
            atom = self.ctx.atoms_by_var[abs(v)]
            if isinstance(atom, (T.ASetEq, T.AMember)):
                return "set"
            if isinstance(atom, (T.ALe, T.AEq)):
                return "int"
            return "adt"

        structural = [l for l in lits if kind_of(l) == "adt"]
        for family in ("set", "int"):
            sub = [l for l in lits if kind_of(l) == family] + structural
            if len(sub) < len(lits) and sub and still_conflicts(sub):
                lits = sub
                budget -= 1
                break
            budget -= 1

        chunk = max(1, len(lits) // 2)
        i = 0
        while budget > 0 and i < len(lits):
            if deadline is not None and time.monotonic() > deadline:
                break
            trial = lits[:i] + lits[i + chunk:]
            budget -= 1
            if trial and still_conflicts(trial):
                lits = trial
            else:
                if chunk == 1:
                    i += 1
                else:
                    chunk = max(1, chunk // 2)
            if i >= len(lits) and chunk > 1:
                chunk = max(1, chunk // 2)
                i = 0
        return lits

    def _extract_model(self, tm: theory.TheoryModel, assign: list) -> Model:
        out: Model = {}
        for name in self.env:
            out[name] = self._handle_value(self.handles[name], tm, assign)
        return out

    def _handle_value(self, h, tm: theory.TheoryModel, assign: list) -> Value:
        from ..values import BoolVal, IntVal
        if h[0] == "int":
            tot = 0
            for mono, c in h[1].items():
                v = c
                for s in mono:
                    v *= tm.int_model.get(s, 0)
                tot += v
            return IntVal(tot)
        if h[0] == "bool":
            return BoolVal(theory.formula_value(h[1], assign))
        if h[0] == "set":
            t = h[1]
            if isinstance(t, T.SetSym):
                return tm.set_model.get(t.sym, mk_set([]))
            raise TypeError(t)
        if h[0] == "adt":
            return tm.adt_value(h[1].key())
        if h[0] == "tuple":
            return TupleVal(tuple(self._handle_value(x, tm, assign) for x in h[1]))
        raise TypeError(h)


def check_sat(program: TypedProgram, formula: N.Expr,
              env: dict[str, N.TypeExpr],
              budget: Optional[Budget] = None,
              exec_posts: Optional[dict[str, tuple[str, N.Expr]]] = None,
              cancel: Optional[CancelToken] = None,
              validate: bool = True, phase0: bool = True,
              minimize_model: bool = False, eval_oracle=None) -> Verdict:
    s = Session(program, env, budget, exec_posts, cancel,
                eval_oracle=eval_oracle)
    v = s.check_sat(formula, validate=validate, phase0=phase0)
    if minimize_model and isinstance(v, Sat):
        v = Sat(shrink_model(program, formula, v.model))
    return v


def check_valid(program: TypedProgram, formula: N.Expr,
                env: dict[str, N.TypeExpr],
                budget: Optional[Budget] = None,
                exec_posts: Optional[dict[str, tuple[str, N.Expr]]] = None,
                cancel: Optional[CancelToken] = None,
                minimize_model: bool = False) -> CheckResult:
    v = check_sat(program, N.neg(formula), env, budget, exec_posts, cancel,
                  minimize_model=minimize_model)
    if isinstance(v, Unsat):
        return Valid()
    if isinstance(v, Sat):
        return Invalid(v.model)
    return Unknown(v.reason)


def core_check(program: TypedProgram, formula: N.Expr,
               env: dict[str, N.TypeExpr],
               budget: Optional[Budget] = None) -> Verdict:
    """Decision for recursion-free formulas; Unknown only on nonlinear atoms."""
    for sub in N.walk(formula):
        if isinstance(sub, N.Call):
            raise ValueError("core_check requires a call-free formula")
    return check_sat(program, formula, env, budget or Budget(time_limit=10.0),
                     phase0=False)


def shrink_model(program: TypedProgram, formula: N.Expr, model: Model) -> Model:
    """Greedy witness shrinking: replace values by subterms while still passing."""
    from ..values import AdtVal, value_to_expr

    def subterms(v: Value):
        if isinstance(v, AdtVal):
            for f in v.fields:
                yield f
                yield from subterms(f)

    changed = True
    current = dict(model)
    rounds = 0
    while changed and rounds < 24:
        changed = False
        rounds += 1
        for name, v in sorted(current.items()):
            for cand in subterms(v):
                if type(cand) is not type(v):
                    continue
                if isinstance(cand, AdtVal) and isinstance(v, AdtVal):
                    trial = dict(current)
                    trial[name] = cand
                    if eval_predicate(program, trial, formula, 30_000) is True:
                        current = trial
                        changed = True
                        break
            if changed:
                break
    return current
