"""Cost-guided AND/OR search over rule instantiations.

OR nodes hold problems (solve any child); AND nodes hold rule applications
(solve all children).  Cost estimates under-approximate: an unexpanded node
costs nothing, an AND node costs its rule constant plus its children.  The
frontier node inside the current cheapest subtree is expanded next, so the
search always works on the currently most promising derivation.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

from ..lang import nodes as N
from ..solver import Budget, CancelToken, Invalid, Unknown, Valid
from .conditions import AbduceConfig, abduce
from .cost import solution_cost
from .explore import SteConfig, explore
from .problem import (SynthSolution, SynthesisProblem, problem_of_choose,
                      solution_is_valid)
from .rules import (RuleApplication, rule_adt_rec, rule_adt_split,
                    rule_case_split, rule_equality_split, rule_ground,
                    rule_one_point)
from .simplify import simplify

INF = 10 ** 12


@dataclass
class SynthConfig:
    ste: SteConfig = field(default_factory=SteConfig)
    abduce: AbduceConfig = field(default_factory=AbduceConfig)
    solver_time: float = 2.0
    quick_time: float = 1.0
    validation_time: float = 3.0
    budget_seconds: float = 120.0
    ste_cost: int = 1
    abduce_cost: int = 3
    max_expansions: int = 400
    # wall-clock effort spent inside a subtree raises its estimate so that
    # expensive dead ends stop starving the alternatives
    effort_cost_per_second: float = 4.0


class SearchContext:
    def __init__(self, program, config: SynthConfig,
                 cancel: Optional[CancelToken] = None,
                 listener: Optional[Callable[[str, object], None]] = None):
        self.program = program
        self.config = config
        self.cancel = cancel
        self.listener = listener
        self.deadline: Optional[float] = None
        self.failed_attempts: set = set()
        self._rec_counter = itertools.count(1)

    def cancelled(self) -> bool:
        return self.cancel is not None and self.cancel.is_set()

    def out_of_time(self) -> bool:
        return self.deadline is not None and time.monotonic() > self.deadline

    def emit(self, kind: str, payload) -> None:
        if self.listener is not None:
            self.listener(kind, payload)

    def solver_budget(self) -> Budget:
        return Budget(time_limit=self.config.solver_time)

    def quick_budget(self) -> Budget:
        return Budget(time_limit=self.config.quick_time, max_unfold_depth=4)

    def validation_budget(self) -> Budget:
        return Budget(time_limit=self.config.validation_time)

    def terminating(self) -> set[str]:
        from ..verify import terminating_functions
        return terminating_functions(self.program)

    def fresh_rec_name(self, problem: SynthesisProblem) -> str:
        taken = {f.name for f in self.program.functions}
        while True:
            name = f"rec{next(self._rec_counter)}"
            if name not in taken:
                return name


@dataclass
class OrNode:
    problem: SynthesisProblem
    index: int
    parent: Optional["AndNode"] = None
    children: list["AndNode"] = field(default_factory=list)
    expanded: bool = False
    solution: Optional[SynthSolution] = None
    failed: bool = False

    @property
    def solved(self) -> bool:
        return self.solution is not None


@dataclass
class AndNode:
    application: RuleApplication
    index: int
    parent: OrNode
    children: list[OrNode] = field(default_factory=list)
    attempted: bool = False
    solution: Optional[SynthSolution] = None
    failed: bool = False
    spent: float = 0.0

    @property
    def closing(self) -> bool:
        return self.application.attempt is not None

    @property
    def solved(self) -> bool:
        return self.solution is not None


@dataclass
class Closed:
    solution: SynthSolution


@dataclass
class Partial:
    solution: SynthSolution        # residual choose sites inside the term
    fully_closed: bool = False


@dataclass
class Failed:
    pass


SearchResult = Union[Closed, Partial, Failed]


def default_rules(ctx: SearchContext):
    cfg = ctx.config

    def closing(name: str, runner, cost_delta: int, enabled):
        def instantiate(problem: SynthesisProblem):
            if not enabled(problem):
                return []

            def attempt(budget=None, cancel=None, problem=problem):
                return runner(problem)
            return [RuleApplication(name, [], lambda sols: None,
                                    cost_delta=cost_delta, attempt=attempt)]
        return instantiate

    def run_ste(problem: SynthesisProblem):
        out = explore(problem, ctx)
        return out.solution

    def run_abduce(problem: SynthesisProblem):
        return abduce(problem, ctx)

    def abduce_enabled(problem: SynthesisProblem) -> bool:
        # tuple-valued holes are handled by the splitting rules; guard
        # enumeration over pair terms rarely converges within a batch budget
        if len(problem.outputs) > 1 or isinstance(problem.output_type, N.TupleType):
            return False
        return bool(N.called_functions(problem.predicate))

    return [
        lambda p: rule_one_point(p, ctx),
        lambda p: rule_ground(p, ctx),
        closing("symbolic-terms", run_ste, cfg.ste_cost, lambda p: True),
        closing("condition-abduction", run_abduce, cfg.abduce_cost,
                abduce_enabled),
        lambda p: rule_case_split(p, ctx),
        lambda p: rule_equality_split(p, ctx),
        lambda p: rule_adt_split(p, ctx),
        lambda p: rule_adt_rec(p, ctx),
    ]


class Search:
    def __init__(self, problem: SynthesisProblem, ctx: SearchContext,
                 rules=None):
        self.ctx = ctx
        self.rules = rules or default_rules(ctx)
        self._counter = itertools.count(0)
        self.root = OrNode(problem, next(self._counter))
        self._best_cost_emitted: Optional[int] = None

    # -- cost estimates -----------------------------------------------------

    def or_cost(self, node: OrNode) -> int:
        if node.failed:
            return INF
        if node.solved:
            return 0
        if not node.expanded:
            return 0
        costs = [self.and_cost(c) for c in node.children if not c.failed]
        return min(costs, default=INF)

    def and_cost(self, node: AndNode) -> int:
        if node.failed:
            return INF
        if node.solved:
            return 0
        total = node.application.cost_delta
        total += int(node.spent * self.ctx.config.effort_cost_per_second)
        for c in node.children:
            oc = self.or_cost(c)
            if oc >= INF:
                return INF
            total += oc
        return total

    # -- expansion ----------------------------------------------------------

    def run(self, budget_seconds: Optional[float] = None) -> SearchResult:
        budget = budget_seconds if budget_seconds is not None \
            else self.ctx.config.budget_seconds
        deadline = time.monotonic() + budget
        self.ctx.deadline = deadline
        expansions = 0
        while True:
            if self.root.solved:
                return Closed(self.root.solution)
            if self.root.failed:
                return Failed()
            if self.ctx.cancelled() or time.monotonic() > deadline or \
                    expansions >= self.ctx.config.max_expansions:
                return self.partial()
            node = self._pick_frontier()
            if node is None:
                return self.partial() if not self.root.failed else Failed()
            expansions += 1
            if isinstance(node, OrNode):
                self._expand_or(node)
            else:
                self._attempt_and(node)
            self._emit_cost()

    def _emit_cost(self) -> None:
        c = self.or_cost(self.root)
        if c < INF and (self._best_cost_emitted is None or c < self._best_cost_emitted):
            self._best_cost_emitted = c
            self.ctx.emit("cost", c)

    def _pick_frontier(self):
        """First expandable node inside the current cheapest subtree."""
        node = self.root
        guard = 0
        while True:
            guard += 1
            if guard > 10_000:
                return None
            if isinstance(node, OrNode):
                if not node.expanded:
                    return node
                viable = [c for c in node.children if not c.failed and not c.solved]
                if not viable:
                    return None
                node = min(viable, key=lambda c: (self.and_cost(c), c.index))
            else:
                if node.closing and not node.attempted:
                    return node
                open_children = [c for c in node.children
                                 if not c.solved and not c.failed]
                if not open_children:
                    return None
                node = min(open_children, key=lambda c: (self.or_cost(c), c.index))

    def _charge_effort(self, node, seconds: float) -> None:
        """Cumulative charging up the AND ancestry: sunk cost stays visible in
        the subtree estimate even after the specific child fails."""
        while node is not None:
            if isinstance(node, AndNode):
                node.spent += seconds
                node = node.parent.parent
            else:
                node = node.parent

    def _expand_or(self, node: OrNode) -> None:
        node.expanded = True
        t0 = time.monotonic()
        for rule in self.rules:
            try:
                apps = rule(node.problem)
            except AssertionError:
                continue
            for app in apps:
                self.ctx.emit("rule-applied",
                              {"rule": app.rule_name, "problem": node.index})
                and_node = AndNode(app, next(self._counter), node)
                for sub in app.subproblems:
                    child = OrNode(sub, next(self._counter), and_node)
                    and_node.children.append(child)
                node.children.append(and_node)
        if node.parent is not None:
            self._charge_effort(node.parent, time.monotonic() - t0)
        if not node.children:
            node.failed = True
            self._propagate(node)

    def _attempt_and(self, node: AndNode) -> None:
        node.attempted = True
        memo_key = (node.application.rule_name.split(" ")[0],
                    node.parent.problem.key())
        if memo_key in self.ctx.failed_attempts:
            node.failed = True
            self._propagate_and(node)
            return
        t0 = time.monotonic()
        try:
            sol = node.application.attempt()
        except AssertionError:
            sol = None
        if sol is None:
            # only sunk cost on failures: successful work must not push the
            # search away from the subtree it is about to close
            self._charge_effort(node, time.monotonic() - t0)
            node.failed = True
            self.ctx.failed_attempts.add(memo_key)
        else:
            node.solution = sol
        self._propagate_and(node)

    # -- propagation ---------------------------------------------------------

    def _propagate_and(self, node: AndNode) -> None:
        if not node.failed and not node.solved:
            if all(c.solved for c in node.children):
                nxt = None
                if node.application.next_subproblem is not None:
                    sols = [c.solution for c in node.children]
                    try:
                        nxt = node.application.next_subproblem(sols)
                    except AssertionError:
                        nxt = None
                if nxt is not None and len(node.children) < 2:
                    child = OrNode(nxt, next(self._counter), node)
                    node.children.append(child)
                    return
                sols = [c.solution for c in node.children]
                sol = node.application.reconstruct(sols)
                if sol is None:
                    node.failed = True
                else:
                    gated = self._closure_gate(node, sol)
                    if gated is None:
                        node.failed = True
                    else:
                        node.solution = gated
        self._propagate(node.parent)

    def _closure_gate(self, node: AndNode,
                      sol: SynthSolution) -> Optional[SynthSolution]:
        """Reconstruction soundness: never accept an Invalid composite."""
        if sol.proved and all(c.solution.proved for c in node.children):
            return sol
        v = solution_is_valid(node.parent.problem, sol,
                              self.ctx.validation_budget(),
                              cancel=self.ctx.cancel, check_domain=False)
        if isinstance(v, Invalid):
            return None
        if isinstance(v, Valid):
            return sol
        sol.proved = False
        return sol

    def _propagate(self, node: Optional[OrNode]) -> None:
        while node is not None:
            solved_children = [c for c in node.children if c.solved]
            if solved_children and not node.solved:
                best = min(solved_children,
                           key=lambda c: solution_cost(
                               c.solution.term, c.solution.defined_funs))
                node.solution = best.solution
            if not node.solved and node.expanded and \
                    all(c.failed for c in node.children):
                node.failed = True
            parent_and = node.parent
            if parent_and is None:
                return
            if any(c.failed for c in parent_and.children):
                parent_and.failed = True
                node = parent_and.parent
                continue
            if all(c.solved for c in parent_and.children) and not parent_and.solved:
                self._propagate_and(parent_and)
                return
            node = parent_and.parent

    # -- anytime extraction ----------------------------------------------------

    def partial(self) -> SearchResult:
        sol = self._partial_of(self.root)
        return Partial(sol, fully_closed=not _has_choose(sol))

    def _partial_of(self, node: OrNode) -> SynthSolution:
        if node.solved:
            return node.solution
        viable = [c for c in node.children
                  if not c.failed and (c.children or c.solved)]
        candidates = []
        for c in viable:
            if all(k.solved or not k.failed for k in c.children) and c.children:
                candidates.append(c)
        best = min(candidates, key=lambda c: (self.and_cost(c), c.index)) \
            if candidates else None
        if best is not None:
            subs = [self._partial_of(k) for k in best.children]
            if all(s is not None for s in subs):
                try:
                    sol = best.application.reconstruct(subs)
                except AssertionError:
                    sol = None
                if sol is not None:
                    return sol
        problem = node.problem
        hole = N.Choose(list(problem.outputs), problem.predicate)
        return SynthSolution(precondition=N.BoolLit(True), term=hole,
                             proved=False)


def _has_choose(sol: SynthSolution) -> bool:
    if any(isinstance(x, N.Choose) for x in N.walk(sol.term)):
        return True
    return any(isinstance(x, N.Choose)
               for f in sol.defined_funs for x in N.walk(f.body))


def synthesize(program, site_id: str, config: Optional[SynthConfig] = None,
               cancel: Optional[CancelToken] = None,
               listener=None,
               budget_seconds: Optional[float] = None) -> SearchResult:
    ctx = SearchContext(program, config or SynthConfig(), cancel, listener)
    problem = problem_of_choose(program, site_id)
    search = Search(problem, ctx)
    result = search.run(budget_seconds)
    return result


def splice(program, site_id: str, solution: SynthSolution):
    """Replace the choose body with the solution; the choose predicate becomes
    the function's postcondition and a non-trivial precondition a require."""
    from ..lang import parse, print_program
    from ..lang.check import typecheck

    site = program.site(site_id)
    host = program.function(site.function)
    choose = site.choose
    binder = N.fresh_name("res", {n for n, _ in host.params})
    if len(choose.out_params) == 1:
        post = N.substitute(choose.predicate,
                            {choose.out_params[0][0]: N.Var(binder)})
    else:
        post = N.substitute(choose.predicate,
                            {name: N.TupleSel(N.Var(binder), i + 1)
                             for i, (name, _) in enumerate(choose.out_params)})

    new_funs = []
    for f in program.functions:
        if f.name != site.function:
            new_funs.append(f)
            continue
        pre = f.precondition
        p = solution.precondition
        if not (isinstance(p, N.BoolLit) and p.value):
            pre = p if pre is None else N.conj(pre, p)
        new_funs.append(N.FunDef(f.name, list(f.params), f.return_type,
                                 body=solution.term, precondition=pre,
                                 postcondition=(binder, post)))
    new_funs.extend(solution.defined_funs)
    merged = N.Program(list(program.program.adts), new_funs)
    src = print_program(merged)
    prog, diags = parse(src)
    assert prog is not None, diags
    tp, tdiags = typecheck(prog)
    assert tp is not None, tdiags
    return tp, src
