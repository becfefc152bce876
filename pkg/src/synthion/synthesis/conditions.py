"""Condition abduction: rank enumerated terms by example pass counts, verify
the best candidate on the current partition, abduce guard conditions from
counterexamples, and assemble a nested conditional solution.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

from ..lang import nodes as N
from ..interp import eval_predicate
from ..solver import Budget, Invalid, Unknown, Valid
from ..streams import CallableFun, EnumConfig, expr_stream, model_stream
from .problem import SynthSolution, SynthesisProblem, solution_is_valid
from .simplify import simplify


@dataclass
class AbduceConfig:
    initial_batch: int = 50        # doubled on each top-level iteration
    batch_cap: int = 400           # growth stops here to keep ranking cheap
    branch_batch: int = 20
    guard_scan_cap: int = 160      # guards considered per branch synthesis
    guard_probe_cap: int = 6       # solver checks per branch synthesis
    initial_models: int = 20
    max_iterations: int = 30
    stagnation_limit: int = 12     # iterations without progress before bailing
    time_budget: float = 50.0


@dataclass
class AbduceTrace:
    """Instrumentation: batch sizes seen and ranking behaviour."""
    batch_sizes: list[int] = field(default_factory=list)
    branch_batch_sizes: list[int] = field(default_factory=list)
    ranked_dropped: int = 0   # stays 0: ranking never filters
    validated: int = 0


def _callable_functions(problem: SynthesisProblem, ctx) -> list[CallableFun]:
    out = []
    terminating = ctx.terminating()
    for f in problem.program.functions:
        if isinstance(f.body, N.Choose):
            if problem.host is None or f.name != problem.host.name:
                continue
            restr = _self_restrictions(problem)
            if restr is None:
                continue
            out.append(CallableFun(f, restr))
        elif f.name in terminating:
            out.append(CallableFun(f))
    return out


def _self_restrictions(problem: SynthesisProblem) -> Optional[dict[int, set[str]]]:
    if problem.host is None:
        return None
    in_types = dict(problem.inputs)
    restr: dict[int, set[str]] = {}
    for i, (pname, pty) in enumerate(problem.host.params):
        smaller = {v for v in problem.smaller.get(pname, ())
                   if in_types.get(v) == pty}
        if smaller:
            restr[i] = smaller
    return restr or None


def rank_candidates(problem: SynthesisProblem, terms: list[N.Expr],
                    models: list[dict],
                    path: Optional[N.Expr] = None,
                    ctx=None) -> list[tuple[N.Expr, int]]:
    """Stable ranking by count of passing example models; never filters."""
    program = problem.program
    path = path if path is not None else problem.path_condition
    live = [m for m in models
            if eval_predicate(program, m, path, 30_000) is True]
    scored = []
    for e in terms:
        if ctx is not None and ctx.out_of_time():
            scored.append((e, 0))
            continue
        pred = problem.predicate_with(e)
        passes = sum(1 for m in live
                     if eval_predicate(program, m, pred, 60_000) is True)
        scored.append((e, passes))
    scored.sort(key=lambda ep: -ep[1])  # stable: ties keep enumeration order
    return scored


def abduce_branch(problem: SynthesisProblem, ctx, candidate: N.Expr,
                  cond_batch: list[N.Expr], config: AbduceConfig,
                  positive_models: Optional[list[dict]] = None,
                  seed_counterexamples: Optional[list[dict]] = None,
                  trace: Optional[AbduceTrace] = None):
    """One batch of guard candidates; a guard must rule out every accumulated
    counterexample before the solver is consulted, and must keep at least one
    example on which the candidate is known to behave correctly (otherwise the
    abduced partition is useless, e.g. the constant false).

    Returns (guard, proved flag) or None.
    """
    program = problem.program
    counterexamples: list[dict] = list(seed_counterexamples or [])
    probes = 0
    if trace is not None:
        trace.branch_batch_sizes.append(len(cond_batch))
    for c in cond_batch:
        if ctx.cancelled() or ctx.out_of_time():
            return None
        if probes >= config.guard_probe_cap:
            return None
        covered = positive_models
        if positive_models is not None and positive_models:
            covered = [m for m in positive_models
                       if eval_predicate(program, m, c, 30_000) is True]
            if not covered:
                continue
        prevented = all(
            eval_predicate(program, m, c, 30_000) is False
            for m in counterexamples)
        if not prevented:
            continue
        guarded = SynthSolution(precondition=N.conj(problem.path_condition, c),
                                term=candidate)
        probes += 1
        v = solution_is_valid(problem, guarded,
                              Budget(time_limit=0.4, phase0_attempts=700),
                              cancel=ctx.cancel, check_domain=False)
        if trace is not None:
            trace.validated += 1
        if isinstance(v, Valid):
            return c, True
        if isinstance(v, Invalid):
            counterexamples.append(v.counterexample)
            continue
        # Unknown: the guarded candidate survived every covered example and
        # excludes every known counterexample; accept when the concrete
        # evidence is broad enough, flagging the result unproved
        if covered is not None and len(covered) >= 4 and \
                not _calls_holes(program, candidate):
            return c, False
    return None


def abduce(problem: SynthesisProblem, ctx,
           config: Optional[AbduceConfig] = None,
           trace: Optional[AbduceTrace] = None) -> Optional[SynthSolution]:
    """Alg.-style loop: batch, rank, verify best on the current partition,
    abduce a guard from failures, recurse on the remaining inputs."""
    config = config or ctx.config.abduce
    if problem.allow_recursion:
        # guard inference pays off on recursion-schema subproblems (their
        # induction hypotheses feed the rankings); elsewhere keep it brief
        from dataclasses import replace
        config = replace(config, time_budget=min(config.time_budget, 12.0),
                         stagnation_limit=min(config.stagnation_limit, 5))
    program = problem.program
    funs = _callable_functions(problem, ctx)
    term_stream = iter(expr_stream(program, problem.output_type,
                                   list(problem.inputs), funs))
    cond_stream = iter(expr_stream(program, N.BOOL, list(problem.inputs), funs))

    models = list(itertools.islice(
        model_stream(program, sorted(problem.inputs), problem.path_condition,
                     max_attempts=20_000), config.initial_models))

    partition = N.BoolLit(True)   # conjunction of negated abduced guards
    wrap: Callable[[N.Expr], N.Expr] = lambda hole: hole
    defined: list[N.FunDef] = []
    stuck: set = set()
    term_pool: list[N.Expr] = []
    cond_pool: list[N.Expr] = []
    n = config.initial_batch
    deadline = time.monotonic() + config.time_budget
    pass_cache: dict = {}   # (term key, model index) -> bool
    live_cache: dict = {}   # (partition key, model index) -> bool

    def ranked_pool(current_path, partition_key):
        live_idx = []
        for i, m in enumerate(models):
            lk = (partition_key, i)
            if lk not in live_cache:
                live_cache[lk] = eval_predicate(program, m, current_path,
                                                30_000) is True
            if live_cache[lk]:
                live_idx.append(i)
        scored = []
        for e in term_pool:
            ek = N.expr_key(e)
            passes = 0
            pred = None
            for i in live_idx:
                pk = (ek, i)
                if pk not in pass_cache:
                    if pred is None:
                        pred = problem.predicate_with(e)
                    pass_cache[pk] = eval_predicate(program, models[i], pred,
                                                    60_000) is True
                if pass_cache[pk]:
                    passes += 1
            scored.append((e, passes))
        scored.sort(key=lambda ep: -ep[1])
        return scored, len(live_idx)

    stagnant = 0
    any_unproved = False
    for _ in range(config.max_iterations):
        if ctx.cancelled() or time.monotonic() > deadline or ctx.out_of_time():
            return None
        if stagnant >= config.stagnation_limit:
            return None
        batch = list(itertools.islice(term_stream, n))
        if trace is not None:
            trace.batch_sizes.append(len(batch))
        if not batch and not term_pool:
            return None
        n = min(n * 2, config.batch_cap)
        term_pool.extend(batch)
        del term_pool[800:]
        current_path = N.conj(problem.path_condition, partition)
        partition_key = N.expr_key(partition)
        ranked, n_live = ranked_pool(current_path, partition_key)
        if n_live < 10:
            # narrow partitions starve the example pool; resample inside them
            seen_models = {tuple(sorted((k, v) for k, v in m.items()))
                           for m in models}
            for m in model_stream(program, sorted(problem.inputs), current_path,
                                  max_attempts=12_000):
                key = tuple(sorted((k, v) for k, v in m.items()))
                if key not in seen_models:
                    models.append(m)
                    seen_models.add(key)
                    n_live += 1
                if n_live >= 12:
                    break
            ranked, n_live = ranked_pool(current_path, partition_key)
        pick = next(((e, p) for e, p in ranked
                     if (N.expr_key(e), partition_key) not in stuck), None)
        if pick is None:
            continue
        candidate, passes = pick
        current = SynthSolution(precondition=current_path, term=candidate)
        v = solution_is_valid(problem, current, Budget(time_limit=0.5, phase0_attempts=700),
                              cancel=ctx.cancel, check_domain=False)
        if isinstance(v, Valid):
            term = simplify(program, wrap(candidate))
            return SynthSolution(N.BoolLit(True), term, defined,
                                 proved=not any_unproved)
        if isinstance(v, Unknown):
            if passes == n_live and n_live >= 6 and \
                    not _calls_holes(program, candidate):
                term = simplify(program, wrap(candidate))
                return SynthSolution(N.BoolLit(True), term, defined,
                                     proved=False)
            stuck.add((N.expr_key(candidate), partition_key))
            stagnant += 1
            continue
        models.append(v.counterexample)
        ctx.emit("counterexample", v.counterexample)
        cond_pool.extend(itertools.islice(cond_stream, config.branch_batch))
        del cond_pool[400:]
        if trace is not None:
            trace.branch_batch_sizes.append(config.branch_batch)
        pred = problem.predicate_with(candidate)
        positive = [m for m in models
                    if eval_predicate(program, m, current_path, 30_000) is True
                    and eval_predicate(program, m, pred, 60_000) is True]
        branch = abduce_branch(problem, ctx, candidate,
                               cond_pool[:config.guard_scan_cap], config,
                               positive_models=positive,
                               seed_counterexamples=[v.counterexample],
                               trace=None)
        if branch is not None:
            guard, guard_proved = branch
            any_unproved = any_unproved or not guard_proved
            prev_wrap = wrap
            wrap = (lambda g, t, pw: lambda hole: pw(N.If(g, t, hole)))(
                guard, candidate, prev_wrap)
            partition = N.conj(partition, N.neg(guard))
            stagnant = 0
        else:
            stuck.add((N.expr_key(candidate), partition_key))
            stagnant += 1
    return None


def _calls_holes(program, e: N.Expr) -> bool:
    holes = {f.name for f in program.functions if isinstance(f.body, N.Choose)}
    return bool(N.called_functions(e) & holes)
