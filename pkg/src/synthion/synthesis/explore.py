"""Symbolic term exploration: encode a finite space of deterministic terms
over typed generators, prune by concrete execution, then decide candidates
with discovery/falsification queries.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field
from typing import Iterator, Optional

from ..lang import nodes as N
from ..interp import eval_predicate
from ..solver import Budget, Sat, Unknown, Unsat, check_sat
from ..streams import model_stream
from .problem import SynthSolution, SynthesisProblem, exec_posts_for
from .simplify import simplify


# -- generators -----------------------------------------------------------------

@dataclass(frozen=True)
class Alternative:
    kind: str                  # "lit" | "var" | "sel" | "ctor" | "call" | "tuple"
    payload: tuple             # kind-specific
    slots: tuple = ()          # child slot types (type keys into the grammar)

    @property
    def recursive(self) -> bool:
        return bool(self.slots)


@dataclass
class GeneratorGrammar:
    """Per-type alternatives; slot types are TypeExpr objects."""
    alternatives: dict[tuple, list[Alternative]] = field(default_factory=dict)
    types: dict[tuple, N.TypeExpr] = field(default_factory=dict)

    def alts(self, ty: N.TypeExpr) -> list[Alternative]:
        return self.alternatives.get(_tkey(ty), [])


def _tkey(ty: N.TypeExpr) -> tuple:
    from ..streams import _type_key
    return _type_key(ty)


def build_generator(problem: SynthesisProblem, ctx) -> GeneratorGrammar:
    """Alternatives per type: constants, in-scope variables, tuple components,
    constructors, and calls to functions that are known to terminate (plus the
    guarded self-call of the function under synthesis)."""
    g = GeneratorGrammar()
    needed: list[N.TypeExpr] = [t for _, t in problem.outputs]
    seen: set[tuple] = set()
    program = problem.program
    terminating = ctx.terminating()

    def add_type(ty: N.TypeExpr) -> None:
        key = _tkey(ty)
        if key in seen:
            return
        seen.add(key)
        g.types[key] = ty
        alts: list[Alternative] = []
        # constants
        if isinstance(ty, N.IntType):
            for k in (0, 1, -1):
                alts.append(Alternative("lit", (k,)))
        elif isinstance(ty, N.BoolType):
            for b in (True, False):
                alts.append(Alternative("lit", (b,)))
        elif isinstance(ty, N.SetIntType):
            alts.append(Alternative("lit", ("empty",)))
        # variables
        for name, vt in problem.inputs:
            if vt == ty:
                alts.append(Alternative("var", (name,)))
        # tuple components
        for name, vt in problem.inputs:
            if isinstance(vt, N.TupleType):
                for i, et in enumerate(vt.elements):
                    if et == ty:
                        alts.append(Alternative("sel", (name, i + 1)))
        # constructors
        if isinstance(ty, N.AdtType):
            for ctor in program.adt(ty.name).constructors:
                fts = tuple(ft for _, ft in ctor.fields)
                alts.append(Alternative("ctor", (ctor.name,), fts))
                for ft in fts:
                    add_type(ft)
        if isinstance(ty, N.TupleType):
            alts.append(Alternative("tuple", (), tuple(ty.elements)))
            for et in ty.elements:
                add_type(et)
        # calls, and tuple components of calls; only value-building callees
        # (data-typed results) keep the space tractable; guarded self-calls
        # come before foreign calls so recursive candidates enumerate early
        self_alts: list[Alternative] = []
        call_alts: list[Alternative] = []
        for f in program.functions:
            if not isinstance(f.return_type, (N.AdtType, N.TupleType)):
                continue
            targets = []
            if f.return_type == ty:
                targets.append(None)
            if isinstance(f.return_type, N.TupleType):
                for i, et in enumerate(f.return_type.elements):
                    if et == ty:
                        targets.append(i + 1)
            if not targets:
                continue
            if isinstance(f.body, N.Choose):
                if problem.host is None or f.name != problem.host.name:
                    continue
                restr = _self_call_restrictions(problem)
                if restr is None:
                    continue
                bucket = self_alts
            elif f.name in terminating:
                restr = None
                bucket = call_alts
            else:
                continue
            params = tuple(pt for _, pt in f.params)
            for tgt in targets:
                if tgt is None:
                    bucket.append(Alternative("call", (f.name, restr), params))
                else:
                    bucket.append(Alternative("selcall", (f.name, restr, tgt), params))
            for _, pt in f.params:
                add_type(pt)
        g.alternatives[key] = alts + self_alts + call_alts

    for t in needed:
        add_type(t)
    return g


def _self_call_restrictions(problem: SynthesisProblem):
    """Per-position variable restrictions for guarded self-calls, or None."""
    if problem.host is None:
        return None
    in_types = dict(problem.inputs)
    restr: list[Optional[tuple[str, ...]]] = []
    any_smaller = False
    for pname, pty in problem.host.params:
        smaller = sorted(v for v in problem.smaller.get(pname, ())
                         if in_types.get(v) == pty)
        if smaller:
            restr.append(tuple(smaller))
            any_smaller = True
        else:
            restr.append(None)
    if not any_smaller:
        return None
    return tuple(restr)


# -- term enumeration over the grammar ----------------------------------------

_VAR_WEIGHT = 2
_CALL_PENALTY = 2
_FOREIGN_CALL_PENALTY = 4


def _alt_base_weight(alt: Alternative) -> int:
    if alt.kind == "var":
        return _VAR_WEIGHT
    if alt.kind == "sel":
        return _VAR_WEIGHT + 1
    if alt.kind in ("call", "selcall"):
        extra = 1 if alt.kind == "selcall" else 0
        self_call = alt.payload[1] is not None  # argument restrictions
        return 1 + extra + (_CALL_PENALTY if self_call else _FOREIGN_CALL_PENALTY)
    return 1


class TermSpace:
    """Weight-ordered candidate terms from a generator grammar.

    Depth bounds alternative nesting: at depth 0 only slot-free alternatives
    remain live, mirroring the instantiation-depth cutoff of the encoding.
    """

    def __init__(self, grammar: GeneratorGrammar, problem: SynthesisProblem):
        self.grammar = grammar
        self.problem = problem
        self._memo: dict[tuple, list[N.Expr]] = {}
        self._alt_memo: dict[tuple, list[N.Expr]] = {}
        self._args_memo: dict[tuple, list[list[N.Expr]]] = {}

    def candidates(self, depth: int, max_weight: int = 26,
                   limit: int = 6000) -> Iterator[N.Expr]:
        outs = [t for _, t in self.problem.outputs]
        n = 0
        for w in range(1, max_weight + 1):
            for term in self._tuple_terms(outs, w, depth):
                yield term
                n += 1
                if n >= limit:
                    return

    def _tuple_terms(self, types: list[N.TypeExpr], w: int, depth: int):
        if len(types) == 1:
            yield from self._terms(types[0], w, depth)
            return
        for combo in self._args([*types], w - 1, depth):
            yield N.TupleCtor(combo)

    def _terms(self, ty: N.TypeExpr, w: int, depth: int) -> list[N.Expr]:
        key = (_tkey(ty), w, depth)
        if key in self._memo:
            return self._memo[key]
        out: list[N.Expr] = []
        for alt in self.grammar.alts(ty):
            out.extend(self._alt_terms(alt, ty, w, depth))
        self._memo[key] = out
        return out

    def _alt_terms(self, alt: Alternative, ty: N.TypeExpr, w: int,
                   depth: int) -> list[N.Expr]:
        if depth <= 0 and alt.slots:
            return []
        key = (id(alt), w, depth)
        cached = self._alt_memo.get(key)
        if cached is not None:
            return cached
        base = _alt_base_weight(alt)
        out: list[N.Expr] = []
        if alt.kind == "lit":
            if base == w:
                out.append(_lit_expr(ty, alt.payload[0]))
        elif alt.kind == "var":
            if base == w:
                out.append(N.Var(alt.payload[0]))
        elif alt.kind == "sel":
            if base == w:
                out.append(N.TupleSel(N.Var(alt.payload[0]), alt.payload[1]))
        elif alt.kind == "ctor":
            for args in self._args(list(alt.slots), w - base, depth - 1):
                out.append(N.CtorApp(alt.payload[0], args))
        elif alt.kind == "tuple":
            for args in self._args(list(alt.slots), w - base, depth - 1):
                out.append(N.TupleCtor(args))
        elif alt.kind == "call":
            fun, restr = alt.payload
            for args in self._call_args(list(alt.slots), restr, w - base, depth - 1):
                out.append(N.Call(fun, args))
        elif alt.kind == "selcall":
            fun, restr, idx = alt.payload
            for args in self._call_args(list(alt.slots), restr, w - base, depth - 1):
                out.append(N.TupleSel(N.Call(fun, args), idx))
        self._alt_memo[key] = out
        return out

    def _head_terms(self, ty: N.TypeExpr, max_w: int, depth: int):
        """(term, weight) pairs ordered alternative-major, then by weight;
        keeps e.g. a variable first slot ahead of a constructor one within the
        same total-weight stratum."""
        for alt in self.grammar.alts(ty):
            base = _alt_base_weight(alt)
            for w in range(base, max_w + 1):
                for t in self._alt_terms(alt, ty, w, depth):
                    yield t, w

    def _args(self, types: list[N.TypeExpr], budget: int, depth: int):
        return self._args_list(tuple(types), budget, depth)

    def _args_list(self, types: tuple, budget: int, depth: int):
        if not types:
            return [[]] if budget == 0 else []
        key = (tuple(_tkey(t) for t in types), budget, depth)
        cached = self._args_memo.get(key)
        if cached is not None:
            return cached
        head, rest = types[0], types[1:]
        out = []
        for h, hw in self._head_terms(head, budget - len(rest), depth):
            for tail in self._args_list(rest, budget - hw, depth):
                out.append([h] + tail)
        self._args_memo[key] = out
        return out

    def _call_args(self, types: list[N.TypeExpr], restr, budget: int, depth: int):
        key = (tuple(_tkey(t) for t in types), restr, budget, depth)
        cached = self._args_memo.get(key)
        if cached is not None:
            return cached
        out: list[list[N.Expr]] = []
        if not types:
            out = [[]] if budget == 0 else []
            self._args_memo[key] = out
            return out
        head, rest = types[0], types[1:]
        pos = len(restr) - len(types) if restr else 0
        allowed = restr[pos] if restr else None
        if allowed is not None:
            if budget >= _VAR_WEIGHT + (len(rest)):
                for name in allowed:
                    for tail in self._call_args(rest, restr, budget - _VAR_WEIGHT, depth):
                        out.append([N.Var(name)] + tail)
            self._args_memo[key] = out
            return out
        for h, hw in self._head_terms(head, budget - len(rest), depth):
            for tail in self._call_args(rest, restr, budget - hw, depth):
                out.append([h] + tail)
        self._args_memo[key] = out
        return out


def _lit_expr(ty: N.TypeExpr, payload) -> N.Expr:
    if isinstance(ty, N.IntType):
        return N.IntLit(payload)
    if isinstance(ty, N.BoolType):
        return N.BoolLit(payload)
    return N.SetLit([])


# -- formula encoding (control booleans per choice) ------------------------------

@dataclass
class SlotEncoding:
    slot: int
    ty: N.TypeExpr
    c_name: str
    groups: list[tuple[int, Alternative, list[int]]]  # (b index, alt, child slots)


@dataclass
class SteEncoding:
    depth: int
    slots: list[SlotEncoding]
    roots: list[int]
    b_names: list[str]
    clauses: N.Expr        # B
    tie: N.Expr            # C (outputs bound to root c vars)
    env: dict[str, N.TypeExpr]

    def b_count(self) -> int:
        return len(self.b_names)

    def assignments(self) -> Iterator[dict[str, bool]]:
        """All control assignments satisfying the exactly-one constraints."""
        per_slot: list[list[tuple[int, ...]]] = []
        for s in self.slots:
            live = [i for i, (b, alt, kids) in enumerate(s.groups)
                    if not _beyond(self, s, alt)]
            per_slot.append([tuple(1 if i == pick else 0 for i in range(len(s.groups)))
                             for pick in live])
        for combo in itertools.product(*per_slot):
            out: dict[str, bool] = {}
            for s, picks in zip(self.slots, combo):
                for i, (b, alt, kids) in enumerate(s.groups):
                    out[self.b_names[b]] = bool(picks[i])
            yield out

    def decode(self, assignment: dict[str, bool]) -> list[N.Expr]:
        def slot_term(si: int) -> N.Expr:
            s = self.slots[si]
            for b, alt, kids in s.groups:
                if assignment.get(self.b_names[b]):
                    return _alt_term(alt, [slot_term(k) for k in kids])
            raise ValueError(f"no alternative chosen for slot {si}")
        return [slot_term(r) for r in self.roots]


def _beyond(enc: SteEncoding, s: SlotEncoding, alt: Alternative) -> bool:
    return s.slot in enc._dead_alts and alt in enc._dead_alts[s.slot]


def _alt_term(alt: Alternative, children: list[N.Expr]) -> N.Expr:
    if alt.kind == "lit":
        ty = None
        v = alt.payload[0]
        if v == "empty":
            return N.SetLit([])
        if isinstance(v, bool):
            return N.BoolLit(v)
        return N.IntLit(v)
    if alt.kind == "var":
        return N.Var(alt.payload[0])
    if alt.kind == "sel":
        return N.TupleSel(N.Var(alt.payload[0]), alt.payload[1])
    if alt.kind == "ctor":
        return N.CtorApp(alt.payload[0], children)
    if alt.kind == "tuple":
        return N.TupleCtor(children)
    if alt.kind == "call":
        return N.Call(alt.payload[0], children)
    if alt.kind == "selcall":
        return N.TupleSel(N.Call(alt.payload[0], children), alt.payload[2])
    raise TypeError(alt.kind)


def encode(grammar: GeneratorGrammar, goal_types: list[N.TypeExpr],
           depth: int) -> SteEncoding:
    """Exactly-one control group per slot; alternatives beyond the depth get a
    negated control variable; guard implications tie slot values to choices."""
    slots: list[SlotEncoding] = []
    b_names: list[str] = []
    dead: dict[int, set[Alternative]] = {}
    clauses: list[N.Expr] = []
    env: dict[str, N.TypeExpr] = {}

    def new_slot(ty: N.TypeExpr, d: int) -> int:
        si = len(slots)
        c_name = f"__c{si}"
        env[c_name] = ty
        enc = SlotEncoding(si, ty, c_name, [])
        slots.append(enc)
        for alt in grammar.alts(ty):
            b = len(b_names)
            b_names.append(f"__b{b}")
            env[f"__b{b}"] = N.BOOL
            kid_slots: list[int] = []
            if alt.slots and d > 0:
                kid_slots = [new_slot(ft, d - 1) for ft in alt.slots]
            enc.groups.append((b, alt, kid_slots))
            if alt.slots and d <= 0:
                dead.setdefault(si, set()).add(alt)
                clauses.append(N.neg(N.Var(f"__b{b}")))
            else:
                child_terms = [N.Var(slots[k].c_name) for k in kid_slots]
                clauses.append(N.disj(N.neg(N.Var(f"__b{b}")),
                                      N.BinOp("==", N.Var(c_name),
                                              _alt_term(alt, child_terms))))
        lives = [f"__b{b}" for b, alt, _ in enc.groups]
        clauses.append(N.disj(*[N.Var(x) for x in lives]))
        for x, y in itertools.combinations(lives, 2):
            clauses.append(N.disj(N.neg(N.Var(x)), N.neg(N.Var(y))))
        return si

    roots = [new_slot(t, depth) for t in goal_types]
    out = SteEncoding(depth, slots, roots, b_names,
                      clauses=N.conj(*clauses), tie=N.BoolLit(True), env=env)
    out._dead_alts = dead
    return out


def reachable_values(program, enc: SteEncoding, inputs: dict) -> set:
    """Decoded-candidate value set under an input model (oracle for tests)."""
    from ..interp import eval_expr
    from ..values import Value
    out = set()
    for assignment in enc.assignments():
        terms = enc.decode(assignment)
        vals = []
        for t in terms:
            v = eval_expr(program, dict(inputs), t)
            if not isinstance(v, Value):
                break
            vals.append(v)
        else:
            out.add(tuple(vals))
    return out


# -- the exploration loop ----------------------------------------------------------

@dataclass
class SteConfig:
    start_depth: int = 0
    max_depth: int = 3
    per_depth_budget: float = 4.0
    pool_size: int = 32
    candidate_cap: int = 60000
    batch: int = 256
    min_tested_for_optimism: int = 6
    re_encode_threshold: float = 0.25


@dataclass
class SteOutcome:
    solution: Optional[SynthSolution]   # None when exhausted / unknown
    status: str                         # "solved" | "exhausted" | "unknown"
    counterexamples: list = field(default_factory=list)


def spec_witness_oracle(program):
    """Supplies call results for specification holes by sampling an output
    that satisfies the hole's predicate.  Any correct implementation returns
    some such value, so a candidate failing under a sampled witness is wrong
    for at least one admissible implementation; rejection is sound."""
    from ..values import value_to_expr
    cache: dict = {}

    def oracle(fun_name, args):
        key = (fun_name, args)
        if key in cache:
            return cache[key]
        f = program.function(fun_name)
        choose = f.body
        binding = {p: value_to_expr(v) for (p, _), v in zip(f.params, args)}
        pred = N.substitute(choose.predicate, binding)
        found = None
        for m in model_stream(program, list(choose.out_params), pred,
                              max_attempts=1500):
            vals = [m[name] for name, _ in choose.out_params]
            from ..values import TupleVal
            found = vals[0] if len(vals) == 1 else TupleVal(tuple(vals))
            break
        if found is None:
            v = check_sat(program, pred, dict(choose.out_params),
                          Budget(time_limit=1.2, phase0_attempts=0))
            if isinstance(v, Sat):
                vals = [v.model[name] for name, _ in choose.out_params]
                from ..values import TupleVal
                found = vals[0] if len(vals) == 1 else TupleVal(tuple(vals))
        cache[key] = found
        return found

    return oracle


def concrete_filter(program, problem: SynthesisProblem, candidates: list[N.Expr],
                    inputs: list[dict], oracle=None) -> list[N.Expr]:
    """Candidates surviving evaluation of the predicate on every sampled input.

    Calls into specification holes evaluate through the witness oracle; when
    no witness is obtainable the candidate survives to the symbolic stages.
    """
    from ..interp import ChooseEncountered, eval_expr
    from ..values import TupleVal, Value
    out = []
    names = [n for n, _ in problem.outputs]
    for cand in candidates:
        ok = True
        for m in inputs:
            v = eval_expr(program, m, cand, fuel=60_000, choose_oracle=oracle)
            if isinstance(v, ChooseEncountered):
                continue  # not testable on this input
            if not isinstance(v, Value):
                ok = False
                break
            env = dict(m)
            if len(names) == 1:
                env[names[0]] = v
            else:
                assert isinstance(v, TupleVal)
                for n, piece in zip(names, v.elements):
                    env[n] = piece
            r = eval_predicate(program, env, problem.predicate, fuel=60_000,
                               choose_oracle=oracle)
            if r is True:
                continue
            if isinstance(r, ChooseEncountered):
                continue
            ok = False
            break
        if ok:
            out.append(cand)
    return out


def explore(problem: SynthesisProblem, ctx,
            config: Optional[SteConfig] = None) -> SteOutcome:
    config = config or ctx.config.ste
    if len(problem.outputs) > 1 or isinstance(problem.output_type, N.TupleType):
        from dataclasses import replace
        config = replace(config, per_depth_budget=config.per_depth_budget * 1.8)
    program = problem.program
    grammar = build_generator(problem, ctx)
    if not any(grammar.alts(t) for _, t in problem.outputs):
        return SteOutcome(None, "exhausted")
    space = TermSpace(grammar, problem)
    choose_funs = {f.name for f in program.functions
                   if isinstance(f.body, N.Choose)}
    posts = exec_posts_for(problem)

    pool: list[dict] = []
    for m in itertools.islice(
            model_stream(program, sorted(problem.inputs),
                         problem.path_condition,
                         max_attempts=20_000), config.pool_size):
        pool.append(m)
    oracle = spec_witness_oracle(program)

    # recursive candidates first: a grammar without foreign calls is small, so
    # guarded self-call terms are reached long before the full space allows
    spaces = [space]
    if any(a.payload[1] is not None
           for a in grammar.alts(problem.output_type)
           if a.kind in ("call", "selcall")) or any(
               a.payload[1] is not None
               for _, t in problem.outputs for a in grammar.alts(t)
               if a.kind in ("call", "selcall")):
        lean = GeneratorGrammar(
            {k: [a for a in alts
                 if a.kind not in ("call", "selcall") or a.payload[1] is not None]
             for k, alts in grammar.alternatives.items()},
            dict(grammar.types))
        spaces = [TermSpace(lean, problem), space]

    seen: set = set()
    any_unknown = False
    # the deepest stream subsumes shallower ones and stays weight-ordered, so
    # a single pass at max depth visits the same candidates without rework
    ndepths = config.max_depth - config.start_depth + 1
    deadline = time.monotonic() + config.per_depth_budget * ndepths
    for space_i, depth in [(sp, config.max_depth) for sp in spaces]:
        produced = 0
        cand_iter = space_i.candidates(depth, limit=config.candidate_cap)
        while True:
            if ctx.out_of_time():
                return SteOutcome(None, "unknown")
            batch = list(itertools.islice(cand_iter, config.batch))
            if not batch:
                break
            produced += len(batch)
            fresh = [c for c in batch if N.expr_key(c) not in seen]
            for c in fresh:
                seen.add(N.expr_key(c))
            survivors = concrete_filter(program, problem, fresh, pool, oracle)
            for cand in survivors:
                if ctx.cancelled() or ctx.out_of_time():
                    return SteOutcome(None, "unknown")
                if time.monotonic() > deadline:
                    break
                result = _falsify(problem, ctx, cand, pool, posts, choose_funs,
                                  config, oracle)
                if result == "valid":
                    term = simplify(program, cand)
                    return SteOutcome(SynthSolution(N.BoolLit(True), term),
                                      "solved")
                if result == "valid-unproved":
                    term = simplify(program, cand)
                    return SteOutcome(
                        SynthSolution(N.BoolLit(True), term, proved=False),
                        "solved")
                if result == "unknown":
                    any_unknown = True
            if time.monotonic() > deadline:
                break
    return SteOutcome(None, "unknown" if any_unknown else "exhausted")


def _falsify(problem: SynthesisProblem, ctx, cand: N.Expr, pool: list[dict],
             posts, choose_funs, config: SteConfig, oracle=None) -> str:
    """"valid" | "valid-unproved" | "refuted" | "unknown"

    The candidate is refuted one predicate conjunct at a time: the negated
    conjunction would mix theories in one query.
    """
    program = problem.program
    calls_holes = bool(N.called_functions(cand) & choose_funs)
    budget = Budget(time_limit=4.0, max_unfold_depth=5) if calls_holes \
        else ctx.solver_budget()
    any_unknown = False
    for goal in problem.conjuncts_with(cand):
        query = N.conj(problem.path_condition, N.neg(goal))
        v = check_sat(program, query, problem.env(), budget,
                      exec_posts=posts, cancel=ctx.cancel, eval_oracle=oracle)
        if isinstance(v, Sat):
            pool.append(v.model)
            ctx.emit("counterexample", v.model)
            return "refuted"
        if isinstance(v, Unknown):
            any_unknown = True
    if not any_unknown:
        return "valid"
    if calls_holes:
        return "unknown"
    if len(pool) >= config.min_tested_for_optimism:
        return "valid-unproved"
    return "unknown"
