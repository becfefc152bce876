"""Conjunction-level theory reasoning: ADT congruence closure with occurs
check, finite-set constraints via membership bits and Venn-region padding,
linear integer arithmetic with product abstraction, and model construction.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field
from typing import Optional, Union

from ..lang import nodes as N
from ..values import AdtVal, BoolVal, IntVal, SetVal, TupleVal, Value, mk_set
from . import terms as T
from . import props as P
from .lia import LiaBudget, solve_lia

PRODUCT_BASE = 10_000_000


class Giveup(Exception):
    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


class _Conflict(Exception):
    pass


def formula_value(f, assign: list) -> bool:
    if f is True or f is False:
        return f
    kind = f[0]
    if kind == "var":
        v = assign[f[1]]
        return bool(v)
    if kind == "not":
        return not formula_value(f[1], assign)
    if kind == "and":
        return all(formula_value(g, assign) for g in f[1])
    if kind == "or":
        return any(formula_value(g, assign) for g in f[1])
    raise TypeError(f)


@dataclass
class TheoryModel:
    int_model: dict[int, int] = field(default_factory=dict)
    set_model: dict[int, SetVal] = field(default_factory=dict)
    adt_model: dict[tuple, Value] = field(default_factory=dict)  # class key -> value
    uf: Optional["_UF"] = None

    def adt_value(self, key: tuple) -> Value:
        return self.adt_model[self.uf.find(key)]


class _UF:
    def __init__(self):
        self.parent: dict[tuple, tuple] = {}
        self.struct: dict[tuple, T.AdtCtor] = {}
        self.forced: dict[tuple, str] = {}
        self.forbidden: dict[tuple, set[str]] = {}
        self.sort: dict[tuple, str] = {}

    def add(self, key: tuple, term: T.AdtTerm, sorts: dict[int, str]) -> None:
        if key in self.parent:
            return
        self.parent[key] = key
        if isinstance(term, T.AdtCtor):
            self.struct[key] = term
        self.sort[key] = (term.adt if isinstance(term, T.AdtCtor)
                          else sorts[term.sym])

    def find(self, k: tuple) -> tuple:
        while self.parent[k] != k:
            self.parent[k] = self.parent[self.parent[k]]
            k = self.parent[k]
        return k


def check(ctx: T.Context, assign: list, program, want_model: bool = True,
          budget: int = 12, restrict: Optional[set[int]] = None,
          deadline: Optional[float] = None):
    """Decide the conjunction of theory literals under a propositional assignment.

    Returns ("model", TheoryModel) or ("conflict", [signed prop vars]).
    `restrict` limits the considered literals to those propositional vars.
    Raises Giveup when beyond the implemented fragment.
    """
    int_eqs: list[T.Poly] = []
    int_les: list[T.Poly] = []
    int_neqs: list[T.Poly] = []
    adt_pos: list[tuple[tuple, tuple]] = []
    adt_neg: list[tuple[tuple, tuple]] = []
    test_pos: list[tuple[str, tuple]] = []
    test_neg: list[tuple[str, tuple]] = []
    set_pos: list[tuple[tuple, tuple]] = []
    set_neg: list[tuple[tuple, tuple]] = []
    mem_pos: list[tuple[tuple, tuple]] = []
    mem_neg: list[tuple[tuple, tuple]] = []
    used_vars: list[int] = []

    def poly_of(key: tuple) -> T.Poly:
        return dict(key)

    for var, atom in ctx.atoms_by_var.items():
        if var >= len(assign) or assign[var] is None:
            continue
        if restrict is not None and var not in restrict:
            continue
        val = assign[var]
        if isinstance(atom, T.ABool):
            continue
        used_vars.append(var if val else -var)
        if isinstance(atom, T.ALe):
            p = poly_of(atom.poly)
            if val:
                int_les.append(p)
            else:  # p > 0  <->  -p + 1 <= 0
                int_les.append(T.poly_add(T.poly_neg(p), T.poly_const(1)))
        elif isinstance(atom, T.AEq):
            (int_eqs if val else int_neqs).append(poly_of(atom.poly))
        elif isinstance(atom, T.AAdtEq):
            (adt_pos if val else adt_neg).append((atom.left, atom.right))
        elif isinstance(atom, T.ATest):
            (test_pos if val else test_neg).append((atom.ctor, atom.term))
        elif isinstance(atom, T.ASetEq):
            (set_pos if val else set_neg).append((atom.left, atom.right))
        elif isinstance(atom, T.AMember):
            (mem_pos if val else mem_neg).append((atom.poly, atom.term))
        else:
            raise TypeError(atom)

    conflict_core = used_vars  # coarse core; minimized by the caller

    # --- ADT congruence closure -------------------------------------------
    uf = _UF()
    for key, term in ctx.adt_terms.items():
        uf.add(key, term, ctx.symbols.sorts)

    pending = list(adt_pos)

    def merge(a: tuple, b: tuple) -> None:
        ra, rb = uf.find(a), uf.find(b)
        if ra == rb:
            return
        sa, sb = uf.struct.get(ra), uf.struct.get(rb)
        # keep the structured rep when possible
        if sa is None and sb is not None:
            ra, rb = rb, ra
            sa, sb = sb, sa
        uf.parent[rb] = ra
        fa, fb = uf.forced.get(ra), uf.forced.get(rb)
        if fb is not None:
            if fa is not None and fa != fb:
                raise _Conflict()
            uf.forced[ra] = fb
        bad = uf.forbidden.get(ra, set()) | uf.forbidden.get(rb, set())
        if bad:
            uf.forbidden[ra] = bad
        if sa is not None and uf.forced.get(ra) not in (None, sa.ctor):
            raise _Conflict()
        if uf.forced.get(ra) in uf.forbidden.get(ra, set()):
            raise _Conflict()
        if sa is not None and sa.ctor in uf.forbidden.get(ra, set()):
            raise _Conflict()
        if sb is not None:
            if sa is None:
                uf.struct[ra] = sb
            else:
                if sa.ctor != sb.ctor:
                    raise _Conflict()
                _pair_args(sa, sb)

    def _pair_args(sa: T.AdtCtor, sb: T.AdtCtor) -> None:
        for x, y in zip(sa.args, sb.args):
            kx = x[0]
            if kx == "adt":
                pending.append((x[1].key(), y[1].key()))
            elif kx == "int":
                int_eqs.append(T.poly_add(x[1], y[1], -1))
            elif kx == "set":
                set_pos.append((x[1].key(), y[1].key()))
            elif kx == "bool":
                if formula_value(x[1], assign) != formula_value(y[1], assign):
                    raise _Conflict()

    try:
        while pending:
            a, b = pending.pop()
            merge(a, b)
        for ctor, key in test_pos:
            r = uf.find(key)
            s = uf.struct.get(r)
            if s is not None and s.ctor != ctor:
                raise _Conflict()
            f = uf.forced.get(r)
            if f is not None and f != ctor:
                raise _Conflict()
            uf.forced[r] = ctor
            if ctor in uf.forbidden.get(r, set()):
                raise _Conflict()
        for ctor, key in test_neg:
            r = uf.find(key)
            s = uf.struct.get(r)
            if s is not None and s.ctor == ctor:
                raise _Conflict()
            if uf.forced.get(r) == ctor:
                raise _Conflict()
            uf.forbidden.setdefault(r, set()).add(ctor)
        # nullary forbidden exhaustion: all ctors forbidden -> conflict
        for r in {uf.find(k) for k in uf.parent}:
            bad = uf.forbidden.get(r, set())
            if bad:
                adt = program.adt(uf.sort[r])
                if all(c.name in bad for c in adt.constructors):
                    raise _Conflict()
        _occurs_check(uf)
    except _Conflict:
        return ("conflict", conflict_core)

    # --- ADT disequalities ---------------------------------------------------
    distinct_pairs: list[tuple[tuple, tuple]] = []
    choice_sets: list[list[tuple[str, object]]] = []

    def diseq_options(a: tuple, b: tuple, depth: int = 0):
        """None = already distinct; [] = impossible; else alternatives."""
        if depth > 24:
            raise Giveup("deep disequality")
        ra, rb = uf.find(a), uf.find(b)
        if ra == rb:
            return []
        sa, sb = uf.struct.get(ra), uf.struct.get(rb)
        ca = sa.ctor if sa is not None else uf.forced.get(ra)
        cb = sb.ctor if sb is not None else uf.forced.get(rb)
        if ca is not None and cb is not None and ca != cb:
            return None
        if sa is not None and sb is not None and sa.ctor == sb.ctor:
            opts: list[tuple[str, object]] = []
            for x, y in zip(sa.args, sb.args):
                kx = x[0]
                if kx == "int":
                    d = T.poly_add(x[1], y[1], -1)
                    c = T.poly_is_const(d)
                    if c is None:
                        opts.append(("int", d))
                    elif c != 0:
                        return None
                elif kx == "bool":
                    if formula_value(x[1], assign) != formula_value(y[1], assign):
                        return None
                elif kx == "set":
                    opts.append(("set", (x[1].key(), y[1].key())))
                elif kx == "adt":
                    sub = diseq_options(x[1].key(), y[1].key(), depth + 1)
                    if sub is None:
                        return None
                    opts.extend(sub)
            return opts
        if ca is not None and cb is not None and ca == cb:
            # same constructor, at least one side without structure
            ctor = _ctor_def(program, uf.sort[ra], ca)
            if ctor.arity == 0:
                return []
            return [("free", (ra, rb))]
        return [("free", (ra, rb))]

    try:
        for a, b in adt_neg:
            opts = diseq_options(a, b)
            if opts is None:
                continue
            if not opts:
                return ("conflict", conflict_core)
            frees = [o for o in opts if o[0] == "free"]
            if frees:
                distinct_pairs.append(frees[0][1])
            else:
                choice_sets.append(opts)
    except Giveup:
        raise

    # --- scalar part: combinations of disequality choices --------------------
    combos = 1
    for cs in choice_sets:
        combos *= len(cs)
    if combos > 256:
        raise Giveup("too many disequality splits")

    element_polys: dict[tuple, T.Poly] = {}

    def collect_elems(tk: tuple) -> None:
        if tk[0] == "slit":
            for ek in tk[1]:
                element_polys[ek] = ctx.set_lit_elems.get(ek, dict(ek))
        elif tk[0] == "sop":
            collect_elems(tk[2])
            collect_elems(tk[3])

    for pk, s in mem_pos + mem_neg:
        element_polys[pk] = dict(pk)
        collect_elems(s)
    for l, r in set_pos + set_neg:
        collect_elems(l)
        collect_elems(r)

    for combo in itertools.product(*choice_sets) if choice_sets else [()]:
        if deadline is not None and time.monotonic() > deadline:
            raise Giveup("timeout")
        neqs2 = list(int_neqs)
        sneg2 = list(set_neg)
        for kind, payload in combo:
            if kind == "int":
                neqs2.append(payload)
            else:
                sneg2.append(payload)
        out = _solve_scalar(ctx, program, assign, int_eqs, int_les, neqs2,
                            set_pos, sneg2, mem_pos, mem_neg,
                            element_polys, budget, want_model, deadline)
        if out is None:
            continue
        lia_model, set_env = out
        if not want_model:
            return ("model", TheoryModel(lia_model, set_env, {}, uf))
        try:
            adt_model = _build_adt_model(ctx, program, uf, assign, lia_model,
                                         set_env, distinct_pairs)
        except Giveup:
            raise
        tm = TheoryModel(lia_model, set_env, adt_model, uf)
        return ("model", tm)
    return ("conflict", conflict_core)


def _ctor_def(program, adt_name: str, ctor: str) -> N.CtorDef:
    return program.adt(adt_name).ctor(ctor)


def _occurs_check(uf: _UF) -> None:
    color: dict[tuple, int] = {}

    def visit(r: tuple) -> None:
        state = color.get(r, 0)
        if state == 1:
            raise _Conflict()
        if state == 2:
            return
        color[r] = 1
        s = uf.struct.get(r)
        if s is not None:
            for a in s.args:
                if a[0] == "adt":
                    visit(uf.find(a[1].key()))
        color[r] = 2

    for k in list(uf.parent):
        visit(uf.find(k))


# --- linear arithmetic with product abstraction -------------------------------

def _poly_to_lin(p: T.Poly, prods: dict[tuple, int]) -> dict:
    lin: dict = {}
    for mono, c in p.items():
        if mono == ():
            lin[0] = lin.get(0, 0) + c
        elif len(mono) == 1:
            lin[mono[0]] = lin.get(mono[0], 0) + c
        else:
            if mono not in prods:
                prods[mono] = PRODUCT_BASE + len(prods)
            v = prods[mono]
            lin[v] = lin.get(v, 0) + c
    return {k: v for k, v in lin.items() if v != 0 or k == 0}


def _solve_ints(eqs, les, neqs, budget: int,
                strict_products: bool = True) -> Optional[dict[int, int]]:
    prods: dict[tuple, int] = {}
    lin_eqs = [_poly_to_lin(p, prods) for p in eqs]
    lin_les = [_poly_to_lin(p, prods) for p in les]
    lin_neqs = [_poly_to_lin(p, prods) for p in neqs]
    if prods:
        _product_lemmas(lin_eqs, prods)

    def refine(extra_eqs, extra_les, depth) -> Optional[dict[int, int]]:
        try:
            model = solve_lia(lin_eqs + extra_eqs, lin_les + extra_les, lin_neqs)
        except LiaBudget as e:
            raise Giveup(str(e))
        if model is None:
            return None
        if not strict_products:
            return model
        # product consistency
        for mono, v in prods.items():
            have = model.get(v, 0)
            wantv = 1
            for s in mono:
                wantv *= model.get(s, 0)
            if have != wantv:
                if depth <= 0:
                    raise Giveup("nonlinear arithmetic")
                x = mono[0]
                vx = model.get(x, 0)
                rest = mono[1:] if len(mono) > 2 else (mono[1],)
                rest_key = tuple(sorted(rest))
                if len(rest_key) >= 2:
                    if rest_key not in prods:
                        prods[rest_key] = PRODUCT_BASE + len(prods)
                    rest_var = prods[rest_key]
                else:
                    rest_var = rest_key[0]
                # branch x = vx (linearizes this monomial) | x < vx | x > vx
                pin_eq = [{x: 1, 0: -vx}, {v: 1, rest_var: -vx, 0: 0}]
                m = refine(extra_eqs + pin_eq, extra_les, depth - 1)
                if m is not None:
                    return m
                m = refine(extra_eqs, extra_les + [{x: 1, 0: -vx + 1}], depth - 1)
                if m is not None:
                    return m
                return refine(extra_eqs, extra_les + [{x: -1, 0: vx + 1}], depth - 1)
        return model
    return refine([], [], budget)


def _has_products(*poly_lists) -> bool:
    return any(len(m) > 1 for ps in poly_lists for p in ps for m in p)


def _entailed_constant(lin_eqs: list, expr: dict) -> Optional[int]:
    """The constant value of expr forced by the equalities, if any."""
    try:
        m = solve_lia(lin_eqs, [], [])
    except LiaBudget:
        return None
    if m is None:
        return None
    k = expr.get(0, 0) + sum(c * m.get(v, 0) for v, c in expr.items() if v != 0)
    probe = dict(expr)
    probe[0] = probe.get(0, 0) - k
    try:
        if solve_lia(lin_eqs, [], [probe]) is None:
            return k
    except LiaBudget:
        pass
    return None


def _rest_column(rest: tuple, prods: dict[tuple, int]) -> int:
    if len(rest) == 1:
        return rest[0]
    if rest not in prods:
        prods[rest] = PRODUCT_BASE + len(prods)
    return prods[rest]


def _product_lemmas(lin_eqs: list, prods: dict[tuple, int]) -> None:
    """Link monomial columns whose factors are pinned by the equalities:
    a = k entails a*rest = k*rest; a - c = k entails a*rest - c*rest = k*rest.
    """
    work = 0
    for mono in list(prods):
        if work > 40:
            return
        v = prods[mono]
        for i, x in enumerate(mono):
            work += 1
            k = _entailed_constant(lin_eqs, {x: 1})
            if k is None:
                continue
            rest = mono[:i] + mono[i + 1:]
            rv = _rest_column(rest, prods)
            lin_eqs.append({v: 1, rv: -k} if rv != v else {v: 1 - k})
            break
    monos = list(prods.items())
    for (m1, v1), (m2, v2) in itertools.combinations(monos, 2):
        if work > 60:
            return
        d1 = _multiset_minus(m1, m2)
        d2 = _multiset_minus(m2, m1)
        if len(d1) == 1 and len(d2) == 1:
            a, c = d1[0], d2[0]
            work += 1
            k = _entailed_constant(lin_eqs, {a: 1, c: -1})
            if k is None:
                continue
            rest = _multiset_minus(m1, (a,))
            rv = _rest_column(tuple(sorted(rest)), prods)
            lemma = {v1: 1, v2: -1}
            lemma[rv] = lemma.get(rv, 0) - k
            lin_eqs.append({kk: vv for kk, vv in lemma.items() if vv != 0 or kk == 0})


def _multiset_minus(a: tuple, b: tuple) -> tuple:
    out = list(a)
    for x in b:
        if x in out:
            out.remove(x)
    return tuple(out)


# --- set constraints ----------------------------------------------------------

def _solve_scalar(ctx, program, assign, eqs, les, neqs, set_pos, set_neg,
                  mem_pos, mem_neg, element_polys, budget, want_model=True,
                  deadline=None):
    """Returns (int model, set env) or None."""
    elems = sorted(element_polys.keys())
    set_cons_present = bool(set_pos or set_neg or mem_pos or mem_neg)
    if not set_cons_present:
        m = _solve_ints(eqs, les, neqs, budget, strict_products=want_model)
        if m is None:
            return None
        return m, {}
    if _solve_ints(eqs, les, neqs, budget, strict_products=False) is None:
        return None  # arithmetic conflict regardless of element aliasing

    # pairs of mentioned elements whose aliasing is decided syntactically
    n = len(elems)
    fixed: dict[tuple, bool] = {}
    for i, j in itertools.combinations(range(n), 2):
        d = T.poly_add(element_polys[elems[i]], element_polys[elems[j]], -1)
        c = T.poly_is_const(d)
        if c is not None:
            fixed[(i, j)] = (c == 0)

    # the set layer proposes an aliasing pattern and a membership assignment;
    # arithmetic vets the pattern; refuted patterns are blocked and retried
    blocked: list[dict] = []
    for _round in range(48):
        if deadline is not None and time.monotonic() > deadline:
            raise Giveup("timeout")
        proposal = _solve_sets(ctx, assign, set_pos, set_neg, mem_pos, mem_neg,
                               elems, element_polys, fixed, blocked)
        if proposal is None:
            return None
        alias, env_builder = proposal
        eqs2 = list(eqs)
        neqs2 = list(neqs)
        for (i, j), same in alias.items():
            d = T.poly_add(element_polys[elems[i]], element_polys[elems[j]], -1)
            (eqs2 if same else neqs2).append(d)
        int_model = _solve_ints(eqs2, les, neqs2, budget,
                                strict_products=want_model)
        if int_model is not None:
            return int_model, env_builder(int_model)
        blocked.append({k: v for k, v in alias.items() if k not in fixed})
    raise Giveup("aliasing search exhausted")


def _collect_set_syms(term_key: tuple, out: set[int]) -> None:
    kind = term_key[0]
    if kind == "ssym":
        out.add(term_key[1])
    elif kind == "sop":
        _collect_set_syms(term_key[2], out)
        _collect_set_syms(term_key[3], out)


def _solve_sets(ctx, assign, set_pos, set_neg, mem_pos, mem_neg,
                elems, element_polys, fixed, blocked):
    """One satisfiability round of the set layer.

    Bits: membership per (element column | anonymous witness column) and set
    variable, plus one aliasing bit per undecided element pair (with
    transitivity).  Constructed sets contain only column elements, which keeps
    every equality vacuously true outside the columns; each disequality may
    enable one anonymous witness column.  Returns (aliasing pattern,
    set-environment builder) or None.
    """
    syms: set[int] = set()
    for l, r in set_pos + set_neg:
        _collect_set_syms(l, syms)
        _collect_set_syms(r, syms)
    for pk, t in mem_pos + mem_neg:
        _collect_set_syms(t, syms)
    sym_list = sorted(syms)
    if len(sym_list) > 24:
        raise Giveup("too many set variables")
    n = len(elems)
    if n > 12:
        raise Giveup("too many set elements")
    nanon = len(set_neg)
    columns = list(range(n + nanon))

    db = P.ClauseDb()
    mem_bit = {(c, s): db.fresh_var() for c in columns for s in sym_list}
    anon_on = {d: db.fresh_var() for d in range(nanon)}
    a_bit: dict[tuple, int] = {}
    for i, j in itertools.combinations(range(n), 2):
        if (i, j) not in fixed:
            a_bit[(i, j)] = db.fresh_var()

    def alias_f(i: int, j: int):
        if i == j:
            return P.TRUE
        if i > j:
            i, j = j, i
        if (i, j) in fixed:
            return P.TRUE if fixed[(i, j)] else P.FALSE
        return ("var", a_bit[(i, j)])

    # transitivity of aliasing
    for i, j, k in itertools.combinations(range(n), 3):
        for (x, y), (y2, z), (x2, z2) in (((i, j), (j, k), (i, k)),
                                          ((i, k), (j, k), (i, j)),
                                          ((i, j), (i, k), (j, k))):
            db.assert_formula(P.pimplies(P.pand(alias_f(*(x, y)), alias_f(y2, z)),
                                         alias_f(x2, z2)))
    # aliased elements are the same element
    for (i, j), b in a_bit.items():
        for s in sym_list:
            db.assert_formula(P.pimplies(("var", b),
                                         P.piff(("var", mem_bit[(i, s)]),
                                                ("var", mem_bit[(j, s)]))))

    idx_of = {pk: i for i, pk in enumerate(elems)}

    def mem_formula(c: int, tk: tuple):
        kind = tk[0]
        if kind == "ssym":
            return ("var", mem_bit[(c, tk[1])])
        if kind == "slit":
            if c >= n:
                return P.FALSE  # anonymous witnesses are not literal elements
            return P.por(*[alias_f(c, idx_of[e]) for e in tk[1]])
        op = tk[1]
        l = mem_formula(c, tk[2])
        r = mem_formula(c, tk[3])
        if op == "++":
            return P.por(l, r)
        if op == "--":
            return P.pand(l, P.pnot(r))
        return P.pand(l, r)

    for l, r in set_pos:
        for c in columns:
            db.assert_formula(P.piff(mem_formula(c, l), mem_formula(c, r)))
    for d, (l, r) in enumerate(set_neg):
        witnesses = []
        for c in range(n):
            lm, rm = mem_formula(c, l), mem_formula(c, r)
            witnesses.append(P.pand(lm, P.pnot(rm)))
            witnesses.append(P.pand(rm, P.pnot(lm)))
        col = n + d
        lm, rm = mem_formula(col, l), mem_formula(col, r)
        witnesses.append(P.pand(("var", anon_on[d]), lm, P.pnot(rm)))
        witnesses.append(P.pand(("var", anon_on[d]), rm, P.pnot(lm)))
        db.assert_formula(P.por(*witnesses))
        # disabled anonymous columns stay empty
        for s in sym_list:
            db.assert_formula(P.pimplies(P.pnot(("var", anon_on[d])),
                                         P.pnot(("var", mem_bit[(col, s)]))))
    for pk, t in mem_pos:
        db.assert_formula(mem_formula(idx_of[pk], t))
    for pk, t in mem_neg:
        db.assert_formula(P.pnot(mem_formula(idx_of[pk], t)))
    for pattern in blocked:
        db.assert_formula(P.por(*[
            P.pnot(("var", a_bit[pair])) if same else ("var", a_bit[pair])
            for pair, same in pattern.items()]))

    res = P.dpll(db)
    if res is None:
        return None

    alias = dict(fixed)
    for pair, b in a_bit.items():
        alias[pair] = bool(res[b])

    def env_builder(int_model):
        def value_of(pk):
            tot = 0
            for mono, c in dict(pk).items():
                v = c
                for sym in mono:
                    v *= int_model.get(sym, 0)
                tot += v
            return tot

        col_vals = {i: value_of(elems[i]) for i in range(n)}
        pad = max((abs(v) for v in col_vals.values()), default=0) + 1
        for d in range(nanon):
            col_vals[n + d] = pad
            pad += 1
        env: dict[int, SetVal] = {}
        for s in sym_list:
            env[s] = mk_set(col_vals[c] for c in columns if res[mem_bit[(c, s)]])
        return env

    return alias, env_builder


# --- ADT model construction ----------------------------------------------------

def _build_adt_model(ctx, program, uf: _UF, assign, int_model, set_env,
                     distinct_pairs):
    reps = sorted({uf.find(k) for k in uf.parent})
    values: dict[tuple, Value] = {}

    def poly_value(p: T.Poly) -> int:
        tot = 0
        for mono, c in p.items():
            v = c
            for s in mono:
                v *= int_model.get(s, 0)
            tot += v
        return tot

    def set_term_value(t: T.SetTerm) -> SetVal:
        if isinstance(t, T.SetSym):
            return set_env.get(t.sym, mk_set([]))
        if isinstance(t, T.SetLitT):
            return mk_set(poly_value(ctx.set_lit_elems.get(e, dict(e))) for e in t.elems)
        l, r = set_term_value(t.left), set_term_value(t.right)
        if t.op == "++":
            return mk_set(l.elements + r.elements)
        if t.op == "--":
            rs = set(r.elements)
            return mk_set(x for x in l.elements if x not in rs)
        rs = set(r.elements)
        return mk_set(x for x in l.elements if x in rs)

    def handle_value(h) -> Value:
        if h[0] == "int":
            return IntVal(poly_value(h[1]))
        if h[0] == "bool":
            return BoolVal(formula_value(h[1], assign))
        if h[0] == "set":
            return set_term_value(h[1])
        if h[0] == "adt":
            return build(uf.find(h[1].key()))
        if h[0] == "tuple":
            return TupleVal(tuple(handle_value(x) for x in h[1]))
        raise TypeError(h)

    building: set[tuple] = set()

    def build(rep: tuple) -> Value:
        if rep in values:
            return values[rep]
        if rep in building:
            raise Giveup("cyclic adt model")
        building.add(rep)
        s = uf.struct.get(rep)
        if s is not None:
            v = AdtVal(s.ctor, tuple(handle_value(a) for a in s.args))
        else:
            # unstructured class: candidate chosen by index, revised on clashes
            v = _free_candidate(rep, free_pick.get(rep, 0))
            if v is None:
                raise Giveup("could not pad finite type")
        building.discard(rep)
        values[rep] = v
        return v

    from ..streams import value_stream

    def _free_candidate(rep: tuple, idx: int) -> Optional[Value]:
        sort = uf.sort[rep]
        bad_ctors = uf.forbidden.get(rep, set())
        want_ctor = uf.forced.get(rep)
        n = 0
        for cand in itertools.islice(value_stream(program, N.AdtType(sort)), 600):
            if isinstance(cand, AdtVal):
                if cand.ctor in bad_ctors:
                    continue
                if want_ctor is not None and cand.ctor != want_ctor:
                    continue
            if n == idx:
                return cand
            n += 1
        return None

    free_pick: dict[tuple, int] = {}
    for _attempt in range(32):
        values.clear()
        for rep in reps:
            build(rep)
        clash = None
        for a, b in distinct_pairs:
            ra, rb = uf.find(a), uf.find(b)
            if values[ra] == values[rb]:
                # advance the pick of an unstructured endpoint and rebuild
                target = None
                for r in (ra, rb):
                    if uf.struct.get(r) is None:
                        target = r
                        break
                if target is None:
                    raise Giveup("distinct structured classes coincide")
                free_pick[target] = free_pick.get(target, 0) + 1
                clash = target
                break
        if clash is None:
            return values
    raise Giveup("distinctness padding failed")

