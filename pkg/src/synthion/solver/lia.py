"""Complete decision procedure for conjunctions of linear integer constraints.

Variable elimination in the Omega-test style: exact equality elimination with
the symmetric-mod coefficient reduction, Fourier-Motzkin with dark-shadow /
splinter handling for inequalities, and witness reconstruction in reverse
elimination order.

Constraints are dicts {var: coeff} plus a constant, interpreted as
  sum(coeff * var) + const  (= 0 | <= 0).
"""

from __future__ import annotations

from math import gcd
from typing import Optional

Lin = dict  # {var_id: coeff}; key 0 is reserved for the constant term

EQ = "eq"
LE = "le"


def lin_add(a: Lin, b: Lin, bc: int = 1) -> Lin:
    out = dict(a)
    for k, v in b.items():
        out[k] = out.get(k, 0) + bc * v
        if out[k] == 0 and k != 0:
            del out[k]
    return out


def lin_scale(a: Lin, c: int) -> Lin:
    return {k: v * c for k, v in a.items() if v * c != 0 or k == 0}


def lin_const(a: Lin) -> int:
    return a.get(0, 0)


def lin_vars(a: Lin):
    return [k for k in a if k != 0 and a[k] != 0]


def lin_eval(a: Lin, model: dict[int, int]) -> int:
    tot = a.get(0, 0)
    for k, v in a.items():
        if k != 0:
            tot += v * model[k]
    return tot


class _Unsat(Exception):
    pass


class LiaBudget(Exception):
    pass


def _normalize(kind: str, lin: Lin) -> tuple[str, Lin]:
    vs = lin_vars(lin)
    if not vs:
        c = lin_const(lin)
        ok = (c == 0) if kind == EQ else (c <= 0)
        if not ok:
            raise _Unsat()
        return kind, {}
    g = 0
    for k in vs:
        g = gcd(g, abs(lin[k]))
    c = lin_const(lin)
    if kind == EQ:
        if c % g != 0:
            raise _Unsat()
        out = {k: lin[k] // g for k in vs}
        out[0] = c // g
        # canonical sign: first variable coefficient positive
        first = min(vs)
        if out[first] < 0:
            out = {k: -v for k, v in out.items()}
        return EQ, out
    # a*x + c <= 0  -> a/g * x + ceil(c/g) <= 0
    out = {k: lin[k] // g for k in vs}
    out[0] = -((-c) // g)
    return LE, out


def _sym_mod(a: int, m: int) -> int:
    """Symmetric residue in (-m/2, m/2]."""
    r = a % m
    if 2 * r > m:
        r -= m
    return r


class _Solver:
    def __init__(self):
        self.subs: list[tuple[int, Lin]] = []   # var := linear expr (applied in order)
        self.fm: list[tuple[int, list[tuple[int, Lin]], list[tuple[int, Lin]]]] = []
        # (var, lowers [(beta, B)] meaning B <= beta*var, uppers [(alpha, A)] alpha*var <= A)
        self.next_fresh = -1

    def fresh(self) -> int:
        v = self.next_fresh
        self.next_fresh -= 1
        return v

    def solve(self, eqs: list[Lin], les: list[Lin]) -> Optional[dict[int, int]]:
        try:
            model = self._solve([(EQ, dict(e)) for e in eqs] +
                                [(LE, dict(l)) for l in les])
        except _Unsat:
            return None
        return model

    def _solve(self, cons: list[tuple[str, Lin]]) -> dict[int, int]:
        cons = [_normalize(k, l) for k, l in cons]
        cons = [(k, l) for k, l in cons if lin_vars(l)]

        # equality elimination
        while True:
            eqs = [(i, l) for i, (k, l) in enumerate(cons) if k == EQ]
            if not eqs:
                break
            idx, lin = min(eqs, key=lambda il: min(abs(c) for v, c in il[1].items() if v != 0))
            var, coeff = min(((v, c) for v, c in lin.items() if v != 0),
                             key=lambda vc: (abs(vc[1]), vc[0]))
            if abs(coeff) == 1:
                # var = -(rest)/coeff
                rest = {k: v for k, v in lin.items() if k != var}
                expr = lin_scale(rest, -1 if coeff == 1 else 1)
                self.subs.append((var, expr))
                del cons[idx]
                cons = [_normalize(k, self._subst(l, var, expr)) for k, l in cons]
                cons = [(k, l) for k, l in cons if lin_vars(l)]
                continue
            # coefficient reduction with a fresh variable: the mod-m companion
            # equation has +-1 coefficient on var; substitute var right away so
            # the original equation's coefficients shrink
            m = abs(coeff) + 1
            sigma = self.fresh()
            reduced: Lin = {sigma: -m}
            for k, v in lin.items():
                if k == var:
                    continue
                r = _sym_mod(v, m)
                if r != 0 or k == 0:
                    reduced[k] = r
            s = _sym_mod(coeff, m)  # == -sign(coeff)
            assert abs(s) == 1
            rest = {k: v for k, v in reduced.items() if k != var}
            expr = lin_scale(rest, -1 if s == 1 else 1)
            self.subs.append((var, expr))
            cons = [_normalize(k, self._subst(l, var, expr)) for k, l in cons]
            cons = [(k, l) for k, l in cons if lin_vars(l)]

        # inequality elimination
        les = [l for k, l in cons]
        return self._fm(les)

    def _subst(self, lin: Lin, var: int, expr: Lin) -> Lin:
        if var not in lin:
            return lin
        c = lin[var]
        out = {k: v for k, v in lin.items() if k != var}
        return lin_add(out, expr, c)

    def _fm(self, les: list[Lin]) -> dict[int, int]:
        les = [l for l in les if lin_vars(l) or lin_const(l) > 0]
        for l in les:
            if not lin_vars(l) and lin_const(l) > 0:
                raise _Unsat()
        les = [l for l in les if lin_vars(l)]
        if not les:
            return self._reconstruct({})

        # choose variable minimizing lower*upper pair count
        occs: dict[int, tuple[int, int]] = {}
        for l in les:
            for v in lin_vars(l):
                lo, up = occs.get(v, (0, 0))
                if l[v] < 0:
                    lo += 1
                else:
                    up += 1
                occs[v] = (lo, up)
        var = min(occs, key=lambda v: (occs[v][0] * occs[v][1], v))

        lowers: list[tuple[int, Lin]] = []  # B <= beta*var
        uppers: list[tuple[int, Lin]] = []  # alpha*var <= A
        rest: list[Lin] = []
        for l in les:
            c = l.get(var, 0)
            if c == 0:
                rest.append(l)
            elif c < 0:
                beta = -c
                B = {k: v for k, v in l.items() if k != var}
                lowers.append((beta, B))
            else:
                alpha = c
                A = {k: -v for k, v in l.items() if k != var}
                uppers.append((alpha, A))

        if not lowers or not uppers:
            # unbounded on one side: eliminate var entirely
            model = self._fm_sub(rest, var, lowers, uppers)
            return model

        exact = all(b == 1 for b, _ in lowers) or all(a == 1 for a, _ in uppers)
        if exact:
            new = list(rest)
            for beta, B in lowers:
                for alpha, A in uppers:
                    # beta*A - alpha*B >= 0  ->  alpha*B - beta*A <= 0
                    new.append(_normalize(LE, lin_add(lin_scale(B, alpha),
                                                      lin_scale(A, -beta)))[1])
            return self._fm_sub(new, var, lowers, uppers)

        # dark shadow attempt
        dark = list(rest)
        for beta, B in lowers:
            for alpha, A in uppers:
                d = lin_add(lin_scale(B, alpha), lin_scale(A, -beta))
                d[0] = d.get(0, 0) + (alpha - 1) * (beta - 1)
                dark.append(_normalize(LE, d)[1])
        try:
            return self._fm_sub(dark, var, lowers, uppers)
        except _Unsat:
            pass

        # splinters: some lower bound is nearly tight
        alpha_max = max(a for a, _ in uppers)
        state = (list(self.subs), list(self.fm))
        for beta, B in lowers:
            limit = (alpha_max * beta - alpha_max - beta) // alpha_max
            for i in range(limit + 1):
                eq = dict(B)
                eq[0] = eq.get(0, 0) + i
                eq[var] = eq.get(var, 0) - beta  # beta*var = B + i
                try:
                    return self._solve([(EQ, eq)] + [(LE, dict(l)) for l in les])
                except _Unsat:
                    self.subs, self.fm = list(state[0]), list(state[1])
                    continue
        raise _Unsat()

    def _fm_sub(self, les: list[Lin], var: int,
                lowers: list[tuple[int, Lin]], uppers: list[tuple[int, Lin]]) -> dict[int, int]:
        self.fm.append((var, lowers, uppers))
        try:
            return self._fm([_normalize(LE, l)[1] for l in les])
        except _Unsat:
            self.fm.pop()
            raise

    def _reconstruct(self, model: dict[int, int]) -> dict[int, int]:
        def eval_with_defaults(lin: Lin) -> int:
            for v in lin_vars(lin):
                if v not in model:
                    model[v] = 0  # variable dropped as unconstrained
            return lin_eval(lin, model)

        # assign FM-eliminated variables innermost-first
        for var, lowers, uppers in reversed(self.fm):
            lo = None
            for beta, B in lowers:
                b = eval_with_defaults(B)
                bound = -((-b) // beta)  # ceil(b / beta)
                lo = bound if lo is None else max(lo, bound)
            up = None
            for alpha, A in uppers:
                a = eval_with_defaults(A)
                bound = a // alpha  # floor
                up = bound if up is None else min(up, bound)
            if lo is None and up is None:
                val = 0
            elif lo is None:
                val = min(0, up)
            elif up is None:
                val = max(0, lo)
            else:
                if lo > up:
                    raise _Unsat()  # should not happen; defensive
                val = 0 if lo <= 0 <= up else (lo if lo > 0 else up)
            model[var] = val
        # equality substitutions in reverse
        for var, expr in reversed(self.subs):
            for v in lin_vars(expr):
                if v not in model:
                    model[v] = 0
            model[var] = lin_eval(expr, model)
        return model


def solve_lia(eqs: list[Lin], les: list[Lin],
              neqs: Optional[list[Lin]] = None,
              _depth: int = 0) -> Optional[dict[int, int]]:
    """Decide a conjunction; returns a model over mentioned vars or None.

    Disequalities are split lazily: only when the relaxed model violates one.
    """
    neqs = [n for n in (neqs or [])]
    for n in neqs:
        if not lin_vars(n) and lin_const(n) == 0:
            return None
    neqs = [n for n in neqs if lin_vars(n)]
    if _depth > 60:
        raise LiaBudget("disequality split chain too deep")

    s = _Solver()
    model = s.solve(eqs, les)
    if model is None:
        return None
    mentioned = set()
    for l in eqs + les + neqs:
        mentioned.update(lin_vars(l))
    out = {v: model.get(v, 0) for v in mentioned}

    violated = None
    for n in neqs:
        if lin_eval(n, out) == 0:
            violated = n
            break
    if violated is None:
        return out
    rest = [n for n in neqs if n is not violated]
    low = dict(violated)
    low[0] = low.get(0, 0) + 1
    m = solve_lia(eqs, les + [low], rest, _depth + 1)
    if m is not None:
        return m
    high = lin_scale(violated, -1)
    high[0] = high.get(0, 0) + 1
    return solve_lia(eqs, les + [high], rest, _depth + 1)
