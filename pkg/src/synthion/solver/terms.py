"""Internal solver terms and atoms, and the expression-to-clause compiler.

Tuples are flattened into component symbols before reaching the theories.
Integer expressions normalize to polynomials over symbols; products of
symbols become degree>=2 monomials handled by abstraction in the theory
layer.  Function calls become instances with a guard variable, a result
symbol, and (when the callee is trusted terminating) an asserted
postcondition; bodies are added layer by layer by the session.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional, Union

from ..lang import nodes as N
from ..lang.check import TypedProgram
from . import props as P

# -- symbols ---------------------------------------------------------------

# A symbol is an integer id with a sort. Sorts: "int" | "bool" | "set" | adt name.


@dataclass
class SymbolTable:
    sorts: dict[int, str] = field(default_factory=dict)
    names: dict[int, str] = field(default_factory=dict)
    _next: itertools.count = field(default_factory=lambda: itertools.count(1))

    def fresh(self, sort: str, name: str = "") -> int:
        s = next(self._next)
        self.sorts[s] = sort
        self.names[s] = name or f"s{s}"
        return s


# -- integer polynomials -----------------------------------------------------
# Poly: dict {monomial: coeff}; monomial = () for the constant,
# otherwise a sorted tuple of int-symbol ids (degree >= 1).

Poly = dict


def poly_const(c: int) -> Poly:
    return {(): c} if c else {}


def poly_sym(s: int) -> Poly:
    return {(s,): 1}


def poly_add(a: Poly, b: Poly, scale: int = 1) -> Poly:
    out = dict(a)
    for m, c in b.items():
        nc = out.get(m, 0) + scale * c
        if nc:
            out[m] = nc
        else:
            out.pop(m, None)
    return out


def poly_neg(a: Poly) -> Poly:
    return {m: -c for m, c in a.items()}


def poly_mul(a: Poly, b: Poly) -> Poly:
    out: Poly = {}
    for m1, c1 in a.items():
        for m2, c2 in b.items():
            m = tuple(sorted(m1 + m2))
            nc = out.get(m, 0) + c1 * c2
            if nc:
                out[m] = nc
            else:
                out.pop(m, None)
    return out


def poly_key(p: Poly) -> tuple:
    return tuple(sorted(p.items()))


def poly_is_const(p: Poly) -> Optional[int]:
    if not p:
        return 0
    if len(p) == 1 and () in p:
        return p[()]
    return None


# -- ADT and set terms -------------------------------------------------------

@dataclass(frozen=True)
class AdtSym:
    sym: int

    def key(self):
        return ("sym", self.sym)


@dataclass(frozen=True)
class AdtCtor:
    ctor: str
    args: tuple  # of TermHandle keys? store handles
    adt: str

    def key(self):
        return ("ctor", self.ctor) + tuple(arg_key(a) for a in self.args)


AdtTerm = Union[AdtSym, AdtCtor]


@dataclass(frozen=True)
class SetSym:
    sym: int

    def key(self):
        return ("ssym", self.sym)


@dataclass(frozen=True)
class SetLitT:
    elems: tuple  # tuple of poly_keys; actual polys kept alongside

    def key(self):
        return ("slit", self.elems)


@dataclass(frozen=True)
class SetOp:
    op: str  # "++" | "--" | "&"
    left: "SetTerm"
    right: "SetTerm"

    def key(self):
        return ("sop", self.op, self.left.key(), self.right.key())


SetTerm = Union[SetSym, SetLitT, SetOp]


def arg_key(a) -> tuple:
    """Key of a constructor argument handle."""
    kind, payload = a
    if kind == "int":
        return ("i", poly_key(payload))
    if kind == "bool":
        return ("b", payload)  # prop var id or True/False
    if kind == "set":
        return ("s", payload.key())
    if kind == "adt":
        return ("a", payload.key())
    raise TypeError(kind)


# handles: ("int", Poly) | ("bool", prop formula) | ("set", SetTerm) |
#          ("adt", AdtTerm) | ("tuple", [handles])


# -- atoms --------------------------------------------------------------------

@dataclass(frozen=True)
class ALe:        # poly <= 0
    poly: tuple


@dataclass(frozen=True)
class AEq:        # poly == 0
    poly: tuple


@dataclass(frozen=True)
class AAdtEq:     # left == right (keys); actual terms interned separately
    left: tuple
    right: tuple


@dataclass(frozen=True)
class ATest:      # term is built with ctor
    ctor: str
    term: tuple


@dataclass(frozen=True)
class ASetEq:
    left: tuple
    right: tuple


@dataclass(frozen=True)
class AMember:    # poly in set
    poly: tuple
    term: tuple


@dataclass(frozen=True)
class ABool:      # boolean symbol
    sym: int


Atom = Union[ALe, AEq, AAdtEq, ATest, ASetEq, AMember, ABool]


@dataclass
class CallInstance:
    id: int
    fun: str
    args: list  # handles
    result: object  # handle
    guard: int  # prop var; true when some path reaches the call
    unfolded: bool = False
    is_choose_bodied: bool = False


class Context:
    """Shared state while compiling expressions to clauses."""

    def __init__(self, program: TypedProgram, assume_posts: set[str],
                 exec_posts: Optional[dict[str, tuple[str, N.Expr]]] = None):
        self.program = program
        self.symbols = SymbolTable()
        self.db = P.ClauseDb()
        self.assume_posts = assume_posts
        # overriding postconditions (e.g. choose predicates for holes)
        self.exec_posts = exec_posts or {}
        self.atom_vars: dict[Atom, int] = {}
        self.atoms_by_var: dict[int, Atom] = {}
        self.instances: dict[tuple, CallInstance] = {}
        self.instance_order: list[CallInstance] = []
        self.adt_terms: dict[tuple, AdtTerm] = {}
        self.set_terms: dict[tuple, SetTerm] = {}
        self.set_lit_elems: dict[tuple, Poly] = {}
        self.free: dict[str, object] = {}  # var name -> handle
        self._field_cache: dict[tuple, list] = {}

    # -- atoms ---------------------------------------------------------------

    def atom_var(self, atom: Atom) -> int:
        v = self.atom_vars.get(atom)
        if v is None:
            v = self.db.fresh_var()
            self.atom_vars[atom] = v
            self.atoms_by_var[v] = atom
        return v

    def lit(self, atom: Atom):
        return ("var", self.atom_var(atom))

    def intern_adt(self, t: AdtTerm) -> AdtTerm:
        k = t.key()
        if k not in self.adt_terms:
            self.adt_terms[k] = t
        return self.adt_terms[k]

    def intern_set(self, t: SetTerm) -> SetTerm:
        k = t.key()
        if k not in self.set_terms:
            self.set_terms[k] = t
        return self.set_terms[k]

    def adt_eq(self, a: AdtTerm, b: AdtTerm):
        self.intern_adt(a)
        self.intern_adt(b)
        ka, kb = a.key(), b.key()
        if ka == kb:
            return P.TRUE
        if ka > kb:
            ka, kb = kb, ka
        return self.lit(AAdtEq(ka, kb))

    def set_eq(self, a: SetTerm, b: SetTerm):
        self.intern_set(a)
        self.intern_set(b)
        ka, kb = a.key(), b.key()
        if ka == kb:
            return P.TRUE
        if ka > kb:
            ka, kb = kb, ka
        return self.lit(ASetEq(ka, kb))

    def int_le(self, p: Poly):
        c = poly_is_const(p)
        if c is not None:
            return P.TRUE if c <= 0 else P.FALSE
        return self.lit(ALe(poly_key(p)))

    def int_eq(self, p: Poly):
        c = poly_is_const(p)
        if c is not None:
            return P.TRUE if c == 0 else P.FALSE
        key = poly_key(p)
        nkey = poly_key(poly_neg(p))
        if nkey < key:
            key = nkey
        return self.lit(AEq(key))

    def member(self, p: Poly, s: SetTerm):
        self.intern_set(s)
        return self.lit(AMember(poly_key(p), s.key()))

    def tester(self, ctor: str, t: AdtTerm):
        if isinstance(t, AdtCtor):
            return P.TRUE if t.ctor == ctor else P.FALSE
        self.intern_adt(t)
        return self.lit(ATest(ctor, t.key()))

    # -- handles ---------------------------------------------------------------

    def fresh_handle(self, ty: N.TypeExpr, name: str = ""):
        if isinstance(ty, N.IntType):
            return ("int", poly_sym(self.symbols.fresh("int", name)))
        if isinstance(ty, N.BoolType):
            s = self.symbols.fresh("bool", name)
            return ("bool", ("var", self.atom_var(ABool(s))))
        if isinstance(ty, N.SetIntType):
            return ("set", self.intern_set(SetSym(self.symbols.fresh("set", name))))
        if isinstance(ty, N.AdtType):
            return ("adt", self.intern_adt(AdtSym(self.symbols.fresh(ty.name, name))))
        if isinstance(ty, N.TupleType):
            return ("tuple", [self.fresh_handle(t, f"{name}._{i+1}")
                              for i, t in enumerate(ty.elements)])
        raise TypeError(ty)

    def declare_free(self, name: str, ty: N.TypeExpr):
        if name not in self.free:
            self.free[name] = self.fresh_handle(ty, name)
        return self.free[name]

    def fresh_like(self, h, name: str = ""):
        """Fresh handle with the same shape as h."""
        if h[0] == "int":
            return ("int", poly_sym(self.symbols.fresh("int", name)))
        if h[0] == "bool":
            s = self.symbols.fresh("bool", name)
            return ("bool", ("var", self.atom_var(ABool(s))))
        if h[0] == "set":
            return ("set", self.intern_set(SetSym(self.symbols.fresh("set", name))))
        if h[0] == "adt":
            t = h[1]
            sort = t.adt if isinstance(t, AdtCtor) else self.symbols.sorts[t.sym]
            return ("adt", self.intern_adt(AdtSym(self.symbols.fresh(sort, name))))
        if h[0] == "tuple":
            return ("tuple", [self.fresh_like(x, f"{name}._{i+1}")
                              for i, x in enumerate(h[1])])
        raise TypeError(h)

    def handle_eq(self, a, b):
        """Formula asserting equality of two same-typed handles."""
        ka, kb = a[0], b[0]
        assert ka == kb, (ka, kb)
        if ka == "int":
            return self.int_eq(poly_add(a[1], b[1], -1))
        if ka == "bool":
            return P.piff(a[1], b[1])
        if ka == "set":
            return self.set_eq(a[1], b[1])
        if ka == "adt":
            return self.adt_eq(a[1], b[1])
        if ka == "tuple":
            return P.pand(*[self.handle_eq(x, y) for x, y in zip(a[1], b[1])])
        raise TypeError(ka)

    # -- compilation -----------------------------------------------------------

    def compile_bool(self, e: N.Expr, env: dict[str, object], reach) -> object:
        """Compile a Bool-typed expression to a propositional formula."""
        if isinstance(e, N.BoolLit):
            return P.TRUE if e.value else P.FALSE
        if isinstance(e, N.Var):
            h = env[e.name]
            assert h[0] == "bool"
            return h[1]
        if isinstance(e, N.UnOp) and e.op == "not":
            return P.pnot(self.compile_bool(e.operand, env, reach))
        if isinstance(e, N.BinOp):
            op = e.op
            if op == "&&":
                return P.pand(self.compile_bool(e.left, env, reach),
                              self.compile_bool(e.right, env, reach))
            if op == "||":
                return P.por(self.compile_bool(e.left, env, reach),
                             self.compile_bool(e.right, env, reach))
            if op in ("<", "<="):
                l = self.compile_term(e.left, env, reach)[1]
                r = self.compile_term(e.right, env, reach)[1]
                d = poly_add(l, r, -1)  # l - r
                if op == "<":
                    d = poly_add(d, poly_const(1))
                return self.int_le(d)
            if op == "in":
                l = self.compile_term(e.left, env, reach)[1]
                r = self.compile_term(e.right, env, reach)[1]
                return self.member(l, r)
            if op in ("==", "!="):
                l = self.compile_term(e.left, env, reach)
                r = self.compile_term(e.right, env, reach)
                f = self.handle_eq(l, r)
                return P.pnot(f) if op == "!=" else f
        if isinstance(e, (N.If, N.Match, N.Let, N.Call, N.TupleSel)):
            h = self.compile_term(e, env, reach)
            assert h[0] == "bool"
            return h[1]
        raise TypeError(f"cannot compile {e!r} as bool")

    def compile_term(self, e: N.Expr, env: dict[str, object], reach):
        """Compile an expression of any type to a handle, emitting clauses."""
        ty = e.ty
        if isinstance(e, N.Var):
            return env[e.name]
        if isinstance(e, N.IntLit):
            return ("int", poly_const(e.value))
        if isinstance(e, N.BoolLit):
            return ("bool", P.TRUE if e.value else P.FALSE)
        if isinstance(e, N.SetLit):
            polys = [self.compile_term(x, env, reach)[1] for x in e.elements]
            keys = tuple(sorted(poly_key(p) for p in polys))
            for p in polys:
                self.set_lit_elems[poly_key(p)] = p
            return ("set", self.intern_set(SetLitT(keys)))
        if isinstance(e, N.UnOp):
            if e.op == "neg":
                return ("int", poly_neg(self.compile_term(e.operand, env, reach)[1]))
            return ("bool", P.pnot(self.compile_bool(e.operand, env, reach)))
        if isinstance(e, N.BinOp):
            op = e.op
            if op in ("+", "-"):
                l = self.compile_term(e.left, env, reach)[1]
                r = self.compile_term(e.right, env, reach)[1]
                return ("int", poly_add(l, r, 1 if op == "+" else -1))
            if op == "*":
                l = self.compile_term(e.left, env, reach)[1]
                r = self.compile_term(e.right, env, reach)[1]
                return ("int", poly_mul(l, r))
            if op in N.SET_OPS:
                l = self.compile_term(e.left, env, reach)[1]
                r = self.compile_term(e.right, env, reach)[1]
                return ("set", self.intern_set(SetOp(op, l, r)))
            return ("bool", self.compile_bool(e, env, reach))
        if isinstance(e, N.If):
            cond = self.compile_bool(e.cond, env, reach)
            cv = self._name_formula(cond)
            t = self.compile_term(e.then, env, P.pand(reach, cv))
            f = self.compile_term(e.els, env, P.pand(reach, P.pnot(cv)))
            if t[0] == "bool":
                return ("bool", P.por(P.pand(cv, t[1]), P.pand(P.pnot(cv), f[1])))
            out = self.fresh_like(t, "ite")
            self.db.assert_formula(P.pimplies(P.pand(reach, cv), self.handle_eq(out, t)))
            self.db.assert_formula(P.pimplies(P.pand(reach, P.pnot(cv)), self.handle_eq(out, f)))
            return out
        if isinstance(e, N.Let):
            b = self.compile_term(e.bound, env, reach)
            inner = dict(env)
            inner[e.name] = b
            return self.compile_term(e.body, inner, reach)
        if isinstance(e, N.Match):
            return self._compile_match(e, env, reach)
        if isinstance(e, N.Call):
            return self._compile_call(e, env, reach)
        if isinstance(e, N.CtorApp):
            adt, _ = self.program.ctor_owner(e.ctor)
            args = tuple(self._ctor_arg(self.compile_term(a, env, reach)) for a in e.args)
            return ("adt", self.intern_adt(AdtCtor(e.ctor, args, adt.name)))
        if isinstance(e, N.TupleCtor):
            return ("tuple", [self.compile_term(a, env, reach) for a in e.args])
        if isinstance(e, N.TupleSel):
            t = self.compile_term(e.tup, env, reach)
            assert t[0] == "tuple"
            return t[1][e.index - 1]
        if isinstance(e, N.Choose):
            raise ValueError("choose inside solver formula")
        raise TypeError(e)

    def _ctor_arg(self, h):
        """Constructor args must be first-order values; name bool formulas."""
        if h[0] == "bool":
            return ("bool", self._name_formula(h[1]))
        if h[0] == "tuple":
            raise TypeError("tuple-typed constructor fields are not supported")
        return h

    def _name_formula(self, f) -> object:
        """Return a formula equivalent to f that is a plain literal."""
        if f is True or f is False:
            return f
        if isinstance(f, tuple) and f[0] == "var":
            return f
        if isinstance(f, tuple) and f[0] == "not" and isinstance(f[1], tuple) and f[1][0] == "var":
            return f
        v = self.db.fresh_var()
        self.db.assert_formula(P.piff(("var", v), f))
        return ("var", v)

    def _compile_match(self, e: N.Match, env: dict[str, object], reach):
        scrut = self.compile_term(e.scrutinee, env, reach)
        out = None
        bool_mode = False
        out_formula_cases = []
        prev_not = P.TRUE
        guards = []
        for case in e.cases:
            binds: dict[str, object] = {}
            cond = self._pattern_cond(case.pattern, scrut, binds, reach)
            if cond is P.FALSE:
                continue  # statically impossible case; binders unavailable
            inner = dict(env)
            inner.update(binds)
            if case.guard is not None:
                cond = P.pand(cond, self.compile_bool(case.guard, inner, reach))
            cond = self._name_formula(cond)
            fire = self._name_formula(P.pand(prev_not, cond))
            guards.append(cond)
            body_reach = P.pand(reach, fire)
            bh = self.compile_term(case.body, inner, body_reach)
            if bh[0] == "bool":
                bool_mode = True
                out_formula_cases.append(P.pand(fire, bh[1]))
            else:
                if out is None:
                    out = self.fresh_like(bh, "match")
                self.db.assert_formula(
                    P.pimplies(P.pand(reach, fire), self.handle_eq(out, bh)))
            prev_not = P.pand(prev_not, P.pnot(cond))
        # definedness: some case fires (match failure is not a model)
        self.db.assert_formula(P.pimplies(reach, P.por(*guards)))
        if bool_mode:
            return ("bool", P.por(*out_formula_cases))
        return out

    def match_cover_formula(self, e: N.Match, env: dict[str, object], reach):
        """Disjunction of case guards; used for exhaustiveness conditions."""
        scrut = self.compile_term(e.scrutinee, env, reach)
        guards = []
        for case in e.cases:
            binds: dict[str, object] = {}
            cond = self._pattern_cond(case.pattern, scrut, binds, reach)
            inner = dict(env)
            inner.update(binds)
            if case.guard is not None:
                cond = P.pand(cond, self.compile_bool(case.guard, inner, reach))
            guards.append(cond)
        return P.por(*guards)

    def _pattern_cond(self, pat: N.Pattern, h, binds: dict[str, object], reach):
        if isinstance(pat, N.Wildcard):
            return P.TRUE
        if isinstance(pat, N.Binder):
            binds[pat.name] = h
            if pat.sub is not None:
                return self._pattern_cond(pat.sub, h, binds, reach)
            return P.TRUE
        if isinstance(pat, N.LiteralPattern):
            if isinstance(pat.value, N.IntLit):
                return self.int_eq(poly_add(h[1], poly_const(pat.value.value), -1))
            want = pat.value.value
            return h[1] if want else P.pnot(h[1])
        if isinstance(pat, N.CtorPattern):
            assert h[0] == "adt"
            adt, ctor = self.program.ctor_owner(pat.ctor)
            term = h[1]
            cond = self.tester(pat.ctor, term)
            if cond is P.FALSE:
                return P.FALSE
            fields = self._fields_of(term, adt, ctor)
            sub = P.TRUE
            for p, fh in zip(pat.subpatterns, fields):
                sub = P.pand(sub, self._pattern_cond(p, fh, binds, reach))
            return P.pand(cond, sub)
        raise TypeError(pat)

    def _fields_of(self, term: AdtTerm, adt: N.AdtDef, ctor: N.CtorDef):
        """Field handles of term viewed as ctor; fresh symbols tied by equality."""
        if isinstance(term, AdtCtor) and term.ctor == ctor.name:
            return list(term.args)
        key = ("fields", term.key(), ctor.name)
        cached = getattr(self, "_field_cache", None)
        if cached is None:
            self._field_cache = cached = {}
        if key in cached:
            return cached[key]
        handles = [self.fresh_handle(ft, f"{ctor.name.lower()}.{fn}")
                   for fn, ft in ctor.fields]
        args = tuple(self._ctor_arg(h) for h in handles)
        built = self.intern_adt(AdtCtor(ctor.name, args, adt.name))
        # whenever term is a ctor.name value, it decomposes into these fields
        self.db.assert_formula(
            P.pimplies(self.tester(ctor.name, term), self.adt_eq(term, built)))
        cached[key] = handles
        return handles

    def _compile_call(self, e: N.Call, env: dict[str, object], reach):
        args = [self.compile_term(a, env, reach) for a in e.args]
        key = (e.fun, tuple(self._handle_key(a) for a in args))
        inst = self.instances.get(key)
        if inst is not None:
            self.db.assert_formula(P.pimplies(reach, ("var", inst.guard)))
            return inst.result
        f = self.program.function(e.fun)
        result = self.fresh_handle(f.return_type, f"{e.fun}()")
        guard = self.db.fresh_var()
        inst = CallInstance(len(self.instance_order), e.fun, args, result, guard,
                            is_choose_bodied=isinstance(f.body, N.Choose))
        self.instances[key] = inst
        self.instance_order.append(inst)
        self.db.assert_formula(P.pimplies(reach, ("var", guard)))
        # assume the contract when the callee is trusted
        post = self.exec_posts.get(e.fun)
        if post is None and f.postcondition is not None and e.fun in self.assume_posts:
            post = f.postcondition
        if post is not None:
            binder, post_e = post
            penv = {name: h for (name, _), h in zip(f.params, args)}
            penv[binder] = result
            pf = self.compile_bool(post_e, penv, ("var", guard))
            self.db.assert_formula(P.pimplies(("var", guard), pf))
        return inst.result

    def _handle_key(self, h) -> tuple:
        if h[0] == "int":
            return ("i", poly_key(h[1]))
        if h[0] == "bool":
            f = self._name_formula(h[1])
            return ("b", f if isinstance(f, bool) else f)
        if h[0] == "set":
            return ("s", h[1].key())
        if h[0] == "adt":
            return ("a", h[1].key())
        if h[0] == "tuple":
            return ("t",) + tuple(self._handle_key(x) for x in h[1])
        raise TypeError(h)

    def unfold_instance(self, inst: CallInstance) -> None:
        """Add the callee body clauses for one call instance."""
        assert not inst.unfolded
        inst.unfolded = True
        f = self.program.function(inst.fun)
        if isinstance(f.body, N.Choose):
            return  # specification-only; postcondition already asserted
        env = {name: h for (name, _), h in zip(f.params, inst.args)}
        g = ("var", inst.guard)
        body = self.compile_term(f.body, env, g)
        self.db.assert_formula(P.pimplies(g, self.handle_eq(inst.result, body)))

    def pending_instances(self) -> list[CallInstance]:
        return [i for i in self.instance_order if not i.unfolded and not i.is_choose_bodied]
