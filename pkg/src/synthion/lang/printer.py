"""Pretty printer; output re-parses to a structurally identical program."""

from __future__ import annotations

from . import nodes as N


def print_type(t: N.TypeExpr) -> str:
    if isinstance(t, N.IntType):
        return "Int"
    if isinstance(t, N.BoolType):
        return "Bool"
    if isinstance(t, N.SetIntType):
        return "SetInt"
    if isinstance(t, N.AdtType):
        return t.name
    if isinstance(t, N.TupleType):
        return "(" + ", ".join(print_type(x) for x in t.elements) + ")"
    raise TypeError(t)


# Precedence levels, loosest to tightest.  Used to decide parenthesization.
_LEVEL = {
    "||": 1,
    "&&": 2,
    # not: 3
    "==": 4, "!=": 4, "<": 4, "<=": 4, ">": 4, ">=": 4, "in": 4,
    "++": 5, "--": 5, "&": 5,
    "+": 6, "-": 6,
    "*": 7,
    # unary minus: 8, postfix ._k: 9, atoms: 10
}

_LEFT_ASSOC_LEVELS = {1, 2, 4, 5, 6, 7}


def _prec(e: N.Expr) -> int:
    if isinstance(e, N.BinOp):
        return _LEVEL[e.op]
    if isinstance(e, N.UnOp):
        return 3 if e.op == "not" else 8
    if isinstance(e, N.TupleSel):
        return 9
    if isinstance(e, (N.If, N.Let, N.Match, N.Choose)):
        return 0  # only valid at statement positions; always parenthesize inline
    return 10


def print_expr(e: N.Expr) -> str:
    return _pe(e, 0)


def _pe(e: N.Expr, ctx: int) -> str:
    if isinstance(e, N.Var):
        return e.name
    if isinstance(e, N.IntLit):
        if e.value < 0:
            return _wrap(f"-{-e.value}", 8, ctx)
        return str(e.value)
    if isinstance(e, N.BoolLit):
        return "true" if e.value else "false"
    if isinstance(e, N.SetLit):
        return "Set(" + ", ".join(_pe(x, 0) for x in e.elements) + ")"
    if isinstance(e, N.UnOp):
        if e.op == "neg":
            return _wrap("-" + _pe(e.operand, 8), 8, ctx)
        return _wrap("!" + _pe(e.operand, 3), 3, ctx)
    if isinstance(e, N.BinOp):
        lvl = _LEVEL[e.op]
        left = _pe(e.left, lvl)
        # left-assoc: right operand needs one level tighter
        right = _pe(e.right, lvl + 1)
        return _wrap(f"{left} {e.op} {right}", lvl, ctx)
    if isinstance(e, N.If):
        s = f"if ({_pe(e.cond, 0)}) {_pe(e.then, 1)} else {_pe(e.els, 1)}"
        return _wrap(s, 0, ctx)
    if isinstance(e, N.Let):
        s = f"val {e.name} = {_pe(e.bound, 1)}; {_pe(e.body, 0)}"
        return _wrap(s, 0, ctx)
    if isinstance(e, N.Match):
        cases = " ".join(_pc(c) for c in e.cases)
        s = f"{_pe(e.scrutinee, 1)} match {{ {cases} }}"
        return _wrap(s, 0, ctx)
    if isinstance(e, N.Call):
        return e.fun + "(" + ", ".join(_pe(a, 0) for a in e.args) + ")"
    if isinstance(e, N.CtorApp):
        return e.ctor + "(" + ", ".join(_pe(a, 0) for a in e.args) + ")"
    if isinstance(e, N.TupleCtor):
        return "(" + ", ".join(_pe(a, 0) for a in e.args) + ")"
    if isinstance(e, N.TupleSel):
        return _wrap(f"{_pe(e.tup, 10)}._{e.index}", 9, ctx)
    if isinstance(e, N.Choose):
        params = ", ".join(f"{n}: {print_type(t)}" for n, t in e.out_params)
        s = f"choose (({params}) => {_pe(e.predicate, 0)})"
        return _wrap(s, 0, ctx)
    raise TypeError(e)


def _wrap(s: str, lvl: int, ctx: int) -> str:
    return f"({s})" if lvl < ctx else s


def _pc(c: N.MatchCase) -> str:
    g = f" if {_pe(c.guard, 1)}" if c.guard is not None else ""
    return f"case {print_pattern(c.pattern)}{g} => {_pe(c.body, 0)}"


def print_pattern(p: N.Pattern) -> str:
    if isinstance(p, N.Wildcard):
        return "_"
    if isinstance(p, N.Binder):
        if p.sub is None:
            return p.name
        return f"{p.name} @ {print_pattern(p.sub)}"
    if isinstance(p, N.CtorPattern):
        return p.ctor + "(" + ", ".join(print_pattern(s) for s in p.subpatterns) + ")"
    if isinstance(p, N.LiteralPattern):
        return _pe(p.value, 10)
    raise TypeError(p)


def print_fun(f: N.FunDef) -> str:
    params = ", ".join(f"{n}: {print_type(t)}" for n, t in f.params)
    lines = [f"def {f.name}({params}): {print_type(f.return_type)} = {{"]
    if f.precondition is not None:
        lines.append(f"  require({_pe(f.precondition, 0)})")
    lines.append("  " + _pe(f.body, 0))
    if f.postcondition is not None:
        binder, post = f.postcondition
        lines.append(f"  ensuring ({binder} => {_pe(post, 0)})")
    lines.append("}")
    return "\n".join(lines)


def print_adt(a: N.AdtDef) -> str:
    ctors = " | ".join(
        c.name + "(" + ", ".join(f"{n}: {print_type(t)}" for n, t in c.fields) + ")"
        for c in a.constructors)
    return f"type {a.name} = {ctors}"


def print_program(p: N.Program) -> str:
    parts = [print_adt(a) for a in p.adts] + [print_fun(f) for f in p.functions]
    return "\n\n".join(parts) + "\n"
