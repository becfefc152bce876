"""Recursive-descent parser for the surface grammar.

parse() never raises on bad input; it returns diagnostics with positions.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional

from . import nodes as N


@dataclass(frozen=True)
class Diagnostic:
    line: int
    column: int
    message: str

    def __str__(self) -> str:
        return f"{self.line}:{self.column}: {self.message}"


class ParseError(Exception):
    def __init__(self, diag: Diagnostic):
        super().__init__(str(diag))
        self.diag = diag


_TOKEN_RE = re.compile(r"""
    (?P<ws>\s+)
  | (?P<comment>//[^\n]*)
  | (?P<int>\d+)
  | (?P<id>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>=>|==|!=|<=|>=|\+\+|--|&&|\|\||\._\d+|[()\{\},;:=<>+\-*&!|@_])
""", re.VERBOSE)

KEYWORDS = {
    "type", "def", "require", "ensuring", "choose", "if", "else", "val",
    "match", "case", "true", "false", "in", "Set", "Int", "Bool", "SetInt",
}


@dataclass
class Token:
    kind: str  # "int" | "id" | "op" | "kw" | "eof"
    text: str
    line: int
    column: int


def tokenize(src: str) -> tuple[list[Token], list[Diagnostic]]:
    toks: list[Token] = []
    diags: list[Diagnostic] = []
    line, col, pos = 1, 1, 0
    while pos < len(src):
        m = _TOKEN_RE.match(src, pos)
        if not m:
            diags.append(Diagnostic(line, col, f"unexpected character {src[pos]!r}"))
            pos += 1
            col += 1
            continue
        text = m.group(0)
        kind = m.lastgroup
        if kind == "int":
            toks.append(Token("int", text, line, col))
        elif kind == "id":
            toks.append(Token("kw" if text in KEYWORDS else "id", text, line, col))
        elif kind == "op":
            toks.append(Token("op", text, line, col))
        # ws / comment: skip
        nl = text.count("\n")
        if nl:
            line += nl
            col = len(text) - text.rfind("\n")
        else:
            col += len(text)
        pos = m.end()
    toks.append(Token("eof", "", line, col))
    return toks, diags


class Parser:
    def __init__(self, tokens: list[Token]):
        self.toks = tokens
        self.i = 0

    @property
    def cur(self) -> Token:
        return self.toks[self.i]

    def error(self, msg: str, tok: Optional[Token] = None) -> ParseError:
        t = tok or self.cur
        return ParseError(Diagnostic(t.line, t.column, msg))

    def at(self, kind: str, text: Optional[str] = None) -> bool:
        t = self.cur
        return t.kind == kind and (text is None or t.text == text)

    def accept(self, kind: str, text: Optional[str] = None) -> Optional[Token]:
        if self.at(kind, text):
            t = self.cur
            self.i += 1
            return t
        return None

    def expect(self, kind: str, text: Optional[str] = None) -> Token:
        t = self.accept(kind, text)
        if t is None:
            want = text or kind
            raise self.error(f"expected {want!r}, found {self.cur.text or 'end of input'!r}")
        return t

    # -- declarations -------------------------------------------------------

    def program(self) -> N.Program:
        adts: list[N.AdtDef] = []
        funs: list[N.FunDef] = []
        while not self.at("eof"):
            if self.at("kw", "type"):
                adts.append(self.adt())
            elif self.at("kw", "def"):
                funs.append(self.fun())
            else:
                raise self.error("expected 'type' or 'def'")
        return N.Program(adts, funs)

    def adt(self) -> N.AdtDef:
        self.expect("kw", "type")
        name = self.expect("id").text
        self.expect("op", "=")
        ctors = [self.ctor()]
        while self.accept("op", "|"):
            ctors.append(self.ctor())
        return N.AdtDef(name, tuple(ctors))

    def ctor(self) -> N.CtorDef:
        name = self.expect("id").text
        self.expect("op", "(")
        fields: list[tuple[str, N.TypeExpr]] = []
        if not self.at("op", ")"):
            fields.append(self.field())
            while self.accept("op", ","):
                fields.append(self.field())
        self.expect("op", ")")
        return N.CtorDef(name, tuple(fields))

    def field(self) -> tuple[str, N.TypeExpr]:
        name = self.expect("id").text
        self.expect("op", ":")
        return name, self.type_expr()

    def type_expr(self) -> N.TypeExpr:
        if self.accept("kw", "Int"):
            return N.INT
        if self.accept("kw", "Bool"):
            return N.BOOL
        if self.accept("kw", "SetInt"):
            return N.SETINT
        if self.at("id"):
            return N.AdtType(self.expect("id").text)
        if self.accept("op", "("):
            elems = [self.type_expr()]
            while self.accept("op", ","):
                elems.append(self.type_expr())
            self.expect("op", ")")
            if len(elems) < 2:
                raise self.error("tuple type needs at least two elements")
            return N.TupleType(tuple(elems))
        raise self.error("expected a type")

    def fun(self) -> N.FunDef:
        self.expect("kw", "def")
        name = self.expect("id").text
        self.expect("op", "(")
        params: list[tuple[str, N.TypeExpr]] = []
        if not self.at("op", ")"):
            params.append(self.field())
            while self.accept("op", ","):
                params.append(self.field())
        self.expect("op", ")")
        self.expect("op", ":")
        ret = self.type_expr()
        self.expect("op", "=")
        self.expect("op", "{")
        pre = None
        if self.accept("kw", "require"):
            self.expect("op", "(")
            pre = self.expr()
            self.expect("op", ")")
        body = self.expr()
        post = None
        if self.accept("kw", "ensuring"):
            self.expect("op", "(")
            binder = self.expect("id").text
            self.expect("op", "=>")
            post_expr = self.expr()
            self.expect("op", ")")
            post = (binder, post_expr)
        self.expect("op", "}")
        return N.FunDef(name, params, ret, body, pre, post)

    # -- expressions --------------------------------------------------------

    def expr(self) -> N.Expr:
        if self.at("kw", "choose"):
            return self.choose()
        if self.at("kw", "if"):
            return self.if_expr()
        if self.at("kw", "val"):
            return self.val_expr()
        e = self.or_expr()
        if self.accept("kw", "match"):
            self.expect("op", "{")
            cases = [self.case()]
            while self.at("kw", "case"):
                cases.append(self.case())
            self.expect("op", "}")
            return N.Match(e, cases)
        return e

    def choose(self) -> N.Expr:
        self.expect("kw", "choose")
        self.expect("op", "(")
        self.expect("op", "(")
        params = [self.field()]
        while self.accept("op", ","):
            params.append(self.field())
        self.expect("op", ")")
        self.expect("op", "=>")
        pred = self.expr()
        self.expect("op", ")")
        return N.Choose(params, pred)

    def if_expr(self) -> N.Expr:
        self.expect("kw", "if")
        self.expect("op", "(")
        cond = self.expr()
        self.expect("op", ")")
        then = self.expr()
        self.expect("kw", "else")
        els = self.expr()
        return N.If(cond, then, els)

    def val_expr(self) -> N.Expr:
        self.expect("kw", "val")
        name = self.expect("id").text
        self.expect("op", "=")
        bound = self.expr()
        self.expect("op", ";")
        body = self.expr()
        return N.Let(name, bound, body)

    def case(self) -> N.MatchCase:
        self.expect("kw", "case")
        pat = self.pattern()
        guard = None
        if self.accept("kw", "if"):
            guard = self.or_expr()
        self.expect("op", "=>")
        body = self.expr()
        return N.MatchCase(pat, guard, body)

    def pattern(self) -> N.Pattern:
        # "_" tokenizes as an identifier
        if self.at("id") and self.cur.text == "_":
            self.i += 1
            return N.Wildcard()
        if self.at("int"):
            return N.LiteralPattern(N.IntLit(int(self.expect("int").text)))
        if self.accept("kw", "true"):
            return N.LiteralPattern(N.BoolLit(True))
        if self.accept("kw", "false"):
            return N.LiteralPattern(N.BoolLit(False))
        name = self.expect("id").text
        if self.accept("op", "("):
            subs: list[N.Pattern] = []
            if not self.at("op", ")"):
                subs.append(self.pattern())
                while self.accept("op", ","):
                    subs.append(self.pattern())
            self.expect("op", ")")
            return N.CtorPattern(name, subs)
        if self.accept("op", "@"):
            return N.Binder(name, self.pattern())
        return N.Binder(name)

    def or_expr(self) -> N.Expr:
        e = self.and_expr()
        while self.accept("op", "||"):
            e = N.BinOp("||", e, self.and_expr())
        return e

    def and_expr(self) -> N.Expr:
        e = self.not_expr()
        while self.accept("op", "&&"):
            e = N.BinOp("&&", e, self.not_expr())
        return e

    def not_expr(self) -> N.Expr:
        if self.accept("op", "!"):
            return N.UnOp("not", self.not_expr())
        return self.cmp_expr()

    def cmp_expr(self) -> N.Expr:
        e = self.set_expr()
        while True:
            if self.at("op") and self.cur.text in ("==", "!=", "<", "<=", ">", ">="):
                op = self.expect("op").text
                rhs = self.set_expr()
                if op == ">":
                    e = N.BinOp("<", rhs, e)
                elif op == ">=":
                    e = N.BinOp("<=", rhs, e)
                else:
                    e = N.BinOp(op, e, rhs)
            elif self.at("kw", "in"):
                self.expect("kw", "in")
                e = N.BinOp("in", e, self.set_expr())
            else:
                return e

    def set_expr(self) -> N.Expr:
        e = self.add_expr()
        while self.at("op") and self.cur.text in ("++", "--", "&"):
            op = self.expect("op").text
            e = N.BinOp(op, e, self.add_expr())
        return e

    def add_expr(self) -> N.Expr:
        e = self.mul_expr()
        while self.at("op") and self.cur.text in ("+", "-"):
            op = self.expect("op").text
            e = N.BinOp(op, e, self.mul_expr())
        return e

    def mul_expr(self) -> N.Expr:
        e = self.unary_expr()
        while self.accept("op", "*"):
            e = N.BinOp("*", e, self.unary_expr())
        return e

    def unary_expr(self) -> N.Expr:
        if self.accept("op", "-"):
            inner = self.unary_expr()
            if isinstance(inner, N.IntLit):
                return N.IntLit(-inner.value)
            return N.UnOp("neg", inner)
        return self.postfix_expr()

    def postfix_expr(self) -> N.Expr:
        e = self.primary()
        while self.at("op") and self.cur.text.startswith("._"):
            t = self.expect("op")
            e = N.TupleSel(e, int(t.text[2:]))
        return e

    def primary(self) -> N.Expr:
        if self.at("int"):
            return N.IntLit(int(self.expect("int").text))
        if self.accept("kw", "true"):
            return N.BoolLit(True)
        if self.accept("kw", "false"):
            return N.BoolLit(False)
        if self.accept("kw", "Set"):
            self.expect("op", "(")
            elems: list[N.Expr] = []
            if not self.at("op", ")"):
                elems.append(self.expr())
                while self.accept("op", ","):
                    elems.append(self.expr())
            self.expect("op", ")")
            return N.SetLit(elems)
        if self.at("id"):
            name = self.expect("id").text
            if self.accept("op", "("):
                args: list[N.Expr] = []
                if not self.at("op", ")"):
                    args.append(self.expr())
                    while self.accept("op", ","):
                        args.append(self.expr())
                self.expect("op", ")")
                # constructor vs function call resolved by the type checker;
                # parse as Call and let checking rewrite ctor applications.
                return N.Call(name, args)
            return N.Var(name)
        if self.accept("op", "("):
            first = self.expr()
            if self.accept("op", ","):
                elems = [first, self.expr()]
                while self.accept("op", ","):
                    elems.append(self.expr())
                self.expect("op", ")")
                return N.TupleCtor(elems)
            self.expect("op", ")")
            return first
        raise self.error("expected expression")


def _resolve_ctors(prog: N.Program) -> None:
    """Rewrite Call nodes whose target is a declared constructor into CtorApp."""
    ctor_names = {c.name for a in prog.adts for c in a.constructors}

    def go(e: N.Expr) -> N.Expr:
        for attr, val in list(vars(e).items()):
            if isinstance(val, N.Expr):
                setattr(e, attr, go(val))
            elif isinstance(val, list) and val and isinstance(val[0], N.Expr):
                setattr(e, attr, [go(x) for x in val])
            elif isinstance(val, list) and val and isinstance(val[0], N.MatchCase):
                for c in val:
                    if c.guard is not None:
                        c.guard = go(c.guard)
                    c.body = go(c.body)
        if isinstance(e, N.Call) and e.fun in ctor_names:
            return N.CtorApp(e.fun, e.args)
        return e

    for f in prog.functions:
        f.body = go(f.body)
        if f.precondition is not None:
            f.precondition = go(f.precondition)
        if f.postcondition is not None:
            binder, post = f.postcondition
            f.postcondition = (binder, go(post))


def parse(source: str) -> tuple[Optional[N.Program], list[Diagnostic]]:
    """Parse source text; on failure returns (None, diagnostics)."""
    toks, diags = tokenize(source)
    if diags:
        return None, diags
    p = Parser(toks)
    try:
        prog = p.program()
    except ParseError as e:
        return None, [e.diag]
    _resolve_ctors(prog)
    return prog, []
