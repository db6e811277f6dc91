"""Concrete syntax for RaML-lite programs.

Surface sugar (curried functions and applications, booleans, ``if``,
``let <a, b> = ...``, top-level declarations) is removed here, so the AST
handed to later passes is the core let-normal language.  Every binder is
then renamed apart.
"""

from __future__ import annotations

import re
from fractions import Fraction

from .syntax import (
    App, BOOL, Cons, CaseList, CasePair, CaseSum, Error, Fun, Inl, Inr, Lambda,
    Let, ListT, NameSupply, Nil, Pair, ProdT, Program, Rec, Share, SumT, Tick,
    Triv, UNIT, Var, free_vars,
)


class ParseError(Exception):
    def __init__(self, msg, line=0, col=0):
        super().__init__(f"{line}:{col}: {msg}")
        self.msg, self.line, self.col = msg, line, col


class LetNormalError(ParseError):
    """An argument position holds something other than a variable."""


KEYWORDS = {
    "let", "in", "fun", "lambda", "case", "rec", "with", "share", "as", "tick",
    "error", "inl", "inr", "if", "then", "else", "true", "false", "input",
}

TOKEN_RE = re.compile(r"""
    (?P<ws>\s+)
  | (?P<num>\d+(?:\.\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_']*)
  | (?P<sym>->|::|[<>(){}\[\],;:=|.*+/\-^])
""", re.VERBOSE)


def tokenize(src: str):
    toks = []
    i, line, col = 0, 1, 1
    n = len(src)
    while i < n:
        if src.startswith("(*", i):
            depth, j = 0, i
            while j < n:
                if src.startswith("(*", j):
                    depth += 1
                    j += 2
                elif src.startswith("*)", j):
                    depth -= 1
                    j += 2
                    if depth == 0:
                        break
                else:
                    j += 1
            if depth:
                raise ParseError("unterminated comment", line, col)
            chunk = src[i:j]
        else:
            m = TOKEN_RE.match(src, i)
            if not m:
                raise ParseError(f"unexpected character {src[i]!r}", line, col)
            chunk = m.group(0)
            kind = m.lastgroup
            if kind != "ws":
                if kind == "ident" and chunk in KEYWORDS:
                    kind = "kw"
                toks.append((kind, chunk, line, col))
            j = m.end()
        nl = chunk.count("\n")
        if nl:
            line += nl
            col = len(chunk) - chunk.rfind("\n")
        else:
            col += len(chunk)
        i = j
    toks.append(("eof", "", line, col))
    return toks


class Parser:
    def __init__(self, src: str):
        self.toks = tokenize(src)
        self.pos = 0

    # token helpers
    def peek(self, k=0):
        return self.toks[min(self.pos + k, len(self.toks) - 1)]

    def at(self, text, k=0):
        t = self.peek(k)
        return t[0] in ("kw", "sym") and t[1] == text

    def next(self):
        t = self.toks[self.pos]
        self.pos += 1
        return t

    def fail(self, msg, tok=None, cls=ParseError):
        tok = tok or self.peek()
        raise cls(msg, tok[2], tok[3])

    def expect(self, text):
        if not self.at(text):
            t = self.peek()
            self.fail(f"expected {text!r}, found {t[1] or 'end of input'!r}")
        return self.next()

    def ident(self, what="identifier"):
        t = self.peek()
        if t[0] != "ident":
            self.fail(f"expected {what}, found {t[1] or 'end of input'!r}")
        self.next()
        return t[1]

    def arg_var(self, what):
        """A variable in an argument position (let-normal form)."""
        t = self.peek()
        if t[0] == "ident":
            self.next()
            return t[1]
        if t[0] in ("kw", "sym", "num") and t[1] not in ("in", "|", "}", ")", ";", "then", "else", "->", ""):
            self.fail(f"{what} must be a variable (let-normal form)", t, LetNormalError)
        self.fail(f"expected a variable for {what}")

    def binder(self):
        t = self.peek()
        if t[0] == "ident":
            self.next()
            return t[1]
        self.fail("expected a binder")

    def temp(self, base="t"):
        # renamed apart later; the leading underscore keeps it out of the
        # way of ordinary identifiers
        return f"_{base}"

    # types
    def type_(self):
        left = self.type_prod()
        if self.at("+"):
            self.next()
            return SumT(left, self.type_())
        return left

    def type_prod(self):
        left = self.type_atom()
        if self.at("*"):
            self.next()
            return ProdT(left, self.type_prod())
        return left

    def type_atom(self):
        t = self.peek()
        if t[0] == "ident" and t[1] == "unit":
            self.next()
            return UNIT
        if t[0] == "ident" and t[1] == "bool":
            self.next()
            return BOOL
        if t[0] == "ident" and t[1] == "L":
            self.next()
            self.expect("(")
            inner = self.type_()
            self.expect(")")
            return ListT(inner)
        if self.at("("):
            self.next()
            inner = self.type_()
            self.expect(")")
            return inner
        self.fail("expected a type")

    # numbers
    def rational(self):
        neg = False
        if self.at("-"):
            self.next()
            neg = True
        t = self.peek()
        if t[0] != "num":
            self.fail("expected a number")
        self.next()
        q = Fraction(t[1])
        if self.at("/") and self.peek(1)[0] == "num":
            self.next()
            q /= Fraction(self.next()[1])
        return -q if neg else q

    # expressions
    def expr(self):
        t = self.peek()
        if t[0] == "kw":
            kw = t[1]
            if kw == "let":
                return self.let_expr()
            if kw == "share":
                self.next()
                x = self.arg_var("shared value")
                self.expect("as")
                a = self.binder()
                self.expect(",")
                b = self.binder()
                self.expect("in")
                return Share(x, a, b, self.expr())
            if kw == "case":
                return self.case_expr()
            if kw == "rec":
                return self.rec_expr()
            if kw == "fun":
                return self.fun_expr()
            if kw == "lambda":
                return self.lambda_expr()
            if kw == "if":
                self.next()
                c = self.arg_var("condition")
                self.expect("then")
                e1 = self.expr()
                self.expect("else")
                e2 = self.expr()
                return CaseSum(c, "_", e2, "_", e1)
        return self.simple()

    def let_expr(self):
        self.next()
        if self.at("<"):
            self.next()
            a = self.binder()
            self.expect(",")
            b = self.binder()
            self.expect(">")
            self.expect("=")
            e1 = self.expr()
            self.expect("in")
            t = self.temp("p")
            return Let(t, e1, CasePair(t, a, b, self.expr()))
        x = self.binder()
        self.expect("=")
        e1 = self.expr()
        self.expect("in")
        return Let(x, e1, self.expr())

    def params(self):
        """One or more parameters, each optionally annotated with a type."""
        ps = []
        while True:
            t = self.peek()
            if t[0] == "ident":
                self.next()
                ps.append((t[1], None))
            elif self.at("(") and self.peek(1)[0] == "ident" and self.peek(2)[1] == ":":
                self.next()
                name = self.ident()
                self.expect(":")
                ty = self.type_()
                self.expect(")")
                ps.append((name, ty))
            else:
                break
        if not ps:
            self.fail("expected a parameter")
        return ps

    def uncurry(self, ps, body):
        """Turn parameters p1..pn into one pair-typed parameter."""
        if len(ps) == 1:
            return ps[0][0], body
        param = self.temp("p")
        rest_name, rest_body = self.uncurry(ps[1:], body)
        return param, CasePair(param, ps[0][0], rest_name, rest_body)

    @staticmethod
    def param_type(ps):
        if any(t is None for _, t in ps):
            return None
        ty = ps[-1][1]
        for _, t in reversed(ps[:-1]):
            ty = ProdT(t, ty)
        return ty

    def fun_expr(self):
        tok = self.next()
        f = self.ident("function name")
        ps = self.params()
        if any(t is not None for _, t in ps):
            self.fail("type annotations are only supported on lambda parameters", tok)
        self.expect("=")
        body = self.expr()
        param, body = self.uncurry(ps, body)
        return Fun(f, param, body)

    def lambda_expr(self):
        self.next()
        ps = self.params()
        self.expect(".")
        body = self.expr()
        ty = self.param_type(ps)
        param, body = self.uncurry(ps, body)
        return Lambda(param, ty, body)

    def case_expr(self):
        self.next()
        x = self.arg_var("case scrutinee")
        self.expect("{")
        if self.at("|"):
            self.next()
        pats = [self.branch()]
        while self.at("|"):
            self.next()
            pats.append(self.branch())
        self.expect("}")
        kinds = sorted(p[0] for p in pats)
        by = {p[0]: p for p in pats}
        if kinds == ["inl", "inr"]:
            return CaseSum(x, by["inl"][1], by["inl"][2], by["inr"][1], by["inr"][2])
        if kinds == ["pair"]:
            _, a, b, e = pats[0]
            return CasePair(x, a, b, e)
        if kinds == ["cons", "nil"]:
            _, a, b, e = by["cons"]
            return CaseList(x, by["nil"][1], a, b, e)
        self.fail("incomplete or mixed case patterns")

    def cons_pattern(self):
        paren = self.at("(")
        if paren:
            self.next()
        a = self.binder()
        self.expect("::")
        b = self.binder()
        if paren:
            self.expect(")")
        return a, b

    def branch(self):
        t = self.peek()
        if self.at("inl") or self.at("inr") or self.at("true") or self.at("false"):
            self.next()
            kind = {"inl": "inl", "false": "inl", "inr": "inr", "true": "inr"}[t[1]]
            y = self.binder() if t[1] in ("inl", "inr") else "_"
            self.expect("->")
            return (kind, y, self.expr())
        if self.at("<"):
            self.next()
            a = self.binder()
            self.expect(",")
            b = self.binder()
            self.expect(">")
            self.expect("->")
            return ("pair", a, b, self.expr())
        if self.at("["):
            self.next()
            self.expect("]")
            self.expect("->")
            return ("nil", self.expr())
        if t[0] == "ident" or self.at("("):
            a, b = self.cons_pattern()
            self.expect("->")
            return ("cons", a, b, self.expr())
        self.fail("expected a case pattern")

    def rec_expr(self):
        self.next()
        x = self.arg_var("rec scrutinee")
        self.expect("{")
        if self.at("|"):
            self.next()
        self.expect("[")
        self.expect("]")
        self.expect("->")
        e0 = self.expr()
        self.expect("|")
        y, ys = self.cons_pattern()
        self.expect("with")
        z = self.binder()
        self.expect("->")
        e1 = self.expr()
        self.expect("}")
        return Rec(x, e0, y, ys, z, e1)

    def simple(self):
        t = self.peek()
        kind, text = t[0], t[1]
        if kind == "ident":
            self.next()
            if self.at("::"):
                self.next()
                tail = self.arg_var("list tail")
                if self.at("::"):
                    self.fail("list tail must be a variable (let-normal form)", cls=LetNormalError)
                return Cons(text, tail)
            args = []
            while True:
                nt = self.peek()
                if nt[0] == "ident":
                    self.next()
                    args.append(nt[1])
                elif (nt[0] == "num" or (nt[0] == "sym" and nt[1] in "<([")
                      or (nt[0] == "kw" and nt[1] in ("inl", "inr", "tick", "true", "false", "error"))):
                    self.fail("function argument must be a variable (let-normal form)",
                              nt, LetNormalError)
                else:
                    break
            if not args:
                return Var(text)
            return self.apply(text, args)
        if kind == "kw" and text in ("inl", "inr"):
            self.next()
            v = self.arg_var(f"argument of {text}")
            return Inl(v) if text == "inl" else Inr(v)
        if kind == "kw" and text in ("true", "false"):
            self.next()
            u = self.temp("u")
            return Let(u, Triv(), Inr(u) if text == "true" else Inl(u))
        if kind == "kw" and text == "tick":
            self.next()
            return Tick(self.rational())
        if kind == "kw" and text == "error":
            self.next()
            return Error()
        if self.at("<"):
            self.next()
            if self.at(">"):
                self.next()
                return self.no_cons(Triv())
            a = self.arg_var("pair component")
            self.expect(",")
            b = self.arg_var("pair component")
            self.expect(">")
            return self.no_cons(Pair(a, b))
        if self.at("["):
            self.next()
            self.expect("]")
            return self.no_cons(Nil())
        if self.at("("):
            self.next()
            e = self.expr()
            self.expect(")")
            return self.no_cons(e)
        self.fail(f"unexpected {text or 'end of input'!r}")

    def no_cons(self, e):
        if self.at("::"):
            self.fail("list head must be a variable (let-normal form)", cls=LetNormalError)
        return e

    def apply(self, f, args):
        if len(args) == 1:
            return App(f, args[0])
        # <a1, <a2, ... an>> built innermost first
        names = [self.temp("a") for _ in args[:-1]]
        inner = args[-1]
        lets = []
        for a, n in zip(reversed(args[:-1]), names):
            lets.append((n, Pair(a, inner)))
            inner = n
        e = App(f, inner)
        # outermost let binds the innermost pair
        for n, p in reversed(lets):
            e = Let(n, p, e)
        return e

    # programs
    def program(self):
        inputs = []
        decls = []
        while True:
            if self.at("input"):
                self.next()
                x = self.ident()
                self.expect(":")
                ty = self.type_()
                self.expect(";")
                inputs.append((x, ty))
                continue
            start = self.pos
            if self.at("fun"):
                fe = self.fun_expr()
                if self.at(";"):
                    self.next()
                    decls.append((fe.fname, fe))
                    continue
                self.pos = start
            elif self.at("let") and self.peek(1)[0] == "ident" and self.at("=", 2):
                self.next()
                x = self.binder()
                self.expect("=")
                e1 = self.expr()
                if self.at(";"):
                    self.next()
                    decls.append((x, e1))
                    continue
                self.pos = start
            break
        main = self.expr()
        if self.peek()[0] != "eof":
            self.fail(f"unexpected {self.peek()[1]!r} after main expression")
        for name, e1 in reversed(decls):
            main = Let(name, e1, main)
        return inputs, main


class _Renamer:
    def __init__(self, used):
        self.names = NameSupply(used)

    def fresh(self, n):
        return self.names.fresh(n)

    def go(self, e, env):
        r = lambda n: env.get(n, n)
        if isinstance(e, Var):
            return Var(r(e.name))
        if isinstance(e, (Triv, Nil, Tick, Error)):
            return e
        if isinstance(e, Inl):
            return Inl(r(e.var))
        if isinstance(e, Inr):
            return Inr(r(e.var))
        if isinstance(e, Pair):
            return Pair(r(e.x1), r(e.x2))
        if isinstance(e, Cons):
            return Cons(r(e.x1), r(e.x2))
        if isinstance(e, App):
            return App(r(e.fvar), r(e.argvar))
        if isinstance(e, CaseSum):
            s = r(e.scrut)
            yl = self.fresh(e.yL)
            el = self.go(e.eL, {**env, e.yL: yl})
            yr = self.fresh(e.yR)
            er = self.go(e.eR, {**env, e.yR: yr})
            return CaseSum(s, yl, el, yr, er)
        if isinstance(e, CasePair):
            s = r(e.scrut)
            a, b = self.fresh(e.x1), self.fresh(e.x2)
            return CasePair(s, a, b, self.go(e.body, {**env, e.x1: a, e.x2: b}))
        if isinstance(e, CaseList):
            s = r(e.scrut)
            e0 = self.go(e.eNil, env)
            a, b = self.fresh(e.x1), self.fresh(e.x2)
            return CaseList(s, e0, a, b, self.go(e.eCons, {**env, e.x1: a, e.x2: b}))
        if isinstance(e, Fun):
            return self.fun(e, env, None)
        if isinstance(e, Lambda):
            p = self.fresh(e.param)
            return Lambda(p, e.paramType, self.go(e.body, {**env, e.param: p}))
        if isinstance(e, Let):
            x = self.fresh(e.x)
            if isinstance(e.e1, Fun) and e.e1.fname == e.x:
                e1 = self.fun(e.e1, env, x)
            else:
                e1 = self.go(e.e1, env)
            return Let(x, e1, self.go(e.e2, {**env, e.x: x}))
        if isinstance(e, Share):
            s = r(e.x)
            a, b = self.fresh(e.x1), self.fresh(e.x2)
            return Share(s, a, b, self.go(e.body, {**env, e.x1: a, e.x2: b}))
        if isinstance(e, Rec):
            s = r(e.scrut)
            e0 = self.go(e.eNil, env)
            y, ys, z = self.fresh(e.y), self.fresh(e.ys), self.fresh(e.z)
            e1 = self.go(e.eStep, {**env, e.y: y, e.ys: ys, e.z: z})
            return Rec(s, e0, y, ys, z, e1)
        raise TypeError(e)

    def fun(self, e, env, fname):
        f = fname or self.fresh(e.fname)
        p = self.fresh(e.param)
        return Fun(f, p, self.go(e.body, {**env, e.fname: f, e.param: p}))


def rename_apart(e, free=()):
    """Alpha-rename so that every binder is unique.  A ``let`` that binds a
    ``fun`` of the same name shares that name with the function."""
    return _Renamer(set(free) | set(free_vars(e))).go(e, {})


def parse_program(src: str) -> Program:
    inputs, main = Parser(src).program()
    names = [n for n, _ in inputs]
    if len(set(names)) != len(names):
        raise ParseError("duplicate input declaration")
    return Program(tuple(inputs), rename_apart(main, names))


def parse(src: str):
    """Parse a single expression (or program) and return its AST."""
    return parse_program(src).body


def parse_type(src: str):
    p = Parser(src)
    t = p.type_()
    if p.peek()[0] != "eof":
        p.fail("trailing input after type")
    return t
