"""Abstract syntax of RaML-lite: base types, simple types and expressions.

Expressions are immutable dataclasses.  Every binder introduces a name that
is unique across the whole program once the parser has alpha-renamed it, so
later passes can key per-variable information by name alone.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Optional, Union


# ---------------------------------------------------------------- types

@dataclass(frozen=True)
class UnitT:
    def __str__(self) -> str:
        return "unit"


@dataclass(frozen=True)
class SumT:
    left: "BaseType"
    right: "BaseType"

    def __str__(self) -> str:
        return f"({self.left} + {self.right})"


@dataclass(frozen=True)
class ProdT:
    fst: "BaseType"
    snd: "BaseType"

    def __str__(self) -> str:
        return f"({self.fst} * {self.snd})"


@dataclass(frozen=True)
class ListT:
    elem: "BaseType"

    def __str__(self) -> str:
        return f"L({self.elem})"


BaseType = Union[UnitT, SumT, ProdT, ListT]


@dataclass(frozen=True)
class Arrow:
    dom: BaseType
    cod: BaseType

    def __str__(self) -> str:
        return f"{self.dom} -> {self.cod}"


SimpleType = Union[UnitT, SumT, ProdT, ListT, Arrow]

UNIT = UnitT()
BOOL = SumT(UNIT, UNIT)


def is_base(t) -> bool:
    return isinstance(t, (UnitT, SumT, ProdT, ListT))


def list_nesting_depth(b: BaseType) -> int:
    """Depth of the deepest chain of nested list constructors in ``b``."""
    if isinstance(b, UnitT):
        return 0
    if isinstance(b, SumT):
        return max(list_nesting_depth(b.left), list_nesting_depth(b.right))
    if isinstance(b, ProdT):
        return max(list_nesting_depth(b.fst), list_nesting_depth(b.snd))
    if isinstance(b, ListT):
        return 1 + list_nesting_depth(b.elem)
    raise TypeError(f"not a base type: {b!r}")


def contains_list(b: BaseType) -> bool:
    return list_nesting_depth(b) > 0


# ---------------------------------------------------------- expressions

@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Triv:
    pass


@dataclass(frozen=True)
class Inl:
    var: str


@dataclass(frozen=True)
class Inr:
    var: str


@dataclass(frozen=True)
class CaseSum:
    scrut: str
    yL: str
    eL: "Expr"
    yR: str
    eR: "Expr"


@dataclass(frozen=True)
class Pair:
    x1: str
    x2: str


@dataclass(frozen=True)
class CasePair:
    scrut: str
    x1: str
    x2: str
    body: "Expr"


@dataclass(frozen=True)
class Nil:
    pass


@dataclass(frozen=True)
class Cons:
    x1: str
    x2: str


@dataclass(frozen=True)
class CaseList:
    scrut: str
    eNil: "Expr"
    x1: str
    x2: str
    eCons: "Expr"


@dataclass(frozen=True)
class Fun:
    fname: str
    param: str
    body: "Expr"


@dataclass(frozen=True)
class App:
    fvar: str
    argvar: str


@dataclass(frozen=True)
class Tick:
    amount: Fraction


@dataclass(frozen=True)
class Let:
    x: str
    e1: "Expr"
    e2: "Expr"


@dataclass(frozen=True)
class Share:
    x: str
    x1: str
    x2: str
    body: "Expr"


@dataclass(frozen=True)
class Lambda:
    param: str
    paramType: Optional[BaseType]
    body: "Expr"


@dataclass(frozen=True)
class Rec:
    scrut: str
    eNil: "Expr"
    y: str
    ys: str
    z: str
    eStep: "Expr"


@dataclass(frozen=True)
class Error:
    """Diverging primitive; aborts evaluation."""


Expr = Union[Var, Triv, Inl, Inr, CaseSum, Pair, CasePair, Nil, Cons, CaseList,
             Fun, App, Tick, Let, Share, Lambda, Rec, Error]


@dataclass(frozen=True)
class Program:
    """A main expression together with the declared types of its free inputs."""
    inputs: tuple  # of (name, BaseType)
    body: Expr

    def input_names(self) -> list:
        return [n for n, _ in self.inputs]


# -------------------------------------------------------------- helpers

def children(e: Expr) -> Iterator[Expr]:
    if isinstance(e, CaseSum):
        yield e.eL
        yield e.eR
    elif isinstance(e, CasePair):
        yield e.body
    elif isinstance(e, CaseList):
        yield e.eNil
        yield e.eCons
    elif isinstance(e, (Fun, Lambda)):
        yield e.body
    elif isinstance(e, Let):
        yield e.e1
        yield e.e2
    elif isinstance(e, Share):
        yield e.body
    elif isinstance(e, Rec):
        yield e.eNil
        yield e.eStep


def subexprs(e: Expr) -> Iterator[Expr]:
    stack = [e]
    while stack:
        cur = stack.pop()
        yield cur
        stack.extend(reversed(list(children(cur))))


def free_vars(e: Expr) -> list:
    """Free variables in order of first occurrence."""
    out: list = []
    seen: set = set()

    def add(name, bound):
        if name not in bound and name not in seen:
            seen.add(name)
            out.append(name)

    def go(e, bound):
        if isinstance(e, Var):
            add(e.name, bound)
        elif isinstance(e, (Inl, Inr)):
            add(e.var, bound)
        elif isinstance(e, (Pair, Cons)):
            add(e.x1, bound)
            add(e.x2, bound)
        elif isinstance(e, App):
            add(e.fvar, bound)
            add(e.argvar, bound)
        elif isinstance(e, CaseSum):
            add(e.scrut, bound)
            go(e.eL, bound | {e.yL})
            go(e.eR, bound | {e.yR})
        elif isinstance(e, CasePair):
            add(e.scrut, bound)
            go(e.body, bound | {e.x1, e.x2})
        elif isinstance(e, CaseList):
            add(e.scrut, bound)
            go(e.eNil, bound)
            go(e.eCons, bound | {e.x1, e.x2})
        elif isinstance(e, Fun):
            go(e.body, bound | {e.fname, e.param})
        elif isinstance(e, Lambda):
            go(e.body, bound | {e.param})
        elif isinstance(e, Let):
            go(e.e1, bound)
            go(e.e2, bound | {e.x})
        elif isinstance(e, Share):
            add(e.x, bound)
            go(e.body, bound | {e.x1, e.x2})
        elif isinstance(e, Rec):
            add(e.scrut, bound)
            go(e.eNil, bound)
            go(e.eStep, bound | {e.y, e.ys, e.z})

    go(e, frozenset())
    return out


def binders(e: Expr) -> Iterator[str]:
    for s in subexprs(e):
        if isinstance(s, CaseSum):
            yield s.yL
            yield s.yR
        elif isinstance(s, (CasePair, CaseList)):
            yield s.x1
            yield s.x2
        elif isinstance(s, Fun):
            yield s.fname
            yield s.param
        elif isinstance(s, Lambda):
            yield s.param
        elif isinstance(s, Let):
            yield s.x
        elif isinstance(s, Share):
            yield s.x1
            yield s.x2
        elif isinstance(s, Rec):
            yield s.y
            yield s.ys
            yield s.z


def all_names(e: Expr) -> set:
    return set(binders(e)) | set(free_vars(e))


def rename_free(e: Expr, m: dict) -> Expr:
    """Substitute variable names for free occurrences (names are unique, so
    no capture check is needed)."""
    r = lambda n: m.get(n, n)
    if isinstance(e, Var):
        return Var(r(e.name))
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
        return CaseSum(r(e.scrut), e.yL, rename_free(e.eL, m), e.yR, rename_free(e.eR, m))
    if isinstance(e, CasePair):
        return CasePair(r(e.scrut), e.x1, e.x2, rename_free(e.body, m))
    if isinstance(e, CaseList):
        return CaseList(r(e.scrut), rename_free(e.eNil, m), e.x1, e.x2, rename_free(e.eCons, m))
    if isinstance(e, Fun):
        return Fun(e.fname, e.param, rename_free(e.body, m))
    if isinstance(e, Lambda):
        return Lambda(e.param, e.paramType, rename_free(e.body, m))
    if isinstance(e, Let):
        return Let(e.x, rename_free(e.e1, m), rename_free(e.e2, m))
    if isinstance(e, Share):
        return Share(r(e.x), e.x1, e.x2, rename_free(e.body, m))
    if isinstance(e, Rec):
        return Rec(r(e.scrut), rename_free(e.eNil, m), e.y, e.ys, e.z, rename_free(e.eStep, m))
    return e


class NameSupply:
    """Generates names not occurring in a given set."""

    def __init__(self, used=()):
        self.used = set(used)

    def fresh(self, base: str) -> str:
        if base != "_" and base not in self.used:
            self.used.add(base)
            return base
        stem = re.sub(r"_\d+$", "", base) or "v"
        k = 1
        while f"{stem}_{k}" in self.used:
            k += 1
        name = f"{stem}_{k}"
        self.used.add(name)
        return name


def desugar_rec(e: Rec, names: NameSupply, base_inputs: list) -> Expr:
    """The general-recursion encoding of a ``rec`` node.

    ``base_inputs`` lists the free base-type variables of the nil branch in
    the order they are threaded through the recursion.  The result evaluates
    ``f <scrut, g>`` where ``g`` packs those variables into nested pairs.
    """
    f = names.fresh("recf")
    a = names.fresh("a")
    y, ys, z = e.y, e.ys, e.z
    ys1, ys2 = names.fresh(ys + "1"), names.fresh(ys + "2")
    step = rename_free(e.eStep, {ys: ys2})
    m = len(base_inputs)
    if m == 0:
        tail = names.fresh(ys)
        cons = Share(tail, ys1, ys2, Let(z, App(f, ys1), step))
        body = CaseList(a, e.eNil, y, tail, cons)
        fun = Fun(f, a, body)
        return Let(f, fun, App(f, e.scrut))

    # nested pair packing <g1, <g2, ... gm>>
    def pack(vars_):
        if len(vars_) == 1:
            return vars_[0], lambda k: k
        t = names.fresh("g")
        rest, wrap_rest = pack(vars_[1:])
        return t, lambda k: wrap_rest(Let(t, Pair(vars_[0], rest), k))

    def unpack(gname, vars_, k):
        if len(vars_) == 1:
            return rename_free(k, {vars_[0]: gname}) if gname != vars_[0] else k
        rest = names.fresh("g")
        return CasePair(gname, vars_[0], rest, unpack(rest, vars_[1:], k))

    inner_vars = [names.fresh(v) for v in base_inputs]
    nil_branch = rename_free(e.eNil, dict(zip(base_inputs, inner_vars)))
    xs = names.fresh("x")
    tail = names.fresh(ys)
    a2 = names.fresh("a")
    gp = names.fresh("g")
    nil_case = unpack(gp, inner_vars, nil_branch)
    cons_case = Share(tail, ys1, ys2,
                      Let(a2, Pair(ys1, gp), Let(z, App(f, a2), step)))
    body = CasePair(a, xs, gp, CaseList(xs, nil_case, y, tail, cons_case))
    fun = Fun(f, a, body)
    gtop, wrap = pack(list(base_inputs))
    atop = names.fresh("a")
    return Let(f, fun, wrap(Let(atop, Pair(e.scrut, gtop), App(f, atop))))


# ------------------------------------------------------ pretty printing

def fmt_rational(q: Fraction) -> str:
    q = Fraction(q)
    if q.denominator == 1:
        return str(q.numerator)
    return f"{q.numerator}/{q.denominator}"


def fmt_type(t) -> str:
    """Concrete syntax for types; ``*`` binds tighter than ``+``."""
    def go(t, prec):
        if isinstance(t, UnitT):
            return "unit"
        if isinstance(t, ListT):
            return f"L({go(t.elem, 0)})"
        if isinstance(t, SumT):
            s = f"{go(t.left, 1)} + {go(t.right, 0)}"
            return f"({s})" if prec > 0 else s
        if isinstance(t, ProdT):
            s = f"{go(t.fst, 2)} * {go(t.snd, 1)}"
            return f"({s})" if prec > 1 else s
        if isinstance(t, Arrow):
            return f"{go(t.dom, 1)} -> {go(t.cod, 1)}"
        raise TypeError(t)
    return go(t, 0)


def pretty(e: Expr, indent: int = 0) -> str:
    """Render an expression in the concrete syntax accepted by the parser."""
    pad = "  " * indent
    nl = "\n" + "  " * (indent + 1)

    def sub(x, k=1):
        return pretty(x, indent + k)

    if isinstance(e, Var):
        return e.name
    if isinstance(e, Triv):
        return "<>"
    if isinstance(e, Inl):
        return f"inl {e.var}"
    if isinstance(e, Inr):
        return f"inr {e.var}"
    if isinstance(e, Pair):
        return f"<{e.x1}, {e.x2}>"
    if isinstance(e, Nil):
        return "[]"
    if isinstance(e, Cons):
        return f"{e.x1} :: {e.x2}"
    if isinstance(e, App):
        return f"{e.fvar} {e.argvar}"
    if isinstance(e, Tick):
        return f"tick {fmt_rational(e.amount)}"
    if isinstance(e, Error):
        return "error"
    if isinstance(e, CaseSum):
        return (f"case {e.scrut} {{{nl}inl {e.yL} -> {sub(e.eL, 2)}{nl}"
                f"| inr {e.yR} -> {sub(e.eR, 2)}\n{pad}}}")
    if isinstance(e, CasePair):
        return f"case {e.scrut} {{ <{e.x1}, {e.x2}> ->{nl}{sub(e.body)}\n{pad}}}"
    if isinstance(e, CaseList):
        return (f"case {e.scrut} {{{nl}[] -> {sub(e.eNil, 2)}{nl}"
                f"| {e.x1} :: {e.x2} -> {sub(e.eCons, 2)}\n{pad}}}")
    if isinstance(e, Rec):
        return (f"rec {e.scrut} {{{nl}[] -> {sub(e.eNil, 2)}{nl}"
                f"| ({e.y} :: {e.ys}) with {e.z} -> {sub(e.eStep, 2)}\n{pad}}}")
    if isinstance(e, Fun):
        return f"fun {e.fname} {e.param} ={nl}{sub(e.body)}"
    if isinstance(e, Lambda):
        if e.paramType is None:
            return f"lambda {e.param} .{nl}{sub(e.body)}"
        return f"lambda ({e.param} : {fmt_type(e.paramType)}) .{nl}{sub(e.body)}"
    if isinstance(e, Let):
        return f"let {e.x} = {sub(e.e1)} in\n{pad}{pretty(e.e2, indent)}"
    if isinstance(e, Share):
        return f"share {e.x} as {e.x1}, {e.x2} in\n{pad}{pretty(e.body, indent)}"
    raise TypeError(f"not an expression: {e!r}")


def pretty_program(p: Program) -> str:
    lines = [f"input {n} : {fmt_type(t)} ;" for n, t in p.inputs]
    lines.append(pretty(p.body))
    return "\n".join(lines) + "\n"
