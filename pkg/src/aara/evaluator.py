"""Big-step evaluation with a pluggable cost metric."""

from __future__ import annotations

import enum
import random
from dataclasses import dataclass
from fractions import Fraction

from .syntax import (
    App, CaseList, CasePair, CaseSum, Cons, Error, Fun, Inl, Inr, Lambda, Let,
    ListT, Nil, Pair, ProdT, Rec, Share, SumT, Tick, Triv, UnitT, Var,
    free_vars,
)


class CostMetric(enum.Enum):
    RUNNING_TIME = "time"
    TICK = "tick"
    COST_FREE = "costfree"

    @classmethod
    def parse(cls, s):
        for m in cls:
            if m.value == s:
                return m
        raise ValueError(f"unknown metric {s!r} (expected time, tick or costfree)")


RunningTime = CostMetric.RUNNING_TIME
TickMetric = CostMetric.TICK
CostFree = CostMetric.COST_FREE


# ---------------------------------------------------------------- values

@dataclass(frozen=True)
class TrivV:
    def __str__(self):
        return "<>"


@dataclass(frozen=True)
class InlV:
    v: object

    def __str__(self):
        return f"inl {_paren(self.v)}"


@dataclass(frozen=True)
class InrV:
    v: object

    def __str__(self):
        return f"inr {_paren(self.v)}"


@dataclass(frozen=True)
class PairV:
    a: object
    b: object

    def __str__(self):
        return f"<{self.a}, {self.b}>"


@dataclass(frozen=True)
class ListV:
    items: tuple

    def __str__(self):
        return "[" + ", ".join(str(x) for x in self.items) + "]"

    def __len__(self):
        return len(self.items)


@dataclass(eq=False)
class Closure:
    env: dict
    fname: object  # None for a lambda
    param: str
    body: object

    def __str__(self):
        return "<closure>"


def _paren(v):
    s = str(v)
    return f"({s})" if isinstance(v, (InlV, InrV)) else s


TRIV = TrivV()
FALSE = InlV(TRIV)
TRUE = InrV(TRIV)


def mklist(xs):
    return ListV(tuple(xs))


def unit_list(n):
    return ListV((TRIV,) * n)


# ---------------------------------------------------------------- errors

class EvalError(Exception):
    pass


class FuelExhausted(EvalError):
    pass


class RuntimeAbort(EvalError):
    """Raised by the ``error`` primitive."""


class StuckError(EvalError):
    """Evaluation reached a configuration no rule applies to."""


DEFAULT_FUEL = 10 ** 7

_RT_COST = {Var: 1, Triv: 0, Inl: 2, Inr: 2, Pair: 3, Nil: 0, Cons: 3, Fun: 1,
            Lambda: 1, App: 1, CaseSum: 1, CasePair: 1, CaseList: 1, Let: 1,
            Share: 0, Tick: 0, Error: 0, Rec: 0}


def rec_overhead(n_items, n_threaded):
    """Running-time cost the encoding of ``rec`` adds on top of its branches,
    for a list of ``n_items`` and ``n_threaded`` variables passed through."""
    if n_threaded == 0:
        return 4 + 3 * n_items
    return 9 + 5 * (n_threaded - 1) + 8 * n_items


class _Machine:
    def __init__(self, metric, fuel):
        self.metric = metric
        self.fuel = fuel
        self.cost = Fraction(0)
        self.rt = metric is CostMetric.RUNNING_TIME

    def step(self, e):
        self.fuel -= 1
        if self.fuel < 0:
            raise FuelExhausted("fuel exhausted")
        if self.rt:
            c = _RT_COST[type(e)]
            if c:
                self.cost += c

    def look(self, env, x):
        try:
            return env[x]
        except KeyError:
            raise StuckError(f"unbound variable {x!r}") from None

    def run(self, env, e):
        look = self.look
        while True:
            self.step(e)
            t = type(e)
            if t is Var:
                return look(env, e.name)
            if t is Triv:
                return TRIV
            if t is Inl:
                return InlV(look(env, e.var))
            if t is Inr:
                return InrV(look(env, e.var))
            if t is Pair:
                return PairV(look(env, e.x1), look(env, e.x2))
            if t is Nil:
                return ListV(())
            if t is Cons:
                tl = look(env, e.x2)
                if not isinstance(tl, ListV):
                    raise StuckError("cons onto a non-list")
                return ListV((look(env, e.x1),) + tl.items)
            if t is Tick:
                if self.metric is CostMetric.TICK:
                    self.cost += e.amount
                return TRIV
            if t is Error:
                raise RuntimeAbort("error primitive reached")
            if t is Fun:
                return Closure(env, e.fname, e.param, e.body)
            if t is Lambda:
                return Closure(env, None, e.param, e.body)
            if t is App:
                f = look(env, e.fvar)
                if not isinstance(f, Closure):
                    raise StuckError(f"{e.fvar} is not a function")
                arg = look(env, e.argvar)
                env = dict(f.env)
                if f.fname is not None:
                    env[f.fname] = f
                env[f.param] = arg
                e = f.body
                continue
            if t is Let:
                v = self.run(env, e.e1)
                env = {**env, e.x: v}
                e = e.e2
                continue
            if t is Share:
                v = look(env, e.x)
                env = {**env, e.x1: v, e.x2: v}
                e = e.body
                continue
            if t is CaseSum:
                v = look(env, e.scrut)
                if isinstance(v, InlV):
                    env = {**env, e.yL: v.v}
                    e = e.eL
                elif isinstance(v, InrV):
                    env = {**env, e.yR: v.v}
                    e = e.eR
                else:
                    raise StuckError("case on a non-sum")
                continue
            if t is CasePair:
                v = look(env, e.scrut)
                if not isinstance(v, PairV):
                    raise StuckError("case on a non-pair")
                env = {**env, e.x1: v.a, e.x2: v.b}
                e = e.body
                continue
            if t is CaseList:
                v = look(env, e.scrut)
                if not isinstance(v, ListV):
                    raise StuckError("case on a non-list")
                if v.items:
                    env = {**env, e.x1: v.items[0], e.x2: ListV(v.items[1:])}
                    e = e.eCons
                else:
                    e = e.eNil
                continue
            if t is Rec:
                return self.rec(env, e)
            raise StuckError(f"unknown expression {e!r}")

    def rec(self, env, e):
        v = self.look(env, e.scrut)
        if not isinstance(v, ListV):
            raise StuckError("rec on a non-list")
        items = v.items
        if self.rt:
            threaded = [x for x in free_vars(e.eNil)
                        if not isinstance(env.get(x), Closure)]
            self.cost += rec_overhead(len(items), len(threaded))
        acc = self.run(env, e.eNil)
        funs = {k: w for k, w in env.items() if isinstance(w, Closure)}
        for k in range(len(items) - 1, -1, -1):
            step_env = {**funs, e.y: items[k], e.ys: ListV(items[k + 1:]), e.z: acc}
            acc = self.run(step_env, e.eStep)
        return acc


def eval_expr(env, e, metric=CostMetric.RUNNING_TIME, fuel=DEFAULT_FUEL):
    """Evaluate ``e`` in ``env``; returns ``(value, cost)``."""
    m = _Machine(metric, fuel)
    v = m.run(dict(env), e)
    return v, m.cost


# the operation's conventional name
evaluate = eval_expr


def apply_closure(f, arg, metric=CostMetric.RUNNING_TIME, fuel=DEFAULT_FUEL):
    """Apply a closure to a value and return ``(value, cost)``.  The cost
    counts the application rule itself, as ``f x`` would."""
    m = _Machine(metric, fuel)
    if m.rt:
        m.cost += 1
    env = dict(f.env)
    if f.fname is not None:
        env[f.fname] = f
    env[f.param] = arg
    v = m.run(env, f.body)
    return v, m.cost


def measure_cost(program, value, metric=CostMetric.RUNNING_TIME, fuel=DEFAULT_FUEL):
    """Cost of applying the arrow-typed closed ``program`` to ``value``.

    Only the application is measured; building the closure is not.
    """
    f, _ = eval_expr({}, program, metric, fuel)
    if not isinstance(f, Closure):
        raise EvalError("program does not evaluate to a function")
    return apply_closure(f, value, metric, fuel)[1]


# ------------------------------------------------------- typed utilities

def value_has_type(v, b) -> bool:
    if isinstance(b, UnitT):
        return isinstance(v, TrivV)
    if isinstance(b, SumT):
        return ((isinstance(v, InlV) and value_has_type(v.v, b.left))
                or (isinstance(v, InrV) and value_has_type(v.v, b.right)))
    if isinstance(b, ProdT):
        return isinstance(v, PairV) and value_has_type(v.a, b.fst) and value_has_type(v.b, b.snd)
    if isinstance(b, ListT):
        return isinstance(v, ListV) and all(value_has_type(x, b.elem) for x in v.items)
    return False


def random_value(b, rng: random.Random, max_len=30, depth=0):
    """A random inhabitant of base type ``b``; inner lists get shorter."""
    if isinstance(b, UnitT):
        return TRIV
    if isinstance(b, SumT):
        if rng.random() < 0.5:
            return InlV(random_value(b.left, rng, max_len, depth))
        return InrV(random_value(b.right, rng, max_len, depth))
    if isinstance(b, ProdT):
        return PairV(random_value(b.fst, rng, max_len, depth),
                     random_value(b.snd, rng, max_len, depth))
    if isinstance(b, ListT):
        cap = max_len if depth == 0 else max(1, max_len // (3 * depth))
        n = rng.randint(0, cap)
        return ListV(tuple(random_value(b.elem, rng, max_len, depth + 1) for _ in range(n)))
    raise TypeError(b)


def parse_value(text, b=None):
    """Read a value in literal syntax: ``<>``, ``inl v``, ``inr v``,
    ``<v, w>``, ``[v, ...]``, plus ``true``/``false``.  A bare string of
    0/1 digits is accepted for ``L(unit + unit)`` (0 is ``inl``)."""
    from .parser import ParseError, tokenize
    t = text.strip()
    if b is not None and isinstance(b, ListT) and set(t) <= {"0", "1"} and t != "":
        return bits_to_value(t)
    if t == "" and b is not None and isinstance(b, ListT):
        return ListV(())
    toks = tokenize(text)
    pos = 0

    def peek():
        return toks[pos]

    def take(s=None):
        nonlocal pos
        tok = toks[pos]
        if s is not None and tok[1] != s:
            raise ParseError(f"expected {s!r} in value", tok[2], tok[3])
        pos += 1
        return tok

    def val():
        tok = peek()
        if tok[1] == "<":
            take()
            if peek()[1] == ">":
                take()
                return TRIV
            a = val()
            take(",")
            c = val()
            take(">")
            return PairV(a, c)
        if tok[1] == "[":
            take()
            items = []
            if peek()[1] != "]":
                items.append(val())
                while peek()[1] == ",":
                    take()
                    items.append(val())
            take("]")
            return ListV(tuple(items))
        if tok[1] in ("inl", "inr"):
            take()
            inner = val()
            return InlV(inner) if tok[1] == "inl" else InrV(inner)
        if tok[1] == "true":
            take()
            return TRUE
        if tok[1] == "false":
            take()
            return FALSE
        if tok[1] == "(":
            take()
            inner = val()
            take(")")
            return inner
        raise ParseError(f"unexpected {tok[1]!r} in value", tok[2], tok[3])

    v = val()
    if peek()[0] != "eof":
        tok = peek()
        raise ParseError("trailing input after value", tok[2], tok[3])
    if b is not None and not value_has_type(v, b):
        raise ParseError("value does not have the declared type")
    return v


def bits_to_value(bits: str):
    return ListV(tuple(FALSE if c == "0" else TRUE for c in bits))
