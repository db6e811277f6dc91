"""Decision procedure for inherent polynomial time.

``check_ip`` computes, bottom up, the least set V of base variables an
expression may run in polynomial time in, together with the least class
(const before poly) of every arrow variable.  Weakening is only used where
two premises have to agree.  ``derives`` is an independent top-down
checker for a given V; the tests use it to confirm that the V found is
minimal.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

from .syntax import (
    App, Arrow, CaseList, CasePair, CaseSum, Cons, Error, Fun, Inl, Inr, Lambda,
    Let, Nil, Pair, Program, Rec, Share, Tick, Triv, Var, free_vars, list_nesting_depth,
    pretty,
)
from .typecheck import typecheck


class TimeClass(enum.IntEnum):
    CONST = 0
    POLY = 1

    def __str__(self):
        return self.name.lower()


class Rejected(Exception):
    """The expression is not inherently polynomial time."""

    def __init__(self, site, reason):
        self.site = site
        self.reason = reason
        super().__init__(f"{reason} at: {_snippet(site)}")


def _snippet(e, width=70):
    s = " ".join(pretty(e).split())
    return s if len(s) <= width else s[: width - 3] + "..."


@dataclass
class IpResult:
    V: frozenset
    delta: dict  # arrow variable -> TimeClass
    time: TimeClass | None = None  # set for arrow-typed expressions
    trace: list = field(default_factory=list)  # (rule, snippet, V)
    node_v: dict = field(default_factory=dict)  # id(subexpr) -> V at that node
    var_types: dict = field(default_factory=dict)

    def fmt(self):
        if self.time is not None:
            head = f"accepted: {self.time}"
        else:
            head = "accepted: poly^{" + ", ".join(sorted(self.V)) + "}"
        d = ", ".join(f"{f} {t}" for f, t in sorted(self.delta.items()))
        return head + (f"\n  delta: {d}" if d else "")


@dataclass(frozen=True)
class Violation:
    kind: str  # "share" or "nested"
    message: str
    site: object

    def __str__(self):
        return f"{self.message} at: {_snippet(self.site)}"


class _Checker:
    def __init__(self, var_types):
        self.var_types = var_types
        self.delta = {}
        self.trace = []
        self.node_v = {}

    def is_arrow(self, x):
        return isinstance(self.var_types.get(x), Arrow)

    def base_fv(self, e):
        return frozenset(x for x in free_vars(e) if not self.is_arrow(x))

    def note(self, rule, e, V):
        self.trace.append((rule, _snippet(e, 50), tuple(sorted(V))))
        self.node_v[id(e)] = V
        return V

    @staticmethod
    def rename_back(V, new, old):
        """Undo ``V[old -> new...]``: if any of ``new`` is in V, ``old`` is."""
        hit = any(n in V for n in new)
        V = V - set(new)
        return V | {old} if hit else V

    def poly(self, env, e):
        """Least V with env |- e poly^V; ``env`` maps arrow vars to classes."""
        t = type(e)
        if t in (Var, Triv, Nil, Inl, Inr, Pair, Cons, Tick, Error):
            return self.note(t.__name__, e, frozenset())
        if t is App:
            c = env[e.fvar]
            self.delta[e.fvar] = max(self.delta.get(e.fvar, TimeClass.CONST), c)
            V = frozenset({e.argvar}) if c is TimeClass.POLY else frozenset()
            return self.note(f"App-{c}", e, V)
        if t is CaseSum:
            V = self.poly(env, e.eL) | self.poly(env, e.eR)
            V = self.rename_back(V, (e.yL, e.yR), e.scrut)
            return self.note("Case-Sum", e, V)
        if t is CasePair:
            V = self.rename_back(self.poly(env, e.body), (e.x1, e.x2), e.scrut)
            return self.note("Case-Prod", e, V)
        if t is CaseList:
            V0 = self.poly(env, e.eNil)
            V1 = self.rename_back(self.poly(env, e.eCons), (e.x1, e.x2), e.scrut)
            return self.note("Case-List", e, V0 | V1)
        if t is Rec:
            V0 = self.poly(env, e.eNil)
            glob = self.base_fv(e.eStep) - {e.y, e.ys, e.z}
            if glob:
                raise Rejected(e.eStep, f"step body mentions outer variable {sorted(glob)[0]}")
            V1 = self.poly(env, e.eStep)
            if e.z in V1:
                raise Rejected(e.eStep, f"step body polynomial in recursive result {e.z}")
            return self.note("Rec", e, V0 | {e.scrut})
        if t is Let:
            if self.is_arrow(e.x):
                c = self.arrow(env, e.e1)
                V = self.poly({**env, e.x: c}, e.e2)
                return self.note("Let-Arrow", e, V)
            V1 = self.poly(env, e.e1)
            V2 = self.poly(env, e.e2)
            if e.x in V2:
                V = self.base_fv(e.e1) | (V2 - {e.x})
            else:
                V = V1 | V2
            return self.note("Let-Base", e, V)
        if t is Share:
            if self.is_arrow(e.x):
                c = env[e.x]
                return self.note("Share-Arrow", e, self.poly({**env, e.x1: c, e.x2: c}, e.body))
            V = self.rename_back(self.poly(env, e.body), (e.x1, e.x2), e.x)
            return self.note("Share-Base", e, V)
        if t is Fun:
            raise Rejected(e, "general recursion is outside the rec fragment")
        raise Rejected(e, f"unsupported expression {t.__name__}")

    def arrow(self, env, e):
        """Class of an arrow-typed expression."""
        if isinstance(e, Lambda):
            V = self.poly(env, e.body)
            extra = V - {e.param}
            if extra:
                raise Rejected(e, f"function body depends on captured {sorted(extra)[0]}")
            c = TimeClass.POLY if e.param in V else TimeClass.CONST
            self.trace.append((f"IP:{c}", _snippet(e, 50), ()))
            return c
        if isinstance(e, Var):
            return env[e.name]
        if isinstance(e, Let) and self.is_arrow(e.x):
            return self.arrow({**env, e.x: self.arrow(env, e.e1)}, e.e2)
        if isinstance(e, Share):
            c = env[e.x]
            return self.arrow({**env, e.x1: c, e.x2: c}, e.body)
        if isinstance(e, Fun):
            raise Rejected(e, "general recursion is outside the rec fragment")
        raise Rejected(e, f"unsupported arrow-typed expression {type(e).__name__}")


def check_ip(ctx, e) -> IpResult:
    """Inherent-polynomial-time judgment for ``e`` under ``ctx``.  Raises
    Rejected with the failing sub-expression."""
    info = typecheck(dict(ctx), e)
    ch = _Checker(info.var_types)
    env = {x: TimeClass.POLY for x, t in dict(ctx).items() if isinstance(t, Arrow)}
    if isinstance(info.type, Arrow):
        c = ch.arrow(env, e)
        return IpResult(frozenset(), ch.delta, c, ch.trace, ch.node_v, info.var_types)
    V = ch.poly(env, e)
    return IpResult(V, ch.delta, None, ch.trace, ch.node_v, info.var_types)


def check_program(p: Program) -> IpResult:
    return check_ip(dict(p.inputs), p.body)


def classify_arrow(e, ctx=None) -> TimeClass:
    """Const or Poly for an arrow-typed term; raises Rejected otherwise."""
    r = check_ip(ctx or {}, e)
    if r.time is None:
        raise ValueError("not an arrow-typed expression")
    return r.time


def check_assumption(e, result: IpResult) -> list:
    """Sharing and nested-list conditions; an empty list means clean."""
    out = []
    vt = result.var_types

    def go(e):
        if isinstance(e, Share) and not isinstance(vt.get(e.x), Arrow):
            V = result.node_v.get(id(e), frozenset())
            if e.x not in V:
                out.append(Violation("share", f"share on zero-potential variable {e.x}", e))
        if isinstance(e, (CaseList, Rec)):
            if list_nesting_depth(vt[e.scrut]) > 1:
                out.append(Violation("nested", f"nested list pattern match on {e.scrut}", e))
        for c in _children(e):
            go(c)

    go(e)
    return out


def _children(e):
    if isinstance(e, CaseSum):
        return (e.eL, e.eR)
    if isinstance(e, CaseList):
        return (e.eNil, e.eCons)
    if isinstance(e, Rec):
        return (e.eNil, e.eStep)
    if isinstance(e, Let):
        return (e.e1, e.e2)
    if isinstance(e, (CasePair, Share, Lambda, Fun)):
        return (e.body,)
    return ()


# ------------------------------------------------- declarative checker

def derives(ctx, e, V, delta=None) -> bool:
    """Does some derivation (weakening allowed anywhere) conclude
    ``e poly^V``?  Works top down from V, independently of check_ip.  For
    an arrow-typed ``e`` pass a TimeClass as ``V``."""
    info = typecheck(dict(ctx), e)
    vt = info.var_types
    memo = {}

    def arrow(x):
        return isinstance(vt.get(x), Arrow)

    def bfv(e):
        return frozenset(x for x in free_vars(e) if not arrow(x))

    def sub(V, old, new):
        if old in V:
            return (V - {old}) | set(new)
        return V

    def d(env, e, V):
        key = (id(e), V, tuple(sorted(env.items())))
        if key in memo:
            return memo[key]
        memo[key] = False
        r = rule(env, e, V)
        memo[key] = r
        return r

    def rule(env, e, V):
        # d is monotone in V, so each rule is checked with its premises at
        # the largest sets the conclusion V allows
        t = type(e)
        if t in (Var, Triv, Nil, Inl, Inr, Pair, Cons, Tick, Error):
            return True
        if t is App:
            return env[e.fvar] is TimeClass.CONST or e.argvar in V
        if t is CaseSum:
            return d(env, e.eL, sub(V, e.scrut, [e.yL])) and d(env, e.eR, sub(V, e.scrut, [e.yR]))
        if t is CasePair:
            return d(env, e.body, sub(V, e.scrut, [e.x1, e.x2]))
        if t is CaseList:
            return d(env, e.eNil, V - {e.scrut}) and d(env, e.eCons, sub(V, e.scrut, [e.x1, e.x2]))
        if t is Rec:
            if e.scrut not in V or bfv(e.eStep) - {e.y, e.ys, e.z}:
                return False
            return d(env, e.eNil, V - {e.scrut}) and d(env, e.eStep, frozenset({e.y, e.ys}))
        if t is Let:
            if arrow(e.x):
                return any(arr(env, e.e1, c) and d({**env, e.x: c}, e.e2, V)
                           for c in (TimeClass.CONST, TimeClass.POLY))
            if d(env, e.e1, V) and d(env, e.e2, V):
                return True
            return bfv(e.e1) <= V and d(env, e.e2, V | {e.x})
        if t is Share:
            if arrow(e.x):
                c = env[e.x]
                return d({**env, e.x1: c, e.x2: c}, e.body, V)
            return d(env, e.body, sub(V, e.x, [e.x1, e.x2]))
        return False

    def arr(env, e, c):
        if isinstance(e, Lambda):
            return d(env, e.body, frozenset({e.param}) if c is TimeClass.POLY else frozenset())
        if isinstance(e, Var):
            return env[e.name] <= c
        if isinstance(e, Let) and arrow(e.x):
            return any(arr(env, e.e1, c1) and arr({**env, e.x: c1}, e.e2, c)
                       for c1 in (TimeClass.CONST, TimeClass.POLY))
        if isinstance(e, Share):
            k = env[e.x]
            return arr({**env, e.x1: k, e.x2: k}, e.body, c)
        return False

    env = dict(delta or {})
    for x, t in dict(ctx).items():
        if isinstance(t, Arrow):
            env.setdefault(x, TimeClass.POLY)
    if isinstance(info.type, Arrow):
        return arr(env, e, TimeClass(V))
    return d(env, e, frozenset(V))
