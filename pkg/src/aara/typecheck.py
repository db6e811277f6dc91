"""Affine simple type checking for RaML-lite.

Types are inferred by first-order unification, so lambda parameters and
``fun`` definitions need no annotations.  Type variables that nothing
constrains default to ``unit``.  Affinity is checked afterwards on the
resolved types: base-type variables may occur at most once along any
evaluation path, while arrow-type variables (functions) may be reused.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .syntax import (
    App, Arrow, CaseList, CasePair, CaseSum, Cons, Error, Fun, Inl, Inr, Lambda,
    Let, ListT, Nil, Pair, ProdT, Program, Rec, Share, SumT, Tick, Triv, UNIT,
    Var, free_vars, fmt_type, is_base, pretty, subexprs,
)


class TypeError_(Exception):
    """Ill-typed program."""


# re-exported under the conventional name without clobbering the builtin
TypeCheckError = TypeError_


class AffinityError(TypeError_):
    """A base-type variable is used more than once without ``share``."""


class _TVar:
    __slots__ = ("id", "ref")
    counter = 0

    def __init__(self):
        _TVar.counter += 1
        self.id = _TVar.counter
        self.ref = None

    def __repr__(self):
        return f"?{self.id}"


def _resolve(t):
    while isinstance(t, _TVar) and t.ref is not None:
        t = t.ref
    return t


def _occurs(v, t):
    t = _resolve(t)
    if t is v:
        return True
    if isinstance(t, SumT):
        return _occurs(v, t.left) or _occurs(v, t.right)
    if isinstance(t, ProdT):
        return _occurs(v, t.fst) or _occurs(v, t.snd)
    if isinstance(t, ListT):
        return _occurs(v, t.elem)
    if isinstance(t, Arrow):
        return _occurs(v, t.dom) or _occurs(v, t.cod)
    return False


def _unify(a, b, where):
    a, b = _resolve(a), _resolve(b)
    if a is b:
        return
    if isinstance(a, _TVar):
        if _occurs(a, b):
            raise TypeError_(f"infinite type at {where}")
        a.ref = b
        return
    if isinstance(b, _TVar):
        _unify(b, a, where)
        return
    if type(a) is not type(b):
        raise TypeError_(f"type mismatch at {where}: {_show(a)} vs {_show(b)}")
    if isinstance(a, SumT):
        _unify(a.left, b.left, where)
        _unify(a.right, b.right, where)
    elif isinstance(a, ProdT):
        _unify(a.fst, b.fst, where)
        _unify(a.snd, b.snd, where)
    elif isinstance(a, ListT):
        _unify(a.elem, b.elem, where)
    elif isinstance(a, Arrow):
        _unify(a.dom, b.dom, where)
        _unify(a.cod, b.cod, where)


def _zonk(t):
    t = _resolve(t)
    if isinstance(t, _TVar):
        t.ref = UNIT
        return UNIT
    if isinstance(t, SumT):
        return SumT(_zonk(t.left), _zonk(t.right))
    if isinstance(t, ProdT):
        return ProdT(_zonk(t.fst), _zonk(t.snd))
    if isinstance(t, ListT):
        return ListT(_zonk(t.elem))
    if isinstance(t, Arrow):
        return Arrow(_zonk(t.dom), _zonk(t.cod))
    return t


def _show(t):
    t = _resolve(t)
    if isinstance(t, _TVar):
        return repr(t)
    if isinstance(t, SumT):
        return f"({_show(t.left)} + {_show(t.right)})"
    if isinstance(t, ProdT):
        return f"({_show(t.fst)} * {_show(t.snd)})"
    if isinstance(t, ListT):
        return f"L({_show(t.elem)})"
    if isinstance(t, Arrow):
        return f"{_show(t.dom)} -> {_show(t.cod)}"
    return str(t)


def _first_order(t):
    """True if no arrow occurs below the top level."""
    def no_arrow(t):
        if isinstance(t, Arrow):
            return False
        if isinstance(t, SumT):
            return no_arrow(t.left) and no_arrow(t.right)
        if isinstance(t, ProdT):
            return no_arrow(t.fst) and no_arrow(t.snd)
        if isinstance(t, ListT):
            return no_arrow(t.elem)
        return True
    if isinstance(t, Arrow):
        return no_arrow(t.dom) and no_arrow(t.cod)
    return no_arrow(t)


@dataclass
class TypeInfo:
    """Result of type checking: the program's type plus the type of every
    variable (names are unique) and of every sub-expression."""
    type: object
    var_types: dict = field(default_factory=dict)
    expr_types: dict = field(default_factory=dict)

    def of(self, e):
        return self.expr_types[id(e)]

    def is_arrow_var(self, name):
        return isinstance(self.var_types.get(name), Arrow)


class _Checker:
    def __init__(self):
        self.var_types = {}
        self.expr_types = {}
        self.nodes = []  # keep expressions alive so ids stay valid

    def bind(self, name, t):
        self.var_types[name] = t

    def lookup(self, env, name, e):
        if name not in env:
            raise TypeError_(f"unbound variable {name!r} in {pretty(e)!r}")
        return env[name]

    def infer(self, env, e):
        t = self._infer(env, e)
        self.expr_types[id(e)] = t
        self.nodes.append(e)
        return t

    def _infer(self, env, e):
        lk = lambda n: self.lookup(env, n, e)
        where = type(e).__name__
        if isinstance(e, Var):
            return lk(e.name)
        if isinstance(e, Triv):
            return UNIT
        if isinstance(e, Inl):
            return SumT(lk(e.var), _TVar())
        if isinstance(e, Inr):
            return SumT(_TVar(), lk(e.var))
        if isinstance(e, Pair):
            return ProdT(lk(e.x1), lk(e.x2))
        if isinstance(e, Nil):
            return ListT(_TVar())
        if isinstance(e, Cons):
            t = lk(e.x2)
            _unify(t, ListT(lk(e.x1)), where)
            return t
        if isinstance(e, Tick):
            return UNIT
        if isinstance(e, Error):
            return _TVar()
        if isinstance(e, CaseSum):
            a, b = _TVar(), _TVar()
            _unify(lk(e.scrut), SumT(a, b), where)
            self.bind(e.yL, a)
            self.bind(e.yR, b)
            tl = self.infer({**env, e.yL: a}, e.eL)
            tr = self.infer({**env, e.yR: b}, e.eR)
            _unify(tl, tr, where)
            return tl
        if isinstance(e, CasePair):
            a, b = _TVar(), _TVar()
            _unify(lk(e.scrut), ProdT(a, b), where)
            self.bind(e.x1, a)
            self.bind(e.x2, b)
            return self.infer({**env, e.x1: a, e.x2: b}, e.body)
        if isinstance(e, CaseList):
            a = _TVar()
            _unify(lk(e.scrut), ListT(a), where)
            t0 = self.infer(env, e.eNil)
            self.bind(e.x1, a)
            self.bind(e.x2, ListT(a))
            t1 = self.infer({**env, e.x1: a, e.x2: ListT(a)}, e.eCons)
            _unify(t0, t1, where)
            return t0
        if isinstance(e, Fun):
            a, b = _TVar(), _TVar()
            ft = Arrow(a, b)
            self.bind(e.fname, ft)
            self.bind(e.param, a)
            tb = self.infer({**env, e.fname: ft, e.param: a}, e.body)
            _unify(tb, b, where)
            return ft
        if isinstance(e, Lambda):
            a = e.paramType if e.paramType is not None else _TVar()
            self.bind(e.param, a)
            tb = self.infer({**env, e.param: a}, e.body)
            return Arrow(a, tb)
        if isinstance(e, App):
            b = _TVar()
            _unify(lk(e.fvar), Arrow(lk(e.argvar), b), where)
            return b
        if isinstance(e, Let):
            t1 = self.infer(env, e.e1)
            self.bind(e.x, t1)
            return self.infer({**env, e.x: t1}, e.e2)
        if isinstance(e, Share):
            t = lk(e.x)
            self.bind(e.x1, t)
            self.bind(e.x2, t)
            return self.infer({**env, e.x1: t, e.x2: t}, e.body)
        if isinstance(e, Rec):
            a = _TVar()
            _unify(lk(e.scrut), ListT(a), where)
            t0 = self.infer(env, e.eNil)
            self.bind(e.y, a)
            self.bind(e.ys, ListT(a))
            self.bind(e.z, t0)
            t1 = self.infer({**env, e.y: a, e.ys: ListT(a), e.z: t0}, e.eStep)
            _unify(t0, t1, where)
            return t0
        raise TypeError_(f"not an expression: {e!r}")


def _uses(e, arrow):
    """Occurrence counts of base-type variables; alternatives take the max."""
    def add(d, other):
        for k, v in other.items():
            d[k] = d.get(k, 0) + v
        return d

    def mx(a, b):
        out = dict(a)
        for k, v in b.items():
            out[k] = max(out.get(k, 0), v)
        return out

    def one(*names):
        d = {}
        for n in names:
            if n not in arrow:
                d[n] = d.get(n, 0) + 1
        return d

    if isinstance(e, Var):
        return one(e.name)
    if isinstance(e, (Inl, Inr)):
        return one(e.var)
    if isinstance(e, (Pair, Cons)):
        return one(e.x1, e.x2)
    if isinstance(e, App):
        return one(e.fvar, e.argvar)
    if isinstance(e, CaseSum):
        return add(one(e.scrut), mx(_uses(e.eL, arrow), _uses(e.eR, arrow)))
    if isinstance(e, CasePair):
        return add(one(e.scrut), _uses(e.body, arrow))
    if isinstance(e, CaseList):
        return add(one(e.scrut), mx(_uses(e.eNil, arrow), _uses(e.eCons, arrow)))
    if isinstance(e, (Fun, Lambda)):
        return _uses(e.body, arrow)
    if isinstance(e, Let):
        return add(_uses(e.e1, arrow), _uses(e.e2, arrow))
    if isinstance(e, Share):
        return add(one(e.x), _uses(e.body, arrow))
    if isinstance(e, Rec):
        return add(add(one(e.scrut), _uses(e.eNil, arrow)), _uses(e.eStep, arrow))
    return {}


def _check_structure(e, var_types):
    """Scoping conditions that depend on resolved types."""
    for s in subexprs(e):
        if isinstance(s, (Fun, Lambda)):
            bound = {s.param} | ({s.fname} if isinstance(s, Fun) else set())
            bad = [v for v in free_vars(s.body)
                   if v not in bound and not isinstance(var_types.get(v), Arrow)]
            if bad:
                raise TypeError_(
                    f"function body captures base-type variable(s) {', '.join(bad)}")
        elif isinstance(s, Rec):
            bad = [v for v in free_vars(s.eStep)
                   if v not in (s.y, s.ys, s.z) and not isinstance(var_types.get(v), Arrow)]
            if bad:
                raise TypeError_(
                    f"rec step may only mention {s.y}, {s.ys}, {s.z}; found {', '.join(bad)}")


def typecheck(ctx, e, expected=None) -> TypeInfo:
    """Infer the simple type of ``e`` under ``ctx`` (name -> type).

    Raises TypeCheckError or AffinityError.  Arrow types are first order,
    case branches and rec results must be base types, and function bodies
    see only their parameter plus other functions.
    """
    ctx = dict(ctx or {})
    chk = _Checker()
    for n, t in ctx.items():
        chk.bind(n, t)
    t = chk.infer(ctx, e)
    if expected is not None:
        _unify(t, expected, "program")
    var_types = {n: _zonk(v) for n, v in chk.var_types.items()}
    expr_types = {k: _zonk(v) for k, v in chk.expr_types.items()}
    for n, vt in var_types.items():
        if not _first_order(vt):
            raise TypeError_(f"variable {n!r} has higher-order type {fmt_type(vt)}")
    for s in chk.nodes:
        st = expr_types[id(s)]
        if not _first_order(st):
            raise TypeError_(f"higher-order type {fmt_type(st)} in {pretty(s)!r}")
        if isinstance(s, (CaseSum, CasePair, CaseList, Rec)) and not is_base(st):
            raise TypeError_("case and rec expressions must have base type")
    for s in chk.nodes:
        if isinstance(s, (Inl, Inr)):
            if not is_base(var_types.get(s.var, UNIT)):
                raise TypeError_("constructors take base-type values")
        elif isinstance(s, (Pair, Cons)):
            for v in (s.x1, s.x2):
                if not is_base(var_types[v]):
                    raise TypeError_("constructors take base-type values")
        elif isinstance(s, (CaseSum, CasePair, CaseList, Rec)):
            if not is_base(var_types[s.scrut]):
                raise TypeError_("cannot pattern match on a function")
        elif isinstance(s, App):
            if not isinstance(var_types[s.fvar], Arrow):
                raise TypeError_(f"{s.fvar} is not a function")
    _check_structure(e, var_types)
    arrow = {n for n, vt in var_types.items() if isinstance(vt, Arrow)}
    for n, c in _uses(e, arrow).items():
        if c > 1:
            raise AffinityError(f"variable {n!r} is used {c} times; use share to duplicate it")
    return TypeInfo(expr_types[id(e)], var_types, expr_types)


def typecheck_program(p: Program) -> TypeInfo:
    return typecheck(dict(p.inputs), p.body)
