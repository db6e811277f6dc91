"""Multivariate polynomial resource analysis.

A judgment annotates the whole context of base-type variables with one
resource polynomial.  Generation is in checking style as in the
univariate analysis: each node gets the available polynomial over its
context (which is always exactly its free base variables, the rest having
been weakened away) and the polynomial demanded of its result.

Recursion follows a cascade: a call site of a function derived at degree
k uses that derivation plus a cost-free derivation at degree k-1, which in
turn does the same, down to degree 0 where only constants remain.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction

from .evaluator import CostMetric, random_value
from .lp import LinExpr, LpProblem, LpStatus, check, lin, solve
from .potential import (
    ResourcePoly, UnsupportedShape, ctx_degree, ctx_indexes, format_poly,
    is_zero, potential_multi, shift_coeffs, share_coeffs, zero_index, IxInl,
    IxInr, IxPair, STAR,
)
from .prep import prepare
from .syntax import (
    App, Arrow, CaseList, CasePair, CaseSum, Cons, Error, Fun, Inl, Inr, Lambda,
    Let, Nil, Pair, Program, Rec, Share, Tick, Triv, Var, free_vars,
    is_base, list_nesting_depth,
)
from .uni import FunDef, Untypable, coefficient_weight, rule_cost, run_measured, SoundnessViolation

ZERO = Fraction(0)


@dataclass(frozen=True)
class MSig:
    arg: dict  # (index,) -> coefficient over the argument type
    res: dict


@dataclass(frozen=True)
class _Mode:
    metric: CostMetric
    degree: int
    current: tuple = ()  # (FunDef, MSig) being derived in this mode
    assumption1: bool = False

    def sig_of(self, fd):
        for f, s in self.current:
            if f is fd:
                return s
        return None

    def costfree(self, k, current=()):
        return _Mode(CostMetric.COST_FREE, k, current, self.assumption1)


def _zero_key(shape):
    return tuple(zero_index(b) for b in shape)


def _get(Q, k):
    return Q.get(k, ZERO)


def _dict_add(a, b):
    out = dict(a)
    for k, v in b.items():
        out[k] = lin(out[k]) + v if k in out else v
    return out


class _MGen:
    def __init__(self, lp: LpProblem, info):
        self.lp = lp
        self.info = info
        self.var_types = info.var_types
        self.fv = {}
        self.registry = []
        self.derivations = 0

    def free_base(self, e):
        r = self.fv.get(id(e))
        if r is None:
            r = frozenset(x for x in free_vars(e) if not isinstance(self.var_types.get(x), Arrow))
            self.fv[id(e)] = r
        return r

    # -- templates
    def poly(self, shape, k, tag):
        lp = self.lp
        return {key: lp.new_var(f"{tag}{list(key)}") for key in ctx_indexes(tuple(shape), k)}

    def sig_template(self, fd, k, tag):
        return MSig(self.poly((fd.arg_type,), k, f"{tag}.arg"),
                    self.poly((fd.res_type,), k, f"{tag}.res"))

    def dominate(self, Q, P, shape, cost, tag=""):
        """Q pays for P plus ``cost`` taken from the constant."""
        z = _zero_key(shape)
        lp = self.lp
        for k in set(Q) | set(P):
            if k == z:
                continue
            lp.ge(_get(Q, k), _get(P, k), tag)
        lp.ge(lin(_get(Q, z)) - _get(P, z), cost, tag)
        if isinstance(cost, Fraction) and cost < 0:
            lp.ge(_get(Q, z), 0, tag)

    # -- contexts
    def weaken(self, names, shape, Q, keep):
        """Project away the variables not in ``keep`` (at their zero index)."""
        if all(n in keep for n in names):
            return names, shape, Q
        pos = [i for i, n in enumerate(names) if n in keep]
        drop = [(i, zero_index(shape[i])) for i, n in enumerate(names) if n not in keep]
        out = {}
        for k, c in Q.items():
            if all(k[i] == z for i, z in drop):
                out[tuple(k[i] for i in pos)] = c
        return tuple(names[i] for i in pos), tuple(shape[i] for i in pos), out

    @staticmethod
    def minus_const(Q, shape, c):
        if not c:
            return Q
        z = _zero_key(shape)
        out = dict(Q)
        out[z] = lin(_get(Q, z)) - c
        return out

    @staticmethod
    def restrict_degree(Q, k):
        return {key: c for key, c in Q.items() if ctx_degree(key) <= k}

    # -- functions
    def derive_body(self, fd, sig, mode):
        self.derivations += 1
        if self.derivations > 20000:
            raise Untypable("derivation limit reached")
        env = dict(fd.env)
        if fd.name is not None:
            env[fd.name] = fd
        self.gen(env, (fd.param,), (fd.arg_type,), sig.arg, fd.body, sig.res, mode)

    def cf_instance(self, fd, k, mode):
        sig = self.sig_template(fd, k, f"{fd.label}#cf{k}.{self.derivations}")
        if k == 0:
            self.lp.ge(sig.arg[(zero_index(fd.arg_type),)], sig.res[(zero_index(fd.res_type),)],
                       f"{fd.label} cost-free degree 0")
            return sig
        self.derive_body(fd, sig, mode.costfree(k, ((fd, sig),)))
        return sig

    def definition(self, fd, mode):
        key = (mode.metric, mode.degree, mode.assumption1)
        sig = fd.defs.get(key)
        if sig is None:
            sig = self.sig_template(fd, mode.degree, f"{fd.label}@{mode.degree}")
            fd.defs[key] = sig
            self.derive_body(fd, sig, _Mode(mode.metric, mode.degree, ((fd, sig),), mode.assumption1))
        return sig

    def call_sig(self, fd, mode):
        if mode.metric is CostMetric.COST_FREE:
            base = mode.sig_of(fd)
            if base is None:
                return self.cf_instance(fd, mode.degree, mode)
        else:
            base = self.definition(fd, mode)
        d = self.cf_instance(fd, mode.degree - 1, mode)
        return MSig(_dict_add(base.arg, d.arg), _dict_add(base.res, d.res))

    def make_fundef(self, env, e):
        arrows = {k: v for k, v in env.items() if isinstance(v, FunDef)}
        fd = FunDef(e.fname if isinstance(e, Fun) else None, e.param, e.body,
                    self.var_types[e.param], self.info.of(e.body), arrows)
        self.registry.append(fd)
        return fd

    def gen_arrow(self, env, names, shape, Q, e, mode):
        """Arrow-typed expression: returns the FunDef and what is left."""
        if isinstance(e, (Fun, Lambda)):
            return self.make_fundef(env, e), self.minus_const(Q, shape, rule_cost(mode.metric, e))
        if isinstance(e, Var):
            return env[e.name], self.minus_const(Q, shape, rule_cost(mode.metric, e))
        if isinstance(e, Let):
            Q = self.minus_const(Q, shape, rule_cost(mode.metric, e))
            if isinstance(self.var_types.get(e.x), Arrow):
                fd1, rest = self.gen_arrow(env, names, shape, Q, e.e1, mode)
                return self.gen_arrow({**env, e.x: fd1}, names, shape, rest, e.e2, mode)
            # functions capture no base values, so x is dead in e2
            self.gen(env, names, shape, Q, e.e1, {}, mode)
            return self.gen_arrow(env, (), (), {}, e.e2, mode)
        if isinstance(e, Share):
            fd = env[e.x]
            return self.gen_arrow({**env, e.x1: fd, e.x2: fd}, names, shape, Q, e.body, mode)
        raise Untypable(f"unsupported arrow-typed expression {type(e).__name__}")

    # -- the rules
    def gen(self, env, names, shape, Q, e, P, mode):
        keep = self.free_base(e)
        names, shape, Q = self.weaken(names, shape, Q, keep)
        t = type(e)
        c = rule_cost(mode.metric, e) if t is not Rec else ZERO
        rtype = self.info.of(e)
        lp = self.lp
        if t is Var:
            self.dominate(Q, P, shape, c, f"var {e.name}")
        elif t in (Triv, Nil, Tick):
            z = _zero_key(shape)
            lp.ge(lin(_get(Q, z)) - _get(P, (zero_index(rtype),)), c, t.__name__)
            if c < 0:
                lp.ge(_get(Q, z), 0)
        elif t in (Inl, Inr):
            wrap = IxInl if t is Inl else IxInr
            inner = rtype.left if t is Inl else rtype.right
            P2 = {}
            for key in ctx_indexes((inner,), mode.degree):
                i = key[0]
                P2[key] = _get(P, (STAR,)) if is_zero(i) else _get(P, (wrap(i),))
            self.dominate(Q, P2, shape, c, t.__name__)
        elif t is Pair:
            b1, b2 = self.var_types[e.x1], self.var_types[e.x2]
            P2 = {}
            for key in ctx_indexes((b1, b2), mode.degree):
                P2[key] = _get(P, (IxPair(key[0], key[1]),))
            if names != (e.x1, e.x2):
                P2 = {(k[1], k[0]): v for k, v in P2.items()}
            self.dominate(Q, P2, shape, c, "pair")
        elif t is Cons:
            P2 = shift_coeffs(P, 0, rtype.elem)
            if names != (e.x1, e.x2):
                P2 = {(k[1], k[0]): v for k, v in P2.items()}
            self.dominate(Q, P2, shape, c, "cons")
        elif t is Error:
            lp.ge(_get(Q, _zero_key(shape)), 0, "error")
        elif t is App:
            s = self.call_sig(env[e.fvar], mode)
            b = self.var_types[e.argvar]
            z, zb, zr = _zero_key(shape), (zero_index(b),), (zero_index(rtype),)
            for k in set(Q) | set(s.arg):
                if k != z:
                    lp.ge(_get(Q, k), _get(s.arg, k), f"app {e.fvar}")
            for k in set(P) | set(s.res):
                if k != zr:
                    lp.ge(_get(s.res, k), _get(P, k), f"app {e.fvar} result")
            q0 = _get(Q, z)
            lp.ge(q0, lin(_get(s.arg, zb)) + c, f"app {e.fvar}")
            lp.ge(lin(q0) - _get(P, zr), lin(_get(s.arg, zb)) - _get(s.res, zr) + c, f"app {e.fvar}")
        elif t is CaseSum:
            self.case_sum(env, names, shape, Q, e, P, mode, c)
        elif t is CasePair:
            pos = names.index(e.scrut)
            Q1 = {}
            for k, v in Q.items():
                i = k[pos]
                Q1[k[:pos] + (i.a, i.b) + k[pos + 1:]] = v
            b = shape[pos]
            n2 = names[:pos] + (e.x1, e.x2) + names[pos + 1:]
            s2 = shape[:pos] + (b.fst, b.snd) + shape[pos + 1:]
            self.gen(env, n2, s2, self.minus_const(Q1, s2, c), e.body, P, mode)
        elif t is CaseList:
            pos = names.index(e.scrut)
            lt = shape[pos]
            if list_nesting_depth(lt) > 1:
                if mode.assumption1:
                    raise Untypable("pattern match on a nested list is excluded under assumption1")
                if list_nesting_depth(lt) > 2:
                    raise Untypable("nested-list shift outside the supported fragment")
            n0, s0, Q0 = self.weaken(names, shape, Q, set(names) - {e.scrut})
            self.gen(env, n0, s0, self.minus_const(Q0, s0, c), e.eNil, P, mode)
            Q1 = shift_coeffs(Q, pos, lt.elem)
            n1 = names[:pos] + (e.x1, e.x2) + names[pos + 1:]
            s1 = shape[:pos] + (lt.elem, lt) + shape[pos + 1:]
            Q1 = self.restrict_degree(Q1, mode.degree)
            self.gen(env, n1, s1, self.minus_const(Q1, s1, c), e.eCons, P, mode)
        elif t is Let:
            self.let(env, names, shape, Q, e, P, mode, c)
        elif t is Share:
            a = env.get(e.x)
            if isinstance(a, FunDef) or isinstance(self.var_types.get(e.x), Arrow):
                self.gen({**env, e.x1: env[e.x], e.x2: env[e.x]}, names, shape,
                         self.minus_const(Q, shape, c), e.body, P, mode)
            else:
                self.share(env, names, shape, Q, e, P, mode, c)
        elif t is Rec:
            raise ValueError("rec must be desugared before analysis")
        else:
            raise Untypable(f"unsupported expression {t.__name__} at base type")

    def case_sum(self, env, names, shape, Q, e, P, mode, c):
        pos = names.index(e.scrut)
        st = shape[pos]
        for wrap, y, branch, bt in ((IxInl, e.yL, e.eL, st.left), (IxInr, e.yR, e.eR, st.right)):
            Qb = {}
            for key in ctx_indexes(shape[:pos] + (bt,) + shape[pos + 1:], mode.degree):
                i = key[pos]
                src = STAR if is_zero(i) else wrap(i)
                Qb[key] = _get(Q, key[:pos] + (src,) + key[pos + 1:])
            nb = names[:pos] + (y,) + names[pos + 1:]
            sb = shape[:pos] + (bt,) + shape[pos + 1:]
            self.gen(env, nb, sb, self.minus_const(Qb, sb, c), branch, P, mode)

    def share(self, env, names, shape, Q, e, P, mode, c):
        pos = names.index(e.x)
        b = shape[pos]
        n2 = names[:pos] + (e.x1, e.x2) + names[pos + 1:]
        s2 = shape[:pos] + (b, b) + shape[pos + 1:]
        P2 = self.poly(s2, mode.degree, f"share {e.x}")
        try:
            merged = share_coeffs(P2, pos, pos + 1)
        except UnsupportedShape as ex:
            raise Untypable(f"unsupported sharing shape: {ex}") from None
        for k in set(merged) | set(Q):
            self.lp.ge(_get(Q, k), _get(merged, k), f"share {e.x}")
        self.gen(env, n2, s2, self.minus_const(P2, s2, c), e.body, P, mode)

    def let(self, env, names, shape, Q, e, P, mode, c):
        Q = self.minus_const(Q, shape, c)
        if isinstance(self.var_types.get(e.x), Arrow):
            n1, s1, Q1 = self.weaken(names, shape, Q, self.free_base(e.e1))
            if n1:
                raise Untypable("arrow-typed let binding that consumes base values")
            fd, Qrest = self.gen_arrow(env, names, shape, Q, e.e1, mode)
            self.gen({**env, e.x: fd}, names, shape, Qrest, e.e2, P, mode)
            return
        g1 = self.free_base(e.e1)
        g2 = self.free_base(e.e2) - {e.x}
        pos1 = [i for i, n in enumerate(names) if n in g1]
        pos2 = [i for i, n in enumerate(names) if n in g2]
        n1 = tuple(names[i] for i in pos1)
        s1 = tuple(shape[i] for i in pos1)
        n2 = tuple(names[i] for i in pos2)
        s2 = tuple(shape[i] for i in pos2)
        bx = self.var_types[e.x]
        k = mode.degree
        R = self.poly((bx,) + s2, k, f"let {e.x}")
        # group Q by the Γ2 part
        by_j = {}
        for key, v in Q.items():
            if any(key[i] != zero_index(shape[i]) for i in range(len(names))
                   if i not in pos1 and i not in pos2):
                continue
            i1 = tuple(key[i] for i in pos1)
            j = tuple(key[i] for i in pos2)
            by_j.setdefault(j, {})[i1] = v
        zero2 = _zero_key(s2)
        zx = zero_index(bx)
        for j in ctx_indexes(s2, k):
            dj = ctx_degree(j)
            Qj = by_j.get(j, {})
            Rj = {(i[0],): R[i + j] for i in ctx_indexes((bx,), k - dj)}
            if j == zero2:
                self.gen(env, n1, s1, Qj, e.e1, Rj, mode)
            elif dj == k:
                self.lp.ge(_get(Qj, _zero_key(s1)), Rj[(zx,)], f"let {e.x} degree 0")
            else:
                self.gen(env, n1, s1, self.restrict_degree(Qj, k - dj), e.e1, Rj,
                         mode.costfree(k - dj))
        self.gen(env, (e.x,) + n2, (bx,) + s2, R, e.e2, P, mode)


# ------------------------------------------------------------ results

@dataclass
class MultiJudgment:
    """Concrete multivariate typing: ``P`` over the inputs (or the single
    argument in function mode) and ``Q`` over the result."""
    metric: CostMetric
    degree: int
    names: tuple
    P: ResourcePoly
    Q: ResourcePoly
    function_mode: bool = False
    functions: dict = field(default_factory=dict)

    def fmt(self):
        ctx = ", ".join(self.names)
        return f"{ctx}; {format_poly(self.P)} |- {format_poly(self.Q)}"


@dataclass
class MultiResult:
    judgment: MultiJudgment
    lp: LpProblem
    solution: object


def _fix(poly: ResourcePoly, shape):
    if tuple(poly.shape) != tuple(shape):
        raise ValueError("annotation does not match the context shape")
    return {k: v for k, v in poly.coeffs.items()}


def _build(program: Program, metric, d, pin=None, required_output=None, assumption1=False):
    prep = prepare(program)
    info = prep.info
    lp = LpProblem()
    g = _MGen(lp, info)
    mode = _Mode(metric, d, (), assumption1)
    body = prep.program.body
    if program.inputs:
        if not is_base(info.type):
            raise Untypable("a program with inputs must have base type")
        names = tuple(program.input_names())
        shape = tuple(b for _, b in program.inputs)
        rtype = info.type
        if pin is not None:
            Pin = _fix(pin.P, shape)
        else:
            Pin = g.poly(shape, d, "in")
        Qout = _out_poly(rtype, pin, required_output, d)
        g.gen({}, names, shape, Pin, body, Qout, mode)
    else:
        if not isinstance(info.type, Arrow):
            raise Untypable("a program without inputs must denote a function")
        names = ("arg",)
        shape = (info.type.dom,)
        rtype = info.type.cod
        fd, _ = g.gen_arrow({}, (), (), {(): lp.new_var("setup")}, body, mode)
        s = g.call_sig(fd, mode)
        Qout = _out_poly(rtype, pin, required_output, d)
        for k in set(s.res) | set(Qout):
            lp.ge(_get(s.res, k), _get(Qout, k), "program result")
        if pin is not None:
            Pin = _fix(pin.P, shape)
            for k in set(s.arg) | set(Pin):
                lp.ge(_get(Pin, k), _get(s.arg, k), "program argument")
        else:
            Pin = s.arg
    obj = LinExpr()
    for key, v in Pin.items():
        obj = obj + lin(v) * coefficient_weight(ctx_degree(key))
    lp.minimize(obj)
    return lp, g, names, shape, Pin, rtype, Qout


def _out_poly(rtype, pin, required_output, d):
    if pin is not None:
        return _fix(pin.Q, (rtype,))
    if required_output is not None:
        if required_output.degree > d:
            raise Untypable(f"required output exceeds degree {d}")
        return _fix(required_output, (rtype,))
    return {}


def _concrete(coeffs, sol, shape, names=None):
    return ResourcePoly(shape, {k: sol.value(v) for k, v in coeffs.items()}, names)


def infer_multi(program: Program, metric=CostMetric.RUNNING_TIME, d=1,
                required_output=None, assumption1=False) -> MultiResult:
    """Infer a multivariate typing at degree ``d``; the result polynomial is
    ``required_output`` (a ResourcePoly over the result type) or zero."""
    if d < 1:
        raise ValueError("degree must be at least 1")
    lp, g, names, shape, Pin, rtype, Qout = _build(program, metric, d, None,
                                                   required_output, assumption1)
    sol = solve(lp)
    if sol.status != LpStatus.OPTIMAL:
        raise Untypable(f"LP {sol.status} at degree {d}")
    assert check(lp, sol.values)
    functions = {}
    for fd in g.registry:
        s = fd.defs.get((metric, d, assumption1))
        if s is not None and fd.name is not None:
            functions[fd.name] = (_concrete(s.arg, sol, (fd.arg_type,)),
                                  _concrete(s.res, sol, (fd.res_type,)))
    j = MultiJudgment(metric, d, names, _concrete(Pin, sol, shape, names),
                      _concrete(Qout, sol, (rtype,)), not program.inputs, functions)
    return MultiResult(j, lp, sol)


def infer_with_output(program: Program, metric, d, Q: ResourcePoly, assumption1=False):
    """``infer_multi`` with the result annotation pinned to ``Q``."""
    return infer_multi(program, metric, d, required_output=Q, assumption1=assumption1)


def check_multi(program: Program, judgment: MultiJudgment, metric=None) -> bool:
    metric = metric or judgment.metric
    try:
        lp, *_ = _build(program, metric, judgment.degree, pin=judgment)
    except (Untypable, ValueError):
        return False
    lp.minimize(LinExpr())
    return solve(lp).status == LpStatus.OPTIMAL


def multi_soundness(program: Program, judgment: MultiJudgment, inputs, metric=None,
                    raise_on_violation=True):
    """Check cost <= Φ(in; P) - Φ(out; Q) on each input tuple; returns the
    smallest slack."""
    metric = metric or judgment.metric
    slack = None
    for values in inputs:
        values = tuple(values)
        v, cost = run_measured(program, values, metric)
        s = potential_multi(values, judgment.P) - potential_multi((v,), judgment.Q) - cost
        slack = s if slack is None else min(slack, s)
        if s < 0 and raise_on_violation:
            raise SoundnessViolation(f"cost {cost} exceeds bound on input {values}")
    return slack


def multi_random_inputs(program, n, seed=0, max_len=30):
    rng = random.Random(seed)
    if program.inputs:
        types = [b for _, b in program.inputs]
    else:
        types = [prepare(program).info.type.dom]
    return [tuple(random_value(b, rng, max_len) for b in types) for _ in range(n)]
