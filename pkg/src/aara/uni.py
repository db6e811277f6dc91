"""Univariate polynomial resource analysis.

Constraint generation walks the program once per derivation, in checking
style: each judgment receives the potential available before the
expression (a linear expression over LP unknowns), the annotated result
type and the constant left afterwards.  Leaves emit the cost inequalities,
which also realises relaxation; subtyping is applied at every variable
use.

Recursive functions get one definition template per (metric, degree).
Every call site is typed at the definition template plus a cost-free
difference of strictly lower degree, which is derived separately with
monomorphic recursion.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from math import factorial

from .evaluator import (
    Closure, CostMetric, DEFAULT_FUEL, apply_closure, eval_expr, random_value,
)
from .lp import LinExpr, LpProblem, LpStatus, check, lin, solve
from .potential import (
    AList, AProd, ASum, AUnit, USig, annotate_uni, fmt_uni, fmt_usig, map_uni,
    potential_uni, shift_uni, vectors,
)
from .prep import prepare
from .syntax import (
    App, Arrow, CaseList, CasePair, CaseSum, Cons, Error, Fun, Inl, Inr, Lambda,
    Let, Nil, Pair, Program, Rec, Share, Tick, Triv, Var, fmt_rational,
    is_base,
)

ZERO = Fraction(0)

_RT = {Var: 1, Triv: 0, Inl: 2, Inr: 2, Pair: 3, Nil: 0, Cons: 3, Fun: 1,
       Lambda: 1, App: 1, CaseSum: 1, CasePair: 1, CaseList: 1, Let: 1,
       Share: 0, Tick: 0, Error: 0}


def rule_cost(metric, e) -> Fraction:
    """Constant cost the metric assigns to the rule for ``e``."""
    if metric is CostMetric.RUNNING_TIME:
        return Fraction(_RT[type(e)])
    if metric is CostMetric.TICK and isinstance(e, Tick):
        return Fraction(e.amount)
    return ZERO


class Untypable(Exception):
    def __init__(self, reason, suggestion=None):
        super().__init__(reason)
        self.reason = reason
        self.suggestion = suggestion


class SoundnessViolation(AssertionError):
    pass


def coefficient_weight(i: int) -> Fraction:
    """Objective weight of a degree-``i`` coefficient (0 is the constant)."""
    return Fraction(factorial(i) * 1000 ** i)


# ------------------------------------------------------------ templates

def _pad(v, k):
    v = tuple(v)
    return v + (ZERO,) * (k - len(v)) if len(v) < k else v


def _resize(t, k):
    """Annotation ``t`` with every vector padded or cut to length ``k``;
    cutting requires the dropped coefficients to be zero."""
    def f(v):
        v = tuple(v)
        if len(v) > k and any(Fraction(x) for x in v[k:]):
            raise ValueError(f"annotation exceeds degree {k}")
        return _pad(v[:k], k)
    return map_uni(t, f)


@dataclass(eq=False)
class FunDef:
    """An arrow-typed value known statically."""
    name: object  # None for a lambda
    param: str
    body: object
    arg_type: object
    res_type: object
    env: dict  # arrow variables visible at the definition
    defs: dict = field(default_factory=dict)  # (metric, degree) -> USig
    instances: list = field(default_factory=list)  # every USig derived

    @property
    def label(self):
        return self.name or "lambda"


@dataclass(frozen=True)
class _Mode:
    metric: CostMetric
    degree: int
    mono: tuple = ()  # (FunDef, USig) pairs: cost-free recursion targets

    def mono_sig(self, fd):
        for f, s in self.mono:
            if f is fd:
                return s
        return None


@dataclass
class TraceEntry:
    rule: str
    where: str
    metric: str
    degree: int
    first: int  # index range of the constraints this rule emitted
    last: int


class _Gen:
    def __init__(self, lp: LpProblem, info):
        self.lp = lp
        self.info = info
        self.var_types = info.var_types
        self.trace = []
        self.derivations = 0
        self.registry = []  # every FunDef created

    # -- templates
    def template(self, b, k, tag):
        lp = self.lp
        return annotate_uni(
            b, lambda path: tuple(lp.new_var(f"{tag}{path}.{i}") for i in range(1, k + 1)))

    def sig_template(self, fd, k, tag):
        return USig(self.template(fd.arg_type, k, f"{tag}.arg"), self.lp.new_var(f"{tag}.in"),
                    self.template(fd.res_type, k, f"{tag}.res"), self.lp.new_var(f"{tag}.out"))

    def sub(self, t1, t2, tag=""):
        """Constraints for ``t1 <: t2`` on base annotations."""
        for u, w in zip(vectors(t1), vectors(t2)):
            k = max(len(u), len(w))
            for x, y in zip(_pad(u, k), _pad(w, k)):
                self.lp.ge(x, y, tag)

    def relax(self, avail, p, k, tag=""):
        self.lp.ge(lin(avail) - p, k, tag)
        if isinstance(k, Fraction) and k < 0:
            self.lp.ge(avail, 0, tag)

    def record(self, rule, where, mode, first):
        self.trace.append(TraceEntry(rule, where, mode.metric.value, mode.degree,
                                     first, len(self.lp.constraints)))

    # -- function signatures
    def derive_body(self, fd, sig, mode):
        self.derivations += 1
        if self.derivations > 20000:
            raise Untypable("derivation limit reached")
        env = dict(fd.env)
        if fd.name is not None:
            env[fd.name] = fd
        env[fd.param] = sig.arg
        fd.instances.append((mode.metric, mode.degree, sig))
        self.gen(env, fd.body, sig.q_in, sig.res, sig.q_out, mode)

    def costfree_instance(self, fd, k):
        sig = self.sig_template(fd, k, f"{fd.label}#cf{k}.{len(fd.instances)}")
        if k == 0:
            # no list potential left: any zero-cost derivation relaxes
            self.lp.ge(sig.q_in, sig.q_out, f"{fd.label} cost-free degree 0")
            return sig
        self.derive_body(fd, sig, _Mode(CostMetric.COST_FREE, k, ((fd, sig),)))
        return sig

    def definition(self, fd, mode):
        key = (mode.metric, mode.degree)
        sig = fd.defs.get(key)
        if sig is None:
            sig = self.sig_template(fd, mode.degree, f"{fd.label}@{mode.degree}")
            fd.defs[key] = sig
            self.derive_body(fd, sig, mode)
        return sig

    def call_sig(self, fd, mode):
        if mode.metric is CostMetric.COST_FREE:
            s = mode.mono_sig(fd)
            if s is not None:
                return s
            return self.costfree_instance(fd, mode.degree)
        b = self.definition(fd, mode)
        d = self.costfree_instance(fd, mode.degree - 1)
        return USig(_zip_add(b.arg, d.arg), lin(b.q_in) + d.q_in,
                    _zip_add(b.res, d.res), lin(b.q_out) + d.q_out)

    # -- arrow-typed expressions
    def gen_arrow(self, env, e, avail, mode):
        """Resolve an arrow-typed expression; returns the FunDef and the
        potential left after evaluating it."""
        c = rule_cost(mode.metric, e) if not isinstance(e, (Let, Share)) else None
        if isinstance(e, (Fun, Lambda)):
            arrows = {k: v for k, v in env.items() if isinstance(v, FunDef)}
            t = self.var_types[e.param]
            body_t = self.info.of(e.body)
            fd = FunDef(e.fname if isinstance(e, Fun) else None, e.param, e.body, t, body_t, arrows)
            self.registry.append(fd)
            return fd, lin(avail) - c
        if isinstance(e, Var):
            return env[e.name], lin(avail) - c
        if isinstance(e, Let):
            k = rule_cost(mode.metric, e)
            if isinstance(self.var_types.get(e.x), Arrow):
                fd1, rem = self.gen_arrow(env, e.e1, lin(avail) - k, mode)
                return self.gen_arrow({**env, e.x: fd1}, e.e2, rem, mode)
            tx = self.template(self.var_types[e.x], mode.degree, f"{e.x}")
            px = self.lp.new_var(f"let {e.x}")
            self.gen(env, e.e1, lin(avail) - k, tx, px, mode)
            return self.gen_arrow({**env, e.x: tx}, e.e2, px, mode)
        if isinstance(e, Share):
            env2 = self.share_env(env, e, mode)
            return self.gen_arrow(env2, e.body, lin(avail) - rule_cost(mode.metric, e), mode)
        raise Untypable(f"unsupported arrow-typed expression {type(e).__name__}")

    def share_env(self, env, e, mode):
        a = env[e.x]
        if isinstance(a, FunDef):
            return {**env, e.x1: a, e.x2: a}
        t1 = self.template(self.var_types[e.x1], mode.degree, e.x1)
        t2 = _zip_sub(a, t1)
        for v in vectors(t2):
            for x in v:
                self.lp.ge(x, 0, f"share {e.x}")
        return {**env, e.x1: t1, e.x2: t2}

    # -- base-typed expressions
    def gen(self, env, e, avail, out, p, mode):
        lp = self.lp
        first = len(lp.constraints)
        t = type(e)
        c = rule_cost(mode.metric, e) if t is not Rec else ZERO
        if t is Var:
            self.sub(env[e.name], out, f"var {e.name}")
            self.relax(avail, p, c)
        elif t in (Triv, Nil, Tick):
            self.relax(avail, p, c)
        elif t is Inl:
            self.sub(env[e.var], out.left, "inl")
            self.relax(avail, p, c)
        elif t is Inr:
            self.sub(env[e.var], out.right, "inr")
            self.relax(avail, p, c)
        elif t is Pair:
            self.sub(env[e.x1], out.fst, "pair")
            self.sub(env[e.x2], out.snd, "pair")
            self.relax(avail, p, c)
        elif t is Cons:
            q1 = out.q[0] if out.q else ZERO
            self.relax(avail, p, lin(q1) + c, "cons")
            self.sub(env[e.x1], out.elem, "cons head")
            self.sub(env[e.x2], AList(shift_uni(out.q), out.elem), "cons tail")
        elif t is Error:
            lp.ge(avail, 0, "error")
        elif t is App:
            fd = env[e.fvar]
            s = self.call_sig(fd, mode)
            self.sub(env[e.argvar], s.arg, f"app {e.fvar}")
            self.sub(s.res, out, f"app {e.fvar} result")
            lp.ge(avail, lin(s.q_in) + c, f"app {e.fvar}")
            lp.ge(lin(avail) - p, lin(s.q_in) - s.q_out + c, f"app {e.fvar}")
        elif t is CaseSum:
            a = env[e.scrut]
            rest = lin(avail) - c
            self.gen({**env, e.yL: a.left}, e.eL, rest, out, p, mode)
            self.gen({**env, e.yR: a.right}, e.eR, rest, out, p, mode)
        elif t is CasePair:
            a = env[e.scrut]
            self.gen({**env, e.x1: a.fst, e.x2: a.snd}, e.body, lin(avail) - c, out, p, mode)
        elif t is CaseList:
            a = env[e.scrut]
            rest = lin(avail) - c
            self.gen(env, e.eNil, rest, out, p, mode)
            p1 = a.q[0] if a.q else ZERO
            tail = AList(shift_uni(a.q), a.elem)
            self.gen({**env, e.x1: a.elem, e.x2: tail}, e.eCons, rest + p1, out, p, mode)
        elif t is Let:
            if isinstance(self.var_types.get(e.x), Arrow):
                fd, rem = self.gen_arrow(env, e.e1, lin(avail) - c, mode)
                self.gen({**env, e.x: fd}, e.e2, rem, out, p, mode)
            else:
                tx = self.template(self.var_types[e.x], mode.degree, e.x)
                px = lp.new_var(f"let {e.x}")
                self.gen(env, e.e1, lin(avail) - c, tx, px, mode)
                self.gen({**env, e.x: tx}, e.e2, px, out, p, mode)
        elif t is Share:
            env2 = self.share_env(env, e, mode)
            self.gen(env2, e.body, lin(avail) - c, out, p, mode)
        elif t is Rec:
            raise ValueError("rec must be desugared before analysis")
        else:
            raise Untypable(f"unsupported expression {t.__name__} at base type")
        self.record(t.__name__, _where(e), mode, first)




def _where(e):
    if isinstance(e, (Var,)):
        return e.name
    if isinstance(e, App):
        return f"{e.fvar} {e.argvar}"
    for attr in ("scrut", "x", "var"):
        if hasattr(e, attr):
            return str(getattr(e, attr))
    return ""


def _zip_add(a, b):
    k = max(max((len(v) for v in vectors(a)), default=0), max((len(v) for v in vectors(b)), default=0))
    return _zip(a, b, k, lambda x, y: lin(x) + y)


def _zip_sub(a, b):
    k = max((len(v) for v in vectors(a)), default=0)
    return _zip(a, b, k, lambda x, y: lin(x) - y)


def _zip(a, b, k, f):
    if isinstance(a, AUnit):
        return a
    if isinstance(a, ASum):
        return ASum(_zip(a.left, b.left, k, f), _zip(a.right, b.right, k, f))
    if isinstance(a, AProd):
        return AProd(_zip(a.fst, b.fst, k, f), _zip(a.snd, b.snd, k, f))
    if isinstance(a, AList):
        return AList(tuple(f(x, y) for x, y in zip(_pad(a.q, k), _pad(b.q, k))),
                     _zip(a.elem, b.elem, k, f))
    raise TypeError(a)


# ------------------------------------------------------------ results

@dataclass
class UniJudgment:
    """A concrete univariate typing of a program.

    With declared inputs, ``ctx`` annotates them and ``p``/``q`` are the
    constants before and after.  A program without inputs must denote a
    function; then ``ctx`` holds the single argument annotation under the
    name ``arg`` and the judgment is the function's signature.
    """
    metric: CostMetric
    degree: int
    ctx: tuple  # (name, annotation)
    p: Fraction
    res: object
    q: Fraction
    function_mode: bool = False
    functions: dict = field(default_factory=dict)  # name -> USig

    @property
    def signature(self):
        if not self.function_mode:
            return None
        return USig(self.ctx[0][1], self.p, self.res, self.q)

    def fmt(self):
        if self.function_mode:
            return fmt_usig(self.signature)
        ctx = ", ".join(f"{n} : {fmt_uni(a)}" for n, a in self.ctx)
        return f"{ctx}; {fmt_rational(self.p)} |- <{fmt_uni(self.res)}, {fmt_rational(self.q)}>"


@dataclass
class UniResult:
    judgment: UniJudgment
    lp: LpProblem
    solution: object
    trace: list

    @property
    def objective(self):
        return self.solution.objective


def _build(program: Program, metric, d, pin=None, required_output=None):
    """Generate the constraint system.  ``pin`` is a UniJudgment whose
    context and output are imposed; otherwise inputs are free templates and
    the output is ``required_output`` (zero by default)."""
    prep = prepare(program)
    info = prep.info
    lp = LpProblem()
    g = _Gen(lp, info)
    mode = _Mode(metric, d)
    body = prep.program.body
    objective_terms = []
    if program.inputs:
        if not is_base(info.type):
            raise Untypable("a program with inputs must have base type")
        env = {}
        inputs = []
        for (n, b), k in zip(program.inputs, range(len(program.inputs))):
            if pin is not None:
                a = _resize(dict(pin.ctx)[n], d)
            else:
                a = g.template(b, d, f"in:{n}")
            env[n] = a
            inputs.append((n, a))
        p = pin.p if pin is not None else lp.new_var("in:const")
        out, q = _output(info.type, d, pin, required_output)
        g.gen(env, body, p, out, q, mode)
        fd = None
    else:
        if not isinstance(info.type, Arrow):
            raise Untypable("a program without inputs must denote a function")
        setup = lp.new_var("setup")
        fd, rem = g.gen_arrow({}, body, setup, mode)
        lp.ge(rem, 0, "setup")
        sig = g.call_sig(fd, mode)
        out, q = _output(info.type.cod, d, pin, required_output)
        g.sub(sig.res, out, "program result")
        lp.ge(sig.q_out, q, "program result")
        if pin is not None:
            a = _resize(pin.ctx[0][1], d)
            g.sub(a, sig.arg, "program argument")
            lp.ge(pin.p, sig.q_in, "program argument")
            inputs = [("arg", a)]
            p = pin.p
        else:
            inputs = [("arg", sig.arg)]
            p = sig.q_in
    for _n, a in inputs:
        for v in vectors(a):
            for i, x in enumerate(v, 1):
                objective_terms.append(lin(x) * coefficient_weight(i))
    objective_terms.append(lin(p))
    lp.minimize(sum(objective_terms, LinExpr()))
    return lp, g, inputs, p, out, q, fd


def _output(b, d, pin, required_output):
    if pin is not None:
        return _resize(pin.res, d), Fraction(pin.q)
    if required_output is not None:
        ann, q = required_output
        try:
            return _resize(ann, d), Fraction(q)
        except ValueError:
            # a demand above the degree cannot be met by any typing at d
            raise Untypable(f"required output exceeds degree {d}") from None
    return annotate_uni(b, lambda _p: (ZERO,) * d), ZERO


def _concrete(t, sol):
    return map_uni(t, lambda v: tuple(sol.value(x) for x in v))


def infer_uni(program: Program, metric=CostMetric.RUNNING_TIME, d=1,
              required_output=None, suggest=False) -> UniResult:
    """Infer a univariate typing of ``program`` at degree ``d``.

    ``required_output`` is an optional ``(annotation, constant)`` demanded
    of the result.  Raises Untypable when the constraints are infeasible.
    """
    if d < 1:
        raise ValueError("degree must be at least 1")
    lp, g, inputs, p, out, q, fd = _build(program, metric, d, None, required_output)
    sol = solve(lp)
    if sol.status != LpStatus.OPTIMAL:
        hint = None
        if suggest and d < 6:
            try:
                infer_uni(program, metric, d + 1, required_output)
                hint = f"feasible at degree {d + 1}"
            except Untypable:
                pass
        raise Untypable(f"LP {sol.status} at degree {d}", hint)
    assert check(lp, sol.values)
    functions = {}
    for fdef in g.registry:
        s = fdef.defs.get((metric, d))
        if s is not None and fdef.name is not None:
            functions[fdef.name] = USig(_concrete(s.arg, sol), sol.value(s.q_in),
                                        _concrete(s.res, sol), sol.value(s.q_out))
    j = UniJudgment(metric, d, tuple((n, _concrete(a, sol)) for n, a in inputs),
                    sol.value(p), _concrete(out, sol), sol.value(q),
                    function_mode=not program.inputs, functions=functions)
    return UniResult(j, lp, sol, g.trace)


def check_uni(program: Program, judgment: UniJudgment, metric=None) -> bool:
    """Whether ``judgment`` is derivable: its annotations are fixed and the
    remaining templates must admit a solution."""
    metric = metric or judgment.metric
    try:
        lp, *_ = _build(program, metric, judgment.degree, pin=judgment)
    except (Untypable, ValueError):
        return False
    lp.minimize(LinExpr())
    return solve(lp).status == LpStatus.OPTIMAL


@dataclass
class SoundnessReport:
    checked: int
    min_slack: Fraction
    violations: list


def bound_for(judgment: UniJudgment, values) -> Fraction:
    """p + Φ(inputs) for concrete input values (or the argument)."""
    pot = judgment.p
    for (n, a), v in zip(judgment.ctx, values):
        pot += potential_uni(v, a)
    return pot


def run_measured(program: Program, values, metric, fuel=DEFAULT_FUEL):
    """Evaluate the program on inputs (or apply it to one argument) and
    return ``(result, cost)``; applying charges the application rule."""
    if program.inputs:
        env = dict(zip(program.input_names(), values))
        return eval_expr(env, program.body, metric, fuel)
    f, _ = eval_expr({}, program.body, metric, fuel)
    if not isinstance(f, Closure):
        raise ValueError("program does not denote a function")
    v, cost = apply_closure(f, values[0], metric, fuel)
    return v, cost - rule_cost(metric, App("f", "x"))


def soundness_probe(program: Program, judgment: UniJudgment, inputs, metric=None,
                    raise_on_violation=True) -> SoundnessReport:
    """Evaluate on each input tuple and check cost <= p + Φ(in) - q - Φ(out)."""
    metric = metric or judgment.metric
    slack = None
    bad = []
    for values in inputs:
        values = tuple(values)
        v, cost = run_measured(program, values, metric)
        avail = bound_for(judgment, values) - judgment.q - potential_uni(v, judgment.res)
        s = avail - cost
        slack = s if slack is None else min(slack, s)
        if s < 0:
            bad.append((values, cost, avail))
    rep = SoundnessReport(len(inputs), slack if slack is not None else ZERO, bad)
    if bad and raise_on_violation:
        vals, cost, avail = bad[0]
        raise SoundnessViolation(
            f"cost {cost} exceeds bound {avail} on input {', '.join(map(str, vals))}")
    return rep


def random_inputs(program: Program, n, seed=0, max_len=30):
    """``n`` random input tuples of the program's input (or argument) types."""
    rng = random.Random(seed)
    if program.inputs:
        types = [b for _, b in program.inputs]
    else:
        prep = prepare(program)
        types = [prep.info.type.dom]
    return [tuple(random_value(b, rng, max_len) for b in types) for _ in range(n)]
