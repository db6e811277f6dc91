"""Human-readable bounds and structured analysis reports."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from itertools import combinations_with_replacement
from math import factorial

from .potential import (
    AList, AProd, ASum, AUnit, IxList, IxPair, ResourcePoly, USig,
    fmt_uni, format_poly, is_zero,
)
from .syntax import ListT, ProdT, fmt_rational

REPORT_FORMAT = "aara-report/1"


class _NoClosedForm(Exception):
    pass


# Polynomials in size variables: {exponent tuple: Fraction}

def _padd(a, b, k=Fraction(1)):
    out = dict(a)
    for m, c in b.items():
        out[m] = out.get(m, Fraction(0)) + k * c
        if not out[m]:
            del out[m]
    return out


def _pmul(a, b):
    out = {}
    for m1, c1 in a.items():
        for m2, c2 in b.items():
            m = tuple(x + y for x, y in zip(m1, m2))
            out[m] = out.get(m, Fraction(0)) + c1 * c2
    return {m: c for m, c in out.items() if c}


def _binom_poly(var, k, nvars):
    """C(x_var, k) as a polynomial."""
    p = {(0,) * nvars: Fraction(1)}
    for j in range(k):
        e = [0] * nvars
        e[var] = 1
        p = _pmul(p, {tuple(e): Fraction(1), (0,) * nvars: Fraction(-j)})
    return {m: c / factorial(k) for m, c in p.items()}


def _const(nvars, c=1):
    return {(0,) * nvars: Fraction(c)} if c else {}


# ------------------------------------------------------- leaves & sizes

def _list_leaves(b, name):
    """List-typed positions reachable through products, with display names."""
    if isinstance(b, ListT):
        return [name]
    if isinstance(b, ProdT):
        return _list_leaves(b.fst, f"{name}.1") + _list_leaves(b.snd, f"{name}.2")
    return []


def _uni_poly(a, leaves, it, nvars):
    if isinstance(a, AUnit):
        return {}
    if isinstance(a, AProd):
        return _padd(_uni_poly(a.fst, leaves, it, nvars), _uni_poly(a.snd, leaves, it, nvars))
    if isinstance(a, ASum):
        if _has_potential(a):
            raise _NoClosedForm
        return {}
    if isinstance(a, AList):
        if _has_potential(a.elem):
            raise _NoClosedForm
        v = next(it)
        out = {}
        for i, q in enumerate(a.q, 1):
            if q:
                out = _padd(out, _binom_poly(v, i, nvars), Fraction(q))
        return out
    raise _NoClosedForm


def _has_potential(a):
    if isinstance(a, AUnit):
        return False
    if isinstance(a, (AProd, ASum)):
        x, y = (a.fst, a.snd) if isinstance(a, AProd) else (a.left, a.right)
        return _has_potential(x) or _has_potential(y)
    if isinstance(a, AList):
        return any(a.q) or _has_potential(a.elem)
    return False


def _index_poly(i, b, it, nvars):
    """Polynomial of one index of base type ``b``; consumes one size
    variable per list leaf of ``b``."""
    if isinstance(b, ListT):
        v = next(it)
        if is_zero(i):
            return _const(nvars)
        if not isinstance(i, IxList) or not all(is_zero(x) for x in i.items):
            raise _NoClosedForm
        return _binom_poly(v, len(i.items), nvars)
    if isinstance(b, ProdT):
        if is_zero(i):
            list(_skip(b.fst, it))
            list(_skip(b.snd, it))
            return _const(nvars)
        if not isinstance(i, IxPair):
            raise _NoClosedForm
        return _pmul(_index_poly(i.a, b.fst, it, nvars), _index_poly(i.b, b.snd, it, nvars))
    if is_zero(i):
        return _const(nvars)
    raise _NoClosedForm


def _skip(b, it):
    if isinstance(b, ListT):
        yield next(it)
    elif isinstance(b, ProdT):
        yield from _skip(b.fst, it)
        yield from _skip(b.snd, it)


# ------------------------------------------------------- rendering

def _fmt_coef(c, body):
    if body == "":
        return fmt_rational(c)
    if c == 1:
        return body
    return f"{fmt_rational(c)}*{body}"


def _closed_form(poly, names):
    """Greedy split into c*(sum of some variables)^k terms, highest degree
    first; raises _NoClosedForm if a coefficient would be negative."""
    n = len(names)
    terms = []
    poly = dict(poly)
    while poly:
        k = max(sum(m) for m in poly)
        top = {m: c for m, c in poly.items() if sum(m) == k}
        if k == 0:
            c = top[(0,) * n]
            if c < 0:
                raise _NoClosedForm
            terms.append((0, c, ""))
            break
        vs = sorted({v for m in top for v in range(n) if m[v]})
        first = tuple(k if v == vs[0] else 0 for v in range(n))
        c = top.get(first, Fraction(0))
        cand = {}
        if c > 0:
            # c * (sum vs)^k expanded by multinomials
            for combo in combinations_with_replacement(vs, k):
                m = [0] * n
                for v in combo:
                    m[v] += 1
                cand[tuple(m)] = Fraction(0)
            for m in cand:
                coef = factorial(k)
                for e in m:
                    coef //= factorial(e)
                cand[m] = c * coef
        if cand and cand == top:
            base = "+".join(names[v] for v in vs)
            if len(vs) > 1:
                base = f"({base})"
            body = base if k == 1 else f"{base}^{k}"
            terms.append((k, c, body))
            poly = _padd(poly, cand, Fraction(-1))
            continue
        # no single power: emit the monomials of this degree
        for m in sorted(top, reverse=True):
            if top[m] < 0:
                raise _NoClosedForm
            body = "*".join(names[v] if e == 1 else f"{names[v]}^{e}"
                            for v, e in enumerate(m) if e)
            terms.append((k, top[m], body))
        poly = _padd(poly, top, Fraction(-1))
    if not terms:
        return "0"
    terms.sort(key=lambda t: t[0])
    return " + ".join(_fmt_coef(c, body) for _, c, body in terms)


def _raw_uni(a, names):
    """Binomial sum for annotations with no closed form.  Potential stored
    in list elements is shown as a sum over the elements."""
    parts = []
    it = iter(names)

    def go(a):
        if isinstance(a, AList):
            v = next(it, "n")
            for i, q in enumerate(a.q, 1):
                if q:
                    parts.append(_fmt_coef(q, f"C({v},{i})"))
            if _has_potential(a.elem):
                k = len(_ann_leaves(a.elem))
                inner = _raw_uni(a.elem, ["|e|"] if k == 1 else [f"|e.{j}|" for j in range(1, k + 1)])
                parts.append(f"sum[e in {v.strip('|')}]({' + '.join(inner)})")
        elif isinstance(a, AProd):
            go(a.fst)
            go(a.snd)
        elif isinstance(a, ASum) and _has_potential(a):
            raise _NoClosedForm
    go(a)
    return parts


def _ann_leaves(a):
    if isinstance(a, AList):
        return [a]
    if isinstance(a, AProd):
        return _ann_leaves(a.fst) + _ann_leaves(a.snd)
    return []


def render_bound(annotation, names, const=Fraction(0), shape=None) -> str:
    """Closed-form rendering of a potential.

    ``annotation`` is a univariate annotated type (or USig, whose argument
    side is used) or a multivariate ResourcePoly; ``names`` label the list
    leaves left to right.  Falls back to the raw binomial sum when no
    nonnegative closed form is found.
    """
    names = list(names)
    n = len(names)
    if isinstance(annotation, USig):
        const = annotation.q_in
        annotation = annotation.arg
    if isinstance(annotation, ResourcePoly):
        P = annotation
        try:
            poly = {}
            for key, c in P.coeffs.items():
                it = iter(range(n))
                term = _const(n)
                for i, b in zip(key, P.shape):
                    term = _pmul(term, _index_poly(i, b, it, n))
                poly = _padd(poly, term, c)
            poly = _padd(poly, _const(n, const))
            return _closed_form(poly, names)
        except (_NoClosedForm, StopIteration):
            return format_poly(P)
    try:
        poly = _padd(_uni_poly(annotation, names, iter(range(n)), n), _const(n, const))
        return _closed_form(poly, names)
    except (_NoClosedForm, StopIteration):
        pass
    try:
        parts = ([fmt_rational(const)] if const else []) + _raw_uni(annotation, names)
    except _NoClosedForm:
        return fmt_uni(annotation)
    return " + ".join(parts) if parts else fmt_uni(annotation)


def size_names(program_inputs=None, arg_type=None):
    """Display names ``|x|`` for the list leaves of the inputs (or of the
    argument of a function-mode program)."""
    if program_inputs:
        out = []
        for name, b in program_inputs:
            out += _list_leaves(b, name)
    else:
        out = _list_leaves(arg_type, "arg") if arg_type is not None else []
    return [f"|{x}|" for x in out]


# ------------------------------------------------------- reports

@dataclass
class AnalysisReport:
    program: str
    mode: str
    status: str
    degree: int | None = None
    metric: str | None = None
    signature: str | None = None
    bound: str | None = None
    reason: str | None = None
    details: dict = field(default_factory=dict)
    lp: dict | None = None
    timing: float | None = None
    format: str = REPORT_FORMAT

    def to_json(self, with_timing=False) -> str:
        d = asdict(self)
        if not with_timing:
            d.pop("timing")
        d = {k: v for k, v in d.items() if v is not None}
        return json.dumps(d, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text):
        d = json.loads(text)
        return cls(**d)

    def to_text(self) -> str:
        lines = [f"{self.program}: {self.mode} {self.status}"]
        if self.degree is not None:
            lines[0] += f" (degree {self.degree}, metric {self.metric})"
        if self.signature:
            lines.append(f"  type:  {self.signature}")
        if self.bound:
            lines.append(f"  bound: {self.bound}")
        if self.reason:
            lines.append(f"  reason: {self.reason}")
        for k, v in sorted(self.details.items()):
            if isinstance(v, list):
                for item in v:
                    lines.append(f"  {k}: {item}")
            else:
                lines.append(f"  {k}: {v}")
        if self.lp:
            lines.append("  lp: " + ", ".join(f"{k}={v}" for k, v in sorted(self.lp.items())))
        if self.timing is not None:
            lines.append(f"  time: {self.timing:.3f}s")
        return "\n".join(lines) + "\n"
