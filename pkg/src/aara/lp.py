"""Exact rational linear programming.

Unknowns are nonnegative.  ``solve`` runs a two-phase primal simplex on a
sparse tableau with exact rationals (gmpy2's ``mpq`` internally, ``Fraction``
at the interface).  Pricing is Dantzig's rule; after a run of degenerate
pivots it switches to Bland's rule, which cannot cycle.  Every choice is
made by position, so identical problems give identical solutions.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from gmpy2 import mpq

from .syntax import fmt_rational


class LinExpr:
    """Sum of rational multiples of variables plus a constant."""

    __slots__ = ("terms", "const")

    def __init__(self, terms=None, const=0):
        self.terms = terms if terms is not None else {}
        self.const = Fraction(const)

    @staticmethod
    def lift(x):
        return x if isinstance(x, LinExpr) else LinExpr(None, x)

    def copy(self):
        return LinExpr(dict(self.terms), self.const)

    def __add__(self, o):
        if not isinstance(o, LinExpr):
            if not o:
                return self
            return LinExpr(self.terms, self.const + o)
        if not o.terms:
            return LinExpr(self.terms, self.const + o.const) if o.const else self
        if not self.terms:
            return LinExpr(o.terms, self.const + o.const) if self.const else o
        t = dict(self.terms)
        for v, c in o.terms.items():
            n = t.get(v, 0) + c
            if n:
                t[v] = n
            else:
                t.pop(v, None)
        return LinExpr(t, self.const + o.const)

    __radd__ = __add__

    def __neg__(self):
        return LinExpr({v: -c for v, c in self.terms.items()}, -self.const)

    def __sub__(self, o):
        return self + (-LinExpr.lift(o))

    def __rsub__(self, o):
        return LinExpr.lift(o) + (-self)

    def __mul__(self, k):
        if isinstance(k, LinExpr):
            if k.terms:
                raise ValueError("nonlinear product")
            k = k.const
        k = Fraction(k)
        if k == 1:
            return self
        if not k:
            return LinExpr()
        return LinExpr({v: c * k for v, c in self.terms.items()}, self.const * k)

    __rmul__ = __mul__

    def is_const(self):
        return not self.terms

    def value(self, assignment):
        return self.const + sum((c * assignment.get(v, 0) for v, c in self.terms.items()), Fraction(0))

    def __repr__(self):
        return f"LinExpr({self.terms}, {self.const})"


def lin(x):
    return LinExpr.lift(x)


@dataclass
class Constraint:
    expr: LinExpr  # expr REL 0
    rel: str  # ">=", "<=", "=="
    tag: str = ""


class LpProblem:
    def __init__(self):
        self.var_tags = []
        self.constraints = []
        self.objective = LinExpr()

    # variables
    def new_var(self, tag="") -> LinExpr:
        vid = len(self.var_tags)
        self.var_tags.append(tag)
        return LinExpr({vid: Fraction(1)})

    @property
    def num_vars(self):
        return len(self.var_tags)

    # constraints
    def _add(self, e, rel, tag):
        e = lin(e)
        if rel != "==":
            sign = 1 if rel == ">=" else -1
            # nonnegative unknowns make a same-signed expression trivially true
            if sign * e.const >= 0 and all(sign * c >= 0 for c in e.terms.values()):
                return
        self.constraints.append(Constraint(e, rel, tag))

    def ge(self, a, b=0, tag=""):
        """a >= b"""
        self._add(lin(a) - lin(b), ">=", tag)

    def le(self, a, b=0, tag=""):
        self._add(lin(a) - lin(b), "<=", tag)

    def eq(self, a, b=0, tag=""):
        self._add(lin(a) - lin(b), "==", tag)

    def minimize(self, e):
        self.objective = lin(e)

    # output
    def dump(self) -> str:
        def fmt(e: LinExpr):
            parts = []
            for v in sorted(e.terms):
                c = e.terms[v]
                sign = "-" if c < 0 else "+"
                mag = abs(c)
                coef = "" if mag == 1 else fmt_rational(mag) + " "
                parts.append(f"{sign} {coef}x{v}")
            s = " ".join(parts)
            if s.startswith("+ "):
                s = s[2:]
            return s or "0"

        lines = ["\\ exact LP, all variables >= 0", "minimize"]
        obj = fmt(self.objective)
        if self.objective.const:
            obj += f" + {fmt_rational(self.objective.const)}"
        lines.append(f"  obj: {obj}")
        lines.append("subject to")
        for n, c in enumerate(self.constraints):
            rhs = fmt_rational(-c.expr.const)
            tag = f"  \\ {c.tag}" if c.tag else ""
            lines.append(f"  c{n}: {fmt(c.expr)} {c.rel} {rhs}{tag}")
        lines.append("variables")
        for v, t in enumerate(self.var_tags):
            lines.append(f"  x{v}: {t}")
        return "\n".join(lines) + "\n"


class LpStatus:
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


@dataclass
class LpSolution:
    status: str
    values: dict = field(default_factory=dict)
    objective: Fraction = Fraction(0)
    pivots: int = 0

    @property
    def ok(self):
        return self.status == LpStatus.OPTIMAL

    def value(self, e):
        if isinstance(e, LinExpr):
            return e.value(self.values)
        return Fraction(e)


def check(p: LpProblem, assignment) -> bool:
    """Exact satisfaction of every constraint and nonnegativity."""
    for v in range(p.num_vars):
        if assignment.get(v, 0) < 0:
            return False
    for c in p.constraints:
        x = c.expr.value(assignment)
        if c.rel == ">=" and x < 0:
            return False
        if c.rel == "<=" and x > 0:
            return False
        if c.rel == "==" and x != 0:
            return False
    return True


# ------------------------------------------------------------ presolve

class _Presolved:
    """Rows with a column that appears nowhere else can always be satisfied
    by that column alone when the objective does not charge for it; such
    rows and columns are removed and the column's value is restored after
    solving."""

    def __init__(self, rows, obj):
        self.rows = rows  # list of [terms(dict mpq), rel, rhs(mpq)]
        self.obj = obj
        self.postsolve = []  # (col, terms, rel, rhs, coef)

    def run(self):
        rows = self.rows
        alive = [True] * len(rows)
        col_rows = {}
        for r, (terms, _rel, _rhs) in enumerate(rows):
            for c in terms:
                col_rows.setdefault(c, set()).add(r)
        queue = [c for c, rs in col_rows.items() if len(rs) == 1]
        while queue:
            c = queue.pop()
            rs = col_rows.get(c)
            if not rs or len(rs) != 1 or self.obj.get(c, 0) > 0:
                continue
            r = next(iter(rs))
            terms, rel, rhs = rows[r]
            a = terms[c]
            # the column may grow without bound; does that satisfy the row?
            if rel == "==" or (rel == ">=" and a < 0) or (rel == "<=" and a > 0):
                continue
            if self.obj.get(c, 0) < 0:
                continue
            alive[r] = False
            self.postsolve.append((c, terms, rel, rhs, a))
            for c2 in terms:
                s = col_rows.get(c2)
                if s is not None:
                    s.discard(r)
                    if len(s) == 1:
                        queue.append(c2)
        kept = [rows[r] for r in range(len(rows)) if alive[r]]
        return kept

    def restore(self, x):
        for c, terms, rel, rhs, a in reversed(self.postsolve):
            rest = sum((v * x.get(k, 0) for k, v in terms.items() if k != c), mpq(0))
            need = (rhs - rest) / a  # a*x_c REL rhs - rest
            x[c] = need if need > 0 else mpq(0)
        return x


def solve(p: LpProblem, max_pivots=2_000_000) -> LpSolution:
    """Minimize ``p.objective`` subject to ``p``'s constraints, x >= 0."""
    rows = []
    for c in p.constraints:
        terms = {v: mpq(k.numerator, k.denominator) for v, k in c.expr.terms.items() if k}
        rhs = -mpq(c.expr.const.numerator, c.expr.const.denominator)
        rows.append([terms, c.rel, rhs])
    obj = {v: mpq(k.numerator, k.denominator) for v, k in p.objective.terms.items() if k}
    pre = _Presolved(rows, obj)
    rows = pre.run()
    status, x, pivots = _simplex(rows, obj, p.num_vars, max_pivots)
    if status != LpStatus.OPTIMAL:
        return LpSolution(status, pivots=pivots)
    x = pre.restore(x)
    values = {v: Fraction(int(x[v].numerator), int(x[v].denominator)) if v in x else Fraction(0)
              for v in range(p.num_vars)}
    sol = LpSolution(LpStatus.OPTIMAL, values, p.objective.value(values), pivots)
    return sol


def _simplex(rows, obj, nvars, max_pivots):
    """Two-phase simplex on ``rows`` (terms, rel, rhs)."""
    # standard form: every row gets rhs >= 0 and a basic column
    T = []  # tableau rows: dict col -> mpq
    b = []
    basis = []
    ncols = nvars
    artificial = set()
    for terms, rel, rhs in rows:
        terms = dict(terms)
        # a homogeneous >= row flips to <= so its slack can start basic
        if rhs < 0 or (rhs == 0 and rel == ">="):
            terms = {k: -v for k, v in terms.items()}
            rhs = -rhs
            rel = {">=": "<=", "<=": ">=", "==": "=="}[rel]
        if rel == "<=":
            s = ncols
            ncols += 1
            terms[s] = mpq(1)
            basic = s
        else:
            if rel == ">=":
                s = ncols
                ncols += 1
                terms[s] = mpq(-1)
            a = ncols
            ncols += 1
            terms[a] = mpq(1)
            artificial.add(a)
            basic = a
        T.append(terms)
        b.append(rhs)
        basis.append(basic)

    col_rows = {}
    for r, terms in enumerate(T):
        for c in terms:
            col_rows.setdefault(c, set()).add(r)

    state = _Tableau(T, b, basis, col_rows, ncols)
    pivots = 0
    if artificial:
        z = {}
        zc = mpq(0)
        for r, bc in enumerate(basis):
            if bc in artificial:
                for c, v in T[r].items():
                    if c not in artificial:
                        z[c] = z.get(c, 0) - v
                zc -= b[r]
        z = {c: v for c, v in z.items() if v}
        state.obj = z
        state.obj_const = zc
        res, n = state.optimize(max_pivots, blocked=set())
        pivots += n
        if res != LpStatus.OPTIMAL:
            return res, None, pivots
        if state.obj_const != 0:
            return LpStatus.INFEASIBLE, None, pivots
        # drive remaining zero-level artificials out of the basis
        for r in range(len(basis)):
            if basis[r] in artificial:
                row = T[r]
                pc = None
                for c in sorted(row):
                    if c not in artificial and row[c]:
                        pc = c
                        break
                if pc is not None:
                    state.pivot(r, pc)
                    pivots += 1
    # phase 2
    z = {c: v for c, v in obj.items() if v}
    zc = mpq(0)
    for r, bc in enumerate(basis):
        cb = obj.get(bc, 0) if bc < nvars else 0
        if cb:
            for c, v in T[r].items():
                if c != bc:
                    z[c] = z.get(c, 0) - cb * v
            zc -= cb * b[r]
            z.pop(bc, None)
    state.obj = {c: v for c, v in z.items() if v}
    state.obj_const = zc
    res, n = state.optimize(max_pivots, blocked=artificial)
    pivots += n
    if res != LpStatus.OPTIMAL:
        return res, None, pivots
    x = {}
    for r, bc in enumerate(basis):
        if bc < nvars and b[r]:
            x[bc] = b[r]
    return LpStatus.OPTIMAL, x, pivots


class _Tableau:
    def __init__(self, T, b, basis, col_rows, ncols):
        self.T, self.b, self.basis, self.col_rows = T, b, basis, col_rows
        self.ncols = ncols
        self.obj = {}
        self.obj_const = mpq(0)

    def pivot(self, pr, pc):
        T, b, col_rows = self.T, self.b, self.col_rows
        prow = T[pr]
        a = prow[pc]
        if a != 1:
            inv = 1 / a
            for c in prow:
                prow[c] *= inv
            b[pr] *= inv
        bp = b[pr]
        for r in list(col_rows[pc]):
            if r == pr:
                continue
            row = T[r]
            f = row[pc]
            for c, v in prow.items():
                nv = row.get(c, 0) - f * v
                if nv:
                    if c not in row:
                        col_rows.setdefault(c, set()).add(r)
                    row[c] = nv
                elif c in row:
                    del row[c]
                    col_rows[c].discard(r)
            b[r] -= f * bp
        f = self.obj.get(pc)
        if f:
            obj = self.obj
            for c, v in prow.items():
                nv = obj.get(c, 0) - f * v
                if nv:
                    obj[c] = nv
                else:
                    obj.pop(c, None)
            self.obj_const -= f * bp
        self.basis[pr] = pc

    def optimize(self, max_pivots, blocked):
        degenerate_run = 0
        n = 0
        T, b, basis, col_rows = self.T, self.b, self.basis, self.col_rows
        while True:
            obj = self.obj
            bland = degenerate_run > 50
            pc = None
            if bland:
                for c in sorted(obj):
                    if obj[c] < 0 and c not in blocked:
                        pc = c
                        break
            else:
                best = 0
                for c, v in obj.items():
                    if v < best and c not in blocked:
                        if v < best or (v == best and c < pc):
                            best, pc = v, c
            if pc is None:
                return LpStatus.OPTIMAL, n
            pr = None
            ratio = None
            for r in col_rows.get(pc, ()):
                a = T[r][pc]
                if a > 0:
                    q = b[r] / a
                    if ratio is None or q < ratio or (q == ratio and basis[r] < basis[pr]):
                        ratio, pr = q, r
            if pr is None:
                return LpStatus.UNBOUNDED, n
            degenerate_run = degenerate_run + 1 if ratio == 0 else 0
            self.pivot(pr, pc)
            n += 1
            if n > max_pivots:
                raise RuntimeError("pivot limit exceeded")
