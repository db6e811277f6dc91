"""Potential annotations and their algebra.

Univariate annotations attach a coefficient vector to every list type;
multivariate annotations are resource polynomials over a whole context.
The operations here are written over any coefficient type supporting
``+`` and scalar ``*``, so the same code manipulates concrete rationals and
LP templates.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb

from .evaluator import InlV, InrV, ListV, PairV, TrivV
from .syntax import ListT, ProdT, SumT, UnitT, fmt_rational


# ========================================================== univariate

def phi(n: int, q) -> Fraction:
    """Sum of q_i * C(n, i) for i = 1..len(q)."""
    return sum((Fraction(qi) * comb(n, i) for i, qi in enumerate(q, 1) if qi), Fraction(0))


def shift_uni(q):
    """Additive shift (q1+q2, ..., q_{k-1}+q_k, q_k)."""
    q = list(q)
    return tuple(q[i] + q[i + 1] for i in range(len(q) - 1)) + tuple(q[-1:])


@dataclass(frozen=True)
class AUnit:
    pass


@dataclass(frozen=True)
class ASum:
    left: object
    right: object


@dataclass(frozen=True)
class AProd:
    fst: object
    snd: object


@dataclass(frozen=True)
class AList:
    q: tuple
    elem: object


@dataclass(frozen=True)
class USig:
    """Annotated arrow <arg, q_in> -> <res, q_out>."""
    arg: object
    q_in: object
    res: object
    q_out: object


def erase(t):
    if isinstance(t, AUnit):
        return UnitT()
    if isinstance(t, ASum):
        return SumT(erase(t.left), erase(t.right))
    if isinstance(t, AProd):
        return ProdT(erase(t.fst), erase(t.snd))
    if isinstance(t, AList):
        return ListT(erase(t.elem))
    raise TypeError(t)


def annotate_uni(b, f):
    """Annotate base type ``b``; ``f(path)`` yields each list's vector."""
    def go(b, path):
        if isinstance(b, UnitT):
            return AUnit()
        if isinstance(b, SumT):
            return ASum(go(b.left, path + "l"), go(b.right, path + "r"))
        if isinstance(b, ProdT):
            return AProd(go(b.fst, path + "1"), go(b.snd, path + "2"))
        if isinstance(b, ListT):
            return AList(tuple(f(path)), go(b.elem, path + "e"))
        raise TypeError(b)
    return go(b, "")


def zero_uni(b, k=1):
    return annotate_uni(b, lambda _p: (Fraction(0),) * k)


def map_uni(t, f):
    """Apply ``f`` to every coefficient vector."""
    if isinstance(t, AUnit):
        return t
    if isinstance(t, ASum):
        return ASum(map_uni(t.left, f), map_uni(t.right, f))
    if isinstance(t, AProd):
        return AProd(map_uni(t.fst, f), map_uni(t.snd, f))
    if isinstance(t, AList):
        return AList(tuple(f(t.q)), map_uni(t.elem, f))
    raise TypeError(t)


def zip_uni(t1, t2, f):
    """Combine two annotations of the same shape vector by vector."""
    if isinstance(t1, AUnit):
        return t1
    if isinstance(t1, ASum):
        return ASum(zip_uni(t1.left, t2.left, f), zip_uni(t1.right, t2.right, f))
    if isinstance(t1, AProd):
        return AProd(zip_uni(t1.fst, t2.fst, f), zip_uni(t1.snd, t2.snd, f))
    if isinstance(t1, AList):
        return AList(tuple(f(t1.q, t2.q)), zip_uni(t1.elem, t2.elem, f))
    raise TypeError(t1)


def vectors(t):
    """All coefficient vectors of an annotation, outermost first."""
    if isinstance(t, ASum):
        return vectors(t.left) + vectors(t.right)
    if isinstance(t, AProd):
        return vectors(t.fst) + vectors(t.snd)
    if isinstance(t, AList):
        return [t.q] + vectors(t.elem)
    return []


def add_uni(t1, t2):
    return zip_uni(t1, t2, lambda a, b: [x + y for x, y in zip(a, b)])


def potential_uni(v, t) -> Fraction:
    """The potential stored in value ``v`` under annotation ``t``."""
    if isinstance(t, AUnit):
        if not isinstance(v, TrivV):
            raise ValueError("shape mismatch: expected unit")
        return Fraction(0)
    if isinstance(t, ASum):
        if isinstance(v, InlV):
            return potential_uni(v.v, t.left)
        if isinstance(v, InrV):
            return potential_uni(v.v, t.right)
        raise ValueError("shape mismatch: expected a sum")
    if isinstance(t, AProd):
        if not isinstance(v, PairV):
            raise ValueError("shape mismatch: expected a pair")
        return potential_uni(v.a, t.fst) + potential_uni(v.b, t.snd)
    if isinstance(t, AList):
        if not isinstance(v, ListV):
            raise ValueError("shape mismatch: expected a list")
        return sum((potential_uni(x, t.elem) for x in v.items), Fraction(0)) + phi(len(v.items), t.q)
    raise TypeError(t)


def _padded(*vs):
    k = max(len(v) for v in vs)
    return [tuple(Fraction(x) for x in v) + (Fraction(0),) * (k - len(v)) for v in vs]


def share_uni(t, t1, t2) -> bool:
    """Whether ``t`` splits into ``t1`` and ``t2``: every vector of ``t`` is
    the sum of the matching nonnegative vectors."""
    if not (erase(t) == erase(t1) == erase(t2)):
        return False
    for a, b, c in zip(vectors(t), vectors(t1), vectors(t2)):
        a, b, c = _padded(a, b, c)
        if any(y < 0 or z < 0 or x != y + z for x, y, z in zip(a, b, c)):
            return False
    return True


def subtype_uni(t1, t2) -> bool:
    """``t1 <: t2``: pointwise at least as much potential; arrows are
    contravariant in the argument.  Pairs ``(type, const)`` compare the
    constant too."""
    if isinstance(t1, USig):
        return (subtype_uni((t2.arg, t2.q_in), (t1.arg, t1.q_in))
                and subtype_uni((t1.res, t1.q_out), (t2.res, t2.q_out)))
    if isinstance(t1, tuple):
        (a, p), (b, q) = t1, t2
        return Fraction(p) >= Fraction(q) and subtype_uni(a, b)
    if erase(t1) != erase(t2):
        return False
    for u, w in zip(vectors(t1), vectors(t2)):
        u, w = _padded(u, w)
        if any(x < y for x, y in zip(u, w)):
            return False
    return True


def fmt_vec(q):
    return "(" + ",".join(fmt_rational(x) for x in q) + ")"


def fmt_uni(t) -> str:
    if isinstance(t, AUnit):
        return "unit"
    if isinstance(t, ASum):
        return f"({fmt_uni(t.left)} + {fmt_uni(t.right)})"
    if isinstance(t, AProd):
        return f"({fmt_uni(t.fst)} * {fmt_uni(t.snd)})"
    if isinstance(t, AList):
        return f"L^{fmt_vec(t.q)}({fmt_uni(t.elem)})"
    raise TypeError(t)


def fmt_usig(s: USig) -> str:
    return (f"<{fmt_uni(s.arg)}, {fmt_rational(s.q_in)}> -> "
            f"<{fmt_uni(s.res)}, {fmt_rational(s.q_out)}>")


def parse_uni(text):
    """Read ``L^(1,2)(unit)``-style annotated types."""
    from .parser import Parser
    p = Parser(text)

    def vec():
        p.expect("(")
        xs = [p.rational()]
        while p.at(","):
            p.next()
            xs.append(p.rational())
        p.expect(")")
        return tuple(xs)

    def typ():
        left = prod()
        if p.at("+"):
            p.next()
            return ASum(left, typ())
        return left

    def prod():
        left = atom()
        if p.at("*"):
            p.next()
            return AProd(left, prod())
        return left

    def atom():
        t = p.peek()
        if t[0] == "ident" and t[1] == "unit":
            p.next()
            return AUnit()
        if t[0] == "ident" and t[1] == "bool":
            p.next()
            return ASum(AUnit(), AUnit())
        if t[0] == "ident" and t[1] == "L":
            p.next()
            p.expect("^")
            q = vec()
            p.expect("(")
            inner = typ()
            p.expect(")")
            return AList(q, inner)
        if p.at("("):
            p.next()
            inner = typ()
            p.expect(")")
            return inner
        p.fail("expected an annotated type")

    t = typ()
    if p.peek()[0] != "eof":
        p.fail("trailing input after annotated type")
    return t


# ======================================================== multivariate

class Index:
    __slots__ = ()


class _Star(Index):
    __slots__ = ()
    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self):
        return "Star()"

    def __reduce__(self):
        return (_Star, ())


def Star():
    return STAR


STAR = _Star()


class IxInl(Index):
    __slots__ = ("i", "_h")

    def __init__(self, i):
        self.i = i
        self._h = hash(("l", i))

    def __eq__(self, o):
        return isinstance(o, IxInl) and self.i == o.i

    def __hash__(self):
        return self._h

    def __repr__(self):
        return f"IxInl({self.i!r})"


class IxInr(Index):
    __slots__ = ("i", "_h")

    def __init__(self, i):
        self.i = i
        self._h = hash(("r", i))

    def __eq__(self, o):
        return isinstance(o, IxInr) and self.i == o.i

    def __hash__(self):
        return self._h

    def __repr__(self):
        return f"IxInr({self.i!r})"


class IxPair(Index):
    __slots__ = ("a", "b", "_h")

    def __init__(self, a, b):
        self.a, self.b = a, b
        self._h = hash(("p", a, b))

    def __eq__(self, o):
        return isinstance(o, IxPair) and self.a == o.a and self.b == o.b

    def __hash__(self):
        return self._h

    def __repr__(self):
        return f"IxPair({self.a!r}, {self.b!r})"


class IxList(Index):
    __slots__ = ("items", "_h")

    def __init__(self, items=()):
        self.items = tuple(items)
        self._h = hash(("L",) + self.items)

    def __eq__(self, o):
        return isinstance(o, IxList) and self.items == o.items

    def __hash__(self):
        return self._h

    def __repr__(self):
        return f"IxList({list(self.items)!r})"


EMPTY = IxList(())


def zero_index(b) -> Index:
    """The index of the constant base polynomial 1."""
    if isinstance(b, (UnitT, SumT)):
        return STAR
    if isinstance(b, ProdT):
        return IxPair(zero_index(b.fst), zero_index(b.snd))
    if isinstance(b, ListT):
        return EMPTY
    raise TypeError(b)


def is_zero(i: Index) -> bool:
    if i is STAR:
        return True
    if isinstance(i, IxPair):
        return is_zero(i.a) and is_zero(i.b)
    if isinstance(i, IxList):
        return not i.items
    return False


def degree(i: Index) -> int:
    if i is STAR:
        return 0
    if isinstance(i, (IxInl, IxInr)):
        return degree(i.i)
    if isinstance(i, IxPair):
        return degree(i.a) + degree(i.b)
    if isinstance(i, IxList):
        return len(i.items) + sum(degree(j) for j in i.items)
    raise TypeError(i)


def ctx_degree(key) -> int:
    return sum(degree(i) for i in key)


@lru_cache(maxsize=None)
def _indexes_exact(b, d):
    """Indexes of ``b`` of degree exactly ``d``, in a canonical order."""
    if isinstance(b, UnitT):
        return (STAR,) if d == 0 else ()
    if isinstance(b, SumT):
        if d == 0:
            return (STAR,)
        return (tuple(IxInl(i) for i in _indexes_exact(b.left, d))
                + tuple(IxInr(i) for i in _indexes_exact(b.right, d)))
    if isinstance(b, ProdT):
        out = []
        for k in range(d + 1):
            for a in _indexes_exact(b.fst, k):
                for c in _indexes_exact(b.snd, d - k):
                    out.append(IxPair(a, c))
        return tuple(out)
    if isinstance(b, ListT):
        if d == 0:
            return (EMPTY,)
        out = []
        # first element has degree e >= 0 and costs e + 1
        for e in range(d):
            for head in _indexes_exact(b.elem, e):
                for tail in _indexes_exact(b, d - 1 - e):
                    out.append(IxList((head,) + tail.items))
        return tuple(out)
    raise TypeError(b)


def indexes_of(b, d: int):
    """All indexes of ``b`` with degree at most ``d`` (degree-major order)."""
    return [i for k in range(d + 1) for i in _indexes_exact(b, k)]


def indexes_exact(b, d: int):
    return list(_indexes_exact(b, d))


@lru_cache(maxsize=None)
def ctx_indexes(shape: tuple, d: int):
    """Index tuples for a context (tuple of base types) with total degree
    at most ``d``."""
    if not shape:
        return ((),)
    out = []
    for k in range(d + 1):
        out.extend(_ctx_exact(shape, k))
    return tuple(out)


@lru_cache(maxsize=None)
def _ctx_exact(shape, d):
    if not shape:
        return ((),) if d == 0 else ()
    out = []
    for k in range(d + 1):
        for i in _indexes_exact(shape[0], k):
            for rest in _ctx_exact(shape[1:], d - k):
                out.append((i,) + rest)
    return tuple(out)


def base_poly_eval(i: Index, v) -> int:
    """Value of the base polynomial named by ``i`` at ``v``."""
    if i is STAR:
        return 1
    if isinstance(i, IxInl):
        if isinstance(v, InlV):
            return base_poly_eval(i.i, v.v)
        if isinstance(v, InrV):
            return 0
        raise ValueError("shape mismatch: expected a sum")
    if isinstance(i, IxInr):
        if isinstance(v, InrV):
            return base_poly_eval(i.i, v.v)
        if isinstance(v, InlV):
            return 0
        raise ValueError("shape mismatch: expected a sum")
    if isinstance(i, IxPair):
        if not isinstance(v, PairV):
            raise ValueError("shape mismatch: expected a pair")
        return base_poly_eval(i.a, v.a) * base_poly_eval(i.b, v.b)
    if isinstance(i, IxList):
        if not isinstance(v, ListV):
            raise ValueError("shape mismatch: expected a list")
        k = len(i.items)
        if k == 0:
            return 1
        # ways[t] = weighted count of increasing choices for the first t indexes
        ways = [1] + [0] * k
        for x in v.items:
            for t in range(k, 0, -1):
                if ways[t - 1]:
                    w = base_poly_eval(i.items[t - 1], x)
                    if w:
                        ways[t] += ways[t - 1] * w
        return ways[k]
    raise TypeError(i)


class ResourcePoly:
    """A finitely supported map from context index tuples to coefficients.

    ``shape`` is the tuple of base types of the context (a single base type
    is a one-element context).  ``names`` optionally records the variables.
    """

    __slots__ = ("shape", "names", "coeffs", "degree")

    def __init__(self, shape, coeffs=None, names=None, degree=None):
        self.shape = tuple(shape)
        self.names = tuple(names) if names is not None else None
        self.coeffs = {k: Fraction(v) for k, v in (coeffs or {}).items() if v}
        self.degree = degree if degree is not None else max(
            (ctx_degree(k) for k in self.coeffs), default=0)
        for k in self.coeffs:
            if len(k) != len(self.shape):
                raise ValueError(f"index {k!r} does not match the context arity")

    def __getitem__(self, key):
        return self.coeffs.get(key, Fraction(0))

    def __eq__(self, o):
        return isinstance(o, ResourcePoly) and self.shape == o.shape and self.coeffs == o.coeffs

    def __repr__(self):
        return f"ResourcePoly({format_poly(self)})"

    def support(self):
        return sorted(self.coeffs, key=lambda k: key_sort(k))

    @classmethod
    def of_type(cls, b, coeffs=None, degree=None):
        return cls((b,), {(k if isinstance(k, tuple) else (k,)): v
                          for k, v in (coeffs or {}).items()}, degree=degree)


def key_sort(key):
    return (ctx_degree(key), fmt_key_plain(key))


def potential_multi(vals, P) -> Fraction:
    """Potential of a value tuple under ``P`` (a ResourcePoly or a dict)."""
    coeffs = P.coeffs if isinstance(P, ResourcePoly) else P
    vals = tuple(vals)
    total = Fraction(0)
    for key, c in coeffs.items():
        if not c:
            continue
        w = 1
        for i, v in zip(key, vals):
            w *= base_poly_eval(i, v)
            if not w:
                break
        if w:
            total += c * w
    return total


def _add(out, key, val):
    cur = out.get(key)
    out[key] = val if cur is None else cur + val


def shift_coeffs(coeffs: dict, pos: int, elem_type) -> dict:
    """Additive shift of the list at position ``pos``; the result has the
    head and the tail at positions ``pos`` and ``pos + 1``."""
    zero = zero_index(elem_type)
    out = {}
    for key, c in coeffs.items():
        lst = key[pos]
        pre, post = key[:pos], key[pos + 1:]
        _add(out, pre + (zero, lst) + post, c)
        if lst.items:
            _add(out, pre + (lst.items[0], IxList(lst.items[1:])) + post, c)
    return out


def shift_multi(P: ResourcePoly, pos: int = None) -> ResourcePoly:
    """◁P: the list at ``pos`` (default: last) becomes head and tail."""
    if pos is None:
        pos = len(P.shape) - 1
    lt = P.shape[pos]
    if not isinstance(lt, ListT):
        raise ValueError("shift needs a list position")
    shape = P.shape[:pos] + (lt.elem, lt) + P.shape[pos + 1:]
    names = None
    if P.names:
        names = P.names[:pos] + ("y", "ys") + P.names[pos + 1:]
    return ResourcePoly(shape, shift_coeffs(P.coeffs, pos, lt.elem), names, P.degree)


def project_coeffs(coeffs: dict, positions, j: tuple) -> dict:
    """Keep keys whose entries at ``positions`` equal ``j``; drop those."""
    positions = list(positions)
    pos_set = set(positions)
    out = {}
    for key, c in coeffs.items():
        if all(key[p] == jj for p, jj in zip(positions, j)):
            _add(out, tuple(x for n, x in enumerate(key) if n not in pos_set), c)
    return out


def project(P: ResourcePoly, j, positions=None) -> ResourcePoly:
    """π_j(P): fix the trailing (or given) positions to index tuple ``j``."""
    j = tuple(j) if isinstance(j, (tuple, list)) else (j,)
    if positions is None:
        positions = list(range(len(P.shape) - len(j), len(P.shape)))
    keep = [n for n in range(len(P.shape)) if n not in set(positions)]
    shape = tuple(P.shape[n] for n in keep)
    names = tuple(P.names[n] for n in keep) if P.names else None
    return ResourcePoly(shape, project_coeffs(P.coeffs, positions, j), names)


def extend(P: ResourcePoly, r, shape2) -> ResourcePoly:
    """η_r(P): place ``P`` at column ``r`` of the extra context ``shape2``."""
    r = tuple(r) if isinstance(r, (tuple, list)) else (r,)
    shape2 = tuple(shape2)
    return ResourcePoly(P.shape + shape2, {k + r: c for k, c in P.coeffs.items()})


@lru_cache(maxsize=None)
def index_product(a: Index, b: Index):
    """Expansion of the product of two base polynomials of the same type as
    a tuple of ``(index, multiplicity)``."""
    if a is STAR:
        return ((b, 1),)
    if b is STAR:
        return ((a, 1),)
    if isinstance(a, IxInl) or isinstance(a, IxInr):
        if type(a) is not type(b):
            return ()
        wrap = IxInl if isinstance(a, IxInl) else IxInr
        out = []
        for c, m in index_product(a.i, b.i):
            if is_zero(c):
                raise UnsupportedShape("product of sum indexes collapses to a constant")
            out.append((wrap(c), m))
        return tuple(out)
    if isinstance(a, IxPair):
        out = {}
        for c1, m1 in index_product(a.a, b.a):
            for c2, m2 in index_product(a.b, b.b):
                _add(out, IxPair(c1, c2), m1 * m2)
        return tuple(out.items())
    if isinstance(a, IxList):
        return tuple(_list_product(a.items, b.items).items())
    raise TypeError(a)


@lru_cache(maxsize=None)
def _list_product(A: tuple, B: tuple):
    """Merge two increasing selections: each position comes from A, from B
    or from both (then the element indexes multiply)."""
    if not A:
        return {IxList(B): 1}
    if not B:
        return {IxList(A): 1}
    out = {}
    a, b = A[0], B[0]
    for c, m in _list_product(A[1:], B).items():
        _add(out, IxList((a,) + c.items), m)
    for c, m in _list_product(A, B[1:]).items():
        _add(out, IxList((b,) + c.items), m)
    for e, me in index_product(a, b):
        for c, m in _list_product(A[1:], B[1:]).items():
            _add(out, IxList((e,) + c.items), me * m)
    return out


class UnsupportedShape(ValueError):
    pass


def share_coeffs(coeffs: dict, p1: int, p2: int) -> dict:
    """Merge positions ``p1`` and ``p2`` (same type) into position ``p1``;
    position ``p2`` disappears."""
    out = {}
    for key, c in coeffs.items():
        a, b = key[p1], key[p2]
        rest = [x for n, x in enumerate(key) if n != p2]
        for idx, m in index_product(a, b):
            k2 = list(rest)
            k2[p1 if p1 < p2 else p1 - 1] = idx
            _add(out, tuple(k2), c * m if m != 1 else c)
    return out


def share_multi(Q: ResourcePoly, p1=None, p2=None) -> ResourcePoly:
    """P with potential(P; ..., a) = potential(Q; ..., a, a).

    By default the last two positions of ``Q`` hold the two copies.
    """
    n = len(Q.shape)
    if p1 is None:
        p1, p2 = n - 2, n - 1
    if Q.shape[p1] != Q.shape[p2]:
        raise ValueError("shared positions must have the same type")
    shape = tuple(t for k, t in enumerate(Q.shape) if k != p2)
    return ResourcePoly(shape, share_coeffs(Q.coeffs, p1, p2))


# --------------------------------------------------------- uniformity

def is_uniform(Q: ResourcePoly, d: int, n) -> bool:
    """Degree at most d and every degree-d index carries coefficient n."""
    if len(Q.shape) != 1:
        return is_uniform_ctx(Q, d, n, set(), names=None)
    for key, c in Q.coeffs.items():
        if c and ctx_degree(key) > d:
            return False
    return all(Q[(i,)] == n for i in indexes_exact(Q.shape[0], d))


def is_uniform_ctx(P: ResourcePoly, d: int, n, V, names=None) -> bool:
    """The three per-variable conditions, for each variable outside ``V``."""
    names = list(names or P.names or [f"x{k}" for k in range(len(P.shape))])
    V = set(V)
    n = Fraction(n)
    for pos, v in enumerate(names):
        if v in V:
            continue
        for key, c in P.coeffs.items():
            if not c:
                continue
            dv = degree(key[pos])
            if dv > d:
                return False
            others_zero = all(is_zero(x) for k, x in enumerate(key) if k != pos)
            if dv == d and not others_zero:
                return False
        zero = tuple(zero_index(t) for t in P.shape)
        for i in indexes_exact(P.shape[pos], d):
            key = zero[:pos] + (i,) + zero[pos + 1:]
            if P[key] != n:
                return False
    return True


def has_zero_potential(P: ResourcePoly, pos: int) -> bool:
    """Every coefficient that involves a non-zero index at ``pos`` is 0."""
    return all(not c or is_zero(key[pos]) for key, c in P.coeffs.items())


def uniform_poly(b, d: int, n) -> ResourcePoly:
    """Coefficient n on every degree-d index of ``b``, nothing else."""
    return ResourcePoly((b,), {(i,): n for i in indexes_exact(b, d)}, degree=d)


# ---------------------------------------------------- binomial basis

def poly_to_binomial(d: int):
    """Coefficients with q0 + sum q_i C(n, i) = n^d.

    Uses n * C(n, i) = (i + 1) C(n, i + 1) + i C(n, i) repeatedly.
    """
    q = [Fraction(1)]  # q[i] pairs with C(n, i), index 0 is the constant
    for _ in range(d):
        r = [Fraction(0)] * (len(q) + 1)
        for i, c in enumerate(q):
            r[i + 1] += (i + 1) * c
            r[i] += i * c
        q = r
    return q[0], tuple(q[1:])


# ------------------------------------------------------ text formats

def fmt_index(i: Index, b=None) -> str:
    """Render an index; zero indexes print as ``*``."""
    if is_zero(i):
        return "*"
    if isinstance(i, IxInl):
        return f"inl({fmt_index(i.i, b.left if b else None)})"
    if isinstance(i, IxInr):
        return f"inr({fmt_index(i.i, b.right if b else None)})"
    if isinstance(i, IxPair):
        return (f"<{fmt_index(i.a, b.fst if b else None)},"
                f"{fmt_index(i.b, b.snd if b else None)}>")
    if isinstance(i, IxList):
        eb = b.elem if b else None
        return "[" + ",".join(fmt_index(j, eb) for j in i.items) + "]"
    raise TypeError(i)


def fmt_key(key, shape=None) -> str:
    if len(key) == 1:
        return fmt_index(key[0], shape[0] if shape else None)
    if all(is_zero(i) for i in key):
        return "*"
    return "<" + ",".join(fmt_index(i) for i in key) + ">"


def fmt_key_plain(key) -> str:
    return fmt_key(key)


def format_poly(P: ResourcePoly) -> str:
    items = [(k, c) for k, c in P.coeffs.items() if c]
    items.sort(key=lambda kc: key_sort(kc[0]))
    body = "; ".join(f"{fmt_key(k, P.shape)} : {fmt_rational(c)}" for k, c in items)
    return "P{ " + body + " }" if body else "P{ }"


def parse_index(p, b):
    """Read one index of type ``b`` from parser ``p``."""
    if p.at("*"):
        p.next()
        return zero_index(b)
    t = p.peek()
    if t[0] == "kw" and t[1] in ("inl", "inr") and isinstance(b, SumT):
        p.next()
        p.expect("(")
        inner = parse_index(p, b.left if t[1] == "inl" else b.right)
        p.expect(")")
        return IxInl(inner) if t[1] == "inl" else IxInr(inner)
    if p.at("<") and isinstance(b, ProdT):
        p.next()
        a = parse_index(p, b.fst)
        p.expect(",")
        c = parse_index(p, b.snd)
        p.expect(">")
        return IxPair(a, c)
    if p.at("[") and isinstance(b, ListT):
        p.next()
        items = []
        if not p.at("]"):
            items.append(parse_index(p, b.elem))
            while p.at(","):
                p.next()
                items.append(parse_index(p, b.elem))
        p.expect("]")
        return IxList(items)
    p.fail(f"index does not fit type {b}")


def parse_poly(text: str, shape) -> ResourcePoly:
    """Read ``P{ key : coeff; ... }`` for the context ``shape``."""
    from .parser import Parser
    shape = tuple(shape)
    p = Parser(text)
    t = p.peek()
    if t[0] == "ident" and t[1] in ("P", "Q"):
        p.next()
    p.expect("{")
    coeffs = {}
    while not p.at("}"):
        if len(shape) == 1:
            key = (parse_index(p, shape[0]),)
        elif p.at("*"):
            p.next()
            key = tuple(zero_index(b) for b in shape)
        else:
            p.expect("<")
            parts = [parse_index(p, shape[0])]
            for b in shape[1:]:
                p.expect(",")
                parts.append(parse_index(p, b))
            p.expect(">")
            key = tuple(parts)
        p.expect(":")
        c = p.rational()
        coeffs[key] = coeffs.get(key, Fraction(0)) + c
        if p.at(";"):
            p.next()
    p.expect("}")
    if p.peek()[0] != "eof":
        p.fail("trailing input after polynomial")
    return ResourcePoly(shape, coeffs)

