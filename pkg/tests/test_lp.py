from fractions import Fraction

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import linprog

from aara.lp import LinExpr, LpProblem, LpStatus, check, solve


def test_small_optimum():
    p = LpProblem()
    x, y = p.new_var("x"), p.new_var("y")
    p.ge(x + y, 2)
    p.ge(x - y, Fraction(1, 2))
    p.minimize(x * 3 + y)
    s = solve(p)
    assert s.status == LpStatus.OPTIMAL
    assert s.value(x) == Fraction(5, 4) and s.value(y) == Fraction(3, 4)
    assert s.objective == Fraction(9, 2)
    assert check(p, s.values)


def test_infeasible_and_unbounded():
    p = LpProblem()
    x = p.new_var()
    p.ge(x, 3)
    p.le(x, 2)
    assert solve(p).status == LpStatus.INFEASIBLE
    q = LpProblem()
    y = q.new_var()
    q.minimize(-y)
    assert solve(q).status == LpStatus.UNBOUNDED


def test_equalities():
    p = LpProblem()
    x, y, z = (p.new_var() for _ in range(3))
    p.eq(x + y + z, 10)
    p.eq(x - y, 0)
    p.minimize(z)
    s = solve(p)
    assert s.objective == 0 and s.value(x) == 5


def test_dump_is_one_constraint_per_line():
    p = LpProblem()
    x = p.new_var("x")
    p.ge(x, 1, "lower")
    text = p.dump()
    assert "c0: x0 >= 1  \\ lower" in text


ROW = st.lists(st.integers(-3, 3), min_size=3, max_size=3)


@settings(max_examples=300, deadline=None, database=None, derandomize=True)
@given(st.lists(st.tuples(ROW, st.integers(-5, 5), st.sampled_from([">=", "<=", "=="])),
                min_size=1, max_size=5),
       st.lists(st.integers(0, 4), min_size=3, max_size=3))
def test_agrees_with_floating_point_reference(rows, cost):
    """Exact optimum vs an independent floating-point solver."""
    p = LpProblem()
    xs = [p.new_var() for _ in range(3)]
    A_ub, b_ub, A_eq, b_eq = [], [], [], []
    for coefs, rhs, rel in rows:
        e = sum((x * c for x, c in zip(xs, coefs)), LinExpr())
        getattr(p, {">=": "ge", "<=": "le", "==": "eq"}[rel])(e, rhs)
        if rel == ">=":
            A_ub.append([-c for c in coefs]); b_ub.append(-rhs)
        elif rel == "<=":
            A_ub.append(coefs); b_ub.append(rhs)
        else:
            A_eq.append(coefs); b_eq.append(rhs)
    p.minimize(sum((x * c for x, c in zip(xs, cost)), LinExpr()))
    s = solve(p)
    ref = linprog(cost, A_ub=A_ub or None, b_ub=b_ub or None, A_eq=A_eq or None,
                  b_eq=b_eq or None, bounds=[(0, None)] * 3, method="highs")
    if ref.status == 2:
        assert s.status == LpStatus.INFEASIBLE
    else:
        assert ref.status == 0  # costs are nonnegative, so never unbounded
        assert s.status == LpStatus.OPTIMAL
        assert check(p, s.values)
        assert np.isclose(float(s.objective), ref.fun, atol=1e-7)
    again = solve(p)
    assert again.status == s.status and again.values == s.values
