from itertools import combinations

import pytest

from conftest import load
from aara.ip import Rejected, TimeClass, check_assumption, check_ip, check_program, classify_arrow, derives
from aara.parser import parse
from aara.syntax import ListT, UnitT
from aara.typecheck import TypeError_

UL = ListT(UnitT())

INPUT_PROGRAMS = ["append_rec.rml", "triangle.rml", "pathological_share.rml", "nested_case.rml"]


@pytest.mark.parametrize("name,V", [
    ("append_rec.rml", {"l1"}), ("triangle.rml", {"x"}),
    ("pathological_share.rml", {"x"}), ("nested_case.rml", set()),
])
def test_recursion_variables(name, V):
    assert check_program(load(name)).V == frozenset(V)


@pytest.mark.parametrize("name", INPUT_PROGRAMS)
def test_result_is_derivable_and_minimal(name):
    p = load(name)
    ctx = dict(p.inputs)
    V = check_program(p).V
    assert derives(ctx, p.body, V)
    for k in range(len(V)):
        for smaller in combinations(sorted(V), k):
            assert not derives(ctx, p.body, frozenset(smaller))


def test_weakening_accepts_supersets():
    p = load("append_rec.rml")
    assert derives(dict(p.inputs), p.body, frozenset({"l1", "l2"}))


def test_lambda_append_is_poly_not_const():
    p = load("append_fn.rml")
    assert classify_arrow(p.body) == TimeClass.POLY
    assert derives({}, p.body, TimeClass.POLY)
    assert not derives({}, p.body, TimeClass.CONST)


def test_constant_time_lambda():
    e = parse("lambda (a : L(unit)) . case a { [] -> [] | y :: ys -> ys }")
    assert classify_arrow(e) == TimeClass.CONST


def test_step_using_recursive_result_is_rejected():
    with pytest.raises(Rejected) as ex:
        check_program(load("doubling.rml"))
    assert "recursive result z" in ex.value.reason


def test_general_recursion_is_outside_the_fragment():
    with pytest.raises(Rejected) as ex:
        check_program(load("append.rml"))
    assert "general recursion" in ex.value.reason


def test_step_cannot_iterate_over_outer_lists():
    # ruled out before the checker runs: a step sees only its own binders
    e = parse("rec x { [] -> [] | y :: ys with z -> rec l { [] -> z | a :: r with w -> w } }")
    with pytest.raises(TypeError_):
        check_ip({"x": UL, "l": UL}, e)


def test_clean_programs_have_no_violations():
    for name in ("append_rec.rml", "triangle.rml"):
        p = load(name)
        assert check_assumption(p.body, check_program(p)) == []


def test_share_violation_names_the_variable():
    p = load("pathological_share.rml")
    viol = check_assumption(p.body, check_program(p))
    assert {v.message.split()[-1] for v in viol if v.kind == "share"} == {"l", "z1"}
