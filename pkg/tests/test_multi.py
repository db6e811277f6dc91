import pytest

from conftest import load
from aara.evaluator import CostMetric, PairV, unit_list
from aara.multi import (
    MultiJudgment, check_multi, infer_multi, infer_with_output, multi_random_inputs,
    multi_soundness,
)
from aara.potential import STAR, IxList, parse_poly, potential_multi
from aara.syntax import ListT, ProdT, UnitT
from aara.uni import SoundnessViolation, Untypable, bound_for, infer_uni

RT, TICK, FREE = CostMetric.RUNNING_TIME, CostMetric.TICK, CostMetric.COST_FREE
UL = ListT(UnitT())
PAIR_OUT = parse_poly("P{ <[*],*> : 1; <*,[*]> : 1 }", (ProdT(UL, UL),))


@pytest.mark.parametrize("name,metric,d", [
    ("append.rml", TICK, 1), ("append_rec.rml", RT, 1), ("multiply.rml", RT, 2),
    ("quicksort.rml", TICK, 2), ("triangle.rml", RT, 2),
])
def test_inferred_typings_check(name, metric, d):
    p = load(name)
    j = infer_multi(p, metric, d).judgment
    assert check_multi(p, j)
    multi_soundness(p, j, multi_random_inputs(p, 40, seed=5, max_len=10))


@pytest.mark.parametrize("name,metric,d", [
    ("append.rml", TICK, 1), ("append_rec.rml", RT, 1), ("quicksort.rml", TICK, 2),
])
def test_multi_is_no_worse_than_uni(name, metric, d):
    # evaluated at every small input, the multivariate bound never exceeds the univariate one
    p = load(name)
    uj = infer_uni(p, metric, d).judgment
    mj = infer_multi(p, metric, d).judgment
    for vals in multi_random_inputs(p, 60, seed=9, max_len=8):
        assert potential_multi(vals, mj.P) <= bound_for(uj, vals)


def test_multiply_bound_is_bilinear():
    j = infer_multi(load("multiply.rml"), RT, 2).judgment
    for a in range(4):
        for b in range(4):
            pot = potential_multi((unit_list(a), unit_list(b)), j.P)
            assert pot <= 100 + 100 * a + 100 * a * b
    # the mixed term |l1|*|l2| is what the univariate analysis cannot express
    assert j.P[(IxList((STAR,)), IxList((STAR,)))] > 0


def test_pathological_sharing():
    p = load("pathological_share.rml")
    with pytest.raises(Untypable):
        infer_with_output(p, FREE, 1, PAIR_OUT)
    j = infer_with_output(p, FREE, 2, PAIR_OUT).judgment
    shape = (UL, UL)
    assert j.P.coeffs == parse_poly("P{ <*,[*]> : 2; <[*],[*]> : 1 }", shape).coeffs


def test_nested_match_needs_the_flag():
    p = load("nested_case.rml")
    infer_multi(p, RT, 1)
    with pytest.raises(Untypable):
        infer_multi(p, RT, 1, assumption1=True)


def test_doubling_has_no_polynomial_typing():
    for d in (1, 2, 3):
        with pytest.raises(Untypable):
            infer_multi(load("doubling.rml"), RT, d)


def test_pinned_judgment_is_rechecked():
    p = load("append.rml")
    shape = (ProdT(UL, UL),)
    good = MultiJudgment(TICK, 1, ("arg",), parse_poly("P{ <[*],*> : 1 }", shape),
                         parse_poly("P{ }", (UL,)), function_mode=True)
    bad = MultiJudgment(TICK, 1, ("arg",), parse_poly("P{ <*,[*]> : 1 }", shape),
                        parse_poly("P{ }", (UL,)), function_mode=True)
    assert check_multi(p, good)
    assert not check_multi(p, bad)
    with pytest.raises(SoundnessViolation):
        multi_soundness(p, bad, [(PairV(unit_list(3), unit_list(0)),)])
