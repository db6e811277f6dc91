from dataclasses import replace
from fractions import Fraction

import pytest

from conftest import load
from aara.evaluator import CostMetric, PairV, unit_list
from aara.potential import AList, AProd, AUnit, parse_uni
from aara.uni import (
    SoundnessViolation, Untypable, bound_for, check_uni, infer_uni, random_inputs,
    soundness_probe,
)

RT, TICK = CostMetric.RUNNING_TIME, CostMetric.TICK


@pytest.mark.parametrize("name,metric,d", [
    ("append.rml", TICK, 1), ("append.rml", RT, 1), ("append_rec.rml", RT, 1),
    ("quicksort.rml", TICK, 2), ("triangle.rml", RT, 2),
])
def test_inferred_typings_check(name, metric, d):
    p = load(name)
    j = infer_uni(p, metric, d).judgment
    assert check_uni(p, j)
    soundness_probe(p, j, random_inputs(p, 40, seed=1, max_len=12))


def test_reduced_annotation_is_rejected():
    p = load("quicksort.rml")
    j = infer_uni(p, TICK, 2).judgment
    arg = j.ctx[0][1]
    weaker = replace(arg, q=(arg.q[0], arg.q[1] - 1))
    assert not check_uni(p, replace(j, ctx=(("arg", weaker),)))


def test_append_tick_bound_is_exact():
    p = load("append.rml")
    j = infer_uni(p, TICK, 1).judgment
    rep = soundness_probe(p, j, random_inputs(p, 50, seed=2, max_len=15))
    assert rep.min_slack == 0 and not rep.violations


def test_probe_reports_violations():
    p = load("append.rml")
    j = infer_uni(p, TICK, 1).judgment
    cheap = replace(j, ctx=(("arg", AProd(AList((Fraction(1, 2),), AUnit()),
                                           AList((0,), AUnit()))),))
    inputs = [(PairV(unit_list(4), unit_list(1)),)]
    rep = soundness_probe(p, cheap, inputs, raise_on_violation=False)
    assert rep.violations and rep.min_slack == -2
    with pytest.raises(SoundnessViolation):
        soundness_probe(p, cheap, inputs)


def test_bound_for_inputs():
    p = load("append_rec.rml")
    j = infer_uni(p, RT, 1).judgment
    a, b = unit_list(3), unit_list(5)
    assert bound_for(j, (a, b)) == j.p + 3 * j.ctx[0][1].q[0] + 5 * j.ctx[1][1].q[0]


def test_degree_hint():
    with pytest.raises(Untypable) as ex:
        infer_uni(load("quicksort.rml"), TICK, 1, suggest=True)
    assert ex.value.suggestion == "feasible at degree 2"


def test_degree_must_be_positive():
    with pytest.raises(ValueError):
        infer_uni(load("append.rml"), RT, 0)


def test_over_degree_demand_is_untypable():
    demand = (parse_uni("L^(0,1)(unit)"), 0)
    with pytest.raises(Untypable):
        infer_uni(load("append_rec.rml"), RT, 1, required_output=demand)


def test_function_signatures_are_reported():
    j = infer_uni(load("quicksort.rml"), TICK, 2).judgment
    assert {"append", "split", "quicksort"} <= set(j.functions)
