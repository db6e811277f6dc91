from fractions import Fraction

import pytest

from conftest import load
from aara.cli import corpus_dir
from aara.evaluator import (
    TRIV, CostMetric, FuelExhausted, ListV, RuntimeAbort, bits_to_value, eval_expr,
    parse_value, unit_list,
)
from aara.parser import LetNormalError, ParseError, parse, parse_program, parse_type
from aara.prep import prepare
from aara.syntax import (
    CaseSum, Fun, ListT, ProdT, SumT, UnitT, pretty_program, subexprs,
)
from aara.typecheck import AffinityError, TypeError_, typecheck, typecheck_program
from aara.uni import random_inputs, run_measured

RT, TICK, FREE = CostMetric.RUNNING_TIME, CostMetric.TICK, CostMetric.COST_FREE
PROGRAMS = sorted(p.name for p in corpus_dir().glob("*.rml"))


# ------------------------------------------------------------ parser

@pytest.mark.parametrize("name", PROGRAMS)
def test_pretty_round_trip(name):
    p = load(name)
    again = parse_program(pretty_program(p))
    assert pretty_program(again) == pretty_program(p)


def test_parse_error_position():
    with pytest.raises(ParseError) as ex:
        parse_program("input x : L(unit);\ncase x { [] -> x | y :: -> x }")
    assert ex.value.line == 2 and ex.value.col > 0


def test_arguments_must_be_variables():
    with pytest.raises(LetNormalError):
        parse("fun f x = f [] ; f")


def test_if_sugar_puts_true_on_the_right():
    e = parse("input c : bool; if c then <> else <>")
    assert isinstance(e, CaseSum)


def test_curried_fun_takes_a_pair():
    e = parse("fun f a b = a; f")
    f = e.e1
    assert isinstance(f, Fun) and f.param.startswith("_")


def test_types():
    assert parse_type("L(unit * (unit + unit))") == ListT(ProdT(UnitT(), SumT(UnitT(), UnitT())))
    assert parse_type("bool") == SumT(UnitT(), UnitT())


# ------------------------------------------------------------ typing

def test_affinity_violation():
    with pytest.raises(AffinityError):
        typecheck({"x": UnitT()}, parse("<x, x>"))


def test_share_restores_affinity():
    info = typecheck({"x": UnitT()}, parse("share x as a, b in <a, b>"))
    assert info.type == ProdT(UnitT(), UnitT())


def test_type_mismatch():
    with pytest.raises(TypeError_):
        typecheck({"x": UnitT()}, parse("case x { [] -> x | y :: ys -> y }"))


@pytest.mark.parametrize("name", PROGRAMS)
def test_corpus_typechecks(name):
    typecheck_program(load(name))


# ------------------------------------------------------------ evaluation

def test_values_round_trip():
    for text in ["<>", "inl <>", "[<>, <>]", "<[], inr <>>"]:
        assert str(parse_value(text)) == text
    assert parse_value("0110", ListT(SumT(UnitT(), UnitT()))) == bits_to_value("0110")


def test_let_cost_is_additive():
    env = {"a": TRIV, "b": TRIV}
    _, c1 = eval_expr(env, parse("<a, b>"))
    _, c2 = eval_expr({}, parse("<>"))
    _, whole = eval_expr({"b": TRIV}, parse("let a = <> in <a, b>"))
    assert whole == 1 + c2 + c1


def test_tick_costs_by_metric():
    e = parse("let t = tick 3/2 in <>")
    assert eval_expr({}, e, TICK)[1] == Fraction(3, 2)
    assert eval_expr({}, e, FREE)[1] == 0
    assert eval_expr({}, e, RT)[1] == 1


def test_fuel_and_error():
    with pytest.raises(FuelExhausted):
        eval_expr({}, parse("fun f x = f x; let u = <> in f u"), fuel=1000)
    with pytest.raises(RuntimeAbort):
        eval_expr({}, parse("error"))


@pytest.mark.parametrize("name", PROGRAMS)
def test_metric_monotonicity_and_determinism(name):
    p = load(name)
    for values in random_inputs(p, 15, seed=3, max_len=8):
        v_rt, c_rt = run_measured(p, values, RT)
        v_t, c_t = run_measured(p, values, TICK)
        v_f, c_f = run_measured(p, values, FREE)
        assert v_rt == v_t == v_f
        assert c_f == 0 <= c_t
        assert run_measured(p, values, RT) == (v_rt, c_rt)


REC_PROGRAMS = [n for n in PROGRAMS if "rec " in (corpus_dir() / n).read_text()]


@pytest.mark.parametrize("name", REC_PROGRAMS)
def test_rec_matches_its_encoding(name):
    """Evaluating rec directly costs exactly what its encoding costs."""
    p = load(name)
    enc = prepare(p).program
    assert not any(type(e).__name__ == "Rec" for e in subexprs(enc.body))
    for values in random_inputs(p, 30, seed=11, max_len=10):
        for metric in (RT, TICK):
            assert run_measured(p, values, metric) == run_measured(enc, values, metric)


def test_doubling_step_duplicates_the_result():
    # with an empty base case the result stays empty; the step still appends z to itself
    p = load("doubling.rml")
    for n in range(6):
        v, _ = run_measured(p, (unit_list(n),), RT)
        assert v.items == ()


def test_rt_counts_applications():
    p = load("append.rml")
    v, cost = run_measured(p, (parse_value("<[<>, <>], [<>]>"),), RT)
    apps = 3  # two recursive calls plus the base-case call
    assert cost >= apps
    assert isinstance(v, ListV) and len(v.items) == 3
