from math import comb

import pytest

import oracles
from aara.evaluator import ListV, PairV, unit_list
from aara.potential import (
    EMPTY, STAR, IxList, IxPair, format_poly, fmt_uni,
    has_zero_potential, indexes_exact, indexes_of, is_uniform, is_uniform_ctx, parse_poly,
    parse_uni, phi, poly_to_binomial, potential_multi, potential_uni, share_uni, shift_uni,
    subtype_uni, uniform_poly,
)
from aara.syntax import ListT, ProdT, SumT, UnitT

UL = ListT(UnitT())


def test_phi_values():
    assert phi(5, (1, 2)) == 5 + 2 * 10
    assert phi(0, (3, 3)) == 0
    assert shift_uni((1, 2, 3)) == (3, 5, 3)


@pytest.mark.parametrize("d,expected", [
    (0, (1, ())), (1, (0, (1,))), (2, (0, (1, 2))), (3, (0, (1, 6, 6))),
])
def test_poly_to_binomial_known(d, expected):
    assert poly_to_binomial(d) == expected


def test_index_counts_match_binomials():
    # indexes of L(unit) of degree d: exactly one ([*] * d)
    for d in range(5):
        assert len(indexes_exact(UL, d)) == 1
    # a pair of unit lists has d + 1 indexes of degree d
    for d in range(5):
        assert len(indexes_exact(ProdT(UL, UL), d)) == d + 1


def test_nested_list_indexes():
    LL = ListT(UL)
    got = {repr(i) for i in indexes_exact(LL, 2)}
    # inner lists contribute through their own zero index []
    assert got == {repr(IxList((EMPTY, EMPTY))), repr(IxList((IxList((STAR,)),)))}


def test_uni_text_round_trip():
    for text in ["L^(1,2)(unit)", "(L^(1)(unit) * L^(0)(unit))", "L^(0)((unit + unit))"]:
        t = parse_uni(text)
        assert parse_uni(fmt_uni(t)) == t


def test_poly_text_round_trip():
    shape = (ProdT(UL, UL),)
    P = parse_poly("P{ <*,[*]> : 1; <[*],[*]> : 3/2 }", shape)
    assert parse_poly(format_poly(P), shape) == P
    assert P[(IxPair(EMPTY, IxList((STAR,))),)] == 1


def test_multivariate_potential_against_oracle():
    shape = (ProdT(UL, UL),)
    P = parse_poly("P{ * : 1; <[*],*> : 2; <[*],[*]> : 1; <*,[*,*]> : 4 }", shape)
    for a in range(5):
        for b in range(5):
            v = PairV(unit_list(a), unit_list(b))
            want = 1 + 2 * a + a * b + 4 * comb(b, 2)
            assert potential_multi((v,), P) == want == oracles.potential(P.coeffs, (v,))


def test_univariate_potential_against_oracle():
    t = parse_uni("L^(1,1)(L^(2)(unit))")
    v = ListV((unit_list(3), unit_list(0), unit_list(2)))
    assert potential_uni(v, t) == oracles.uni_potential(v, t) == 3 + 3 + 2 * 5


def test_share_and_subtype():
    t = parse_uni("L^(3,1)(unit)")
    assert share_uni(t, parse_uni("L^(1,1)(unit)"), parse_uni("L^(2,0)(unit)"))
    assert not share_uni(t, parse_uni("L^(2,1)(unit)"), parse_uni("L^(2,0)(unit)"))
    assert subtype_uni(t, parse_uni("L^(1,1)(unit)"))
    assert not subtype_uni(parse_uni("L^(1)(unit)"), parse_uni("L^(0,1)(unit)"))


def test_uniformity():
    Q = uniform_poly(UL, 2, 3)
    assert is_uniform(Q, 2, 3) and not is_uniform(Q, 2, 2)
    shape = (UL, UL)
    P = parse_poly("P{ <[*,*],[]> : 2; <[],[*]> : 5 }", shape)
    assert is_uniform_ctx(P, 2, 2, V={"y"}, names=["x", "y"])
    assert not is_uniform_ctx(P, 2, 2, V=set(), names=["x", "y"])
    assert has_zero_potential(parse_poly("P{ <[*],[]> : 1 }", shape), 1)
    assert not has_zero_potential(P, 1)


def test_degree_bounded_enumeration():
    idx = indexes_of(ProdT(UL, SumT(UnitT(), UnitT())), 2)
    assert idx[0] == IxPair(EMPTY, STAR)
