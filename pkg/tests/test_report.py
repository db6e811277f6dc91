from fractions import Fraction

import pytest

from aara.potential import USig, parse_poly, parse_uni
from aara.report import AnalysisReport, render_bound, size_names
from aara.syntax import ListT, ProdT, UnitT

UL = ListT(UnitT())


@pytest.mark.parametrize("ann,const,want", [
    ("L^(1,2)(unit)", 0, "n^2"),
    ("L^(1)(unit)", 3, "3 + n"),
    ("L^(0)(unit)", 0, "0"),
    ("L^(0)(unit)", 7, "7"),
])
def test_univariate_closed_forms(ann, const, want):
    assert render_bound(parse_uni(ann), ["n"], Fraction(const)) == want


def test_signature_uses_its_argument_and_constant():
    s = USig(parse_uni("L^(1,2)(unit)"), Fraction(2), parse_uni("L^(0)(unit)"), Fraction(0))
    assert render_bound(s, ["n"]) == "2 + n^2"


def test_multivariate_closed_form():
    P = parse_poly("P{ <*,[*]> : 1; <[*],*> : 2; <*,[*,*]> : 2; <[*,*],*> : 2; <[*],[*]> : 2 }",
                   (ProdT(UL, UL),))
    assert render_bound(P, ["|l1|", "|l2|"]) == "|l1| + (|l1|+|l2|)^2"


def test_nested_annotation_falls_back():
    assert render_bound(parse_uni("L^(1)(L^(2)(unit))"), ["|x|"]) == \
        "C(|x|,1) + sum[e in x](2*C(|e|,1))"
    pair = parse_uni("L^(0,1)((L^(2)(unit) * L^(1)(unit)))")
    assert render_bound(pair, ["|x|"]) == "C(|x|,2) + sum[e in x](2*C(|e.1|,1) + C(|e.2|,1))"
    with_sum = parse_uni("L^(1)((L^(0)(unit) + L^(1)(unit)))")
    assert render_bound(with_sum, ["|x|"]) == "L^(1)((L^(0)(unit) + L^(1)(unit)))"


def test_size_names():
    assert size_names([("l1", UL), ("l2", UL)]) == ["|l1|", "|l2|"]
    assert size_names(None, ProdT(UL, UL)) == ["|arg.1|", "|arg.2|"]
    assert size_names(None, None) == []


def test_json_round_trip_is_stable():
    r = AnalysisReport("p", "uni", "typable", degree=2, metric="tick", signature="s",
                       bound="n^2", details={"k": ["a", "b"]}, lp={"pivots": 3}, timing=0.5)
    text = r.to_json()
    assert "timing" not in text and '"format": "aara-report/1"' in text
    back = AnalysisReport.from_json(text)
    assert back.to_json() == text and back.timing is None
    assert '"timing": 0.5' in r.to_json(with_timing=True)


def test_text_rendering():
    r = AnalysisReport("p", "ip", "rejected", reason="why", details={"hint": "h"})
    assert r.to_text() == "p: ip rejected\n  reason: why\n  hint: h\n"
