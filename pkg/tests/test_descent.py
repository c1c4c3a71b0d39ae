import math
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from congruent_eta.arith import is_squarefree
from congruent_eta.curve import CurvePoint, add, is_torsion, naive_x_height, on_curve, scalar_mul
from congruent_eta.descent import (
    DescentQuadruple,
    NCountResult,
    count_N,
    decision_bound,
    enumerate_quadruples,
    point_to_quadruple,
    quadruple_to_point,
    quadruples_csv,
    quadruples_for_twists,
    quadruples_from_csv,
)
from congruent_eta.oracles import brute_force_points

QA = DescentQuadruple(-1, (5, 1, 1, 1), (1, 2, 3, 1))
QB = DescentQuadruple(1, (1, 5, 1, 1), (2, 1, 1, 3))


def test_quadruple_to_point_examples():
    assert quadruple_to_point(QA) == (5, CurvePoint(Fraction(-4, 5), Fraction(6, 25)))
    assert quadruple_to_point(QB) == (5, CurvePoint(Fraction(5, 4), Fraction(3, 8)))


def test_point_to_quadruple_examples():
    assert point_to_quadruple(5, CurvePoint(Fraction(-4, 5), Fraction(6, 25))) == QA
    assert point_to_quadruple(5, CurvePoint(Fraction(5, 4), Fraction(3, 8))) == QB


def test_scale_two_quadruple():
    # x = 5/3 on E_15: 5 - 3 = 2 and 5 + 3 = 8 both carry a 2.
    P = CurvePoint(Fraction(5, 3), Fraction(4, 9))
    assert on_curve(15, P)
    q = point_to_quadruple(15, P)
    assert q.d[2] == 2 and q.d[3] == 2 and q.scale == 2
    assert quadruple_to_point(q) == (15, P)
    assert q in list(enumerate_quadruples(10, d=15))


def test_invalid_quadruples_rejected():
    with pytest.raises(ValueError):
        quadruple_to_point(DescentQuadruple(-1, (5, 1, 1, 1), (1, 2, 3, 2)))
    with pytest.raises(ValueError):
        point_to_quadruple(5, CurvePoint(0, 0))
    with pytest.raises(ValueError):
        point_to_quadruple(5, CurvePoint(1, 1))


def test_enumerate_small_bound_d5():
    quads = list(enumerate_quadruples(10, d=5))
    assert QA in quads and QB in quads


def test_enumerate_d2_empty():
    assert list(enumerate_quadruples(1000, d=2)) == []


@pytest.mark.parametrize("d", [5, 6, 7, 14, 15, 21, 30, 34, 41])
def test_soundness_height_identity_roundtrip(d):
    quads = list(enumerate_quadruples(3000, d=d))
    assert quads
    for q in quads:
        assert q.violations() == []
        dd, P = quadruple_to_point(q)
        assert dd == d and on_curve(d, P) and not is_torsion(d, P) and P.y > 0
        assert naive_x_height(P) == pytest.approx(math.log(max(q.den, q.num)), abs=1e-12)
        assert point_to_quadruple(d, P) == q
        assert max(q.den, q.num) <= 3000


@given(st.sampled_from([(5, (Fraction(-4, 5), Fraction(6, 25))), (6, (Fraction(-1, 2), Fraction(1, 4)))]),
       st.integers(1, 4), st.sampled_from([(0, 0), (1, 0), (-1, 0), None]))
def test_point_roundtrip_recovers_abs_y(case, k, t):
    d, (x, y) = case
    P = scalar_mul(d, k, CurvePoint(x, y))
    if t is not None:
        P = add(d, P, CurvePoint(*t))
    q = point_to_quadruple(d, P)
    assert quadruple_to_point(q) == (d, CurvePoint(P.x, abs(P.y)))


def test_completeness_against_brute_force_small():
    ds = [1, 2, 3, 5, 6, 7, 13, 14, 15, 21, 22, 30, 34, 41]
    brute = brute_force_points(800, ds)
    desc = quadruples_for_twists(800, ds)
    for d in ds:
        assert {quadruple_to_point(q)[1] for q in desc[d]} == brute[d]


def test_d_range_matches_single_twists():
    merged = list(enumerate_quadruples(500, d_range=(1, 40)))
    singles = [q for d in range(1, 41) if is_squarefree(d) for q in enumerate_quadruples(500, d=d)]
    assert merged == sorted(singles, key=DescentQuadruple.sort_key)


def test_unfiltered_walk_matches_filtered():
    # The unfiltered coprime-pair walk and the per-twist grid must agree.
    allq = list(enumerate_quadruples(30))
    twists = sorted({q.twist for q in allq})
    per_d = quadruples_for_twists(30, twists)
    assert sorted(allq) == sorted(q for qs in per_d.values() for q in qs)


def test_quadruple_csv_roundtrip():
    quads = list(enumerate_quadruples(2000, d=15))
    text = quadruples_csv(quads, {"kind": "descent"})
    assert quadruples_from_csv(text) == quads


# -- N_{alpha, theta}(X) -------------------------------------------------------


@pytest.mark.parametrize("alpha, theta", [(0.3, 0.2), (0.72, 0.30996), (0.5, 0.25)])
def test_count_N_below_five_is_zero(alpha, theta):
    for X in range(1, 5):
        assert count_N(alpha, theta, X).count == 0


def test_count_N_monotone_in_alpha():
    counts = [count_N(a, 0.3, 500).count for a in (0.1, 0.3, 0.5, 0.72)]
    assert counts == sorted(counts)


def test_count_N_json_roundtrip():
    r = count_N(0.3, 0.2, 1000)
    assert r.count == 4
    assert [d for d, _ in r.contributing_d] == [21, 141, 669, 813]
    assert NCountResult.from_json(r.to_json()) == r


def test_count_N_rejects_bad_parameters():
    with pytest.raises(ValueError):
        count_N(0.0, 0.3, 100)
    with pytest.raises(ValueError):
        count_N(0.3, 0.3, 100, margin=1.0)


def test_decision_bound_covers_height_gap():
    # hhat <= (1/8 + alpha) log d must force H <= decision_bound(d, alpha).
    for d in (5, 101, 997):
        for alpha in (0.3, 0.72):
            T = (0.125 + alpha) * math.log(d)
            assert math.sqrt(2) * math.exp(2 * T) <= decision_bound(d, alpha)
