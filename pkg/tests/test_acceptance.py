"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest -v tests/test_acceptance.py``; the lines are repeated in
the terminal summary under "acceptance criteria".
"""

import json
import math
from fractions import Fraction

import mpmath
import pytest

from congruent_eta.arith import is_squarefree
from congruent_eta.curve import (
    INFINITY,
    CurvePoint,
    EtaStatus,
    add,
    canonical_height,
    double,
    eta,
    sub,
    torsion_points,
)
from congruent_eta.descent import count_N, quadruple_to_point, quadruples_for_twists
from congruent_eta.experiments import (
    Verdict,
    brute_force_count_N,
    congruent_proportion_detail,
    eta_table,
    eta_trend,
    theorem_arithmetic,
    tunnell_classify,
    verify_lemma_T,
)
from congruent_eta.oracles import brute_force_points
from congruent_eta.reports import fmt, to_csv
from congruent_eta.sieve import enumerate_T_arrays, mertens_window_sum, squarefree_progression_count

try:
    from conftest import ACCEPTANCE_LINES
except ImportError:  # run as a script
    ACCEPTANCE_LINES = []

OUTCOMES: dict[int, bool] = {}


def report(n: int, ok: bool, detail: str) -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {n}: {detail}"
    OUTCOMES[n] = ok
    ACCEPTANCE_LINES[:] = [x for x in ACCEPTANCE_LINES if f"] criterion {n}:" not in x]
    ACCEPTANCE_LINES.append(line)
    print(line)


# ---------------------------------------------------------------------------
# Shared runs (also reused by the determinism check)

LEMMA_T_GRID = [10**4, 10**5, 10**6, 10**7]
COMPLETENESS_DS = [d for d in range(1, 51) if is_squarefree(d)]
COMPLETENESS_HEIGHT = 10**4
N_PARAMS = [(a, t) for a in (0.3, 0.72) for t in (0.2, 0.30996)]
N_GRID = [1, 4, 5, 10, 20, 50, 100, 200, 500, 1000]


def lemma_t_output(workers: int) -> str:
    return verify_lemma_T(0.3, LEMMA_T_GRID, workers=workers).to_csv()


def completeness_output(workers: int) -> str:
    brute = brute_force_points(COMPLETENESS_HEIGHT, COMPLETENESS_DS, workers)
    desc = quadruples_for_twists(COMPLETENESS_HEIGHT, COMPLETENESS_DS, workers)
    rows = []
    for d in COMPLETENESS_DS:
        mapped = {quadruple_to_point(q)[1] for q in desc[d]}
        for P in sorted(brute[d] | mapped, key=lambda P: (P.x, P.y)):
            rows.append((d, P.x, P.y, P in brute[d], P in mapped))
    return to_csv(("d", "x", "y", "brute_force", "descent"), rows)


def count_n_output(workers: int) -> str:
    lines = []
    for a, t in N_PARAMS:
        for X in N_GRID:
            lines.append(json.dumps(count_N(a, t, X, workers=workers).to_json(), sort_keys=True))
    return "\n".join(lines) + "\n"


@pytest.fixture(scope="module")
def completeness_w1():
    return completeness_output(1)


@pytest.fixture(scope="module")
def count_n_w1():
    return count_n_output(1)


@pytest.fixture(scope="module")
def eta_rows():
    return eta_table(200, 10**4, 1e-10)


# ---------------------------------------------------------------------------


def test_criterion_01_theorem_arithmetic():
    r = theorem_arithmetic(0.30996, 0.72)
    with mpmath.workdps(30):
        in_window = 1 < r.proportion_sum < mpmath.mpf("1.0001")
    ok = (
        r.exponent == Fraction("0.845")
        and r.constraint_value == Fraction("0.87498")
        and r.constraint_ok
        and in_window
    )
    report(1, ok, f"exponent={r.exponent} constraint={float(r.constraint_value)} "
                  f"proportion_sum={mpmath.nstr(r.proportion_sum, 20)}")
    assert ok


def test_criterion_02_lemma_t_convergence():
    rep = verify_lemma_T(0.3, LEMMA_T_GRID)
    rel = [r.rel_error for r in rep.rows]
    fits = [r.abs_error * math.log(r.X) / r.X for r in rep.rows]
    decreasing = all(b < a for a, b in zip(rel, rel[1:]))
    final_ok = rel[-1] <= 0.20
    stable = max(fits) / min(fits) <= 2
    ok = decreasing and final_ok and stable
    report(2, ok, "rel_errors=[" + ", ".join(f"{e:.4f}" for e in rel) + f"] decreasing={decreasing} "
                  f"final<=0.20={final_ok} C=[{min(fits):.4f}, {max(fits):.4f}] stable={stable}")
    assert decreasing and stable
    assert final_ok, f"relative error at 1e7 is {rel[-1]:.4f} > 0.20"


def test_criterion_03_squarefree_progression():
    worst = 0.0
    for X in (10**4, 10**5, 10**6):
        dev = abs(squarefree_progression_count(X, 5, 8) - X / math.pi**2) / math.sqrt(X)
        worst = max(worst, dev)
    ok = worst <= 5
    report(3, ok, f"max |count - X/pi^2| / sqrt(X) = {worst:.4f} (limit 5)")
    assert ok


def test_criterion_04_mertens_window():
    target = -math.log(0.7)
    e4, e6, e8 = (abs(mertens_window_sum(X, 0.3) - target) for X in (10**4, 10**6, 10**8))
    ok = abs(mertens_window_sum(10**6, 0.3) - 0.356674) <= 0.05 and e8 < e4
    report(4, ok, f"errors: 1e4 {e4:.2e}, 1e6 {e6:.2e}, 1e8 {e8:.2e}")
    assert ok


def test_criterion_05_descent_completeness(completeness_w1):
    rows = completeness_w1.splitlines()[1:]
    mismatched = [r for r in rows if not r.endswith("true,true")]
    ok = not mismatched and bool(rows)
    report(5, ok, f"{len(rows)} points over {len(COMPLETENESS_DS)} twists, mismatches: {len(mismatched)}")
    assert ok, mismatched[:10]


def test_criterion_06_exact_N_oracle(count_n_w1):
    ds = set()
    for a, t in N_PARAMS:
        for X in N_GRID:
            ds |= set(enumerate_T_arrays(t, X)[0].tolist())
    points = brute_force_points(10**4, sorted(ds))
    results = [json.loads(line) for line in count_n_w1.splitlines()]
    bad, i = [], 0
    for a, t in N_PARAMS:
        for X in N_GRID:
            exact = results[i]["count"]
            brute = brute_force_count_N(a, t, X, 10**4, points=points)
            if exact != brute or results[i]["undecided"]:
                bad.append((a, t, X, exact, brute))
            i += 1
    ok = not bad
    report(6, ok, f"{i} (alpha, theta, X) cases, disagreements: {bad}")
    assert ok


def test_criterion_07_height_properties(eta_rows):
    tol = 1e-8
    worst = {"dup": 0.0, "par": 0.0, "tor": 0.0, "mod": 0.0, "torsion": 0.0}
    found = [r.result for r in eta_rows if r.result.d <= 50 and r.result.status is EtaStatus.FOUND]
    for res in found:
        d, P = res.d, res.witness
        h = lambda R: canonical_height(d, R, tol).value  # noqa: E731
        hP = h(P)
        P2 = double(d, P)
        worst["dup"] = max(worst["dup"], float(abs(h(P2) - 4 * hP)))
        for T in torsion_points(d):
            worst["tor"] = max(worst["tor"], float(abs(h(add(d, P, T)) - hP)))
        for Q in (add(d, P, CurvePoint(0, 0)), add(d, P2, CurvePoint(1, 0))):
            par = h(add(d, P, Q)) + h(sub(d, P, Q)) - 2 * hP - 2 * h(Q)
            worst["par"] = max(worst["par"], float(abs(par)))
        worst["mod"] = max(worst["mod"], float(abs(hP - canonical_height(d, P, tol, model="X").value)))
        for T in torsion_points(d):
            if T != INFINITY:
                worst["torsion"] = max(worst["torsion"], float(canonical_height(d, T, tol).value))
    ok = (
        worst["dup"] <= 2 * tol and worst["par"] <= 6 * tol and worst["tor"] <= 2 * tol
        and worst["mod"] <= 2 * tol and worst["torsion"] <= tol and len(found) > 0
    )
    report(7, ok, f"{len(found)} witnesses; worst " + ", ".join(f"{k}={v:.1e}" for k, v in worst.items()))
    assert ok


def test_criterion_08_classification_coherence(eta_rows):
    incoherent = []
    for r in eta_rows:
        if r.result.status is EtaStatus.FOUND:
            if tunnell_classify(r.result.d, r.result.witness).verdict is Verdict.NOT_CONGRUENT:
                incoherent.append(r.result.d)
    non = [d for d in (1, 2, 3, 10, 17) if tunnell_classify(d).verdict is not Verdict.NOT_CONGRUENT]
    status = {r.result.d: r.result.status for r in eta_rows}
    missing = [d for d in (5, 6, 7, 13, 14, 15, 21, 22, 23) if status[d] is not EtaStatus.FOUND]
    ok = not incoherent and not non and not missing
    report(8, ok, f"FOUND failing Tunnell: {incoherent}; misclassified non-congruent: {non}; "
                  f"known congruent without a point at B=1e4: {missing}")
    assert not incoherent and not non
    assert not missing, f"no point of naive height <= 1e4 on E_d for d in {missing}"


def test_criterion_09_proportion():
    r = congruent_proportion_detail(10**5)
    ok = r.proportion is not None and r.proportion >= 0.629
    report(9, ok, f"{r.congruent}/{r.total} = {fmt(r.proportion)} (lower bound 0.629)")
    assert ok


def test_criterion_10_headline_coverage(eta_rows):
    trend = eta_trend(eta_rows)
    flagged = [b for b in trend if b["found"]]
    have_trend = bool(flagged) and all(b["share_below_0_845"] is not None for b in flagged)
    # Run any input criterion not yet seen so the verdict does not depend on test order.
    inputs_fns = {
        1: test_criterion_01_theorem_arithmetic,
        2: test_criterion_02_lemma_t_convergence,
        8: lambda: test_criterion_08_classification_coherence(eta_rows),
        9: test_criterion_09_proportion,
    }
    for n, fn in inputs_fns.items():
        if n not in OUTCOMES:
            try:
                fn()
            except AssertionError:
                pass
    inputs = {n: OUTCOMES.get(n, False) for n in (1, 2, 8, 9)}
    shares = ", ".join(f"{b['d_from']}-{b['d_to']}:{b['share_below_0_845']:.2f}" for b in flagged)
    ok = have_trend and all(inputs.values())
    report(10, ok, f"inputs {inputs}; share of FOUND rows with eta_log/log d < 0.845 by block: {shares}")
    assert have_trend
    assert all(inputs.values()), f"component criteria failing: {[n for n, v in inputs.items() if not v]}"


def test_criterion_11_determinism(completeness_w1, count_n_w1):
    same = {
        2: lemma_t_output(1) == lemma_t_output(8),
        5: completeness_w1 == completeness_output(8),
        6: count_n_w1 == count_n_output(8),
    }
    ok = all(same.values())
    report(11, ok, f"byte-identical at workers 1 vs 8: {same}")
    assert ok
