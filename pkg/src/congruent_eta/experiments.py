"""Numerical checks of the density, descent and proportion statements.

Each verifier returns plain data (report rows plus a metadata dict) that the
CLI serializes; none of them claims anything beyond the finite range scanned.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from math import isqrt

import mpmath
import numpy as np

from . import reports
from ._parallel import pmap
from .arith import as_fraction, is_prime, is_squarefree
from .curve import DEFAULT_MAX_DEPTH, CurvePoint, EtaResult, EtaStatus, check_twist, eta, is_torsion, on_curve
from .descent import count_N
from .sieve import DensityReport, DensityRow, count_T, mobius_range, predicted_T, squarefree_progression_count

# Lower density of congruent numbers among squarefree d = 5 (mod 8) (A. Smith,
# "The congruent numbers have positive natural density", Thm 1.5). Consumed,
# never recomputed.
SMITH_LOWER_BOUND = Fraction("0.629")
SMITH_CITATION = "A. Smith, The congruent numbers have positive natural density, Theorem 1.5"

CHOSEN_THETA = Fraction("0.30996")
CHOSEN_ALPHA = Fraction("0.72")
TARGET_EXPONENT = Fraction("0.845")


# ---------------------------------------------------------------------------
# Closing arithmetic


@dataclass(frozen=True)
class TheoremArithmetic:
    theta: Fraction
    alpha: Fraction
    exponent: Fraction
    constraint_value: Fraction
    proportion_sum: mpmath.mpf
    exponent_matches: bool
    constraint_ok: bool
    proportion_ok: bool

    @property
    def all_ok(self) -> bool:
        return self.exponent_matches and self.constraint_ok and self.proportion_ok

    def to_json(self) -> dict:
        return {
            "theta": reports.fmt(self.theta),
            "alpha": reports.fmt(self.alpha),
            "exponent": float(self.exponent),
            "exponent_exact": reports.fmt(self.exponent),
            "constraint_value": float(self.constraint_value),
            "constraint_exact": reports.fmt(self.constraint_value),
            "proportion_sum": float(self.proportion_sum),
            "proportion_sum_digits": mpmath.nstr(self.proportion_sum, 30),
            "smith_lower_bound": reports.fmt(SMITH_LOWER_BOUND),
            "exponent_is_0_845": self.exponent_matches,
            "constraint_below_7_8": self.constraint_ok,
            "proportion_sum_above_1": self.proportion_ok,
        }


def theorem_arithmetic(theta=CHOSEN_THETA, alpha=CHOSEN_ALPHA) -> TheoremArithmetic:
    t, a = as_fraction(theta), as_fraction(alpha)
    if not 0 < t < Fraction(1, 2) or a <= 0:
        raise ValueError("need theta in (0, 1/2) and alpha > 0")
    exponent = Fraction(1, 8) + a
    constraint = a + t / 2
    with mpmath.workdps(40):
        psum = -mpmath.log(1 - mpmath.mpf(t.numerator) / t.denominator) + mpmath.mpf(SMITH_LOWER_BOUND.numerator) / SMITH_LOWER_BOUND.denominator
        ok = bool(psum > 1)
    return TheoremArithmetic(
        t, a, exponent, constraint, psum, exponent == TARGET_EXPONENT, constraint < Fraction(7, 8), ok
    )


# ---------------------------------------------------------------------------
# Tunnell oracle


class Verdict(str, enum.Enum):
    NOT_CONGRUENT = "NOT_CONGRUENT"
    CONGRUENT_UNDER_BSD = "CONGRUENT_UNDER_BSD"
    UNCONDITIONALLY_CONGRUENT = "UNCONDITIONALLY_CONGRUENT"


@dataclass(frozen=True)
class CongruentVerdict:
    d: int
    tunnell_lhs: int
    tunnell_rhs_half: Fraction
    verdict: Verdict

    def to_json(self) -> dict:
        return {
            "d": self.d,
            "tunnell_lhs": self.tunnell_lhs,
            "tunnell_rhs_half": reports.fmt(self.tunnell_rhs_half),
            "verdict": self.verdict.value,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "CongruentVerdict":
        return cls(int(obj["d"]), int(obj["tunnell_lhs"]), Fraction(obj["tunnell_rhs_half"]), Verdict(obj["verdict"]))


def _tunnell_forms(d: int):
    # odd d: forms at d; even d: forms at d/2
    if d % 2:
        return d, (2, 1, 32), (2, 1, 8)
    return d // 2, (4, 1, 32), (4, 1, 8)


def _representations(n: int, a: int, b: int, c: int) -> int:
    count = 0
    for x in range(isqrt(n // a) + 1):
        for z in range(isqrt((n - a * x * x) // c) + 1):
            rest = n - a * x * x - c * z * z
            if rest % b:
                continue
            y = isqrt(rest // b)
            if b * y * y == rest:
                count += (1 if x == 0 else 2) * (1 if z == 0 else 2) * (1 if y == 0 else 2)
    return count


def tunnell_classify(d: int, witness: CurvePoint | None = None) -> CongruentVerdict:
    """Tunnell's counting test, optionally upgraded by a rational point.

    A failed count proves d is not congruent. A passed count means congruent
    assuming BSD; an on-curve non-torsion witness makes it unconditional.
    """
    d = check_twist(d)
    n, f1, f2 = _tunnell_forms(d)
    lhs = _representations(n, *f1)
    rhs = _representations(n, *f2)
    return _verdict(d, lhs, rhs, witness)


def _verdict(d, lhs, rhs, witness):
    half = Fraction(rhs, 2)
    if lhs != half:
        if witness is not None:
            raise ArithmeticError(f"d={d} fails Tunnell's test but a witness was supplied")
        return CongruentVerdict(d, lhs, half, Verdict.NOT_CONGRUENT)
    if witness is not None:
        if not on_curve(d, witness) or is_torsion(d, witness):
            raise ValueError(f"{witness} is not a non-torsion point on E_{d}")
        return CongruentVerdict(d, lhs, half, Verdict.UNCONDITIONALLY_CONGRUENT)
    return CongruentVerdict(d, lhs, half, Verdict.CONGRUENT_UNDER_BSD)


def form_counts(a: int, b: int, c: int, N: int) -> np.ndarray:
    """r[n] = #{(x, y, z) : a x^2 + b y^2 + c z^2 = n} for 0 <= n <= N."""
    def squares(k):
        arr = np.zeros(N + 1, dtype=np.int64)
        t = np.arange(isqrt(N // k) + 1, dtype=np.int64)
        arr[k * t * t] = 2
        arr[0] = 1
        return arr

    yb, zc, xa = squares(b), squares(c), squares(a)
    bc = np.zeros(N + 1, dtype=np.int64)
    for s in np.flatnonzero(zc).tolist():
        bc[s:] += zc[s] * yb[: N + 1 - s]
    out = np.zeros(N + 1, dtype=np.int64)
    for s in np.flatnonzero(xa).tolist():
        out[s:] += xa[s] * bc[: N + 1 - s]
    return out


def tunnell_table(X: int) -> dict[int, CongruentVerdict]:
    """Tunnell verdicts for every squarefree d <= X in one vectorized pass."""
    odd1, odd2 = form_counts(2, 1, 32, X), form_counts(2, 1, 8, X)
    half = X // 2
    ev1, ev2 = form_counts(4, 1, 32, half), form_counts(4, 1, 8, half)
    out = {}
    for d in range(1, X + 1):
        if not is_squarefree(d):
            continue
        lhs, rhs = (int(odd1[d]), int(odd2[d])) if d % 2 else (int(ev1[d // 2]), int(ev2[d // 2]))
        out[d] = _verdict(d, lhs, rhs, None)
    return out


@dataclass(frozen=True)
class ProportionResult:
    X: int
    total: int
    congruent: int

    @property
    def proportion(self) -> float | None:
        return self.congruent / self.total if self.total else None

    def to_json(self) -> dict:
        p = self.proportion
        return {
            "X": self.X,
            "squarefree_5_mod_8": self.total,
            "congruent_under_bsd_or_better": self.congruent,
            "proportion": None if p is None else float(format(p, ".17g")),
            "smith_lower_bound": reports.fmt(SMITH_LOWER_BOUND),
            "meets_lower_bound": None if p is None else p >= SMITH_LOWER_BOUND,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "ProportionResult":
        return cls(int(obj["X"]), int(obj["squarefree_5_mod_8"]), int(obj["congruent_under_bsd_or_better"]))


def congruent_proportion_detail(X: int) -> ProportionResult:
    if X < 1:
        return ProportionResult(X, 0, 0)
    r1, r2 = form_counts(2, 1, 32, X), form_counts(2, 1, 8, X)
    d = np.arange(5, X + 1, 8, dtype=np.int64)
    if d.size == 0:
        return ProportionResult(X, 0, 0)
    mu = mobius_range(1, X)
    d = d[mu[d - 1] != 0]
    congruent = int(np.count_nonzero(2 * r1[d] == r2[d]))
    return ProportionResult(X, int(d.size), congruent)


def congruent_proportion(X: int) -> float | None:
    """Share of squarefree d <= X, d = 5 (mod 8), passing Tunnell's test.

    None when there is no such d.
    """
    return congruent_proportion_detail(X).proportion


# ---------------------------------------------------------------------------
# Density verifiers


def verify_lemma_T(theta, grid, workers: int = 1) -> DensityReport:
    """Observed |T_theta(X)| against -log(1-theta)/pi^2 X along ``grid``."""
    grid = sorted(int(X) for X in grid)
    rows = [DensityRow.make(X, count_T(theta, X, workers=workers), predicted_T(theta, X)) for X in grid]
    fits = [r.abs_error * math.log(r.X) / r.X for r in rows if r.X > 1]
    constants = {
        "main_term_constant": predicted_T(theta, 1),
        "fitted_C": max(fits) if fits else None,
        "fitted_C_min": min(fits) if fits else None,
        "fitted_C_spread": (max(fits) / min(fits)) if fits and min(fits) > 0 else None,
    }
    meta = reports.make_metadata("lemma-t", {"theta": as_fraction(theta), "grid": grid}, constants)
    meta["fitted_C_per_X"] = [float(format(c, ".17g")) for c in fits]
    return DensityReport(rows, meta)


def verify_squarefree_density(grid, a: int = 5, q: int = 8, workers: int = 1) -> DensityReport:
    """Squarefree n = a (mod q) up to X against X/pi^2 (the q = 8, a = 5 density)."""
    rows = [
        DensityRow.make(int(X), squarefree_progression_count(int(X), a, q, workers=workers), int(X) / math.pi**2)
        for X in grid
    ]
    return DensityReport(rows, reports.make_metadata("squarefree-density", {"a": a, "q": q, "grid": list(grid)}))


@dataclass
class LemmaERow:
    X: int
    count: int
    bound: float
    ratio: float
    bound_eps: float
    ratio_eps: float
    oracle_count: int | None = None


@dataclass
class LemmaEReport:
    alpha: float
    theta: float
    rows: list[LemmaERow]
    details: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    COLUMNS = ("X", "count", "bound", "ratio", "bound_eps", "ratio_eps", "oracle_count")

    def _tuples(self):
        return [(r.X, r.count, r.bound, r.ratio, r.bound_eps, r.ratio_eps, r.oracle_count) for r in self.rows]

    def to_csv(self) -> str:
        return reports.to_csv(self.COLUMNS, self._tuples(), self.metadata)

    def to_jsonl(self) -> str:
        return reports.to_jsonl(self.COLUMNS, self._tuples(), self.metadata)

    @classmethod
    def _from_records(cls, meta, records):
        def opt(v):
            return None if v in (None, "") else int(v)

        rows = [
            LemmaERow(
                int(r["X"]), int(r["count"]), float(r["bound"]), float(r["ratio"]),
                float(r["bound_eps"]), float(r["ratio_eps"]), opt(r["oracle_count"]),
            )
            for r in records
        ]
        params = meta.get("params", {})
        return cls(float(params.get("alpha", "nan")), float(params.get("theta", "nan")), rows, [], meta)

    @classmethod
    def from_csv(cls, text: str) -> "LemmaEReport":
        return cls._from_records(*reports.parse_csv(text))

    @classmethod
    def from_jsonl(cls, text: str) -> "LemmaEReport":
        return cls._from_records(*reports.parse_jsonl(text))


LEMMA_E_EPS = 0.01


def verify_lemma_E(
    alpha, theta, grid, tol: float = 1e-10, workers: int = 1, oracle_height: int | None = None
) -> LemmaEReport:
    """Exact N_{alpha,theta}(X) on ``grid`` next to X^(1/8 + alpha + theta/2).

    With ``oracle_height`` each count is recomputed from a brute-force point
    scan up to that naive height.
    """
    a, t = float(alpha), float(theta)
    if not a + t / 2 < 7 / 8:
        raise ValueError("need alpha + theta/2 < 7/8")
    expo = 0.125 + a + t / 2
    rows, details = [], []
    for X in sorted(int(X) for X in grid):
        res = count_N(a, t, X, tol, workers=workers)
        bound, bound_eps = X**expo, X ** (expo + LEMMA_E_EPS)
        oracle = brute_force_count_N(a, t, X, oracle_height, tol) if oracle_height else None
        rows.append(LemmaERow(X, res.count, bound, res.count / bound, bound_eps, res.count / bound_eps, oracle))
        details.append(res)
    meta = reports.make_metadata(
        "lemma-e",
        {"alpha": a, "theta": t, "grid": [r.X for r in rows], "tol": tol},
        {"exponent": expo, "epsilon": LEMMA_E_EPS},
    )
    return LemmaEReport(a, t, rows, details, meta)


def brute_force_count_N(alpha, theta, X: int, height: int, tol: float = 1e-10, points=None, workers: int = 1) -> int:
    """N_{alpha,theta}(X) from an x = p/q scan with max(|p|, q) <= height.

    ``points`` may carry a precomputed scan (d -> set of points) covering
    every d in T_theta(X).
    """
    from .curve import minimal_height_point
    from .oracles import brute_force_points
    from .sieve import enumerate_T_arrays

    n, _, _ = enumerate_T_arrays(theta, X)
    ds = [int(d) for d in n.tolist()]
    if not ds:
        return 0
    if points is None:
        points = brute_force_points(height, ds, workers)
    count = 0
    for d in ds:
        found = minimal_height_point(d, points[d], tol)
        if found is not None and found[0] <= (0.125 + float(alpha)) * math.log(d):
            count += 1
    return count


# ---------------------------------------------------------------------------
# eta_d table


@dataclass(frozen=True)
class EtaTableRow:
    result: EtaResult
    ratio: float | None
    below_5_8: bool | None
    below_0_845: bool | None
    is_prime: bool

    COLUMNS = (
        "d", "status", "witness_x", "witness_y", "eta_log", "ratio", "below_5_8", "below_0_845", "is_prime",
        "certified_min",
    )

    def as_tuple(self):
        j = self.result.to_json()
        return (
            j["d"], j["status"], j["witness_x"], j["witness_y"], self.result.eta_log, self.ratio,
            self.below_5_8, self.below_0_845, self.is_prime, self.result.certified_minimum,
        )


def _eta_job(job):
    d, B, tol, max_depth = job
    return eta(d, B, tol, max_depth)


def eta_table(d_max: int, B: int, tol: float = 1e-10, workers: int = 1, max_depth: int = DEFAULT_MAX_DEPTH):
    """EtaResult for every squarefree d <= d_max, with eta_log / log d ratios."""
    ds = [d for d in range(1, d_max + 1) if is_squarefree(d)]
    rows = []
    for res in pmap(_eta_job, [(d, B, tol, max_depth) for d in ds], workers):
        ratio = below58 = below845 = None
        if res.status is EtaStatus.FOUND and res.d > 1:
            ratio = res.eta_log / math.log(res.d)
            below58, below845 = ratio < 5 / 8, ratio < 0.845
        rows.append(EtaTableRow(res, ratio, below58, below845, is_prime(res.d)))
    return rows


def eta_trend(rows) -> list[dict]:
    """Per dyadic block of d: FOUND count and the share with ratio below 0.845."""
    blocks: dict[int, list] = {}
    for r in rows:
        blocks.setdefault(r.result.d.bit_length(), []).append(r)
    out = []
    for k in sorted(blocks):
        found = [r for r in blocks[k] if r.ratio is not None]
        low = sum(1 for r in found if r.below_0_845)
        out.append(
            {
                "d_from": 1 << (k - 1),
                "d_to": (1 << k) - 1,
                "rows": len(blocks[k]),
                "found": len(found),
                "below_0_845": low,
                "share_below_0_845": low / len(found) if found else None,
            }
        )
    return out


def eta_table_csv(rows, metadata: dict | None = None) -> str:
    return reports.to_csv(EtaTableRow.COLUMNS, [r.as_tuple() for r in rows], metadata)


def eta_table_jsonl(rows, metadata: dict | None = None) -> str:
    return reports.to_jsonl(EtaTableRow.COLUMNS, [r.as_tuple() for r in rows], metadata)
