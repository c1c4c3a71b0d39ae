"""Complete 2-descent coordinates for rational points on d*y^2 = x^3 - x.

A non-torsion point with x = nu*A/B in lowest terms (A, B > 0) has

    A = d2 b2^2,  B = d1 b1^2,  A - nu*B = d3 b3^2,  nu*A + B = d4 b4^2

with every d_i squarefree. The four numbers are pairwise coprime apart from a
possible common factor 2 of the last two; when it occurs both d3 and d4 are
even and the curve is the one with d = d1 d2 d3 d4 / 4.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd, isqrt
from typing import Iterator

import numpy as np

from . import reports
from ._parallel import pmap
from .arith import is_square, is_squarefree, ordered_factorizations, squarefree_decompose
from .curve import (
    DEFAULT_MAX_DEPTH,
    HEIGHT_GAP,
    CurvePoint,
    canonical_height,
    check_twist,
    is_torsion,
    minimal_height_point,
    on_curve,
)
from .errors import DepthError
from .sieve import enumerate_T_arrays

# Cap on grid cells processed per numpy block.
_BLOCK = 1 << 22


@dataclass(frozen=True, order=True)
class DescentQuadruple:
    nu: int
    d: tuple[int, int, int, int]
    b: tuple[int, int, int, int]

    @property
    def den(self) -> int:
        return self.d[0] * self.b[0] ** 2

    @property
    def num(self) -> int:
        return self.d[1] * self.b[1] ** 2

    @property
    def scale(self) -> int:
        """gcd(d3, d4), which is 1 or 2."""
        return gcd(self.d[2], self.d[3])

    @property
    def twist(self) -> int:
        d1, d2, d3, d4 = self.d
        return d1 * d2 * d3 * d4 // self.scale**2

    @property
    def primitive(self) -> bool:
        """True when d1 d2 d3 d4 is itself squarefree (scale 1)."""
        return self.scale == 1

    def sort_key(self):
        return (self.den, self.num, self.nu)

    def violations(self) -> list[str]:
        nu, (d1, d2, d3, d4), (b1, b2, b3, b4) = self.nu, self.d, self.b
        bad = []
        if nu not in (-1, 1):
            bad.append("nu must be +1 or -1")
        if min(self.d + self.b) < 1:
            return bad + ["all d_i, b_i must be positive"]
        if d2 * b2**2 - nu * d1 * b1**2 != d3 * b3**2:
            bad.append("d2 b2^2 - nu d1 b1^2 != d3 b3^2")
        if nu * d2 * b2**2 + d1 * b1**2 != d4 * b4**2:
            bad.append("nu d2 b2^2 + d1 b1^2 != d4 b4^2")
        if gcd(d1 * b1, d2 * b2) != 1:
            bad.append("gcd(d1 b1, d2 b2) != 1")
        if not all(is_squarefree(x) for x in self.d):
            bad.append("some d_i is not squarefree")
        g = gcd(d3, d4)
        if g not in (1, 2) or not is_squarefree(d1 * d2 * d3 * d4 // (g * g)):
            bad.append("d1 d2 d3 d4 is not squarefree up to the shared factor 2 of d3, d4")
        return bad

    def csv_row(self):
        x = Fraction(self.nu * self.num, self.den)
        return (self.nu, *self.d, *self.b, self.twist, x.numerator, x.denominator)

    CSV_COLUMNS = ("nu", "d1", "d2", "d3", "d4", "b1", "b2", "b3", "b4", "d", "x_num", "x_den")

    @classmethod
    def from_record(cls, r: dict) -> "DescentQuadruple":
        return cls(
            int(r["nu"]),
            tuple(int(r[f"d{i}"]) for i in range(1, 5)),
            tuple(int(r[f"b{i}"]) for i in range(1, 5)),
        )


def quadruple_to_point(q: DescentQuadruple) -> tuple[int, CurvePoint]:
    bad = q.violations()
    if bad:
        raise ValueError(f"invalid quadruple {q}: " + "; ".join(bad))
    d1, b1 = q.d[0], q.b[0]
    b2, b3, b4 = q.b[1:]
    d = q.twist
    P = CurvePoint(Fraction(q.nu * q.num, q.den), Fraction(q.scale * b2 * b3 * b4, d1 * d1 * b1**3))
    if not on_curve(d, P) or is_torsion(d, P):
        raise AssertionError(f"{q} produced {P}, which is off E_{d} or torsion")
    return d, P


def point_to_quadruple(d: int, P: CurvePoint) -> DescentQuadruple:
    d = check_twist(d)
    if not on_curve(d, P):
        raise ValueError(f"{P} is not on E_{d}")
    if is_torsion(d, P):
        raise ValueError("torsion points have no descent coordinates")
    nu = 1 if P.x > 0 else -1
    A, B = abs(P.x.numerator), P.x.denominator
    u, w = A - nu * B, nu * A + B
    if u <= 0 or w <= 0:
        raise AssertionError(f"non-positive descent factor for {P}")
    parts = [squarefree_decompose(n) for n in (B, A, u, w)]
    q = DescentQuadruple(nu, tuple(c for c, _ in parts), tuple(r for _, r in parts))
    if q.twist != d:
        raise AssertionError(f"{q} has twist {q.twist}, expected {d}")
    return q


# ---------------------------------------------------------------------------
# Enumeration


def _isqrt_array(v: np.ndarray) -> np.ndarray:
    r = np.sqrt(v.astype(np.float64)).astype(np.int64)
    r -= (r * r > v).astype(np.int64)
    r += ((r + 1) * (r + 1) <= v).astype(np.int64)
    return r


def _shapes(d: int) -> list[tuple[int, int, int, int]]:
    shapes = list(ordered_factorizations(d, 4))
    if d % 2:
        shapes += [(a, b, 2 * c, 2 * e) for a, b, c, e in ordered_factorizations(d, 4)]
    return shapes


def _grid_hits(bound: int, nu: int, d1: int, d2: int, d3: int, d4: int) -> list[DescentQuadruple]:
    b1 = np.arange(1, isqrt(bound // d1) + 1, dtype=np.int64)
    b2 = np.arange(1, isqrt(bound // d2) + 1, dtype=np.int64)
    if b1.size == 0 or b2.size == 0:
        return []
    den = d1 * b1 * b1
    num = d2 * b2 * b2
    rows = max(1, _BLOCK // b2.size)
    out = []
    for s in range(0, b1.size, rows):
        B = den[s : s + rows, None]
        A = num[None, :]
        u = A - nu * B
        w = nu * A + B
        ok = (u > 0) & (w > 0) & (u % d3 == 0) & (w % d4 == 0)
        i, j = np.nonzero(ok)
        if i.size == 0:
            continue
        uu = (A[0, j] - nu * B[i, 0]) // d3
        ww = (nu * A[0, j] + B[i, 0]) // d4
        r3, r4 = _isqrt_array(uu), _isqrt_array(ww)
        sq = (r3 * r3 == uu) & (r4 * r4 == ww)
        Bi, Aj = B[i, 0][sq], A[0, j][sq]
        cop = np.gcd(Bi, Aj) == 1
        for bb1, bb2, bb3, bb4 in zip(
            b1[s + i[sq][cop]].tolist(), b2[j[sq][cop]].tolist(), r3[sq][cop].tolist(), r4[sq][cop].tolist()
        ):
            out.append(DescentQuadruple(nu, (d1, d2, d3, d4), (bb1, bb2, bb3, bb4)))
    return out


def _quadruples_for(job: tuple[int, int]) -> list[DescentQuadruple]:
    bound, d = job
    out = []
    for d1, d2, d3, d4 in _shapes(d):
        if d1 > bound or d2 > bound:
            continue
        for nu in (-1, 1):
            out.extend(_grid_hits(bound, nu, d1, d2, d3, d4))
    out.sort(key=DescentQuadruple.sort_key)
    return out


def quadruples_for_twists(bound: int, ds, workers: int = 1) -> dict[int, list[DescentQuadruple]]:
    """Quadruples with max(d1 b1^2, d2 b2^2) <= bound for each twist in ds."""
    ds = [check_twist(int(d)) for d in ds]
    lists = pmap(_quadruples_for, [(bound, d) for d in ds], workers)
    return dict(zip(ds, lists))


def enumerate_quadruples(
    bound: int, d: int | None = None, d_range: tuple[int, int] | None = None, workers: int = 1
) -> Iterator[DescentQuadruple]:
    """Every valid quadruple with max(d1 b1^2, d2 b2^2) <= bound.

    Filter to one twist with ``d`` or to squarefree twists in an inclusive
    ``d_range``; output is ordered by (d1 b1^2, d2 b2^2, nu).
    """
    if bound < 2:
        raise ValueError("bound must be >= 2")
    if d is not None and d_range is not None:
        raise ValueError("give d or d_range, not both")
    if d is not None:
        yield from _quadruples_for((bound, check_twist(d)))
        return
    if d_range is not None:
        lo, hi = d_range
        ds = [n for n in range(max(lo, 1), hi + 1) if is_squarefree(n)]
        merged = [q for qs in quadruples_for_twists(bound, ds, workers).values() for q in qs]
        merged.sort(key=DescentQuadruple.sort_key)
        yield from merged
        return
    yield from _all_quadruples(bound)


def _all_quadruples(bound: int) -> Iterator[DescentQuadruple]:
    # Unfiltered: walk every coprime (B, A) pair; practical for bound up to ~3000.
    for B in range(1, bound + 1):
        for A in range(1, bound + 1):
            if gcd(A, B) != 1:
                continue
            for nu in (-1, 1):
                u, w = A - nu * B, nu * A + B
                if u <= 0 or w <= 0:
                    continue
                parts = [squarefree_decompose(n) for n in (B, A, u, w)]
                yield DescentQuadruple(nu, tuple(c for c, _ in parts), tuple(r for _, r in parts))


def quadruples_csv(quads, metadata: dict | None = None) -> str:
    return reports.to_csv(DescentQuadruple.CSV_COLUMNS, [q.csv_row() for q in quads], metadata)


def quadruples_from_csv(text: str) -> list[DescentQuadruple]:
    _, records = reports.parse_csv(text)
    return [DescentQuadruple.from_record(r) for r in records]


# ---------------------------------------------------------------------------
# N_{alpha, theta}(X)


@dataclass
class NCountResult:
    alpha: float
    theta: float
    X: int
    count: int
    contributing_d: list[tuple[int, float]]
    borderline: list[int] = field(default_factory=list)
    undecided: list[int] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "alpha": self.alpha,
            "theta": self.theta,
            "X": self.X,
            "count": self.count,
            "contributing_d": [[d, float(format(h, ".17g"))] for d, h in self.contributing_d],
            "borderline": self.borderline,
            "undecided": self.undecided,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "NCountResult":
        return cls(
            obj["alpha"],
            obj["theta"],
            int(obj["X"]),
            int(obj["count"]),
            [(int(d), float(h)) for d, h in obj["contributing_d"]],
            list(obj.get("borderline", [])),
            list(obj.get("undecided", [])),
        )


def decision_bound(d: int, alpha: float, margin: float = 4.0) -> int:
    """Naive-height search bound margin * d^(1/4 + 2 alpha).

    Any point with hhat <= (1/8 + alpha) log d has naive x-height at most
    sqrt(2) * d^(1/4 + 2 alpha), so margin >= sqrt(2) makes the search complete.
    """
    return max(2, math.floor(margin * d ** (0.25 + 2 * alpha)))


def _decide(job):
    d, alpha, tol, margin, max_depth = job
    threshold = (0.125 + alpha) * math.log(d)
    bound = decision_bound(d, alpha, margin)
    pts = [quadruple_to_point(q)[1] for q in _quadruples_for((bound, d))]
    try:
        found = minimal_height_point(d, pts, tol, max_depth)
    except (DepthError, ArithmeticError):
        return d, None, False
    if found is None:
        return d, None, True
    value, witness = found
    borderline = abs(value - threshold) <= 10 * tol
    if borderline:
        value = float(canonical_height(d, witness, tol * 1e-3, max_depth).value)
    return d, value, borderline


def count_N(
    alpha: float,
    theta: float,
    X: int,
    tol: float = 1e-10,
    margin: float = 4.0,
    max_depth: int = DEFAULT_MAX_DEPTH,
    workers: int = 1,
) -> NCountResult:
    """Exact N_{alpha,theta}(X): twists d in T_theta(X) with eta_d <= d^(1/8 + alpha)."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    if margin < math.sqrt(2):
        raise ValueError("margin below sqrt(2) cannot certify the search")
    n, _, _ = enumerate_T_arrays(theta, X)
    jobs = [(int(d), alpha, tol, margin, max_depth) for d in n.tolist()]
    contributing, borderline, undecided = [], [], []
    for d, value, flag in pmap(_decide, jobs, workers):
        if value is None:
            if not flag:
                undecided.append(d)
            continue
        if flag:
            borderline.append(d)
        if value <= (0.125 + alpha) * math.log(d):
            contributing.append((d, value))
    return NCountResult(alpha, theta, X, len(contributing), contributing, borderline, undecided)
