"""Exact arithmetic on the twists E_d : d*y^2 = x^3 - x.

Points carry exact rational coordinates. Canonical heights use the
normalization hhat(P) = 1/2 * lim 4^-n * h_x(2^n P), with h_x the naive
logarithmic height of the x-coordinate.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import gcd, isqrt

import mpmath
import numpy as np

from .arith import divisors, factorize, is_squarefree
from .errors import DepthError
from .reports import HEIGHT_CONVENTION

LOG4 = math.log(4.0)
# hhat(P) - h_x(P)/2 always lies in this interval on E_d (see _x_model).
HEIGHT_GAP = (-LOG4 / 8, LOG4 / 6)
DEFAULT_MAX_DEPTH = 64


@dataclass(frozen=True)
class CurvePoint:
    """Affine point (x, y) with rational coordinates, or the point at infinity."""

    x: Fraction | None = None
    y: Fraction | None = None

    def __post_init__(self):
        if (self.x is None) != (self.y is None):
            raise ValueError("a point needs both coordinates or neither")
        if self.x is not None:
            object.__setattr__(self, "x", Fraction(self.x))
            object.__setattr__(self, "y", Fraction(self.y))

    @property
    def is_infinity(self) -> bool:
        return self.x is None

    def __str__(self):
        if self.is_infinity:
            return "O"
        return f"({self.x}, {self.y})"


INFINITY = CurvePoint()


def check_twist(d: int) -> int:
    if not isinstance(d, (int, np.integer)) or d < 1 or not is_squarefree(int(d)):
        raise ValueError(f"twist parameter must be a squarefree integer >= 1, got {d!r}")
    return int(d)


def on_curve(d: int, P: CurvePoint) -> bool:
    if P.is_infinity:
        return True
    return d * P.y * P.y == P.x**3 - P.x


@lru_cache(maxsize=1024)
def _twist_ok(d: int) -> int:
    return check_twist(d)


def _require(d: int, *points: CurvePoint) -> None:
    _twist_ok(d)
    for P in points:
        if not on_curve(d, P):
            raise ValueError(f"{P} is not on d*y^2 = x^3 - x with d = {d}")


def neg(d: int, P: CurvePoint) -> CurvePoint:
    _require(d, P)
    return P if P.is_infinity else CurvePoint(P.x, -P.y)


def add(d: int, P: CurvePoint, Q: CurvePoint) -> CurvePoint:
    _require(d, P, Q)
    if P.is_infinity:
        return Q
    if Q.is_infinity:
        return P
    if P.x == Q.x:
        if P.y == -Q.y:
            return INFINITY
        lam = (3 * P.x * P.x - 1) / (2 * d * P.y)
    else:
        lam = (Q.y - P.y) / (Q.x - P.x)
    # Chord through P, Q meets the cubic again; the x-roots sum to d*lam^2.
    x3 = d * lam * lam - P.x - Q.x
    y3 = -(P.y + lam * (x3 - P.x))
    return CurvePoint(x3, y3)


def double(d: int, P: CurvePoint) -> CurvePoint:
    return add(d, P, P)


def sub(d: int, P: CurvePoint, Q: CurvePoint) -> CurvePoint:
    return add(d, P, neg(d, Q))


def scalar_mul(d: int, k: int, P: CurvePoint) -> CurvePoint:
    _require(d, P)
    if k < 0:
        return scalar_mul(d, -k, neg(d, P))
    result, base = INFINITY, P
    while k:
        if k & 1:
            result = add(d, result, base)
        base = add(d, base, base)
        k >>= 1
    return result


# ---------------------------------------------------------------------------
# Torsion


def _solve_monotone(f, target: int, lo: int, hi: int, increasing: bool):
    """Integer t in [lo, hi] with f(t) == target, f monotone on the range."""
    while lo <= hi:
        mid = (lo + hi) // 2
        v = f(mid)
        if v == target:
            return mid
        if (v < target) == increasing:
            lo = mid + 1
        else:
            hi = mid - 1
    return None


def _integral_x(d: int, Y: int) -> set:
    """Integers X with X^3 - d^2 X = Y^2."""
    if Y == 0:
        return {0, d, -d}
    target = Y * Y
    f = lambda X: X**3 - d * d * X
    out = set()
    # X > d: f increasing and f(X) >= X^3 - ..., so X <= Y^(2/3) + d.
    hi = d + 1
    while f(hi) < target:
        hi *= 2
    X = _solve_monotone(f, target, d + 1, hi, True)
    if X is not None:
        out.add(X)
    # -d < X < 0: g(t) = t(d^2 - t^2) with t = -X rises then falls at d/sqrt(3).
    g = lambda t: t * (d * d - t * t)
    peak = isqrt(d * d // 3)
    for a, b, inc in ((1, peak, True), (peak + 1, d - 1, False)):
        t = _solve_monotone(g, target, a, b, inc)
        if t is not None:
            out.add(-t)
    return out


@lru_cache(maxsize=256)
def _torsion_cached(d: int) -> frozenset:
    # Lutz-Nagell on the integral model Y^2 = X^3 - d^2 X (disc 64 d^6):
    # torsion points are integral with Y = 0 or Y^2 | 64 d^6, i.e. Y | 8 d^3.
    found = {INFINITY}
    for Y in [0] + divisors(8 * d**3):
        for X in _integral_x(d, Y):
            for y in {Y, -Y}:
                P = CurvePoint(Fraction(X, d), Fraction(y, d * d))
                if _has_small_order(d, P):
                    found.add(P)
    return frozenset(found)


def _has_small_order(d: int, P: CurvePoint) -> bool:
    # Mazur: a rational torsion point has order at most 12.
    Q = P
    for _ in range(12):
        if Q.is_infinity:
            return True
        Q = add(d, Q, P)
    return Q.is_infinity


def torsion_points(d: int) -> frozenset:
    return _torsion_cached(check_twist(d))


def is_torsion(d: int, P: CurvePoint) -> bool:
    """Torsion test for an on-curve point.

    ``torsion_points`` shows E_d(Q)_tors is exactly the 2-torsion, so this is
    the y = 0 test rather than a set lookup (cheap for large d).
    """
    return P.is_infinity or P.y == 0


# ---------------------------------------------------------------------------
# Heights


def naive_x_height(P: CurvePoint) -> float:
    if P.is_infinity:
        raise ValueError("naive height is defined for affine points only")
    return math.log(max(abs(P.x.numerator), P.x.denominator))


@dataclass(frozen=True)
class HeightValue:
    value: mpmath.mpf
    precision: float

    def __float__(self):
        return float(self.value)


@dataclass(frozen=True)
class _Model:
    """x-doubling on a Weierstrass model as a pair of binary quartic forms."""

    start: tuple[int, int]
    coeff: int  # c in F = (x^2 + c z^2)^2, G = 4xz(x^2 - c z^2)
    bad_primes: tuple[int, ...]
    step_bound: float  # sup over points of |h(2Q) - 4 h(Q)|

    def F(self, x, z):
        t = x * x + self.coeff * z * z
        return t * t

    def G(self, x, z):
        return 4 * x * z * (x * x - self.coeff * z * z)


def _x_model(P: CurvePoint) -> _Model:
    # On d y^2 = x^3 - x the x-doubling is (x^2+1)^2 / (4x(x^2-1)) for every d.
    # For coprime (p, q) the two forms share at most a factor 4, and
    # H^4 <= max(|F|, |G|) <= 4 H^4, so |h(2Q) - 4h(Q)| <= log 4.
    return _Model((P.x.numerator, P.x.denominator), 1, (2,), LOG4)


def _big_model(d: int, P: CurvePoint) -> _Model:
    # Y^2 = X^3 - d^2 X via X = d x. Common factors of the forms divide 64 d^4
    # and max(|F|, |G|) <= 4 (1 + d^2)^2 H^4.
    num, den = d * P.x.numerator, P.x.denominator
    g = gcd(num, den)
    bound = max(math.log(4 * (1 + d * d) ** 2), math.log(64 * d**4))
    return _Model((num // g, den // g), d * d, tuple(sorted(factorize(2 * d))), bound)


def _valuation(v: int, ell: int, cap: int) -> int:
    if v == 0:
        return cap
    k = 0
    while v % ell == 0 and k < cap:
        v //= ell
        k += 1
    return k


def _limit(model: _Model, steps: int, dps: int) -> mpmath.mpf:
    """1/2 * 4^-steps * h(x(2^steps P)) without forming the huge integers.

    The magnitude travels as a normalized real pair plus a log-scale; exact
    residues modulo powers of the bad primes recover the cancelled gcd at each
    step (the gcd of the forms at coprime arguments only involves those primes).
    """
    with mpmath.workdps(dps):
        p, q = model.start
        H = max(abs(p), abs(q))
        L = mpmath.log(H)
        pf, qf = mpmath.mpf(p) / H, mpmath.mpf(q) / H
        prec = 8 * steps + 32
        res = {ell: (p % ell**prec, q % ell**prec, prec) for ell in model.bad_primes}
        for _ in range(steps):
            Fr, Gr = model.F(pf, qf), model.G(pf, qf)
            log_g = mpmath.mpf(0)
            for ell, (a, b, k) in res.items():
                mod = ell**k
                Fe, Ge = model.F(a, b) % mod, model.G(a, b) % mod
                v = min(_valuation(Fe, ell, k), _valuation(Ge, ell, k))
                if v >= k:
                    raise DepthError(f"{ell}-adic precision exhausted")
                log_g += v * mpmath.log(ell)
                keep = ell ** (k - v)
                res[ell] = ((Fe // ell**v) % keep, (Ge // ell**v) % keep, k - v)
            m = max(abs(Fr), abs(Gr))
            L = 4 * L + mpmath.log(m) - log_g
            pf, qf = Fr / m, Gr / m
        return L / (2 * mpmath.mpf(4) ** steps)


def _tail(model: _Model, steps: int) -> float:
    return 0.5 * model.step_bound / 3 * 4.0**-steps


def canonical_height(
    d: int,
    P: CurvePoint,
    tol: float = 1e-10,
    max_depth: int = DEFAULT_MAX_DEPTH,
    model: str = "x",
    verify: bool = True,
) -> HeightValue:
    """Canonical height of P on E_d to within ``tol``.

    ``model`` selects the x-coordinate used in the limit: "x" for
    d*y^2 = x^3 - x, "X" for the isomorphic Y^2 = X^3 - d^2 X. With
    ``verify`` the limit is recomputed at doubled depth and precision and the
    two evaluations must agree.
    """
    d = check_twist(d)
    _require(d, P)
    if not tol >= 1e-30:
        raise ValueError("tol must be >= 1e-30")
    if is_torsion(d, P):
        return HeightValue(mpmath.mpf(0), tol)
    mdl = _x_model(P) if model == "x" else _big_model(d, P) if model == "X" else None
    if mdl is None:
        raise ValueError(f"unknown model {model!r}")

    steps = 0
    while _tail(mdl, steps) > tol / 2:
        steps += 1
    if steps > max_depth:
        raise DepthError(f"{steps} doublings needed for tol={tol}, cap is {max_depth}")
    dps = 20 + int(-math.log10(tol)) + steps
    lo = _limit(mdl, steps, dps)
    hi = _limit(mdl, steps, 2 * dps)
    with mpmath.workdps(2 * dps):
        rounding = float(abs(hi - lo)) + 10.0 ** (5 - dps)
    precision = _tail(mdl, steps) + rounding
    if precision > tol:
        raise DepthError(f"could not certify tol={tol} (reached {precision:.3g})")
    if verify:
        deep = _limit(mdl, 2 * steps, 2 * dps)
        with mpmath.workdps(2 * dps):
            if abs(deep - hi) > precision + _tail(mdl, 2 * steps):
                raise ArithmeticError("doubled-depth evaluation disagrees")
    return HeightValue(hi, precision)


def height_search_bound(height: float) -> float:
    """Every point with hhat <= height has naive x-height H <= this bound."""
    return math.exp(2 * (height - HEIGHT_GAP[0]))


# ---------------------------------------------------------------------------
# eta_d


class EtaStatus(str, enum.Enum):
    FOUND = "FOUND"
    NOT_FOUND_BELOW_BOUND = "NOT_FOUND_BELOW_BOUND"


@dataclass(frozen=True)
class EtaResult:
    d: int
    status: EtaStatus
    witness: CurvePoint | None
    eta_log: float | None
    search_bound: int

    @property
    def certified_minimum(self) -> bool:
        """True when no point outside the search can have smaller height."""
        if self.status is not EtaStatus.FOUND:
            return False
        return self.eta_log <= 0.5 * math.log(self.search_bound) + HEIGHT_GAP[0]

    def to_json(self) -> dict:
        w = self.witness
        return {
            "d": self.d,
            "status": self.status.value,
            "witness_x": None if w is None else f"{w.x.numerator}/{w.x.denominator}",
            "witness_y": None if w is None else f"{w.y.numerator}/{w.y.denominator}",
            "eta_log": None if self.eta_log is None else float(format(self.eta_log, ".17g")),
            "search_bound_log": float(format(math.log(self.search_bound), ".17g")),
            "search_bound": self.search_bound,
            "convention": HEIGHT_CONVENTION,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "EtaResult":
        w = None
        if obj.get("witness_x") is not None:
            w = CurvePoint(Fraction(obj["witness_x"]), Fraction(obj["witness_y"]))
        if obj.get("convention", HEIGHT_CONVENTION) != HEIGHT_CONVENTION:
            raise ValueError(f"unsupported height convention {obj['convention']!r}")
        bound = obj.get("search_bound")
        if bound is None:
            bound = round(math.exp(obj["search_bound_log"]))
        return cls(int(obj["d"]), EtaStatus(obj["status"]), w, obj.get("eta_log"), int(bound))


def minimal_height_point(d: int, points, tol: float = 1e-10, max_depth: int = DEFAULT_MAX_DEPTH):
    """(hhat, witness) minimizing hhat over ``points``; None if there are none.

    Points are visited by increasing naive height and the scan stops once the
    height gap rules out any improvement. Ties within 2*tol go to the point of
    smaller naive height, then smaller x.
    """
    pts = sorted({P for P in points if not is_torsion(d, P)}, key=lambda P: (naive_x_height(P), P.x))
    best = None
    cands = []
    for P in pts:
        h = naive_x_height(P)
        if best is not None and 0.5 * h + HEIGHT_GAP[0] > best + 2 * tol:
            break
        v = float(canonical_height(d, P, tol, max_depth).value)
        cands.append((v, P))
        if best is None or v < best:
            best = v
    if best is None:
        return None
    witness = min((P for v, P in cands if v <= best + 2 * tol), key=lambda P: (naive_x_height(P), P.x))
    return best, witness


def eta(d: int, B: int, tol: float = 1e-10, max_depth: int = DEFAULT_MAX_DEPTH) -> EtaResult:
    """Smallest canonical height among non-torsion points with descent size <= B."""
    from .descent import enumerate_quadruples, quadruple_to_point

    d = check_twist(d)
    if B < 2:
        raise ValueError("search bound must be >= 2")
    pts = [quadruple_to_point(q)[1] for q in enumerate_quadruples(B, d=d)]
    found = minimal_height_point(d, pts, tol, max_depth)
    if found is None:
        return EtaResult(d, EtaStatus.NOT_FOUND_BELOW_BOUND, None, None, B)
    value, witness = found
    return EtaResult(d, EtaStatus.FOUND, witness, value, B)
