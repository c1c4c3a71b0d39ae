"""Segmented sieves: Mobius values, primes, squarefree counts, and the set T.

Everything here is exact integer work on numpy arrays, split into segments of
at most ``SEGMENT_SIZE`` entries. Segments may be farmed out to worker
processes; partial results are merged in segment order so the output does not
depend on the worker count.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import isqrt

import mpmath
import numpy as np

from . import reports
from ._parallel import pmap
from .arith import as_fraction, floor_power, is_prime, is_squarefree
from .errors import BudgetError

SEGMENT_SIZE = 1 << 20
MAX_SEGMENT = 1 << 26
# Hard ceiling on the largest X any sieve here will touch.
MAX_LIMIT = 10**10


@lru_cache(maxsize=8)
def _base_primes(n: int) -> np.ndarray:
    """Primes <= n by a plain sieve (n is at most sqrt of a sieve limit)."""
    if n < 2:
        return np.zeros(0, dtype=np.int64)
    flags = np.ones(n + 1, dtype=bool)
    flags[:2] = False
    for i in range(2, isqrt(n) + 1):
        if flags[i]:
            flags[i * i :: i] = False
    return np.flatnonzero(flags).astype(np.int64)


def _segments(lo: int, hi: int, size: int) -> list[tuple[int, int]]:
    return [(a, min(a + size - 1, hi)) for a in range(lo, hi + 1, size)]


def _check_limit(hi: int) -> None:
    if hi > MAX_LIMIT:
        raise BudgetError(f"limit {hi} exceeds the configured ceiling {MAX_LIMIT}")


# ---------------------------------------------------------------------------
# Mobius


@dataclass(frozen=True, eq=False)
class MobiusSegment:
    """mu(n) for every n in [lo, hi]; ``values[n - lo]`` is mu(n)."""

    lo: int
    hi: int
    values: np.ndarray = field(repr=False)

    def __getitem__(self, n: int) -> int:
        if not self.lo <= n <= self.hi:
            raise IndexError(n)
        return int(self.values[n - self.lo])

    def __len__(self) -> int:
        return self.hi - self.lo + 1

    def checksum(self) -> str:
        h = hashlib.sha256(f"{self.lo}:{self.hi}:".encode())
        h.update(np.ascontiguousarray(self.values, dtype=np.int8).tobytes())
        return h.hexdigest()


def mobius_segment(lo: int, hi: int, max_size: int = MAX_SEGMENT) -> MobiusSegment:
    if lo < 1:
        raise ValueError("mobius_segment needs lo >= 1")
    if hi < lo:
        raise ValueError(f"empty range [{lo}, {hi}]")
    size = hi - lo + 1
    if size > max_size:
        raise BudgetError(f"segment of {size} entries exceeds budget {max_size}")
    _check_limit(hi)

    mu = np.ones(size, dtype=np.int8)
    rest = np.arange(lo, hi + 1, dtype=np.int64)
    for p in _base_primes(isqrt(hi)):
        p = int(p)
        s = (-lo) % p
        mu[s::p] = -mu[s::p]
        rest[s::p] //= p
        s2 = (-lo) % (p * p)
        mu[s2 :: p * p] = 0
    # At most one prime factor above sqrt(hi) survives in `rest`.
    mu[rest > 1] = -mu[rest > 1]
    return MobiusSegment(lo, hi, mu)


def _mobius_values(bounds: tuple[int, int]) -> np.ndarray:
    return mobius_segment(*bounds).values


def mobius_range(lo: int, hi: int, segment_size: int = SEGMENT_SIZE, workers: int = 1) -> np.ndarray:
    """mu over [lo, hi] assembled from tiles of ``segment_size``."""
    if segment_size < 1:
        raise ValueError("segment_size must be >= 1")
    tiles = pmap(_mobius_values, _segments(lo, hi, segment_size), workers)
    return np.concatenate(tiles) if tiles else np.zeros(0, dtype=np.int8)


# ---------------------------------------------------------------------------
# Primes


def _prime_segment(bounds: tuple[int, int]) -> np.ndarray:
    lo, hi = bounds
    flags = np.ones(hi - lo + 1, dtype=bool)
    for p in _base_primes(isqrt(hi)):
        p = int(p)
        start = max(p * p, -(-lo // p) * p)
        if start <= hi:
            flags[start - lo :: p] = False
    if lo <= 1:
        flags[: 2 - lo] = False
    return np.flatnonzero(flags).astype(np.int64) + lo


def primes_in(lo: int, hi: int, segment_size: int = SEGMENT_SIZE, workers: int = 1) -> np.ndarray:
    """Ascending array of the primes in [lo, hi]."""
    if hi < lo:
        raise ValueError(f"empty range [{lo}, {hi}]")
    lo = max(lo, 1)
    _check_limit(hi)
    parts = pmap(_prime_segment, _segments(lo, hi, segment_size), workers)
    return np.concatenate(parts) if parts else np.zeros(0, dtype=np.int64)


# ---------------------------------------------------------------------------
# Squarefree counts and Mertens sums


def _sqf_progression_segment(job: tuple[int, int, int, int]) -> int:
    lo, hi, a, q = job
    sqf = np.ones(hi - lo + 1, dtype=bool)
    for p in _base_primes(isqrt(hi)):
        p2 = int(p) * int(p)
        sqf[(-lo) % p2 :: p2] = False
    return int(np.count_nonzero(sqf[(a - lo) % q :: q]))


def squarefree_progression_count(
    X: int, a: int, q: int, segment_size: int = SEGMENT_SIZE, workers: int = 1
) -> int:
    """Number of squarefree n <= X with n = a (mod q); a is read modulo q."""
    if q < 1:
        raise ValueError("modulus q must be >= 1")
    a %= q
    if X < 1:
        return 0
    _check_limit(X)
    jobs = [(lo, hi, a, q) for lo, hi in _segments(1, X, segment_size)]
    return sum(pmap(_sqf_progression_segment, jobs, workers))


def _reciprocals(bounds: tuple[int, int]) -> np.ndarray:
    return 1.0 / _prime_segment(bounds).astype(np.float64)


def prime_reciprocal_sum(lo_excl: int, hi: int, segment_size: int = SEGMENT_SIZE, workers: int = 1) -> float:
    """Sum of 1/p over primes p with lo_excl < p <= hi, correctly rounded."""
    if hi <= lo_excl:
        return 0.0
    _check_limit(hi)
    parts = pmap(_reciprocals, _segments(max(lo_excl + 1, 1), hi, segment_size), workers)
    # fsum is exactly rounded, so the partition cannot change the result.
    return math.fsum(x for part in parts for x in part.tolist())


def mertens_window_sum(X: int, theta, segment_size: int = SEGMENT_SIZE, workers: int = 1) -> float:
    """Sum of 1/p over primes in (X**(1 - theta), X]."""
    t = _check_theta(theta)
    if X < 3:
        raise ValueError("mertens_window_sum needs X >= 3")
    return prime_reciprocal_sum(floor_power(X, 1 - t), X, segment_size, workers)


# ---------------------------------------------------------------------------
# The set T: n = m*p = 5 (mod 8) in (X^(2 theta), X], m squarefree <= X^theta


@dataclass(frozen=True, slots=True)
class TSetRecord:
    n: int
    m: int
    p: int

    def check(self, theta, X: int) -> None:
        """Raise AssertionError unless every membership condition holds."""
        t = as_fraction(theta)
        mmax, low = floor_power(X, t), floor_power(X, 2 * t)
        assert self.n == self.m * self.p
        assert is_squarefree(self.m) and is_prime(self.p)
        assert self.m <= mmax and low < self.n <= X
        assert self.n % 8 == 5
        assert self.p > mmax


def _check_theta(theta) -> Fraction:
    t = as_fraction(theta)
    if not 0 < t < Fraction(1, 2):
        raise ValueError(f"theta must lie in (0, 1/2), got {theta}")
    return t


def _t_setup(theta, X: int):
    t = _check_theta(theta)
    if X < 5:
        return None
    _check_limit(X)
    mmax = floor_power(X, t)
    low = floor_power(X, 2 * t)
    # n odd forces m odd; p = 5 * m^-1 (mod 8).
    ms = [(m, 5 * pow(m, -1, 8) % 8) for m in range(1, mmax + 1, 2) if is_squarefree(m)]
    return mmax, low, ms


def _t_segment(job):
    lo, hi, X, low, ms, collect = job
    primes = _prime_segment((lo, hi))
    res8 = primes % 8
    out = []
    for m, r in ms:
        sel = (primes > low // m) & (primes <= X // m) & (res8 == r)
        if collect:
            out.append((m, primes[sel]))
        else:
            out.append(int(np.count_nonzero(sel)))
    return out


def _t_jobs(theta, X, segment_size, collect):
    setup = _t_setup(theta, X)
    if setup is None:
        return None, []
    mmax, low, ms = setup
    # Every p used satisfies p > low // mmax.
    start = low // mmax + 1
    return setup, [(lo, hi, X, low, ms, collect) for lo, hi in _segments(start, X, segment_size)]


def count_T(theta, X: int, segment_size: int = SEGMENT_SIZE, workers: int = 1) -> int:
    """|T_theta(X)| without materializing the set."""
    _, jobs = _t_jobs(theta, X, segment_size, collect=False)
    return sum(c for part in pmap(_t_segment, jobs, workers) for c in part)


def enumerate_T_arrays(theta, X: int, segment_size: int = SEGMENT_SIZE, workers: int = 1):
    """(n, m, p) as int64 arrays sorted by n."""
    _, jobs = _t_jobs(theta, X, segment_size, collect=True)
    ns, ms, ps = [], [], []
    for part in pmap(_t_segment, jobs, workers):
        for m, primes in part:
            ns.append(primes * m)
            ms.append(np.full(primes.size, m, dtype=np.int64))
            ps.append(primes)
    if not ns:
        empty = np.zeros(0, dtype=np.int64)
        return empty, empty, empty
    n, m, p = (np.concatenate(a) for a in (ns, ms, ps))
    order = np.argsort(n, kind="stable")
    return n[order], m[order], p[order]


def enumerate_T(theta, X: int, segment_size: int = SEGMENT_SIZE, workers: int = 1) -> list[TSetRecord]:
    n, m, p = enumerate_T_arrays(theta, X, segment_size, workers)
    return [TSetRecord(int(a), int(b), int(c)) for a, b, c in zip(n.tolist(), m.tolist(), p.tolist())]


def predicted_T(theta, X: int) -> float:
    """Main term -log(1 - theta) / pi^2 * X."""
    t = _check_theta(theta)
    with mpmath.workdps(40):
        v = -mpmath.log(1 - mpmath.mpf(t.numerator) / t.denominator) / mpmath.pi**2 * X
        return float(v)


def check_unique_decomposition(n: int, theta, X: int) -> bool:
    """True iff n has at most one factorization m*p, m squarefree <= X^theta, p prime."""
    t = _check_theta(theta)
    low = floor_power(X, 2 * t)
    if not low < n <= X:
        raise ValueError(f"{n} is outside (X^(2 theta), X]")
    mmax = floor_power(X, t)
    hits = 0
    for m in range(1, min(mmax, n) + 1):
        if n % m == 0 and is_squarefree(m) and is_prime(n // m):
            hits += 1
    return hits <= 1


# ---------------------------------------------------------------------------
# Density reports


@dataclass(frozen=True)
class DensityRow:
    X: int
    observed: int
    predicted: float
    abs_error: float
    rel_error: float

    @classmethod
    def make(cls, X: int, observed: int, predicted: float) -> "DensityRow":
        err = abs(observed - predicted)
        return cls(X, observed, predicted, err, err / predicted if predicted else math.inf)


@dataclass
class DensityReport:
    rows: list[DensityRow]
    metadata: dict = field(default_factory=dict)

    COLUMNS = ("X", "observed", "predicted", "abs_error", "rel_error")

    def __post_init__(self):
        self.rows = sorted(self.rows, key=lambda r: r.X)

    def _tuples(self):
        return [(r.X, r.observed, r.predicted, r.abs_error, r.rel_error) for r in self.rows]

    def to_csv(self) -> str:
        return reports.to_csv(self.COLUMNS, self._tuples(), self.metadata)

    def to_jsonl(self) -> str:
        return reports.to_jsonl(self.COLUMNS, self._tuples(), self.metadata)

    @classmethod
    def _from_records(cls, meta, records):
        rows = [
            DensityRow(int(r["X"]), int(r["observed"]), float(r["predicted"]), float(r["abs_error"]), float(r["rel_error"]))
            for r in records
        ]
        return cls(rows, meta)

    @classmethod
    def from_csv(cls, text: str) -> "DensityReport":
        return cls._from_records(*reports.parse_csv(text))

    @classmethod
    def from_jsonl(cls, text: str) -> "DensityReport":
        return cls._from_records(*reports.parse_jsonl(text))
