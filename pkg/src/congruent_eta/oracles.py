"""Brute-force reference computations used to cross-check the fast paths.

Nothing here shares code with the descent enumeration: points are found by
scanning every x = p/q directly.
"""

from __future__ import annotations

from fractions import Fraction
from math import isqrt

import numpy as np

from ._parallel import pmap
from .curve import CurvePoint


def _core_table(M: int) -> np.ndarray:
    # core[n] = squarefree part of n, by dividing out p^2 for every prime p.
    core = np.arange(M + 1, dtype=np.int64)
    for p in range(2, isqrt(M) + 1):
        if any(p % k == 0 for k in range(2, isqrt(p) + 1)):
            continue
        sq = p * p
        while True:
            idx = np.flatnonzero(core % sq == 0)
            idx = idx[idx > 0]
            if idx.size == 0:
                break
            core[idx] //= sq
    return core


def _scan_rows(job):
    q_lo, q_hi, height, ds = job
    wanted = np.array(sorted(set(ds)), dtype=np.int64)
    core = _core_table(2 * height)
    hits = {d: [] for d in ds}
    for q in range(q_lo, q_hi + 1):
        # x^3 - x > 0 exactly for x in (-1, 0) or x > 1.
        p = np.concatenate([np.arange(-q + 1, 0), np.arange(q + 1, height + 1)]).astype(np.int64)
        p = p[np.gcd(p, q) == 1]
        a = np.abs(p)
        u, w = np.abs(a - q), a + q
        # N = |p| q |p - q| (p + q); the four factors are coprime except that
        # |p - q| and p + q share a 2 when p and q are both odd.
        cu, cw = core[u], core[w]
        g = np.gcd(cu, cw)
        c = core[a] * core[q] * (cu // g) * (cw // g)
        sel = np.flatnonzero(np.isin(c, wanted))
        for i in sel.tolist():
            # Confirm d y^2 = x^3 - x directly: N / d must be a perfect square.
            N = int(p[i]) * q * (int(p[i]) ** 2 - q * q)
            d = int(c[i])
            s = isqrt(N // d)
            if N % d == 0 and s * s * d == N:
                hits[d].append((int(p[i]), q, s))
    return hits


def brute_force_points(height: int, ds, workers: int = 1) -> dict[int, set[CurvePoint]]:
    """All points (x, y), y > 0, with x = p/q, max(|p|, q) <= height, on each E_d."""
    ds = tuple(int(d) for d in ds)
    step = max(1, height // 64)
    jobs = [(lo, min(lo + step - 1, height), height, ds) for lo in range(1, height + 1, step)]
    out: dict[int, set[CurvePoint]] = {d: set() for d in ds}
    for part in pmap(_scan_rows, jobs, workers):
        for d, triples in part.items():
            for p, q, s in triples:
                out[d].add(CurvePoint(Fraction(p, q), Fraction(s, q * q)))
    return out


def tunnell_counts_brute(n: int, a: int, b: int, c: int) -> int:
    """#{(x, y, z) in Z^3 : a x^2 + b y^2 + c z^2 = n} by a triple loop."""
    count = 0
    for x in range(-isqrt(n // a), isqrt(n // a) + 1):
        for z in range(-isqrt(n // c), isqrt(n // c) + 1):
            rest = n - a * x * x - c * z * z
            if rest < 0 or rest % b:
                continue
            r = rest // b
            y = isqrt(r)
            if y * y == r:
                count += 1 if y == 0 else 2
    return count
