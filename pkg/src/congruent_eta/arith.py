"""Small exact integer helpers shared by the sieve, curve and descent code."""

from __future__ import annotations

from fractions import Fraction
from math import gcd, isqrt

import mpmath

# Deterministic Miller-Rabin witnesses: correct for every n < 3.3e24.
_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41)


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    for p in _MR_BASES:
        if n % p == 0:
            return n == p
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in _MR_BASES:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def factorize(n: int) -> dict[int, int]:
    """Prime factorization by trial division; fine for n up to ~1e12."""
    if n < 1:
        raise ValueError(f"cannot factor {n}")
    out: dict[int, int] = {}
    for p in (2, 3):
        while n % p == 0:
            out[p] = out.get(p, 0) + 1
            n //= p
    p, step = 5, 2
    while p * p <= n:
        while n % p == 0:
            out[p] = out.get(p, 0) + 1
            n //= p
        p += step
        step = 6 - step
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


def is_squarefree(n: int) -> bool:
    return n >= 1 and all(e == 1 for e in factorize(n).values())


def squarefree_decompose(n: int) -> tuple[int, int]:
    """Return (core, root) with n = core * root**2 and core squarefree."""
    core, root = 1, 1
    for p, e in factorize(n).items():
        root *= p ** (e // 2)
        if e % 2:
            core *= p
    return core, root


def is_square(n: int) -> bool:
    return n >= 0 and isqrt(n) ** 2 == n


def divisors(n: int) -> list[int]:
    divs = [1]
    for p, e in factorize(n).items():
        divs = [d * p**k for d in divs for k in range(e + 1)]
    return sorted(divs)


def ordered_factorizations(n: int, parts: int) -> list[tuple[int, ...]]:
    """All ordered tuples of positive integers of length `parts` with product n."""
    if parts == 1:
        return [(n,)]
    out = []
    for d in divisors(n):
        for rest in ordered_factorizations(n // d, parts - 1):
            out.append((d,) + rest)
    return out


def coprime(a: int, b: int) -> bool:
    return gcd(a, b) == 1


def as_fraction(t) -> Fraction:
    """Exact rational for a parameter given as float, str, int or Fraction.

    Floats go through their shortest repr, so 0.30996 becomes 7749/25000.
    """
    if isinstance(t, Fraction):
        return t
    if isinstance(t, float):
        return Fraction(repr(t))
    return Fraction(t)


def floor_power(X: int, theta) -> int:
    """floor(X**theta) for integer X >= 1 and rational theta >= 0, certified.

    A 50-digit evaluation decides unless the value sits within 1e-30 of an
    integer, in which case the comparison k**den <= X**num is done exactly.
    """
    if X < 1:
        raise ValueError("X must be >= 1")
    t = as_fraction(theta)
    if t < 0:
        raise ValueError("theta must be >= 0")
    with mpmath.workdps(50):
        v = mpmath.power(mpmath.mpf(X), mpmath.mpf(t.numerator) / t.denominator)
        k = int(mpmath.floor(v))
        close = min(v - k, k + 1 - v) < mpmath.mpf(10) ** -30
    if not close:
        return k
    a, b = t.numerator, t.denominator
    Xa = X**a
    k = max(k - 1, 0)
    while (k + 1) ** b <= Xa:
        k += 1
    while k > 0 and k**b > Xa:
        k -= 1
    return k
