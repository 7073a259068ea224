"""Exact integer number theory helpers: primality, factoring, square classes.

Everything here is deterministic.  The Miller-Rabin base set is valid for
all inputs below 3.3 * 10**24, far beyond anything this package produces;
Pollard-Brent rho covers composites that survive trial division.
"""

from __future__ import annotations

from fractions import Fraction
from math import gcd, isqrt

_SMALL_PRIMES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)

# deterministic witness set for n < 3_317_044_064_679_887_385_961_981
_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    for p in _SMALL_PRIMES:
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


def _icbrt(n: int) -> int:
    """Integer cube root (floor) by Newton iteration."""
    if n < 2:
        return n
    x = 1 << (n.bit_length() // 3 + 1)
    while True:
        y = (2 * x + n // (x * x)) // 3
        if y >= x:
            return x
        x = y


def _pollard_rho(n: int) -> int:
    """One nontrivial factor of an odd composite n (Brent's cycle variant)."""
    if n % 2 == 0:
        return 2
    c = 1
    while True:
        x = y = 2
        d = 1
        while d == 1:
            x = (x * x + c) % n
            y = (y * y + c) % n
            y = (y * y + c) % n
            d = gcd(abs(x - y), n)
        if d != n:
            return d
        c += 1


def factorize(n: int) -> dict[int, int]:
    """Prime factorization of |n| as {prime: exponent}; n must be nonzero."""
    if n == 0:
        raise ValueError("cannot factor 0")
    n = abs(n)
    out: dict[int, int] = {}
    for p in (2, 3, 5):
        while n % p == 0:
            out[p] = out.get(p, 0) + 1
            n //= p
    f = 7
    steps = (4, 2, 4, 2, 4, 6, 2, 6)
    i = 0
    while f * f <= n and f < 100_000:
        if n % f == 0:
            out[f] = out.get(f, 0) + 1
            n //= f
        else:
            f += steps[i]
            i = (i + 1) % 8
    if n > 1:
        stack = [n]
        while stack:
            m = stack.pop()
            if m == 1:
                continue
            # rho degrades badly on perfect powers; peel them off first
            r = isqrt(m)
            if r * r == m:
                stack.extend((r, r))
                continue
            r = _icbrt(m)
            if r**3 == m:
                stack.extend((r, r, r))
                continue
            if is_prime(m):
                out[m] = out.get(m, 0) + 1
                continue
            d = _pollard_rho(m)
            stack.append(d)
            stack.append(m // d)
    return out


def squarefree_part(q: int | Fraction) -> int:
    """The squarefree integer representing q modulo nonzero rational squares.

    For q = a/b this is the squarefree part of a*b, carrying the sign of q.
    """
    q = Fraction(q)
    if q == 0:
        raise ValueError("0 has no squarefree representative")
    n = q.numerator * q.denominator
    sign = -1 if n < 0 else 1
    out = 1
    for p, e in factorize(n).items():
        if e % 2:
            out *= p
    return sign * out


def legendre(a: int, p: int) -> int:
    """Legendre symbol (a|p) for odd prime p; a must be a unit mod p."""
    a %= p
    if a == 0:
        raise ValueError(f"{a} is not a unit mod {p}")
    ls = pow(a, (p - 1) // 2, p)
    return -1 if ls == p - 1 else 1


def smallest_nonresidue(p: int) -> int:
    """Least quadratic nonresidue of an odd prime, searched from 2 upward."""
    a = 2
    while legendre(a, p) == 1:
        a += 1
    return a


def valuation(q: Fraction | int, p: int) -> int:
    """p-adic valuation of a nonzero rational."""
    q = Fraction(q)
    if q == 0:
        raise ValueError("valuation of 0 is undefined")
    v = 0
    n = q.numerator
    while n % p == 0:
        n //= p
        v += 1
    d = q.denominator
    while d % p == 0:
        d //= p
        v -= 1
    return v


def unit_part(q: Fraction | int, p: int) -> Fraction:
    """q / p**valuation(q, p), a p-adic unit."""
    return Fraction(q) / Fraction(p) ** valuation(q, p)


def unit_residue(q: Fraction | int, p: int, modulus: int | None = None) -> int:
    """Residue of the p-adic unit part of q modulo `modulus` (default p).

    Uses num * den^(-1) mod modulus, so the denominator must be a unit there.
    """
    u = unit_part(q, p)
    m = p if modulus is None else modulus
    return u.numerator * pow(u.denominator, -1, m) % m


def crt(residues: list[tuple[int, int]]) -> tuple[int, int]:
    """Solve x = r (mod m) for pairwise coprime moduli; returns (x, lcm)."""
    x, m = 0, 1
    for r, mod in residues:
        g = gcd(m, mod)
        if g != 1:
            raise ValueError("crt moduli must be coprime")
        h = (r - x) * pow(m, -1, mod) % mod
        x += m * h
        m *= mod
    return x % m, m


def prime_in_progression(residue: int, modulus: int, max_steps: int = 100_000) -> int:
    """Smallest prime = residue (mod modulus); residue must be coprime to modulus."""
    if gcd(residue, modulus) != 1:
        raise ValueError("residue not coprime to modulus")
    m = residue % modulus
    if m == 0:
        m = modulus
    for _ in range(max_steps):
        if m > 1 and is_prime(m):
            return m
        m += modulus
    raise ArithmeticError(
        f"no prime found = {residue} mod {modulus} within {max_steps} steps"
    )
