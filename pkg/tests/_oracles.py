"""Independent brute-force oracles used to validate the closed-form kernels.

These deliberately share no code with the implementations they check:
the Hilbert-symbol oracle enumerates p-adic solutions level by level,
the signature oracle uses Jacobi's leading-principal-minor criterion,
and the root oracle is plain sign-change bisection.
"""

from __future__ import annotations

from fractions import Fraction

from k3cm.intmath import squarefree_part, valuation
from k3cm.linalg import Matrix, det


def oracle_hilbert(a, b, p: int) -> int:
    """Certified p-adic solvability of z^2 = a x^2 + b y^2.

    Inputs are reduced to squarefree integers (the symbol is invariant under
    scaling either argument by a nonzero square).  Primitive solutions are
    tree-searched modulo p^k, deduplicated modulo unit scaling.  A node at
    level k with exact gradient valuation t < k certifies solvability once
    k >= 2t + 1 (Hensel/Newton); an empty level certifies insolvability.
    Every primitive triple has t <= max(v(2a), v(2b), v(2)), so the search
    terminates by level 2*max + 1 with a definite answer.
    """
    a = squarefree_part(Fraction(a))
    b = squarefree_part(Fraction(b))
    tmax = max(valuation(2 * a, p), valuation(2 * b, p), valuation(2, p))
    kmax = 2 * tmax + 1

    def f(x, y, z):
        return a * x * x + b * y * y - z * z

    def grad_val(x, y, z, cap):
        best = cap
        for g in (2 * a * x, 2 * b * y, -2 * z):
            if g != 0:
                v = 0
                while g % p == 0 and v < best:
                    g //= p
                    v += 1
                best = min(best, v)
        return best

    def canonical(node, mod):
        x, y, z = node
        for c in (x, y, z):
            if c % p:
                inv = pow(c, -1, mod)
                return (x * inv % mod, y * inv % mod, z * inv % mod)
        raise AssertionError("non-primitive node")

    level = set()
    for x in range(p):
        for y in range(p):
            for z in range(p):
                if x % p == 0 and y % p == 0 and z % p == 0:
                    continue
                if f(x, y, z) % p == 0:
                    level.add(canonical((x, y, z), p))
    k = 1
    while True:
        if not level:
            return -1
        for node in level:
            t = grad_val(*node, cap=k)
            if t < k and k >= 2 * t + 1:
                return 1
        if k >= kmax:
            raise AssertionError("oracle depth bound violated")
        pk = p**k
        mod = p ** (k + 1)
        nxt = set()
        for (x, y, z) in level:
            for dx in range(p):
                for dy in range(p):
                    for dz in range(p):
                        cand = (x + dx * pk, y + dy * pk, z + dz * pk)
                        if f(*cand) % mod == 0:
                            nxt.add(canonical(cand, mod))
        level = nxt
        k += 1


def oracle_signature(gram: Matrix) -> tuple[int, int]:
    """Signature of a nondegenerate symmetric matrix via the sign sequence
    of leading principal minors (Jacobi), with a basis perturbation retry
    when a leading minor vanishes."""
    n = len(gram)
    minors = [Fraction(1)]
    for k in range(1, n + 1):
        sub = tuple(tuple(gram[i][j] for j in range(k)) for i in range(k))
        minors.append(det(sub))
    if any(m == 0 for m in minors[1:]):
        shuffled = _perturb(gram)
        return oracle_signature(shuffled)
    neg = sum(
        1 for k in range(1, n + 1) if (minors[k] < 0) != (minors[k - 1] < 0)
    )
    return n - neg, neg


def _perturb(gram: Matrix) -> Matrix:
    """Congruent basis tweak e_i <- e_i + e_{i+1} to escape zero minors."""
    n = len(gram)
    basis = [[Fraction(1 if i == j else 0) for j in range(n)] for i in range(n)]
    for i in range(n - 1):
        basis[i + 1][i] += 1
    g = [[sum(basis[k][i] * gram[k][l] * basis[l][j] for k in range(n) for l in range(n))
          for j in range(n)] for i in range(n)]
    return tuple(tuple(row) for row in g)


def oracle_cubic_roots(coeffs, width=Fraction(1, 10**6)):
    """Roots of a cubic x^3 + c2 x^2 + c1 x + c0 with three distinct real
    roots, isolated by grid sign changes and refined by bisection."""
    c0, c1, c2 = (Fraction(c) for c in coeffs)

    def p(x):
        return ((x + c2) * x + c1) * x + c0

    bound = 1 + max(abs(c0), abs(c1), abs(c2))
    pieces = 8
    while True:
        xs = [-bound + 2 * bound * Fraction(i, pieces) for i in range(pieces + 1)]
        brackets = [
            (xs[i], xs[i + 1])
            for i in range(pieces)
            if p(xs[i]) * p(xs[i + 1]) < 0
        ]
        if len(brackets) == 3:
            break
        if any(p(x) == 0 for x in xs):
            raise ValueError("rational root: not an irreducible cubic")
        pieces *= 2
        if pieces > 2**24:
            raise ValueError("could not isolate three real roots")
    out = []
    for lo, hi in brackets:
        while hi - lo > width:
            mid = (lo + hi) / 2
            if p(mid) == 0:
                lo = hi = mid
                break
            if p(lo) * p(mid) < 0:
                hi = mid
            else:
                lo = mid
        out.append((lo, hi))
    return out
