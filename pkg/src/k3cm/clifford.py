"""Clifford algebras of arbitrary symmetric bilinear forms, exact.

Monomials in the generators e_1..e_n are encoded as n-bit masks in
increasing index order; an element is a sparse mask -> coefficient map.
Multiplication rewrites monomial pairs: moving a generator leftward past
a larger-index one flips the sign and, when the Gram pairing of the two
indices is nonzero, emits a contraction term 2 gram[i][j] with both
generators removed; meeting the same index contracts to gram[j][j].
This supports any symmetric Gram matrix, not just diagonal ones, over
the rationals, a prime field, or any ring exposing the small protocol
below.  All products are memoized per algebra at monomial granularity.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np

from .linalg import EchelonModP


class AlgebraMismatchError(ValueError):
    """Operands belong to different algebras."""


class CoefficientModulusError(ValueError):
    """A coefficient cannot be reduced modulo the requested prime."""


class RationalRing:
    """Exact rational coefficients."""

    p = None

    def __init__(self):
        self.zero = Fraction(0)
        self.one = Fraction(1)

    def coerce(self, x):
        return Fraction(x)

    def add(self, a, b):
        return a + b

    def mul(self, a, b):
        return a * b

    def neg(self, a):
        return -a

    def inv(self, a):
        return 1 / a

    def is_zero(self, a) -> bool:
        return a == 0

    def to_str(self, a) -> str:
        return str(a)

    def __repr__(self):
        return "Q"


class PrimeRing:
    """Coefficients in F_p as canonical integers 0..p-1."""

    def __init__(self, p: int):
        from .intmath import is_prime

        if not is_prime(p):
            raise ValueError(f"{p} is not prime")
        self.p = p
        self.zero = 0
        self.one = 1

    def coerce(self, x):
        if isinstance(x, int):
            return x % self.p
        f = Fraction(x)
        if f.denominator % self.p == 0:
            raise CoefficientModulusError(
                f"denominator of {f} is divisible by {self.p}"
            )
        return f.numerator * pow(f.denominator, -1, self.p) % self.p

    def add(self, a, b):
        return (a + b) % self.p

    def mul(self, a, b):
        return a * b % self.p

    def neg(self, a):
        return -a % self.p

    def inv(self, a):
        return pow(a, -1, self.p)

    def is_zero(self, a) -> bool:
        return a % self.p == 0

    def to_str(self, a) -> str:
        return str(a % self.p)

    def __repr__(self):
        return f"GF({self.p})"


class CliffordAlgebra:
    """Clifford algebra of a symmetric bilinear form over a coefficient ring.

    The defining relations e_i e_j + e_j e_i = 2 gram[i][j] (so that
    e_i^2 = gram[i][i]) hold in every product.
    """

    def __init__(self, gram, ring=None):
        self.ring = ring if ring is not None else RationalRing()
        rows = [list(row) for row in gram]
        n = len(rows)
        if any(len(r) != n for r in rows):
            raise ValueError("Gram matrix must be square")
        g = tuple(
            tuple(self.ring.coerce(x) for x in row) for row in rows
        )
        for i in range(n):
            for j in range(n):
                if g[i][j] != g[j][i]:
                    raise ValueError("Gram matrix must be symmetric")
        self.n = n
        self.gram = g
        self.dim = 1 << n
        self._two_gram = tuple(
            tuple(self.ring.add(x, x) for x in row) for row in g
        )
        self._insert_memo: dict[tuple[int, int], tuple] = {}
        self._pair_memo: dict[tuple[int, int], tuple] = {}
        self._reverse_memo: dict[int, tuple] = {}
        self._right_trace_memo: dict[int, object] = {}

    # -- element constructors ------------------------------------------------

    def element(self, terms: Mapping[int, object]) -> "CliffordElt":
        out = {}
        for mask, c in terms.items():
            if not 0 <= mask < self.dim:
                raise ValueError(f"mask {mask} out of range")
            c = self.ring.coerce(c)
            if not self.ring.is_zero(c):
                out[mask] = c
        return CliffordElt(self, out)

    def zero(self) -> "CliffordElt":
        return CliffordElt(self, {})

    def scalar(self, c) -> "CliffordElt":
        return self.element({0: c})

    def one(self) -> "CliffordElt":
        return self.scalar(1)

    def generator(self, i: int) -> "CliffordElt":
        if not 0 <= i < self.n:
            raise ValueError(f"generator index {i} out of range")
        return self.element({1 << i: 1})

    def monomial(self, indices: Iterable[int]) -> "CliffordElt":
        mask = 0
        for i in indices:
            bit = 1 << i
            if mask & bit:
                raise ValueError("repeated index in monomial")
            mask |= bit
        return self.element({mask: 1})

    def even_masks(self) -> list[int]:
        return [m for m in range(self.dim) if _popcount(m) % 2 == 0]

    def mod_p(self, p: int) -> "CliffordAlgebra":
        """The same presentation with coefficients reduced modulo p."""
        if isinstance(self.ring, PrimeRing):
            if self.ring.p != p:
                raise ValueError("algebra already lives over a different prime")
            return self
        return CliffordAlgebra(self.gram, PrimeRing(p))

    # -- monomial products ---------------------------------------------------

    def _insert(self, mask: int, j: int) -> tuple:
        """Expansion of x_mask * e_j in the monomial basis."""
        key = (mask, j)
        hit = self._insert_memo.get(key)
        if hit is not None:
            return hit
        ring = self.ring
        terms = []
        sign_neg = False
        for i in range(self.n - 1, j, -1):
            if not (mask >> i) & 1:
                continue
            tg = self._two_gram[i][j]
            if not ring.is_zero(tg):
                coeff = ring.neg(tg) if sign_neg else tg
                terms.append((mask ^ (1 << i), coeff))
            sign_neg = not sign_neg
        if (mask >> j) & 1:
            g = self.gram[j][j]
            if not ring.is_zero(g):
                coeff = ring.neg(g) if sign_neg else g
                terms.append((mask ^ (1 << j), coeff))
        else:
            coeff = ring.neg(ring.one) if sign_neg else ring.one
            terms.append((mask | (1 << j), coeff))
        out = tuple(terms)
        self._insert_memo[key] = out
        return out

    def mul_masks(self, a: int, b: int) -> tuple:
        """x_a * x_b as ((mask, coeff), ...)."""
        key = (a, b)
        hit = self._pair_memo.get(key)
        if hit is not None:
            return hit
        ring = self.ring
        acc = {a: ring.one}
        j = 0
        rem = b
        while rem:
            if rem & 1:
                nxt: dict[int, object] = {}
                for m, c in acc.items():
                    for m2, c2 in self._insert(m, j):
                        prev = nxt.get(m2)
                        val = (
                            ring.mul(c, c2)
                            if prev is None
                            else ring.add(prev, ring.mul(c, c2))
                        )
                        if ring.is_zero(val):
                            nxt.pop(m2, None)
                        else:
                            nxt[m2] = val
                acc = nxt
            rem >>= 1
            j += 1
        out = tuple(acc.items())
        self._pair_memo[key] = out
        return out

    def reverse_mask(self, mask: int) -> tuple:
        """x_mask with its generators remultiplied in reversed order."""
        hit = self._reverse_memo.get(mask)
        if hit is not None:
            return hit
        ring = self.ring
        acc = {0: ring.one}
        for j in range(self.n - 1, -1, -1):
            if not (mask >> j) & 1:
                continue
            nxt: dict[int, object] = {}
            for m, c in acc.items():
                for m2, c2 in self._insert(m, j):
                    prev = nxt.get(m2)
                    val = (
                        ring.mul(c, c2)
                        if prev is None
                        else ring.add(prev, ring.mul(c, c2))
                    )
                    if ring.is_zero(val):
                        nxt.pop(m2, None)
                    else:
                        nxt[m2] = val
            acc = nxt
        out = tuple(acc.items())
        self._reverse_memo[mask] = out
        return out

    def right_trace_mask(self, mb: int):
        """Trace of y -> y * x_mb over the full monomial basis."""
        hit = self._right_trace_memo.get(mb)
        if hit is not None:
            return hit
        ring = self.ring
        total = ring.zero
        for m in range(self.dim):
            for m2, c in self.mul_masks(m, mb):
                if m2 == m:
                    total = ring.add(total, c)
        self._right_trace_memo[mb] = total
        return total

    def __repr__(self):
        return f"CliffordAlgebra(n={self.n}, ring={self.ring!r})"


def _popcount(m: int) -> int:
    return bin(m).count("1")


class CliffordElt:
    """Sparse element: mask -> nonzero coefficient.  Treated as immutable."""

    __slots__ = ("algebra", "_terms")

    def __init__(self, algebra: CliffordAlgebra, terms: dict):
        self.algebra = algebra
        self._terms = terms

    def terms(self):
        return self._terms.items()

    def coeff(self, mask: int):
        return self._terms.get(mask, self.algebra.ring.zero)

    def support(self):
        return self._terms.keys()

    def is_zero(self) -> bool:
        return not self._terms

    def is_even(self) -> bool:
        return all(_popcount(m) % 2 == 0 for m in self._terms)

    def is_grade(self, k: int) -> bool:
        return all(_popcount(m) == k for m in self._terms)

    def scalar_part(self):
        return self.coeff(0)

    def _check(self, other: "CliffordElt"):
        if self.algebra is not other.algebra:
            raise AlgebraMismatchError("elements from different algebras")

    def __eq__(self, other):
        return (
            isinstance(other, CliffordElt)
            and self.algebra is other.algebra
            and self._terms == other._terms
        )

    def __hash__(self):
        return hash((id(self.algebra), frozenset(self._terms.items())))

    def __add__(self, other):
        self._check(other)
        ring = self.algebra.ring
        out = dict(self._terms)
        for m, c in other._terms.items():
            prev = out.get(m)
            val = c if prev is None else ring.add(prev, c)
            if ring.is_zero(val):
                out.pop(m, None)
            else:
                out[m] = val
        return CliffordElt(self.algebra, out)

    def __neg__(self):
        ring = self.algebra.ring
        return CliffordElt(
            self.algebra, {m: ring.neg(c) for m, c in self._terms.items()}
        )

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c):
        ring = self.algebra.ring
        c = ring.coerce(c)
        if ring.is_zero(c):
            return self.algebra.zero()
        return CliffordElt(
            self.algebra, {m: ring.mul(x, c) for m, x in self._terms.items()}
        )

    def __rmul__(self, other):
        if isinstance(other, CliffordElt):
            return NotImplemented
        return self.scale(other)

    def __mul__(self, other):
        if not isinstance(other, CliffordElt):
            return self.scale(other)
        return mul(self, other)

    def __str__(self):
        if not self._terms:
            return "0"
        ring = self.algebra.ring
        parts = []
        for mask in sorted(self._terms):
            name = (
                "1"
                if mask == 0
                else "".join(
                    f"e{i + 1}" for i in range(self.algebra.n) if (mask >> i) & 1
                )
            )
            parts.append(f"{ring.to_str(self._terms[mask])}*{name}")
        return " + ".join(parts)

    __repr__ = __str__


def mul(x: CliffordElt, y: CliffordElt) -> CliffordElt:
    """Bilinear product by monomial-pair rewriting; exact in the ring."""
    x._check(y)
    alg = x.algebra
    ring = alg.ring
    out: dict[int, object] = {}
    for mb, cb in y._terms.items():
        for ma, ca in x._terms.items():
            cab = ring.mul(ca, cb)
            for m, c in alg.mul_masks(ma, mb):
                prev = out.get(m)
                val = (
                    ring.mul(cab, c)
                    if prev is None
                    else ring.add(prev, ring.mul(cab, c))
                )
                if ring.is_zero(val):
                    out.pop(m, None)
                else:
                    out[m] = val
    return CliffordElt(alg, out)


def reverse(x: CliffordElt) -> CliffordElt:
    """The anti-involution fixing grade 1: monomial factors remultiplied in
    reversed order.  Satisfies reverse(x y) = reverse(y) reverse(x)."""
    alg = x.algebra
    ring = alg.ring
    out: dict[int, object] = {}
    for mask, c in x._terms.items():
        for m2, c2 in alg.reverse_mask(mask):
            prev = out.get(m2)
            val = (
                ring.mul(c, c2)
                if prev is None
                else ring.add(prev, ring.mul(c, c2))
            )
            if ring.is_zero(val):
                out.pop(m2, None)
            else:
                out[m2] = val
    return CliffordElt(alg, out)


def trace_right_mult(x: CliffordElt):
    """Trace of y -> y x on the 2^n-dimensional algebra, accumulated from
    per-monomial diagonal sums (no matrix is materialized)."""
    alg = x.algebra
    ring = alg.ring
    total = ring.zero
    for mb, c in x._terms.items():
        total = ring.add(total, ring.mul(c, alg.right_trace_mask(mb)))
    return total


def coords(x: CliffordElt, masks: Sequence[int] | None = None) -> list:
    """Dense coefficient vector of x over the monomial basis.  This equals
    the empty-monomial column of left_rep(x)."""
    alg = x.algebra
    if masks is None:
        masks = range(alg.dim)
    return [x.coeff(m) for m in masks]


def left_rep(x: CliffordElt) -> dict[int, dict[int, object]]:
    """Sparse matrix of y -> x y in the monomial basis: column mask -> rows."""
    alg = x.algebra
    ring = alg.ring
    cols: dict[int, dict[int, object]] = {}
    for col in range(alg.dim):
        entries: dict[int, object] = {}
        for ma, ca in x._terms.items():
            for m, c in alg.mul_masks(ma, col):
                prev = entries.get(m)
                val = (
                    ring.mul(ca, c)
                    if prev is None
                    else ring.add(prev, ring.mul(ca, c))
                )
                if ring.is_zero(val):
                    entries.pop(m, None)
                else:
                    entries[m] = val
        if entries:
            cols[col] = entries
    return cols


# ---------------------------------------------------------------------------
# spans and ranks over F_p


def _vector_mod_p(x: CliffordElt, p: int) -> np.ndarray:
    alg = x.algebra
    v = np.zeros(alg.dim, dtype=np.int64)
    if isinstance(alg.ring, PrimeRing):
        if alg.ring.p != p:
            raise CoefficientModulusError(
                f"element lives over GF({alg.ring.p}), not GF({p})"
            )
        for m, c in x._terms.items():
            v[m] = c % p
        return v
    for m, c in x._terms.items():
        f = Fraction(c)
        if f.denominator % p == 0:
            raise CoefficientModulusError(
                f"coefficient {f} at mask {m} has denominator divisible by {p}"
            )
        v[m] = f.numerator * pow(f.denominator, -1, p) % p
    return v


def span_rank(elements: Sequence[CliffordElt], p: int) -> int:
    """Rank over F_p of the coefficient-vector span, by row echelon
    reduction.  Deterministic and independent of element order."""
    from .intmath import is_prime

    if not is_prime(p):
        raise ValueError(f"modulus {p} is not prime")
    if not elements:
        return 0
    alg = elements[0].algebra
    ech = EchelonModP(alg.dim, p)
    for x in elements:
        if x.algebra is not alg:
            raise AlgebraMismatchError("elements from different algebras")
        ech.insert(_vector_mod_p(x, p))
    return ech.rank


# ---------------------------------------------------------------------------
# word generation


@dataclass(frozen=True)
class MaxLengthPolicy:
    """All products of min_length..max_length generators in index order;
    words of length >= 2 may restrict the final factor to `last_factors`
    (indices into the generator list)."""

    max_length: int
    min_length: int = 1
    last_factors: tuple[int, ...] | None = None

    def describe(self) -> str:
        rng = (
            f"{self.min_length}..{self.max_length}"
            if self.min_length != self.max_length
            else str(self.max_length)
        )
        tail = (
            ""
            if self.last_factors is None
            else f", last factor in {list(self.last_factors)}"
        )
        return f"products of length {rng}{tail}"


@dataclass(frozen=True)
class ClosurePolicy:
    """Multiply the current span basis by the generators until the rank
    over F_modulus stabilizes."""

    modulus: int | None = None

    def describe(self) -> str:
        return "closure under right multiplication by the generators"


def generate_words(
    generators: Sequence[CliffordElt], policy
) -> list[CliffordElt]:
    if not generators:
        raise ValueError("generator list must be nonempty")
    alg = generators[0].algebra
    for g in generators:
        if g.algebra is not alg:
            raise AlgebraMismatchError("generators from different algebras")
    if isinstance(policy, MaxLengthPolicy):
        return _words_maxlen(generators, policy)
    if isinstance(policy, ClosurePolicy):
        return _words_closure(generators, policy)
    raise TypeError(f"unknown policy {policy!r}")


def _words_maxlen(generators, policy: MaxLengthPolicy) -> list[CliffordElt]:
    if policy.max_length < 1 or policy.min_length < 1:
        raise ValueError("word lengths start at 1")
    if policy.min_length > policy.max_length:
        raise ValueError("min_length exceeds max_length")
    last = (
        list(range(len(generators)))
        if policy.last_factors is None
        else list(policy.last_factors)
    )
    out: list[CliffordElt] = []
    seen_words: set[tuple[int, ...]] = set()

    def emit(word: tuple[int, ...], elt: CliffordElt):
        if word not in seen_words:
            seen_words.add(word)
            out.append(elt)

    prefixes: list[tuple[tuple[int, ...], CliffordElt]] = [((), None)]
    for length in range(1, policy.max_length + 1):
        final = length == policy.max_length
        factors = last if (final and length >= 2) else range(len(generators))
        nxt = []
        for word, elt in prefixes:
            for gi in factors:
                nw = word + (gi,)
                ne = (
                    generators[gi]
                    if elt is None
                    else mul(elt, generators[gi])
                )
                nxt.append((nw, ne))
        prefixes = nxt
        if length >= policy.min_length:
            for word, elt in prefixes:
                if length >= 2 and word[-1] not in last:
                    continue
                emit(word, elt)
    return out


def _words_closure(generators, policy: ClosurePolicy) -> list[CliffordElt]:
    alg = generators[0].algebra
    p = policy.modulus
    if p is None:
        if isinstance(alg.ring, PrimeRing):
            p = alg.ring.p
        else:
            raise ValueError("closure policy needs a modulus over Q")
    ech = EchelonModP(alg.dim, p)
    kept: list[CliffordElt] = []
    frontier: list[CliffordElt] = []
    for g in generators:
        if ech.insert(_vector_mod_p(g, p)):
            kept.append(g)
            frontier.append(g)
    while frontier:
        nxt: list[CliffordElt] = []
        for w in frontier:
            for g in generators:
                cand = mul(w, g)
                if ech.insert(_vector_mod_p(cand, p)):
                    kept.append(cand)
                    nxt.append(cand)
        frontier = nxt
    return kept


# ---------------------------------------------------------------------------
# reporting


@dataclass(frozen=True)
class RankReport:
    """Outcome of a span-rank computation over F_modulus.

    A rank computed modulo p lower-bounds the rank over Q of the same
    integer span.
    """

    generator_count: int
    generator_checksum: str
    policy: str
    modulus: int
    word_count: int
    rank: int
    closure_rank: int | None
    seconds: float


def rank_report(
    generators: Sequence[CliffordElt],
    policy,
    modulus: int,
    with_closure: bool = False,
) -> RankReport:
    start = time.perf_counter()
    words = generate_words(generators, policy)
    rank = span_rank(words, modulus)
    closure_rank = None
    if with_closure:
        closure_words = generate_words(generators, ClosurePolicy(modulus))
        closure_rank = span_rank(closure_words, modulus)
    return RankReport(
        generator_count=len(generators),
        generator_checksum=elements_checksum(generators),
        policy=policy.describe(),
        modulus=modulus,
        word_count=len(words),
        rank=rank,
        closure_rank=closure_rank,
        seconds=time.perf_counter() - start,
    )


# ---------------------------------------------------------------------------
# serialization


def element_to_json(x: CliffordElt) -> list:
    ring = x.algebra.ring
    return [
        [[i for i in range(x.algebra.n) if (m >> i) & 1], ring.to_str(c)]
        for m, c in sorted(x._terms.items())
    ]


def element_from_json(algebra: CliffordAlgebra, data) -> CliffordElt:
    terms = {}
    for indices, coeff in data:
        mask = 0
        for i in indices:
            mask |= 1 << i
        terms[mask] = Fraction(coeff)
    return algebra.element(terms)


def elements_checksum(elements: Sequence[CliffordElt]) -> str:
    import hashlib
    import json as _json

    payload = _json.dumps(
        [element_to_json(x) for x in elements], separators=(",", ":")
    )
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


def rank_report_to_json(r: RankReport) -> dict:
    return {
        "generator_count": r.generator_count,
        "generator_checksum": r.generator_checksum,
        "policy": r.policy,
        "modulus": r.modulus,
        "word_count": r.word_count,
        "rank": r.rank,
        "closure_rank": r.closure_rank,
        "seconds": round(r.seconds, 3),
    }
