"""Totally real cubic fields presented by a symmetric integer matrix.

The field is Q[x] modulo the characteristic polynomial of a symmetric
3x3 integer matrix A.  A distinguished basis (b1, b2, b3) with b3 = 1 is
derived so that multiplication by the generator has matrix exactly A in
that basis; polynomials in A then give the regular representation of
every element by symmetric rational matrices.  Real-embedding data is
certified: roots live in exact rational intervals refinable on demand,
and sign patterns are only reported once no interval straddles zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from math import isqrt
from typing import Iterable, Sequence

from . import linalg
from .intervals import Interval
from .linalg import Matrix


class ReducibleCharpolyError(ValueError):
    """The characteristic polynomial has a rational root."""


class NotTotallyRealError(ValueError):
    """The characteristic polynomial does not have three real roots."""


class BBasisError(ValueError):
    """No basis with b3 = 1 makes the generator's matrix equal A."""


class SearchExhaustedError(LookupError):
    """Element search ran out of candidates at the given height."""

    def __init__(self, height: int, what: str):
        self.height = height
        super().__init__(f"{what}: not found at height {height}")


def _charpoly(a: Matrix) -> tuple[Fraction, Fraction, Fraction]:
    """Coefficients (c0, c1, c2) of det(xI - A) = x^3 + c2 x^2 + c1 x + c0."""
    tr = a[0][0] + a[1][1] + a[2][2]
    m2 = (
        a[0][0] * a[1][1] - a[0][1] * a[1][0]
        + a[0][0] * a[2][2] - a[0][2] * a[2][0]
        + a[1][1] * a[2][2] - a[1][2] * a[2][1]
    )
    return -linalg.det(a), m2, -tr


def _cubic_disc(c0: Fraction, c1: Fraction, c2: Fraction) -> Fraction:
    p, q, r = c2, c1, c0
    return (
        18 * p * q * r - 4 * p**3 * r + p**2 * q**2 - 4 * q**3 - 27 * r**2
    )


def _eval_cubic(coeffs, x: Fraction) -> Fraction:
    c0, c1, c2 = coeffs
    return ((x + c2) * x + c1) * x + c0


def isolate_roots(coeffs) -> tuple[tuple[Fraction, Fraction], ...]:
    """Three disjoint isolating intervals for a cubic with three distinct
    real roots, found by grid sign changes at doubling resolution."""
    c0, c1, c2 = coeffs
    bound = 1 + max(abs(c0), abs(c1), abs(c2))
    pieces = 8
    while pieces <= 2**24:
        xs = [-bound + 2 * bound * Fraction(i, pieces) for i in range(pieces + 1)]
        vals = [_eval_cubic(coeffs, x) for x in xs]
        if any(v == 0 for v in vals):
            raise ReducibleCharpolyError("rational root hit during isolation")
        brackets = [
            (xs[i], xs[i + 1])
            for i in range(pieces)
            if (vals[i] < 0) != (vals[i + 1] < 0)
        ]
        if len(brackets) == 3:
            return tuple(brackets)
        pieces *= 2
    raise NotTotallyRealError("failed to isolate three real roots")


def refine_root(coeffs, lo: Fraction, hi: Fraction, width: Fraction) -> Interval:
    """Bisect a sign-change bracket until it is narrower than width."""
    flo = _eval_cubic(coeffs, lo)
    while hi - lo > width:
        mid = (lo + hi) / 2
        fm = _eval_cubic(coeffs, mid)
        if fm == 0:
            eps = width / 4
            return Interval(mid - eps, mid + eps)
        if (flo < 0) != (fm < 0):
            hi = mid
        else:
            lo, flo = mid, fm
    return Interval(lo, hi)


@dataclass(frozen=True, eq=False)
class SymCubicField:
    """Cubic field Q(alpha) with alpha an eigenvalue of the symmetric A."""

    A: Matrix
    charpoly: tuple[Fraction, Fraction, Fraction]
    root_brackets: tuple[tuple[Fraction, Fraction], ...]
    b_basis_coords: tuple[tuple[Fraction, ...], ...]

    def element(self, coords: Iterable) -> "FieldElt":
        c = tuple(Fraction(x) for x in coords)
        if len(c) != 3:
            raise ValueError("elements have three power-basis coordinates")
        return FieldElt(self, c)

    def zero(self) -> "FieldElt":
        return self.element((0, 0, 0))

    def one(self) -> "FieldElt":
        return self.element((1, 0, 0))

    def alpha(self) -> "FieldElt":
        return self.element((0, 1, 0))

    def rational(self, q) -> "FieldElt":
        return self.element((Fraction(q), 0, 0))

    @property
    def b_basis(self) -> tuple["FieldElt", "FieldElt", "FieldElt"]:
        return tuple(self.element(c) for c in self.b_basis_coords)

    def roots(self, width=Fraction(1, 2**32)) -> tuple[Interval, ...]:
        """Certified disjoint enclosures of the three real roots, ascending."""
        return tuple(
            refine_root(self.charpoly, lo, hi, width)
            for lo, hi in self.root_brackets
        )

    def charpoly_str(self) -> str:
        c0, c1, c2 = self.charpoly

        def term(c, s):
            if c == 0:
                return ""
            sign = " + " if c > 0 else " - "
            mag = abs(c)
            coeff = "" if (mag == 1 and s) else str(mag)
            return f"{sign}{coeff}{s}"

        return "x^3" + term(c2, "x^2") + term(c1, "x") + term(c0, "")


@dataclass(frozen=True, eq=False)
class FieldElt:
    """Element as exact coordinates over the power basis (1, alpha, alpha^2)."""

    field: SymCubicField
    coords: tuple[Fraction, Fraction, Fraction]

    def __eq__(self, other):
        return (
            isinstance(other, FieldElt)
            and self.field is other.field
            and self.coords == other.coords
        )

    def __hash__(self):
        return hash((id(self.field), self.coords))

    def is_zero(self) -> bool:
        return all(c == 0 for c in self.coords)

    def is_rational(self) -> bool:
        return self.coords[1] == 0 and self.coords[2] == 0

    def as_rational(self) -> Fraction:
        if not self.is_rational():
            raise ValueError(f"{self} is irrational")
        return self.coords[0]

    def _other(self, x) -> "FieldElt":
        if isinstance(x, FieldElt):
            if x.field is not self.field:
                raise ValueError("elements belong to different fields")
            return x
        return self.field.rational(x)

    def __add__(self, other):
        o = self._other(other)
        return FieldElt(
            self.field, tuple(a + b for a, b in zip(self.coords, o.coords))
        )

    __radd__ = __add__

    def __neg__(self):
        return FieldElt(self.field, tuple(-a for a in self.coords))

    def __sub__(self, other):
        return self + (-self._other(other))

    def __rsub__(self, other):
        return self._other(other) + (-self)

    def __mul__(self, other):
        o = self._other(other)
        a, b = self.coords, o.coords
        prod = [Fraction(0)] * 5
        for i in range(3):
            if a[i] == 0:
                continue
            for j in range(3):
                prod[i + j] += a[i] * b[j]
        c0, c1, c2 = self.field.charpoly
        # alpha^3 = -c2 a^2 - c1 a - c0, applied from the top degree down
        for deg in (4, 3):
            c = prod[deg]
            if c == 0:
                continue
            prod[deg] = Fraction(0)
            prod[deg - 1] -= c * c2
            prod[deg - 2] -= c * c1
            prod[deg - 3] -= c * c0
        return FieldElt(self.field, tuple(prod[:3]))

    __rmul__ = __mul__

    def inverse(self) -> "FieldElt":
        if self.is_zero():
            raise ZeroDivisionError("inverse of zero")
        m = _power_rep(self)
        sol = linalg.solve(m, (Fraction(1), Fraction(0), Fraction(0)))
        if sol is None:
            raise ZeroDivisionError("element is not invertible")
        return FieldElt(self.field, sol)

    def __truediv__(self, other):
        return self * self._other(other).inverse()

    def __rtruediv__(self, other):
        return self._other(other) * self.inverse()

    def __pow__(self, k: int):
        if k < 0:
            return self.inverse() ** (-k)
        out = self.field.one()
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def __str__(self):
        return "({}, {}, {})".format(*self.coords)


def _power_rep(x: FieldElt) -> Matrix:
    """Matrix of multiplication by x on the power basis (columns are
    coordinates of x*1, x*alpha, x*alpha^2)."""
    f = x.field
    cols = [
        (x * f.element((1 if k == j else 0 for k in range(3)))).coords
        for j in range(3)
    ]
    return linalg.transpose(linalg.mat(cols))


def _companion(coeffs) -> Matrix:
    """Matrix of multiplication by alpha on the power basis."""
    c0, c1, c2 = coeffs
    return linalg.mat([[0, 0, -c0], [1, 0, -c1], [0, 1, -c2]])


def make_field(a) -> SymCubicField:
    """Build the cubic field of a symmetric 3x3 integer matrix.

    The characteristic polynomial is computed exactly and must be
    irreducible (monic cubic: no integer root dividing the constant term)
    with positive discriminant.  The basis (b1, b2, b3 = 1) is solved from
    the requirement that multiplication by the generator has matrix A in
    it, then verified by the exact identity M_alpha B = B A.
    """
    g = linalg.mat(a)
    if len(g) != 3 or len(g[0]) != 3:
        raise ValueError("A must be 3x3")
    if not linalg.is_symmetric(g):
        raise ValueError("A must be symmetric")
    if any(x.denominator != 1 for row in g for x in row):
        raise ValueError("A must have integer entries")

    coeffs = _charpoly(g)
    c0 = coeffs[0]
    if c0 == 0:
        raise ReducibleCharpolyError("characteristic polynomial has root 0")
    n = abs(c0.numerator)
    divisors = set()
    for d in range(1, isqrt(n) + 1):
        if n % d == 0:
            divisors.update((d, n // d))
    for d in divisors:
        for r in (d, -d):
            if _eval_cubic(coeffs, Fraction(r)) == 0:
                raise ReducibleCharpolyError(
                    f"characteristic polynomial has rational root {r}"
                )
    if _cubic_disc(*coeffs) <= 0:
        raise NotTotallyRealError("discriminant is not positive")

    brackets = isolate_roots(coeffs)
    b1, b2 = _solve_b_basis(coeffs, g)
    return SymCubicField(
        A=g,
        charpoly=coeffs,
        root_brackets=brackets,
        b_basis_coords=(b1, b2, (Fraction(1), Fraction(0), Fraction(0))),
    )


def _solve_b_basis(coeffs, a: Matrix):
    """Solve alpha b_j = sum_k A[j][k] b_k for b1, b2 with b3 = 1."""
    m_alpha = _companion(coeffs)
    one = (Fraction(1), Fraction(0), Fraction(0))
    alpha = (Fraction(0), Fraction(1), Fraction(0))

    rows = []
    rhs = []
    # rows 0 and 1 of A give a 6x6 linear system in (b1, b2)
    for i in range(3):
        rows.append(
            tuple(m_alpha[i][k] - (a[0][0] if i == k else 0) for k in range(3))
            + tuple(-a[0][1] if i == k else Fraction(0) for k in range(3))
        )
        rhs.append(a[0][2] * one[i])
    for i in range(3):
        rows.append(
            tuple(-a[1][0] if i == k else Fraction(0) for k in range(3))
            + tuple(m_alpha[i][k] - (a[1][1] if i == k else 0) for k in range(3))
        )
        rhs.append(a[1][2] * one[i])
    sol = linalg.solve(linalg.mat(rows), rhs)
    if sol is None:
        raise BBasisError("basis equations are inconsistent")
    b1, b2 = sol[:3], sol[3:]

    basis = linalg.transpose(linalg.mat([b1, b2, one]))
    if linalg.det(basis) == 0:
        raise BBasisError("candidate basis is degenerate")
    # row 2 of A plus the defining identity, checked exactly
    row2 = tuple(
        a[2][0] * b1[i] + a[2][1] * b2[i] + a[2][2] * one[i] for i in range(3)
    )
    if row2 != alpha:
        raise BBasisError("third-row constraint fails")
    if linalg.mat_mul(m_alpha, basis) != linalg.mat_mul(basis, a):
        raise BBasisError("regular representation does not reproduce A")
    return b1, b2


# ---------------------------------------------------------------------------
# regular representation and embeddings


def regular_rep(x: FieldElt) -> Matrix:
    """x as a polynomial in A: a symmetric rational matrix.  The map is an
    exact ring homomorphism onto polynomials in A."""
    a = x.field.A
    c0, c1, c2 = x.coords
    a2 = linalg.mat_mul(a, a)
    n = 3
    return tuple(
        tuple(
            c0 * (1 if i == j else 0) + c1 * a[i][j] + c2 * a2[i][j]
            for j in range(n)
        )
        for i in range(n)
    )


def conjugates(x: FieldElt, precision=Fraction(1, 2**64)) -> tuple[Interval, ...]:
    """Certified enclosures of the images of x under the three real
    embeddings, in ascending root order, each narrower than precision."""
    width = precision
    while True:
        roots = x.field.roots(width)
        outs = []
        for r in roots:
            val = (
                Interval.point(x.coords[0])
                + x.coords[1] * r
                + x.coords[2] * r.square()
            )
            outs.append(val)
        if all(o.width < precision for o in outs):
            return tuple(outs)
        width /= 16


@dataclass(frozen=True)
class SignPattern:
    positives: int
    negatives: int
    signs: tuple[int, int, int]


def sign_pattern(x: FieldElt) -> SignPattern:
    """Signs of the three conjugates, certified: intervals are refined until
    none straddles zero (the zero element short-circuits)."""
    if x.is_zero():
        return SignPattern(0, 0, (0, 0, 0))
    precision = Fraction(1, 2**16)
    while True:
        outs = conjugates(x, precision)
        if all(not o.straddles_zero() for o in outs):
            signs = tuple(o.sign() for o in outs)
            return SignPattern(
                positives=sum(1 for s in signs if s > 0),
                negatives=sum(1 for s in signs if s < 0),
                signs=signs,
            )
        precision /= 2**16


def rational_square_check(x: FieldElt) -> bool:
    """True iff the implication (x^2 rational => x rational) holds for x.
    In a cubic field it always does; the exact computation double-checks."""
    sq = x * x
    if sq.is_rational() and not x.is_rational():
        return False
    return True


# ---------------------------------------------------------------------------
# element search


@dataclass(frozen=True)
class Prop33Triple:
    f1: FieldElt
    f2: FieldElt
    f3: FieldElt
    embedding: int
    patterns: tuple[SignPattern, SignPattern, SignPattern]
    epsilon: Fraction
    height: int


def _certify_candidate(x: FieldElt, big: int, eps: Fraction) -> bool:
    """Exact check for the single-positive pattern: the conjugate at `big`
    exceeds 1, the other two are negative with absolute value at most eps."""
    precision = min(eps / 64, Fraction(1, 2**24))
    outs = conjugates(x, precision)
    for j, o in enumerate(outs):
        if j == big:
            if not o.lo > 1:
                return False
        else:
            if not (-eps <= o.lo and o.hi < 0):
                return False
    return True


def search_prop33(
    field: SymCubicField,
    epsilon,
    height: int,
    denominators: Sequence[int] = (1, 2, 4, 8),
) -> Prop33Triple:
    """Bounded-height search for the sign-pattern triple.

    Enumerates x = (c0 + c1 alpha + c2 alpha^2)/d over denominators in
    order and coordinate shells of growing max|ci|; a float screen trims
    the c0 window, then every survivor is certified with exact intervals.
    f1 and f2 must be distinct, with their single positive conjugates at
    the same embedding, both above 1, within epsilon of each other; the
    remaining conjugates stay within epsilon.  f3 has no positive
    conjugate (the first such element found is rational -1, which
    satisfies the pattern).
    """
    eps = Fraction(epsilon)
    if eps <= 0:
        raise ValueError("epsilon must be positive")
    roots = [
        (float(r.lo) + float(r.hi)) / 2 for r in field.roots(Fraction(1, 2**40))
    ]

    f3 = None
    for d in denominators:
        for h in range(0, height + 1):
            for c in _shell(h):
                x = field.element((Fraction(c[0], d), Fraction(c[1], d), Fraction(c[2], d)))
                if x.is_zero():
                    continue
                pat = sign_pattern(x)
                if pat.positives == 0:
                    f3 = x
                    break
            if f3 is not None:
                break
        if f3 is not None:
            break
    if f3 is None:
        raise SearchExhaustedError(height, "no totally negative element")

    for big in range(3):
        found = _search_positive_pair(field, roots, big, eps, height, denominators)
        if found is not None:
            f1, f2 = found
            return Prop33Triple(
                f1=f1,
                f2=f2,
                f3=f3,
                embedding=big,
                patterns=(sign_pattern(f1), sign_pattern(f2), sign_pattern(f3)),
                epsilon=eps,
                height=height,
            )
    raise SearchExhaustedError(height, "no (1 positive, 2 small) pair")


def _shell(h: int):
    """Coordinate triples with max coordinate magnitude exactly h, in a
    fixed deterministic order."""
    if h == 0:
        yield (0, 0, 0)
        return
    rng = range(-h, h + 1)
    for c0 in rng:
        for c1 in rng:
            for c2 in rng:
                if max(abs(c0), abs(c1), abs(c2)) == h:
                    yield (c0, c1, c2)


def _search_positive_pair(field, roots, big, eps, height, denominators,
                          max_candidates=400):
    """Collect certified single-positive candidates at this embedding, then
    return the first enumeration-ordered pair whose big conjugates are
    certified within eps of each other."""
    small = [j for j in range(3) if j != big]
    feps = float(eps)
    slack = feps / 64 + 1e-9
    precision = min(eps / 64, Fraction(1, 2**24))

    def screened(d):
        """Candidate coordinates whose small conjugates pass a float screen;
        c0 runs over the window forced by the two small embeddings."""
        fd = float(d)
        c0_cap = 8 * height * d
        for h in range(1, height + 1):
            for c1 in range(-h, h + 1):
                for c2 in range(-h, h + 1):
                    if max(abs(c1), abs(c2)) != h:
                        continue
                    # small conjugates must land in [-eps, 0)
                    t = [-(c1 * roots[j] + c2 * roots[j] ** 2) for j in small]
                    lo = max(t[0], t[1]) - feps * fd - slack
                    hi = min(t[0], t[1]) + slack
                    vbig_base = c1 * roots[big] + c2 * roots[big] ** 2
                    for c0 in range(math.ceil(lo), math.floor(hi) + 1):
                        if abs(c0) > c0_cap:
                            continue
                        if (c0 + vbig_base) / fd <= 1 - slack:
                            continue
                        yield (c0, c1, c2)

    cands: list[FieldElt] = []
    for d in denominators:
        for c in screened(d):
            x = field.element(
                (Fraction(c[0], d), Fraction(c[1], d), Fraction(c[2], d))
            )
            if any(x == y for y in cands):
                continue
            if _certify_candidate(x, big, eps):
                cands.append(x)
                if len(cands) >= max_candidates:
                    break
        if len(cands) >= max_candidates:
            break

    bigs = [conjugates(x, precision)[big] for x in cands]
    for j in range(1, len(cands)):
        for i in range(j):
            diff = bigs[j] - bigs[i]
            if -eps <= diff.lo and diff.hi <= eps:
                return cands[i], cands[j]
    return None


# ---------------------------------------------------------------------------
# serialization


def element_to_json(x: FieldElt) -> list[str]:
    return [str(c) for c in x.coords]


def element_from_json(field: SymCubicField, data: Sequence[str]) -> FieldElt:
    return field.element(Fraction(c) for c in data)


def field_to_json(field: SymCubicField) -> dict:
    return {
        "A": [[str(x) for x in row] for row in field.A],
        "charpoly": field.charpoly_str(),
        "b_basis": [element_to_json(b) for b in field.b_basis],
    }


def field_from_json(data: dict) -> SymCubicField:
    a = [[Fraction(x) for x in row] for row in data["A"]]
    return make_field(a)
