"""Certified interval arithmetic with exact rational endpoints.

Endpoints are Fractions, so arithmetic introduces no rounding at all:
an Interval is a true enclosure and operations return true enclosures.
Only sqrt widens, by an explicit, verified 2**-bits margin.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import isqrt


@dataclass(frozen=True)
class Interval:
    lo: Fraction
    hi: Fraction

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError(f"empty interval [{self.lo}, {self.hi}]")

    @staticmethod
    def point(x) -> "Interval":
        x = Fraction(x)
        return Interval(x, x)

    @property
    def width(self) -> Fraction:
        return self.hi - self.lo

    @property
    def mid(self) -> Fraction:
        return (self.lo + self.hi) / 2

    def __add__(self, other) -> "Interval":
        o = _coerce(other)
        return Interval(self.lo + o.lo, self.hi + o.hi)

    __radd__ = __add__

    def __neg__(self) -> "Interval":
        return Interval(-self.hi, -self.lo)

    def __sub__(self, other) -> "Interval":
        return self + (-_coerce(other))

    def __rsub__(self, other) -> "Interval":
        return _coerce(other) + (-self)

    def __mul__(self, other) -> "Interval":
        o = _coerce(other)
        c = (self.lo * o.lo, self.lo * o.hi, self.hi * o.lo, self.hi * o.hi)
        return Interval(min(c), max(c))

    __rmul__ = __mul__

    def __truediv__(self, other) -> "Interval":
        o = _coerce(other)
        if o.lo <= 0 <= o.hi:
            raise ZeroDivisionError("division by interval containing 0")
        c = (self.lo / o.lo, self.lo / o.hi, self.hi / o.lo, self.hi / o.hi)
        return Interval(min(c), max(c))

    def square(self) -> "Interval":
        if self.lo >= 0:
            return Interval(self.lo * self.lo, self.hi * self.hi)
        if self.hi <= 0:
            return Interval(self.hi * self.hi, self.lo * self.lo)
        m = max(-self.lo, self.hi)
        return Interval(Fraction(0), m * m)

    def __pow__(self, k: int) -> "Interval":
        if k < 0:
            raise ValueError("negative interval powers unsupported")
        out = Interval.point(1)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base.square()
            k >>= 1
        return out

    def contains(self, x) -> bool:
        x = Fraction(x)
        return self.lo <= x <= self.hi

    def overlaps(self, other: "Interval") -> bool:
        return self.lo <= other.hi and other.lo <= self.hi

    def is_positive(self) -> bool:
        return self.lo > 0

    def is_negative(self) -> bool:
        return self.hi < 0

    def straddles_zero(self) -> bool:
        return self.lo <= 0 <= self.hi

    def sign(self) -> int:
        """Certified sign: +1, -1, or raise if the interval contains 0."""
        if self.lo > 0:
            return 1
        if self.hi < 0:
            return -1
        raise ValueError(f"sign of [{self.lo}, {self.hi}] is not certified")

    def __str__(self):
        return f"[{float(self.lo):.17g}, {float(self.hi):.17g}]"


def _coerce(x) -> Interval:
    return x if isinstance(x, Interval) else Interval.point(x)


def sqrt_interval(x: Interval, bits: int = 128) -> Interval:
    """Enclosure of sqrt over a certified-nonnegative interval.

    Endpoint bounds come from integer square roots of scaled numerators,
    then each bound is verified by exact squaring and nudged if needed.
    """
    if x.lo < 0:
        raise ValueError("sqrt of an interval with negative lower bound")
    step = Fraction(1, 2**bits)

    def lower(q: Fraction) -> Fraction:
        if q == 0:
            return Fraction(0)
        s = isqrt((q.numerator << (2 * bits)) // q.denominator)
        r = Fraction(s, 2**bits)
        while r * r > q:
            r -= step
        return max(r, Fraction(0))

    def upper(q: Fraction) -> Fraction:
        s = isqrt((q.numerator << (2 * bits)) // q.denominator) + 1
        r = Fraction(s, 2**bits)
        while r * r < q:
            r += step
        return r

    return Interval(lower(x.lo), upper(x.hi))


@dataclass(frozen=True)
class ComplexInterval:
    """Rectangle enclosure re + i*im with certified interval components."""

    re: Interval
    im: Interval

    @staticmethod
    def point(re, im=0) -> "ComplexInterval":
        return ComplexInterval(Interval.point(re), Interval.point(im))

    @staticmethod
    def from_real(x: Interval) -> "ComplexInterval":
        return ComplexInterval(x, Interval.point(0))

    def __add__(self, other: "ComplexInterval") -> "ComplexInterval":
        return ComplexInterval(self.re + other.re, self.im + other.im)

    def __neg__(self) -> "ComplexInterval":
        return ComplexInterval(-self.re, -self.im)

    def __sub__(self, other: "ComplexInterval") -> "ComplexInterval":
        return self + (-other)

    def __mul__(self, other) -> "ComplexInterval":
        if isinstance(other, (int, Fraction, Interval)):
            other = ComplexInterval(_coerce(other), Interval.point(0))
        return ComplexInterval(
            self.re * other.re - self.im * other.im,
            self.re * other.im + self.im * other.re,
        )

    __rmul__ = __mul__

    def conjugate(self) -> "ComplexInterval":
        return ComplexInterval(self.re, -self.im)

    def abs_upper(self) -> Fraction:
        """Upper bound for |z| via |re| + |im|."""
        return max(abs(self.re.lo), abs(self.re.hi)) + max(
            abs(self.im.lo), abs(self.im.hi)
        )

    def contains_zero(self) -> bool:
        return self.re.straddles_zero() and self.im.straddles_zero()

    def __str__(self):
        return f"({self.re} + i*{self.im})"
