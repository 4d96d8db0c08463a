"""Certified real intervals on scaled big integers.

An ``Interval`` holds integers lo <= hi standing for [lo/2^P, hi/2^P].  Every
operation rounds lo down and hi up, so the true value of any expression
evaluated on contained inputs stays inside the result.  For the short, bounded
orbits used here this is an order of magnitude faster than mpmath intervals.
"""

from __future__ import annotations

import math
from fractions import Fraction

import mpmath


def _ceil_shift(x: int, P: int) -> int:
    return -((-x) >> P)


class Interval:
    __slots__ = ("lo", "hi", "P")

    def __init__(self, lo: int, hi: int, P: int):
        if lo > hi:
            raise ValueError("empty interval")
        self.lo, self.hi, self.P = lo, hi, P

    @classmethod
    def point(cls, x, P: int) -> "Interval":
        """Smallest interval on the 2^-P grid containing x (int, Fraction, str or mpf)."""
        if isinstance(x, int):
            return cls(x << P, x << P, P)
        if isinstance(x, str):
            x = Fraction(x)
        if isinstance(x, Fraction):
            n = x.numerator << P
            lo = n // x.denominator
            return cls(lo, lo if lo * x.denominator == n else lo + 1, P)
        # mpf (any context) or float: its exact binary value
        if not hasattr(x, "man_exp"):
            x = mpmath.mpf(float(x))
        man, exp = x.man_exp
        # man_exp drops the sign
        man = -abs(int(man)) if x < 0 else abs(int(man))
        return cls.point(Fraction(man) * Fraction(2) ** int(exp), P)

    @classmethod
    def hull(cls, a, b, P: int) -> "Interval":
        x, y = cls.point(a, P), cls.point(b, P)
        return cls(min(x.lo, y.lo), max(x.hi, y.hi), P)

    def __add__(self, other: "Interval") -> "Interval":
        return Interval(self.lo + other.lo, self.hi + other.hi, self.P)

    def __sub__(self, other: "Interval") -> "Interval":
        return Interval(self.lo - other.hi, self.hi - other.lo, self.P)

    def __neg__(self) -> "Interval":
        return Interval(-self.hi, -self.lo, self.P)

    def __mul__(self, other: "Interval") -> "Interval":
        P = self.P
        prods = (self.lo * other.lo, self.lo * other.hi, self.hi * other.lo, self.hi * other.hi)
        return Interval(min(prods) >> P, _ceil_shift(max(prods), P), P)

    def square(self) -> "Interval":
        lo, hi, P = self.lo, self.hi, self.P
        if lo >= 0:
            return Interval((lo * lo) >> P, _ceil_shift(hi * hi, P), P)
        if hi <= 0:
            return Interval((hi * hi) >> P, _ceil_shift(lo * lo, P), P)
        return Interval(0, _ceil_shift(max(lo * lo, hi * hi), P), P)

    def sqrt(self) -> "Interval":
        """Square root; the caller guarantees lo >= 0."""
        if self.lo < 0:
            raise ValueError("sqrt of an interval reaching below 0")
        P = self.P
        lo = math.isqrt(self.lo << P)
        h = self.hi << P
        hi = math.isqrt(h)
        if hi * hi < h:
            hi += 1
        return Interval(lo, hi, P)

    def log_abs(self) -> tuple:
        """Bounds for log|x| as a pair of floats; the interval must not contain 0."""
        if self.lo <= 0 <= self.hi:
            raise ValueError("log|x| of an interval containing 0")
        a, b = sorted((abs(self.lo), abs(self.hi)))
        return (_log_scaled(a, self.P, down=True), _log_scaled(b, self.P, down=False))

    @property
    def width(self) -> Fraction:
        return Fraction(self.hi - self.lo, 1 << self.P)

    def width_log2(self) -> float:
        """log2 of the width; -inf for a point."""
        w = self.hi - self.lo
        return float("-inf") if w == 0 else math.log2(w) - self.P

    def mid(self) -> Fraction:
        return Fraction(self.lo + self.hi, 1 << (self.P + 1))

    def certainly_lt(self, other: "Interval") -> bool:
        return self.hi < other.lo

    def certainly_gt(self, other: "Interval") -> bool:
        return self.lo > other.hi

    def certainly_positive(self) -> bool:
        return self.lo > 0

    def certainly_negative(self) -> bool:
        return self.hi < 0

    def inside(self, lo: "Interval", hi: "Interval") -> bool | None:
        """True if certainly in [lo, hi], False if certainly outside, None if undecided."""
        if self.lo >= lo.hi and self.hi <= hi.lo:
            return True
        if self.hi < lo.lo or self.lo > hi.hi:
            return False
        return None

    def to_mpf_pair(self, ctx=mpmath.mp) -> tuple:
        return (ctx.ldexp(ctx.mpf(self.lo), -self.P), ctx.ldexp(ctx.mpf(self.hi), -self.P))

    def __repr__(self) -> str:
        lo, hi = self.to_mpf_pair()
        return f"Interval([{mpmath.nstr(lo, 12)}, {mpmath.nstr(hi, 12)}], P={self.P})"


def _log_scaled(m: int, P: int, down: bool) -> float:
    # log(m / 2^P) from the top 60 bits; truncation error is below 2^-59,
    # float rounding below 1e-14 relative, and both are pushed outward
    shift = max(m.bit_length() - 60, 0)
    v = math.log(m >> shift) + (shift - P) * math.log(2)
    eps = 1e-14 * max(1.0, abs(v))
    return v - eps if down else v + eps + 2.0 ** -59
