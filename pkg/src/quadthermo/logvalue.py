"""Nonnegative reals stored as base-2 logarithms with unbounded exponent.

Quantities such as 2^(q s^3) overflow every fixed-width float long before
the interesting range of s, so series arithmetic is done on log2 values held
as mpmath numbers in a private context.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable

import mpmath

WORK_PREC = 256

ctx = mpmath.MPContext()
ctx.prec = WORK_PREC

LN2 = ctx.ln2


def mpf(x) -> "mpmath.mpf":
    """Convert ints, Fractions, floats, strings or mpf values to the work context."""
    if isinstance(x, Fraction):
        return ctx.mpf(x.numerator) / x.denominator
    return ctx.mpf(x)


def log2_1p_exp2(d) -> "mpmath.mpf":
    """log2(1 + 2^d); below 2^-(WORK_PREC+16) the correction is dropped."""
    if d > 0:
        return d + log2_1p_exp2(-d)
    if d < -(WORK_PREC + 16):
        return ctx.zero
    return ctx.log1p(ctx.power(2, d)) / LN2


def log2_1m_exp2(d) -> "mpmath.mpf":
    """log2(1 - 2^d) for d < 0."""
    if d >= 0:
        raise ValueError("log2(1 - 2^d) needs d < 0")
    if d < -(WORK_PREC + 16):
        return ctx.zero
    # 1 - 2^d = -expm1(d ln 2), accurate for d close to 0 as well
    return ctx.log(-ctx.expm1(d * LN2)) / LN2


class LogValue:
    """A nonnegative number x represented by log2(x); ``LogValue.ZERO`` is x = 0."""

    __slots__ = ("log2",)

    ZERO: "LogValue"
    ONE: "LogValue"

    def __init__(self, log2):
        self.log2 = None if log2 is None else mpf(log2)

    @classmethod
    def exp2(cls, e) -> "LogValue":
        return cls(e)

    @classmethod
    def of(cls, x) -> "LogValue":
        """Build from a nonnegative int, Fraction, float or mpf."""
        if isinstance(x, LogValue):
            return x
        if isinstance(x, int):
            if x < 0:
                raise ValueError("negative value")
            if x == 0:
                return cls.ZERO
            n = x.bit_length()
            if n <= WORK_PREC + 8:
                return cls(ctx.log(x, 2))
            # keep the leading bits only; the dropped tail is below 2^-WORK_PREC relative
            top = x >> (n - WORK_PREC - 8)
            return cls(ctx.log(top, 2) + (n - WORK_PREC - 8))
        if isinstance(x, Fraction):
            return cls.of(x.numerator) / cls.of(x.denominator)
        v = mpf(x)
        if v < 0:
            raise ValueError("negative value")
        if v == 0:
            return cls.ZERO
        return cls(ctx.log(v, 2))

    @property
    def is_zero(self) -> bool:
        return self.log2 is None

    def __mul__(self, other) -> "LogValue":
        other = LogValue.of(other)
        if self.log2 is None or other.log2 is None:
            return LogValue.ZERO
        return LogValue(self.log2 + other.log2)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "LogValue":
        other = LogValue.of(other)
        if other.log2 is None:
            raise ZeroDivisionError("division by LogValue.ZERO")
        if self.log2 is None:
            return LogValue.ZERO
        return LogValue(self.log2 - other.log2)

    def __add__(self, other) -> "LogValue":
        other = LogValue.of(other)
        if self.log2 is None:
            return other
        if other.log2 is None:
            return self
        hi, lo = (self.log2, other.log2) if self.log2 >= other.log2 else (other.log2, self.log2)
        return LogValue(hi + log2_1p_exp2(lo - hi))

    __radd__ = __add__

    def __sub__(self, other) -> "LogValue":
        """Difference; the result must be nonnegative."""
        other = LogValue.of(other)
        if other.log2 is None:
            return self
        if self.log2 is None or other.log2 > self.log2:
            raise ValueError("LogValue subtraction would be negative")
        if other.log2 == self.log2:
            return LogValue.ZERO
        return LogValue(self.log2 + log2_1m_exp2(other.log2 - self.log2))

    def __pow__(self, e) -> "LogValue":
        if self.log2 is None:
            return LogValue.ZERO if e > 0 else LogValue.ONE
        return LogValue(self.log2 * mpf(e))

    def _key(self):
        return ctx.ninf if self.log2 is None else self.log2

    def __lt__(self, other) -> bool:
        return self._key() < LogValue.of(other)._key()

    def __le__(self, other) -> bool:
        return self._key() <= LogValue.of(other)._key()

    def __gt__(self, other) -> bool:
        return self._key() > LogValue.of(other)._key()

    def __ge__(self, other) -> bool:
        return self._key() >= LogValue.of(other)._key()

    def __eq__(self, other) -> bool:
        if not isinstance(other, (LogValue, int, float, Fraction)):
            return NotImplemented
        return self._key() == LogValue.of(other)._key()

    def __hash__(self):
        return hash(None if self.log2 is None else str(self.log2))

    def to_mpf(self):
        """The plain value (may be astronomically large or small, mpf handles it)."""
        if self.log2 is None:
            return ctx.zero
        return ctx.power(2, self.log2)

    def __float__(self) -> float:
        if self.log2 is None:
            return 0.0
        if self.log2 > 1023:
            return float("inf")
        if self.log2 < -1074:
            return 0.0
        return float(ctx.power(2, self.log2))

    def log2_str(self, digits: int = 30) -> str:
        return "-inf" if self.log2 is None else ctx.nstr(self.log2, digits)

    def __repr__(self) -> str:
        return f"LogValue(log2={self.log2_str(20)})"


LogValue.ZERO = LogValue(None)
LogValue.ONE = LogValue(0)


def log_sum(values: Iterable[LogValue]) -> LogValue:
    """Sum in the given order (callers pass a canonical order for reproducibility)."""
    total = LogValue.ZERO
    for v in values:
        total = total + v
    return total
