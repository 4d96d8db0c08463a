from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from quadthermo.interval import Interval

P = 80
fr = st.fractions(min_value=-4, max_value=4, max_denominator=10 ** 6)


def _contains(iv: Interval, x: Fraction) -> bool:
    return Fraction(iv.lo, 1 << iv.P) <= x <= Fraction(iv.hi, 1 << iv.P)


@given(fr, fr)
def test_operations_enclose_exact_results(x, y):
    a, b = Interval.point(x, P), Interval.point(y, P)
    assert _contains(a + b, x + y)
    assert _contains(a - b, x - y)
    assert _contains(a * b, x * y)
    assert _contains(a.square(), x * x)
    assert _contains(-a, -x)


@given(st.fractions(min_value=0, max_value=16, max_denominator=10 ** 6))
def test_sqrt_encloses(x):
    r = Interval.point(x, P).sqrt()
    lo, hi = Fraction(r.lo, 1 << P), Fraction(r.hi, 1 << P)
    assert lo * lo <= x <= hi * hi


@given(st.fractions(min_value=Fraction(1, 100), max_value=100, max_denominator=1000))
def test_log_abs_brackets(x):
    import math
    lo, hi = Interval.point(x, P).log_abs()
    assert lo <= math.log(x) <= hi


def test_rejects_bad_input():
    with pytest.raises(ValueError):
        Interval(2, 1, P)
    with pytest.raises(ValueError):
        Interval.point(-1, P).sqrt()
    with pytest.raises(ValueError):
        Interval(-1, 1, P).log_abs()


def test_inside_decisions():
    lo, hi = Interval.point(0, P), Interval.point(1, P)
    assert Interval.point(Fraction(1, 2), P).inside(lo, hi) is True
    assert Interval.point(2, P).inside(lo, hi) is False
    assert Interval.hull(Fraction(-1, 2), Fraction(1, 2), P).inside(lo, hi) is None
