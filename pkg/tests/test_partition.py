from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, strategies as st

from quadthermo.logvalue import LogValue
from quadthermo.partition import (PartitionScheme, block_bounds, block_sum_I, block_sum_J, block_sum_J_hat,
                                  block_sum_I_weighted, block_sum_J_weighted, count_B, count_N, cubic,
                                  default_tau_grid, lambda_exact, lambda_of, pi_total, s_minus, s_plus,
                                  series_rows, verify_appendix)

from oracles import ToyBlocks, block_sums

STRICT = PartitionScheme.build(1, 400)
TOY = PartitionScheme.toy()


def test_scheme_derives_Xi_and_rejects_small_q():
    assert STRICT.Xi == 3 and PartitionScheme.build("0.5", 300).Xi == 2
    with pytest.raises(ValueError):
        PartitionScheme.build(1, 399)
    assert TOY.Xi == 2 and TOY.flags()


def test_cubic_values():
    assert cubic(STRICT, 0) == 0
    assert cubic(STRICT, 1) == 400
    assert cubic(STRICT, 2) == 3200
    assert float(cubic(STRICT, 0.5)) == pytest.approx(50)


def test_block_bounds_examples():
    bb = block_bounds(STRICT, 0)
    assert (bb.a_int, bb.b_int, bb.I_len) == (1, 404, 403)
    toy1 = block_bounds(TOY, 1)
    assert (toy1.a_int, toy1.b_int) == (4, 20)
    assert block_bounds(TOY, 2).a_int == 65536
    # astronomically long blocks stay in log form
    big = block_bounds(STRICT, 12)
    assert big.a.log2 == 400 * 12 ** 3


def test_counts_strict_examples():
    assert count_N(STRICT, 500) == 403
    assert count_B(STRICT, 100) == 1
    assert count_B(STRICT, 10 ** 6) == 2
    assert count_N(STRICT, 0) == 0 and count_B(STRICT, 0) == 0


@given(st.integers(min_value=1, max_value=3000))
def test_counts_match_enumeration_strict(k):
    N, B = ToyBlocks(400, 3, 3000).N_and_B()
    assert count_N(STRICT, k) == N[k] and count_B(STRICT, k) == B[k]


def test_lambda_examples():
    assert float(lambda_of(STRICT, 0).log2) == pytest.approx(-400, abs=1e-6)
    assert lambda_exact(TOY, 1) == Fraction(1, 65516)


def test_s_plus_minus_at_schedule_temperature():
    tau = 1 - Fraction(1, 160000)
    assert s_plus(STRICT, tau) == pytest.approx(20, abs=1e-30)
    assert abs(s_minus(STRICT, tau) ** 2 - 2000) < 1e-60
    with pytest.raises(ValueError):
        s_plus(STRICT, 1)


def test_first_I_block_closed_form():
    # tau=1, lambda=0: sum_{m=1}^{403} 2^-m 2^(xi B) with B = 1
    val = block_sum_I(STRICT, 0, "+", 1, 0)
    expected = LogValue.of(2) * (LogValue.ONE - LogValue(-403))
    assert abs(val.log2 - expected.log2) < mpmath.mpf(2) ** -200


@pytest.mark.parametrize("tau", [Fraction(1, 2), Fraction(399, 400), Fraction(1)])
def test_minus_sums_do_not_exceed_plus_sums(tau):
    for s in range(4):
        lam = lambda_of(STRICT, s)
        assert block_sum_J(STRICT, s, "-", tau, lam) <= block_sum_J(STRICT, s, "+", tau, lam)
        assert block_sum_I(STRICT, s, "-", tau, lam) <= block_sum_I(STRICT, s, "+", tau, lam)


CASES = [(s, sign, tau, lam)
         for s in (0, 1)
         for sign in (1, -1)
         for tau in (Fraction(1, 2), Fraction(9, 10), Fraction(1))
         for lam in (Fraction(0), Fraction(1, 65516), Fraction(1, 16))] + \
        [(2, sign, tau, lam) for sign in (1, -1) for tau in (Fraction(1, 2), Fraction(1))
         for lam in (Fraction(1, 64), Fraction(1, 4))]


@pytest.mark.parametrize("s,sign,tau,lam", CASES)
def test_toy_block_sums_match_enumeration(s, sign, tau, lam):
    ref = block_sums(2, 2, Fraction(1, 4), s, sign, tau, lam)
    got = {"I": block_sum_I(TOY, s, sign, tau, lam), "J": block_sum_J(TOY, s, sign, tau, lam),
           "J_hat": block_sum_J_hat(TOY, s, sign, tau, lam)}
    if sign == 1:
        got["I_w"] = block_sum_I_weighted(TOY, s, sign, tau, lam)
        got["J_w"] = block_sum_J_weighted(TOY, s, sign, tau, lam)
    for key, v in got.items():
        if ref[key] == 0:
            assert v.is_zero, key
            continue
        rel = abs(v.to_mpf() / ref[key] - 1)
        assert rel < mpmath.mpf(2) ** -40, (key, rel)


def test_pi_plus_at_zero_lambda_is_bounded():
    tot = pi_total(STRICT, "+", 1, 0)
    assert tot.upper <= LogValue.of(6)
    toy = pi_total(TOY, "+", 1, 0)
    assert toy.upper <= LogValue.of(2 * (2 ** 0.25 + 1))


def test_series_rows_have_csv_columns():
    rows = series_rows(TOY, "plus", 1, 0, 2)
    assert {r["kind"] for r in rows} == {"I", "J"}
    assert set(rows[0]) == {"s", "kind", "sign", "log2_value", "log2_tail"}


def test_appendix_margins_on_small_grid():
    rep = verify_appendix(STRICT, default_tau_grid(STRICT, 3), omega_grid=[0, 1], s_grid=[0, 1, 2, Fraction(21, 2)])
    assert rep.all_passed
    b11 = [c for c in rep.checks if c.lemma.startswith("B.1(1) b_s") and c.point["s"] == "0"][0]
    assert float(b11.margin) == pytest.approx(399 - mpmath.log(404, 2), abs=1e-9)
