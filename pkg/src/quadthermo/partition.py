"""Cubic block partition of the positive integers and the two-variable series.

The integers k >= 1 are cut into alternating blocks I_s = [a_s, b_s) and
J_s = [b_s, a_{s+1}) with a_s = 2^(q s^3).  Each k carries the weight

    pi_k(sign) = 2^(-lam k - tau N(k) + sign tau xi B(k))

and the series below are sums of these weights over blocks, evaluated in
closed form in the log domain.  ``verify_appendix`` checks the family of
inequalities these series are known to satisfy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Sequence, Union

from .errors import HypothesisViolation, TailNotCertifiable
from .logvalue import LN2, LogValue, ctx, log2_1m_exp2, log_sum, mpf

Real = Union[int, Fraction, "ctx.mpf"]

# exact integers are used for a_s while Q(s) stays below this many bits
EXACT_BITS = 1 << 22
# the automatic tail extension stops once tail <= 2^-TAIL_BITS * value
TAIL_BITS = 64
MAX_BLOCKS = 400
LAM_EXACT_BITS = 4096


@dataclass(frozen=True)
class PartitionScheme:
    xi: Fraction
    Xi: int
    q: int
    strict_mode: bool = True

    @classmethod
    def build(cls, xi, q: int, strict: bool = True) -> "PartitionScheme":
        """Build a scheme with Xi = ceil(2 xi) + 1; strict schemes must satisfy the size hypotheses."""
        xi = Fraction(str(xi)) if not isinstance(xi, Fraction) else xi
        if xi <= 0 or q <= 0:
            raise ValueError("xi and q must be positive")
        Xi = math.ceil(2 * xi) + 1
        scheme = cls(xi=xi, Xi=Xi, q=int(q), strict_mode=strict)
        if strict and not scheme.satisfies_strict():
            raise ValueError(
                f"q={q} violates q >= 100(Xi+1) or 2^(q-3) >= q+1+Xi for Xi={Xi}; "
                "use strict=False for a toy scheme")
        return scheme

    @classmethod
    def toy(cls) -> "PartitionScheme":
        return cls.build(Fraction(1, 4), 2, strict=False)

    def satisfies_strict(self) -> bool:
        return self.q >= 100 * (self.Xi + 1) and 2 ** (self.q - 3) >= self.q + 1 + self.Xi

    def flags(self) -> list[str]:
        return [] if self.strict_mode else ["toy-regime: strict size hypotheses on q not enforced"]

    def as_dict(self) -> dict:
        return {"xi": str(self.xi), "Xi": self.Xi, "q": self.q, "strict_mode": self.strict_mode}


def _is_integer(s) -> bool:
    if isinstance(s, int):
        return True
    if isinstance(s, Fraction):
        return s.denominator == 1
    return False


def cubic(scheme: PartitionScheme, s):
    """q s^3: exact for int/Fraction s, an mpf otherwise."""
    if isinstance(s, (int, Fraction)):
        v = scheme.q * Fraction(s) ** 3
        return v.numerator if v.denominator == 1 else v
    s = mpf(s)
    return scheme.q * s ** 3


@lru_cache(maxsize=4096)
def _exact_power(bits: int) -> int:
    return 1 << bits


@dataclass(frozen=True)
class BlockIndices:
    s: object
    a: LogValue
    b: LogValue
    a_next: LogValue
    J_len: LogValue
    I_len: object  # exact int when s is an integer, mpf otherwise
    n_before: int = 0  # number of I-block integers below a_s (integer s only)
    a_int: int | None = None
    b_int: int | None = None
    a_next_int: int | None = None

    @property
    def exact(self) -> bool:
        return self.a_int is not None


@lru_cache(maxsize=8192)
def _block_bounds_int(q: int, Xi: int, s: int) -> BlockIndices:
    Qs, Qn = q * s ** 3, q * (s + 1) ** 3
    I_len = Qn - Qs + Xi
    n_before = 0 if s == 0 else _block_bounds_int(q, Xi, s - 1).n_before + _block_bounds_int(q, Xi, s - 1).I_len
    if Qn <= EXACT_BITS:
        a, a_next = _exact_power(Qs), _exact_power(Qn)
        # toy schemes can have b_s > a_{s+1}; truncate so the blocks still partition [1, oo)
        I_len = min(I_len, a_next - a)
        b = a + I_len
        J_len = LogValue.of(a_next - b)
        return BlockIndices(s, LogValue.of(a), LogValue.of(b), LogValue.of(a_next),
                            J_len, I_len, n_before, a, b, a_next)
    a = LogValue(Qs)
    b = a + I_len
    a_next = LogValue(Qn)
    return BlockIndices(s, a, b, a_next, a_next - b, I_len, n_before)


def block_bounds(scheme: PartitionScheme, s) -> BlockIndices:
    """a_s, b_s, a_{s+1} and |J_s| for real s >= 0 (exact integers when s is an integer)."""
    if s < 0:
        raise ValueError("s must be nonnegative")
    if _is_integer(s):
        return _block_bounds_int(scheme.q, scheme.Xi, int(s))
    Qs, Qn = cubic(scheme, s), cubic(scheme, s + 1)
    I_len = mpf(Qn) - mpf(Qs) + scheme.Xi
    a = LogValue(mpf(Qs))
    b = a + LogValue.of(I_len)
    a_next = LogValue(mpf(Qn))
    return BlockIndices(s, a, b, a_next, a_next - b, I_len)


def _locate(scheme: PartitionScheme, k: int) -> tuple[int, bool]:
    """Block index s and whether k lies in I_s (True) or J_s (False); k >= 1."""
    s = 0
    while True:
        bb = _block_bounds_int(scheme.q, scheme.Xi, s)
        a_next = bb.a_next_int if bb.exact else None
        if a_next is None:
            # a_{s+1} has more than EXACT_BITS bits, so any realistic k is below it
            a_next_bits = scheme.q * (s + 1) ** 3
            if k.bit_length() > a_next_bits:
                s += 1
                continue
            b = (1 << (scheme.q * s ** 3)) + bb.I_len
            return s, k < b
        if k < a_next:
            return s, k < bb.b_int
        s += 1


def count_N(scheme: PartitionScheme, k: int) -> int:
    """Number of j < k with j+1 in some I block, via the per-block closed forms."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    if k == 0:
        return 0
    s, in_I = _locate(scheme, k)
    bb = _block_bounds_int(scheme.q, scheme.Xi, s)
    # n_before = Q(s) + Xi s whenever no block had to be truncated (always in strict mode)
    if in_I:
        return k + 1 - (1 << (scheme.q * s ** 3)) + bb.n_before
    return bb.n_before + bb.I_len


def count_B(scheme: PartitionScheme, k: int) -> int:
    """Block label: 2s+1 on I_s, 2s+2 on J_s, 0 at k = 0."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    if k == 0:
        return 0
    s, in_I = _locate(scheme, k)
    return 2 * s + 1 if in_I else 2 * s + 2


def count_N_brute(scheme: PartitionScheme, k_max: int) -> list[int]:
    """N(0..k_max) by direct enumeration of block membership."""
    in_I = [False] * (k_max + 2)
    s = 0
    while True:
        a = 1 << (scheme.q * s ** 3)
        if a > k_max + 1:
            break
        b = a + scheme.q * ((s + 1) ** 3 - s ** 3) + scheme.Xi
        for v in range(a, min(b, k_max + 2)):
            in_I[v] = True
        s += 1
    out, n = [0], 0
    for k in range(1, k_max + 1):
        n += in_I[k]  # j = k-1, so j+1 = k
        out.append(n)
    return out


def count_B_brute(scheme: PartitionScheme, k_max: int) -> list[int]:
    out = [0] * (k_max + 1)
    s = 0
    while True:
        a = 1 << (scheme.q * s ** 3)
        if a > k_max:
            break
        b = a + scheme.q * ((s + 1) ** 3 - s ** 3) + scheme.Xi
        a_next = 1 << (scheme.q * (s + 1) ** 3)
        for k in range(a, min(b, k_max + 1)):
            out[k] = 2 * s + 1
        for k in range(b, min(a_next, k_max + 1)):
            out[k] = 2 * s + 2
        s += 1
    return out


# ---------------------------------------------------------------- lambda, s+-

Lam = Union[int, Fraction, LogValue]


def lambda_of(scheme: PartitionScheme, s) -> LogValue:
    """1/|J_s| as a log value."""
    return LogValue.ONE / block_bounds(scheme, s).J_len


def lambda_exact(scheme: PartitionScheme, s: int) -> Fraction:
    """1/|J_s| as an exact fraction (integer s with an exactly representable block)."""
    bb = block_bounds(scheme, s)
    if not bb.exact:
        raise ValueError("block too large for exact arithmetic")
    return Fraction(1, bb.a_next_int - bb.b_int)


def s_plus(scheme: PartitionScheme, tau):
    return _s_pm(scheme, tau, -1)


def s_minus(scheme: PartitionScheme, tau):
    return _s_pm(scheme, tau, +1)


def _s_pm(scheme: PartitionScheme, tau, sgn: int):
    tau = mpf(tau)
    if tau >= 1:
        raise ValueError("s+- needs tau < 1")
    num = mpf(scheme.Xi) + sgn * 2 * mpf(scheme.xi)
    return ctx.sqrt(num / (scheme.q * (1 - tau)))


def _sign(sign) -> int:
    if sign in (1, "+", "plus"):
        return 1
    if sign in (-1, "-", "minus"):
        return -1
    raise ValueError(f"bad sign {sign!r}")


def _lam_mpf(lam: Lam):
    if isinstance(lam, LogValue):
        return lam.to_mpf()
    return mpf(lam)


def _lam_times(lam: Lam, k: LogValue | int):
    """lam * k as an mpf; exact-rational when both are exact."""
    if isinstance(lam, (int, Fraction)) and isinstance(k, int):
        v = Fraction(lam) * k
        return mpf(v.numerator) / v.denominator
    if isinstance(lam, (int, Fraction)) and lam == 0:
        return ctx.zero
    return (LogValue.of(lam) * LogValue.of(k)).to_mpf()


# ------------------------------------------------- geometric closed forms

def geo_sum(x, M: LogValue) -> LogValue:
    """sum_{m=1}^{M} 2^(-x m) for x >= 0 (M may be astronomically large)."""
    if M.is_zero:
        return LogValue.ZERO
    if x == 0:
        return M
    xM = x * M.to_mpf()
    return LogValue(-x + log2_1m_exp2(-xM) - log2_1m_exp2(-x))


def _power_sum(p: int, M):
    """sum_{m=1}^{M} m^p for p = 1..4 (Faulhaber)."""
    if p == 1:
        return M * (M + 1) / 2
    if p == 2:
        return M * (M + 1) * (2 * M + 1) / 6
    if p == 3:
        return (M * (M + 1) / 2) ** 2
    if p == 4:
        return M * (M + 1) * (2 * M + 1) * (3 * M * M + 3 * M - 1) / 30
    raise ValueError(p)


def ageo_sum(x, M: LogValue) -> LogValue:
    """sum_{m=1}^{M} m 2^(-x m) for x >= 0.

    Uses r(1 - (M+1) r^M + M r^(M+1))/(1-r)^2 rearranged as
    r [(1 - r^M) - M r^M (1 - r)] / (1 - r)^2, switching to a short
    Taylor expansion in x when x M is tiny (the bracket cancels to second order).
    """
    if M.is_zero:
        return LogValue.ZERO
    Mf = M.to_mpf()
    if x == 0:
        return LogValue.of(_power_sum(1, Mf))
    y = x * LN2
    u = y * Mf
    if u < ctx.ldexp(1, -20):
        total = ctx.zero
        fact = 1
        for n in range(4):
            if n:
                fact *= n
            total += (-y) ** n / fact * _power_sum(n + 1, Mf)
        return LogValue.of(total)
    one_minus_r = -ctx.expm1(-y)
    bracket = -ctx.expm1(-u) - Mf * ctx.exp(-u) * one_minus_r
    return LogValue.of(ctx.exp(-y) * bracket / one_minus_r ** 2)


# ----------------------------------------------------------- block series

def _xi_term(scheme: PartitionScheme, sgn: int, tau, B: int):
    return sgn * tau * mpf(scheme.xi) * B


def _I_prefactor(scheme, s: int, sgn: int, tau, lam: Lam) -> LogValue:
    """log2 weight of k = a_s - 1 (formally), so that pi_k = pref * 2^-(lam+tau)m for k = a_s-1+m."""
    bb = block_bounds(scheme, s)
    a_minus_1 = bb.a_int - 1 if bb.exact else bb.a - 1
    e = -_lam_times(lam, a_minus_1) - tau * bb.n_before + _xi_term(scheme, sgn, tau, 2 * s + 1)
    return LogValue(e)


def _J_prefactor(scheme, s: int, sgn: int, tau) -> LogValue:
    """2^(-tau N - (+-) tau xi B) on J_s, i.e. 2^(-tau Q(s+1) - (Xi -+ 2xi) tau (s+1)) in strict mode."""
    bb = block_bounds(scheme, s)
    N = bb.n_before + bb.I_len
    return LogValue(-tau * N + _xi_term(scheme, sgn, tau, 2 * s + 2))


def _shift(bb: BlockIndices, d: int):
    """b_s + d, exact when possible."""
    return bb.b_int + d if bb.exact else (bb.b + d if d >= 0 else bb.b - (-d))


def block_sum_I(scheme: PartitionScheme, s: int, sign, tau, lam: Lam) -> LogValue:
    sgn, tau = _sign(sign), mpf(tau)
    bb = block_bounds(scheme, s)
    x = _lam_mpf(lam) + tau
    return _I_prefactor(scheme, s, sgn, tau, lam) * geo_sum(x, LogValue.of(bb.I_len))


def block_sum_I_weighted(scheme: PartitionScheme, s: int, sign, tau, lam: Lam) -> LogValue:
    """sum over I_s of k pi_k."""
    sgn, tau = _sign(sign), mpf(tau)
    bb = block_bounds(scheme, s)
    x = _lam_mpf(lam) + tau
    M = LogValue.of(bb.I_len)
    a_minus_1 = LogValue.of(bb.a_int - 1) if bb.exact else bb.a - 1
    inner = a_minus_1 * geo_sum(x, M) + ageo_sum(x, M)
    return _I_prefactor(scheme, s, sgn, tau, lam) * inner


def _J_partial(scheme, s: int, sgn: int, tau, lam: Lam, start: int, count: LogValue,
               weight_offset=None) -> LogValue:
    """sum_{m=1}^{count} w_m pi_k over k = b_s + start - 1 + m.

    w_m = 1 when ``weight_offset`` is None, else w_m = weight_offset + m.
    """
    bb = block_bounds(scheme, s)
    k0 = _shift(bb, start - 1)
    lamf = _lam_mpf(lam)
    pref = _J_prefactor(scheme, s, sgn, tau) * LogValue(-_lam_times(lam, k0))
    if weight_offset is None:
        return pref * geo_sum(lamf, count)
    inner = LogValue.of(weight_offset) * geo_sum(lamf, count) + ageo_sum(lamf, count)
    return pref * inner


def block_sum_J(scheme: PartitionScheme, s: int, sign, tau, lam: Lam) -> LogValue:
    """J_s = 2^(-tau Q(s+1) - (Xi -+ 2 xi) tau (s+1)) * sum_{k in J_s} 2^(-lam k)."""
    sgn, tau = _sign(sign), mpf(tau)
    return _J_partial(scheme, s, sgn, tau, lam, 0, block_bounds(scheme, s).J_len)


def block_sum_J_weighted(scheme: PartitionScheme, s: int, sign, tau, lam: Lam) -> LogValue:
    """sum over J_s of k pi_k."""
    sgn, tau = _sign(sign), mpf(tau)
    bb = block_bounds(scheme, s)
    off = bb.b_int - 1 if bb.exact else bb.b - 1
    return _J_partial(scheme, s, sgn, tau, lam, 0, bb.J_len, off)


def _J_len_minus(bb: BlockIndices, d: int) -> LogValue:
    if bb.exact:
        return LogValue.of(bb.a_next_int - bb.b_int - d)
    return bb.J_len - d


def block_sum_J_hat(scheme: PartitionScheme, s: int, sign, tau, lam: Lam) -> LogValue:
    """sum_{k=b_s+s^2}^{a_{s+1}-1} (k + 1 - b_s - s^2) pi_k."""
    sgn, tau = _sign(sign), mpf(tau)
    bb = block_bounds(scheme, s)
    return _J_partial(scheme, s, sgn, tau, lam, s * s, _J_len_minus(bb, s * s), 0)


def weighted_block_sums(scheme: PartitionScheme, s: int, sign, tau, lam: Lam):
    """(J~_s^+, I~_s^+, J^_s^sign)."""
    return (block_sum_J_weighted(scheme, s, +1, tau, lam),
            block_sum_I_weighted(scheme, s, +1, tau, lam),
            block_sum_J_hat(scheme, s, sign, tau, lam))


def brute_block_sums(scheme: PartitionScheme, s: int, sign, tau, lam) -> dict:
    """Term-by-term sums over one block, for small toy blocks only (oracle)."""
    sgn = _sign(sign)
    bb = block_bounds(scheme, s)
    if not bb.exact or bb.a_next_int > 1 << 24:
        raise ValueError("block too large to enumerate")
    tau, lamf, xi = mpf(tau), mpf(lam), mpf(scheme.xi)
    Ns = count_N_brute(scheme, bb.a_next_int)
    out = {"I": ctx.zero, "J": ctx.zero, "I_w": ctx.zero, "J_w": ctx.zero, "J_hat": ctx.zero}
    for k in range(bb.a_int, bb.a_next_int):
        B = 2 * s + 1 if k < bb.b_int else 2 * s + 2
        term = ctx.power(2, -lamf * k - tau * Ns[k] + sgn * tau * xi * B)
        if k < bb.b_int:
            out["I"] += term
            out["I_w"] += k * term
        else:
            out["J"] += term
            out["J_w"] += k * term
            w = k + 1 - bb.b_int - s * s
            if w >= 1:
                out["J_hat"] += w * term
    return out


# ------------------------------------------------------------ whole series

@dataclass(frozen=True)
class SeriesValue:
    value: LogValue
    tail_bound: LogValue
    blocks_summed: int

    @property
    def upper(self) -> LogValue:
        return self.value + self.tail_bound


def _tail_block_bound(scheme, j: int, sgn: int, tau, lam: Lam, weighted: bool) -> LogValue:
    """Upper bound for the I_j + J_j contribution (times k when weighted)."""
    bb = block_bounds(scheme, j)
    lamf = _lam_mpf(lam)
    a_minus_1 = bb.a_int - 1 if bb.exact else bb.a - 1
    e_I = (-_lam_times(lam, a_minus_1) - tau * bb.n_before
           + _xi_term(scheme, sgn, tau, 2 * j + 1))
    UI = LogValue(e_I - tau - log2_1m_exp2(-tau))
    P = _J_prefactor(scheme, j, sgn, tau)
    inner = bb.J_len
    if lamf > 0:
        b = bb.b_int if bb.exact else bb.b
        alt = LogValue(-_lam_times(lam, b) - log2_1m_exp2(-lamf))
        inner = min(inner, alt, key=lambda v: v._key())
    U = UI + P * inner
    if weighted:
        U = U * bb.a_next
    return U


def _certified_tail(scheme, s1: int, sgn: int, tau, lam: Lam, weighted: bool) -> LogValue:
    """Bound sum_{j >= s1} of block contributions by geometric domination.

    The block bounds U_j decay with ratio U_{j+1}/U_j; we require the next
    three ratios to be <= 1/2 and nonincreasing, which for these exponents
    (dominated by -lam a_j or -tau(Q(j+1)-Q(j))) persists for all larger j.
    """
    U = [_tail_block_bound(scheme, s1 + i, sgn, tau, lam, weighted) for i in range(4)]
    if U[0].is_zero:
        return LogValue.ZERO
    ratios = []
    for i in range(3):
        if U[i + 1].is_zero:
            ratios.append(ctx.ninf)
            continue
        ratios.append(U[i + 1].log2 - U[i].log2)
    rho = ratios[0]
    if not (rho <= -1 and ratios[1] <= rho + ctx.ldexp(1, -40) and ratios[2] <= ratios[1] + ctx.ldexp(1, -40)):
        raise TailNotCertifiable(
            f"block ratios {[ctx.nstr(r, 8) for r in ratios]} at s={s1} do not certify decay")
    return U[0] * LogValue(-log2_1m_exp2(rho if rho != ctx.ninf else ctx.mpf(-1000)))


def _series(scheme, sign, tau, lam: Lam, s_max: int | None, weighted: bool) -> SeriesValue:
    sgn, tau = _sign(sign), mpf(tau)
    if tau <= 0:
        raise ValueError("tau must be positive")
    if _lam_mpf(lam) == 0 and tau < 1:
        raise TailNotCertifiable("lambda = 0 with tau < 1: the series diverges")
    auto = s_max is None
    total = LogValue.ONE if not weighted else LogValue.ZERO  # k = 0 term: pi_0 = 1, k*pi_0 = 0
    s = 0
    limit = MAX_BLOCKS if auto else s_max
    while True:
        if weighted:
            total = total + block_sum_I_weighted(scheme, s, sgn, tau, lam) \
                + block_sum_J_weighted(scheme, s, sgn, tau, lam)
        else:
            total = total + block_sum_I(scheme, s, sgn, tau, lam) + block_sum_J(scheme, s, sgn, tau, lam)
        if s >= limit:
            break
        if auto and s >= 1:
            try:
                tail = _certified_tail(scheme, s + 1, sgn, tau, lam, weighted)
            except TailNotCertifiable:
                tail = None
            if tail is not None and (tail.is_zero or tail.log2 <= total.log2 - TAIL_BITS):
                return SeriesValue(total, tail, s + 1)
        s += 1
    if auto:
        raise TailNotCertifiable(f"no certified tail within {MAX_BLOCKS} blocks")
    tail = _certified_tail(scheme, s + 1, sgn, tau, lam, weighted)
    return SeriesValue(total, tail, s + 1)


def pi_total(scheme: PartitionScheme, sign, tau, lam: Lam, s_max: int | None = None) -> SeriesValue:
    """1 + sum_s (I_s + J_s); s_max=None extends until the tail is below 2^-64 of the value."""
    return _series(scheme, sign, tau, lam, s_max, weighted=False)


def pi_weighted_total(scheme: PartitionScheme, tau, lam: Lam, s_max: int | None = None) -> SeriesValue:
    """1 + sum_s (I~_s^+ + J~_s^+)."""
    sv = _series(scheme, +1, tau, lam, s_max, weighted=True)
    return SeriesValue(sv.value + LogValue.ONE, sv.tail_bound, sv.blocks_summed)


def series_rows(scheme: PartitionScheme, sign, tau, lam: Lam, s_max: int) -> list[dict]:
    """Per-block dump for the CLI: one I row and one J row per s, with the tail beyond s_max."""
    sgn = _sign(sign)
    tail = _certified_tail(scheme, s_max + 1, sgn, mpf(tau), lam, False)
    rows = []
    for s in range(s_max + 1):
        for kind, fn in (("I", block_sum_I), ("J", block_sum_J)):
            rows.append({"s": s, "kind": kind, "sign": "plus" if sgn > 0 else "minus",
                         "log2_value": fn(scheme, s, sgn, tau, lam).log2_str(30),
                         "log2_tail": tail.log2_str(30) if s == s_max and kind == "J" else ""})
    return rows


# ------------------------------------------------------ inequality verifier

@dataclass
class Check:
    lemma: str
    point: dict
    lhs: LogValue | None
    rhs: LogValue | None
    note: str = ""

    @property
    def margin(self):
        """rhs - lhs in log2; +inf when rhs is unbounded, -inf when lhs is."""
        if self.rhs is None:
            return ctx.inf
        if self.lhs is None:
            return ctx.ninf
        return self.rhs._key() - self.lhs._key()

    @property
    def passed(self) -> bool:
        return self.margin >= 0

    def as_dict(self) -> dict:
        fmt = lambda v: "inf" if v is None else v.log2_str(25)
        m = self.margin
        return {"lemma": self.lemma, "point": self.point, "lhs_log2": fmt(self.lhs),
                "rhs_log2": fmt(self.rhs),
                "margin_log2": "inf" if m == ctx.inf else ("-inf" if m == ctx.ninf else ctx.nstr(m, 25)),
                "pass": bool(self.passed), **({"note": self.note} if self.note else {})}


@dataclass
class VerificationReport:
    scheme: PartitionScheme
    grid: dict
    checks: list[Check] = field(default_factory=list)
    outside_hypothesis: list[dict] = field(default_factory=list)

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def min_margin(self):
        return min((c.margin for c in self.checks), default=ctx.inf)

    def as_dict(self) -> dict:
        return {"scheme": self.scheme.as_dict(), "grid": self.grid,
                "checks": [c.as_dict() for c in self.checks],
                "outside_hypothesis": self.outside_hypothesis,
                "all_pass": self.all_passed}


def _fmt(x) -> str:
    if isinstance(x, (int, Fraction)):
        return str(x)
    return ctx.nstr(mpf(x), 30)


def default_tau_grid(scheme: PartitionScheme, points: int = 9) -> list:
    """Points of ((q-1)/q, 1) with 1 - tau log-spaced between 1/(4q) and 1/(400q)."""
    out = []
    for i in range(points):
        e = ctx.mpf(i) / max(points - 1, 1)
        out.append(1 - ctx.power(100, -e) / (4 * scheme.q))
    return out


def default_s_grid() -> list:
    return list(range(13)) + [Fraction(21, 2)]


def _floor(s) -> int:
    return int(math.floor(s)) if isinstance(s, (int, Fraction)) else int(ctx.floor(s))


def _ceil(s) -> int:
    return int(math.ceil(s)) if isinstance(s, (int, Fraction)) else int(ctx.ceil(s))


def _lam(scheme, s) -> Lam:
    """lambda(s) exactly when possible."""
    bb = block_bounds(scheme, s)
    # huge exact denominators make rational products far slower than 256-bit logs
    if bb.exact and bb.a_next_int.bit_length() <= LAM_EXACT_BITS:
        return Fraction(1, bb.a_next_int - bb.b_int)
    return LogValue.ONE / bb.J_len


def _b_plus(scheme, s: int, d: int) -> LogValue:
    bb = block_bounds(scheme, s)
    return LogValue.of(bb.b_int + d) if bb.exact else bb.b + d


def _check_B1(scheme, s_grid, report: VerificationReport) -> None:
    prev = None
    for s in sorted(s_grid, key=lambda v: mpf(v)):
        bb = block_bounds(scheme, s)
        pt = {"s": _fmt(s)}
        half_next = bb.a_next / 2
        report.checks.append(Check("B.1(1) b_s <= a_{s+1}/2", pt, bb.b, half_next))
        report.checks.append(Check("B.1(2) a_{s+1}/2 <= |J_s|", pt, half_next, bb.J_len))
        lam = LogValue.ONE / bb.J_len
        report.checks.append(Check("lambda(s) <= 1/4", pt, lam, LogValue.of(Fraction(1, 4))))
        if prev is not None:
            report.checks.append(Check("B.1(1) lambda strictly decreasing", {"s": _fmt(prev[0]), "s_next": _fmt(s)},
                                       lam, prev[1], note="strict: margin must be > 0"))
        prev = (s, lam)
        if s >= 1:
            lhs = bb.b + LogValue.of(2 * (mpf(s) + 1) ** 2)
            report.checks.append(Check("B.1(3) b_s + 2(s+1)^2 <= (5/4) a_s", pt, lhs, bb.a * Fraction(5, 4)))
            s0 = _ceil(s)
            lhs = _b_plus(scheme, s0, 2 * s0 * s0)
            report.checks.append(Check("B.1(4) b_{s0} + 2 s0^2 <= 3|J_s|", pt, lhs, bb.J_len * 3))


def _pi_upper(scheme, sign, tau, lam) -> LogValue:
    return pi_total(scheme, sign, tau, lam).upper


def _pi_lower(scheme, sign, tau, lam) -> LogValue:
    return pi_total(scheme, sign, tau, lam).value


def _tower_middle(scheme, tau, lam: Lam, s0: int) -> SeriesValue:
    """Pi~+ - sum_{c=s0-3}^{s0} J^_c^+ - (|J_{s0-1}| - s0^2) J_{s0}^+, as a sum of nonnegative parts."""
    full = pi_weighted_total(scheme, tau, lam)
    total = LogValue.ONE
    for j in range(full.blocks_summed):
        total = total + block_sum_I_weighted(scheme, j, +1, tau, lam)
        if not (s0 - 3 <= j <= s0):
            total = total + block_sum_J_weighted(scheme, j, +1, tau, lam)
            continue
        bb = block_bounds(scheme, j)
        L = j * j
        rest = _J_len_minus(bb, L)
        if j < s0:
            # sum_{k<b+L} k pi_k + (b+L-1) sum_{k>=b+L} pi_k
            off_head = bb.b_int - 1 if bb.exact else bb.b - 1
            off_rest = _shift(bb, L - 1)
        else:
            prev = block_bounds(scheme, j - 1)
            # b_{s0} - |J_{s0-1}| = |I_{s0}| + b_{s0-1}
            base = (bb.I_len + prev.b_int) if (bb.exact and prev.exact) else LogValue.of(bb.I_len) + prev.b
            W = L  # subtract |J_{s0-1}| - s0^2 from every weight
            off_head = base - 1 + W if isinstance(base, int) else base + (W - 1)
            off_rest = base + L - 1 + W if isinstance(base, int) else base + (L - 1 + W)
        total = total + _J_partial(scheme, j, +1, tau, lam, 0, LogValue.of(L), off_head)
        total = total + LogValue.of(off_rest) * _J_partial(scheme, j, +1, tau, lam, L, rest)
    return SeriesValue(total, full.tail_bound, full.blocks_summed)


def verify_appendix(scheme: PartitionScheme, tau_grid: Sequence | None = None,
                    omega_grid: Sequence = (0, 1, 4), s_grid: Sequence | None = None,
                    tau_ge1_grid: Sequence = (1, Fraction(3, 2), 2),
                    strict_domain: bool = False) -> VerificationReport:
    """Evaluate every inequality of the series lemmas on the given grids.

    Grid points outside a statement's hypotheses are listed in
    ``outside_hypothesis``; with ``strict_domain`` they raise instead.
    """
    tau_grid = default_tau_grid(scheme) if tau_grid is None else [mpf(t) for t in tau_grid]
    s_grid = default_s_grid() if s_grid is None else list(s_grid)
    report = VerificationReport(scheme, {
        "tau": [_fmt(t) for t in tau_grid], "omega": [_fmt(o) for o in omega_grid],
        "s": [_fmt(s) for s in s_grid], "tau_ge_1": [_fmt(t) for t in tau_ge1_grid]})

    def outside(lemma, point, why):
        if strict_domain:
            raise HypothesisViolation(f"{lemma} at {point}: {why}")
        report.outside_hypothesis.append({"lemma": lemma, "point": point, "reason": why})

    xi, Xi, q = mpf(scheme.xi), scheme.Xi, scheme.q
    _check_B1(scheme, s_grid, report)

    for tau in tau_ge1_grid:
        bound = LogValue.of(2 * (ctx.power(2, mpf(tau) * xi) + 1))
        report.checks.append(Check("B.2sub(1) Pi+(tau,0) <= 2(2^(tau xi)+1)", {"tau": _fmt(tau)},
                                   _pi_upper(scheme, +1, tau, 0), bound))

    lo = mpf(q - 1) / q
    for tau in tau_grid:
        if not lo < tau < 1:
            outside("B.2", {"tau": _fmt(tau)}, "tau not in ((q-1)/q, 1)")
            continue
        for s in s_grid:
            pt = {"tau": _fmt(tau), "s": _fmt(s)}
            lam = _lam(scheme, s)
            fs = _floor(s)
            thr = (mpf(cubic(scheme, s + 1)) - 1) / mpf(cubic(scheme, s + 2))
            if mpf(2) / 3 < tau and tau > thr:
                rhs = LogValue.of(4 + 5 * ctx.power(2, tau * xi))
                for j in range(fs + 2):
                    rhs = rhs + LogValue((1 - tau) * q * (j + 1) ** 3 - tau * (Xi - 2 * xi) * (j + 1)) * 2
                report.checks.append(Check("B.2sub(2) Pi+(tau,lambda(s)) bound", pt,
                                           _pi_upper(scheme, +1, tau, lam), rhs))
            else:
                outside("B.2sub(2)", pt, "needs tau in (2/3,1) and tau > (Q(s+1)-1)/Q(s+2)")
            lhs = LogValue((1 - tau) * q * (fs + 1) ** 3 - tau * (Xi + 2 * xi) * (fs + 1) - 3)
            report.checks.append(Check("B.2sub(3) (1/8)2^(...) <= Pi-(tau,lambda(s))", pt,
                                       lhs, _pi_lower(scheme, -1, tau, lam)))

        sp = s_plus(scheme, tau)
        pt = {"tau": _fmt(tau)}
        if sp - 2 < 0:
            outside("B.2 upper", pt, "s+(tau) - 2 < 0, lambda undefined")
        else:
            rhs = LogValue.of(25 + 5 * ctx.power(2, tau * xi))
            report.checks.append(Check("B.2 Pi+(tau,lambda(s+ - 2)) <= 25 + 5 2^(tau xi)", pt,
                                       _pi_upper(scheme, +1, tau, _lam(scheme, sp - 2)), rhs))
        sm = s_minus(scheme, tau)
        for om in omega_grid:
            ptw = {"tau": _fmt(tau), "omega": _fmt(om)}
            lhs = LogValue(2 * mpf(om) - 3)
            report.checks.append(Check("B.2 2^(2 Omega - 3) <= Pi-(tau,lambda(s- + Omega))", ptw,
                                       lhs, _pi_lower(scheme, -1, tau, _lam(scheme, sm + mpf(om)))))

        if not (mpf(1) / 2 <= tau <= 1):
            outside("B.3/B.4", pt, "tau not in [1/2, 1]")
            continue
        for s in s_grid:
            pt = {"tau": _fmt(tau), "s": _fmt(s)}
            if s <= 0:
                outside("B.3(1)", pt, "needs s > 0")
                continue
            lam = _lam(scheme, s)
            tilde = pi_weighted_total(scheme, tau, lam)
            report.checks.append(Check("B.3(1) Pi~+(tau,lambda(s)) < inf", pt, tilde.upper, None,
                                       note="certified finite: closed-form blocks plus geometric tail"))
            if s < 10:
                outside("B.3(2)/B.4", pt, "needs s >= 10")
                continue
            s0 = _ceil(s)
            jhat_minus = {c: block_sum_J_hat(scheme, c, -1, tau, lam) for c in range(s0 - 3, s0 + 1)}
            mid = _tower_middle(scheme, tau, lam, s0)
            scale = LogValue(-q * s0 * s0)
            rhs = scale * log_sum(jhat_minus[c] for c in range(s0 - 3, s0 + 1))
            report.checks.append(Check("B.3(2) Pi+ <= Pi~+ - sum J^+ - (|J_{s0-1}|-s0^2) J_{s0}^+", pt,
                                       _pi_upper(scheme, +1, tau, lam), mid.value))
            report.checks.append(Check("B.3(2) middle <= 2^(-q s0^2) sum J^-", pt, mid.upper, rhs))
            e = 2 * q * (mpf(s) + 1) ** 3 - q * tau * (s0 + 1) ** 3 - (Xi + 2 * xi) * tau * (s0 + 1) - 9
            report.checks.append(Check("B.4(1) J^-_{s0} lower bound", pt, LogValue(e), jhat_minus[s0]))
            for c in range(s0 - 3, s0):
                lhs = _b_plus(scheme, c, c * c) * block_sum_J(scheme, c, +1, tau, lam)
                rhs = scale * jhat_minus[c] / 20
                report.checks.append(Check("B.4(2) (b_c + c^2) J_c^+ <= (1/20) 2^(-q s0^2) J^-_c",
                                           {**pt, "c": c}, lhs, rhs))
            bb, prev = block_bounds(scheme, s0), block_bounds(scheme, s0 - 1)
            if bb.exact and prev.exact:
                coef = LogValue.of(bb.I_len + prev.b_int + 2 * s0 * s0)
            else:
                coef = LogValue.of(bb.I_len) + prev.b + 2 * s0 * s0
            lhs = coef * block_sum_J(scheme, s0, +1, tau, lam)
            report.checks.append(Check("B.4(3) (b_{s0} - |J_{s0-1}| + 2 s0^2) J^+_{s0} <= (1/4) 2^(-q s0^2) J^-_{s0}",
                                       pt, lhs, scale * jhat_minus[s0] / 4))
    return report
