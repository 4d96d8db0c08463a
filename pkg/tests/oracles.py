"""Brute-force references written independently of the package internals."""

from __future__ import annotations

import bisect
import math
from fractions import Fraction

import mpmath


class ToyBlocks:
    """I_s = [a_s, b_s), J_s = [b_s, a_(s+1)) listed explicitly up to a bound.

    a_s = 2^(q s^3), b_s = a_s + q((s+1)^3 - s^3) + Xi, with every block
    clipped to start where the previous one stopped.
    """

    def __init__(self, q: int, Xi: int, k_max: int):
        self.edges: list[int] = []  # start of each block, in order
        self.kinds: list[tuple[str, int]] = []
        pos, s = 1, 0
        while pos <= k_max:
            a, a_next = 2 ** (q * s ** 3), 2 ** (q * (s + 1) ** 3)
            b = min(a + q * ((s + 1) ** 3 - s ** 3) + Xi, a_next)
            for kind, lo, hi in (("I", max(a, pos), b), ("J", max(b, pos), a_next)):
                if hi > lo:
                    self.edges.append(lo)
                    self.kinds.append((kind, s))
                    pos = hi
            s += 1
        self.k_max = k_max

    def label(self, k: int) -> tuple[str, int]:
        return self.kinds[bisect.bisect_right(self.edges, k) - 1]

    def N_and_B(self) -> tuple[list[int], list[int]]:
        """N(k) = #{1 <= v <= k : v in some I_s} and B(k) = 2s+1 on I_s, 2s+2 on J_s."""
        N, B = [0] * (self.k_max + 1), [0] * (self.k_max + 1)
        for k in range(1, self.k_max + 1):
            kind, s = self.label(k)
            N[k] = N[k - 1] + (kind == "I")
            B[k] = 2 * s + 1 if kind == "I" else 2 * s + 2
        return N, B


def block_sums(q: int, Xi: int, xi: Fraction, s: int, sign: int, tau, lam, rel_cut_bits: int = 140):
    """Term-by-term I_s, J_s and J-hat_s (and k-weighted I, J).

    Each block is scaled by its first term 2^(e_0) (kept at 200 bits); the
    remaining factors 2^(e_k - e_0) are small floats summed exactly with fsum.
    Long J blocks are cut once 2^(-lam (k - b_s)) < 2^(-rel_cut_bits); the
    neglected geometric tail is then far below 2^-40 relative.
    """
    ctx = mpmath.MPContext()
    ctx.prec = 200
    tau, lam, xi = Fraction(tau), Fraction(lam), Fraction(xi)
    a, a_next = 2 ** (q * s ** 3), 2 ** (q * (s + 1) ** 3)
    blocks = ToyBlocks(q, Xi, min(a_next, 2 ** 22))
    n_before = 0
    for (kind, j), lo, hi in zip(blocks.kinds, blocks.edges, blocks.edges[1:] + [None]):
        if kind == "I" and j < s:
            n_before += hi - lo
    has_I = ("I", s) in blocks.kinds
    lo_I = blocks.edges[blocks.kinds.index(("I", s))] if has_I else a
    b = min(a + q * ((s + 1) ** 3 - s ** 3) + Xi, a_next)
    stop = a_next if lam == 0 else min(a_next, b + int(rel_cut_bits / lam) + 1)
    if stop - b > 5_000_000:
        raise ValueError("block too long to enumerate")

    def exponent(k, N, B):
        return -lam * k - tau * N + sign * tau * xi * B

    def scaled(ks, N0, rate, B):
        # inside one block the exponent drops by ``rate`` per step
        e0 = exponent(ks[0], N0, B)
        r = float(rate)
        f = [2.0 ** (-r * i) for i in range(len(ks))]
        return ctx.power(2, ctx.mpf(e0.numerator) / e0.denominator), f

    out = dict.fromkeys(("I", "I_w", "J", "J_w", "J_hat"), ctx.zero)
    ks = range(lo_I, b)
    if ks:
        scale, f = scaled(ks, n_before + 1, lam + tau, 2 * s + 1)
        out["I"] = scale * math.fsum(f)
        out["I_w"] = scale * math.fsum(k * x for k, x in zip(ks, f))
    N = n_before + len(ks)
    ks = range(b, stop)
    if ks:
        scale, f = scaled(ks, N, lam, 2 * s + 2)
        out["J"] = scale * math.fsum(f)
        out["J_w"] = scale * math.fsum(k * x for k, x in zip(ks, f))
        out["J_hat"] = scale * math.fsum((k + 1 - b - s * s) * x for k, x in zip(ks, f) if k + 1 - b - s * s >= 1)
    return out


def chebyshev_periodic_pressure(N: int, t: float) -> float:
    """(1/N) log sum |Df^N(x)|^-t over the fixed points of f^N for f(x) = x^2 - 2.

    With x = 2cos(2 pi theta), f^N(x) = x exactly when 2^N theta = +-theta mod 1.
    """
    ctx = mpmath.MPContext()
    ctx.prec = 80
    angles = set()
    for m in (2 ** N - 1, 2 ** N + 1):
        for k in range(m // 2 + 1):
            angles.add(Fraction(k, m))
    total = ctx.zero
    for th in angles:
        y = 2 * ctx.cos(2 * ctx.pi * th.numerator / th.denominator)
        d = ctx.one
        for _ in range(N):
            d *= abs(2 * y)
            y = y * y - 2
        total += d ** (-t)
    return float(ctx.log(total) / N)
