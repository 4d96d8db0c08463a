"""Real parameters whose critical orbit follows a prescribed Y / Ytilde itinerary.

For c in K_n the critical value climbs down the positive axis,
f(c) > f^2(c) > ... > f^(n-1)(c) > 0, and then f^n(c) wanders in the Cantor
set of Y u Ytilde under g = f^3.  The itinerary records which piece is hit:
0 for Y, 1 for Ytilde.

All decisions are made on certified intervals, so a parameter interval is
only discarded after a proven contradiction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import mpmath

from .dynamics import QuadMap, certified_Y
from .errors import (AmbiguousBracket, OrbitEscapedCantorSet, PrecisionExhausted,
                     TargetNotRealized)
from .interval import Interval

# parameters near -2 where f^3 has full branches over P1; K_n sits close to -2
SEARCH_WINDOW = (Fraction(-2), Fraction(-19, 10))
MAX_NODES = 4096
PAD_ASSUMPTION = "prefix extended by zeros so the searched cylinder shrinks below the target width"


@dataclass(frozen=True)
class KneadingTarget:
    n: int
    prefix: str
    depth_lambda: int | None = None

    def __post_init__(self):
        if self.n < 3:
            raise ValueError("n must be at least 3")
        if not self.prefix or set(self.prefix) - {"0", "1"}:
            raise ValueError("prefix must be a nonempty string over {0,1}")

    @property
    def depth(self) -> int:
        return self.depth_lambda if self.depth_lambda is not None else len(self.prefix) + 8

    def symbol(self, k: int) -> int:
        return int(self.prefix[k]) if k < len(self.prefix) else 0


@dataclass
class Verdict:
    """Outcome of following an interval of parameters.

    ``contradiction`` is True only when the target is certainly violated;
    ``symbols`` counts g-steps certified to match the target.
    """

    contradiction: bool
    chain_certified: bool
    symbols: int
    reason: str = ""


def _chain(c: Interval, n: int) -> tuple[bool | None, Interval, str]:
    """Follow c to f^n(c), checking f(c) > ... > f^(n-1)(c) > 0."""
    x = c.square() + c
    ok: bool | None = True
    why = ""
    for j in range(1, n):
        if j == n - 1:
            if x.hi <= 0:
                return False, x, f"f^{j}(c) <= 0"
            if not x.certainly_positive():
                ok, why = None, why or f"sign of f^{j}(c) undecided"
        nx = x.square() + c
        if j < n - 1:
            if x.hi <= nx.lo:
                return False, nx, f"f^{j}(c) <= f^{j + 1}(c)"
            if not x.certainly_gt(nx):
                ok, why = None, why or f"order of f^{j}(c), f^{j + 1}(c) undecided"
        x = nx
    return ok, x, why


def _follow(c: Interval, n: int, target, max_symbols: int) -> Verdict:
    """Check the orbit of every parameter in c against target(k) for k < max_symbols."""
    ends = certified_Y(c)
    if ends is None:
        return Verdict(False, False, 0, "Y undetermined")
    ylo, yhi = ends
    tlo, thi = -yhi, -ylo
    ok, y, why = _chain(c, n)
    if ok is False:
        return Verdict(True, False, 0, why)
    # a certain miss at any step rules the piece out, even after an undecided
    # step, so keep following while the image is still informative
    certified: int | None = None
    first_undecided = ""
    for k in range(max_symbols):
        want = target(k)
        lo, hi = (ylo, yhi) if want == 0 else (tlo, thi)
        inside = y.inside(lo, hi)
        if inside is False:
            return Verdict(True, ok is True, k if certified is None else certified,
                           f"g-step {k} certainly misses the target piece")
        if inside is None and certified is None:
            certified, first_undecided = k, f"g-step {k} undecided"
        if y.hi - y.lo > (4 << y.P):
            break
        y = y.square() + c
        y = y.square() + c
        y = y.square() + c
    if certified is None:
        certified = max_symbols
    return Verdict(False, ok is True, certified, first_undecided or why)


def _working_bits(bits: int) -> int:
    return bits + 64


@dataclass(frozen=True)
class Membership:
    member: bool
    chain_ok: bool
    chain_failure: str
    escape_index: int | None
    depth: int

    def as_dict(self) -> dict:
        return {"member": self.member, "chain_ok": self.chain_ok, "chain_failure": self.chain_failure,
                "escape_index": self.escape_index, "depth": self.depth}


def _c_interval(c, P: int) -> Interval:
    if isinstance(c, Interval):
        return c
    if isinstance(c, (str, int, Fraction)):
        return Interval.point(Fraction(c), P)
    return Interval.point(c, P)


def kn_membership(c, n: int, depth: int, bits: int = 256) -> Membership:
    """Chain condition plus g^j(f^n(c)) in Y u Ytilde for j <= depth."""
    P = _working_bits(bits)
    ci = _c_interval(c, P)
    lo, hi = ci.to_mpf_pair()
    if not (-2 < lo and hi < -mpmath.mpf(3) / 4):
        return Membership(False, False, "c outside (-2, -3/4)", None, depth)
    ok, y, why = _chain(ci, n)
    if ok is None:
        raise PrecisionExhausted(why)
    if not ok:
        return Membership(False, False, why, None, depth)
    ends = certified_Y(ci)
    if ends is None:
        raise PrecisionExhausted("Y endpoints undetermined")
    ylo, yhi = ends
    for j in range(depth + 1):
        a, b = y.inside(ylo, yhi), y.inside(-yhi, -ylo)
        if a is None or b is None:
            raise PrecisionExhausted(f"membership undecided at g-step {j}")
        if not (a or b):
            return Membership(False, True, "", j, depth)
        y = ((y.square() + ci).square() + ci).square() + ci
    return Membership(True, True, "", None, depth)


def itinerary_of_parameter(c, n: int, length: int, bits: int = 256) -> list[int]:
    """iota(c)_k for k < length: 0 when f^(n+3k)(c) is in Y, 1 when in Ytilde."""
    if length == 0:
        return []
    P = _working_bits(bits)
    ci = _c_interval(c, P)
    ok, y, why = _chain(ci, n)
    if ok is None:
        raise PrecisionExhausted(why)
    if not ok:
        raise OrbitEscapedCantorSet(-1, f"parameter not in K_{n}: {why}")
    ends = certified_Y(ci)
    if ends is None:
        raise PrecisionExhausted("Y endpoints undetermined")
    ylo, yhi = ends
    out = []
    for k in range(length):
        a, b = y.inside(ylo, yhi), y.inside(-yhi, -ylo)
        if a:
            out.append(0)
        elif b:
            out.append(1)
        elif a is False and b is False:
            raise OrbitEscapedCantorSet(k)
        else:
            raise PrecisionExhausted(f"g-step {k} undecided at {bits} bits")
        y = ((y.square() + ci).square() + ci).square() + ci
    return out


@dataclass
class SearchResult:
    c_lo: object
    c_hi: object
    achieved_length: int
    depth: int
    target: KneadingTarget
    bits: int
    residuals: list = field(default_factory=list)
    assumption_flags: tuple = (PAD_ASSUMPTION,)

    def midpoint(self):
        return (self.c_lo + self.c_hi) / 2

    def as_dict(self) -> dict:
        digits = int(self.bits * 0.30103) + 5
        return {"n": self.target.n, "prefix": self.target.prefix,
                "c_lo": mpmath.nstr(self.c_lo, digits, strip_zeros=False),
                "c_hi": mpmath.nstr(self.c_hi, digits, strip_zeros=False),
                "achieved_length": self.achieved_length, "depth": self.depth,
                "bits": self.bits, "residuals": self.residuals,
                "assumption_flags": list(self.assumption_flags)}


def find_parameter(target: KneadingTarget, precision_bits: int = 512,
                   window: tuple = SEARCH_WINDOW) -> SearchResult:
    """Nested bisection of ``window`` keeping every piece not provably inconsistent.

    The target is the prefix followed by zeros.  A piece becomes a leaf once it
    is narrower than 2^(-precision_bits/2) and certified to follow at least
    max(len(prefix), depth) symbols; the answer is the hull of the leaves.
    """
    P = _working_bits(precision_bits)
    need = max(len(target.prefix), target.depth)
    # leaves 4 bits narrower than the target so the hull of a few adjacent leaves stays below 2^-(bits/2)
    width_goal = P - precision_bits // 2 - 4
    floor_width = max(width_goal - 3 * need - 64, 8)
    lo, hi = Interval.point(window[0], P).lo, Interval.point(window[1], P).hi
    level = [(lo, hi)]
    leaves: list[tuple[int, int]] = []
    stats = {"levels": 0, "max_nodes": 1}
    while level:
        nxt = []
        for a, b in level:
            # follow the zero padding as deep as the image stays narrow
            v = _follow(Interval(a, b, P), target.n, target.symbol, 4 * P)
            if v.contradiction:
                continue
            w = (b - a).bit_length()
            if w <= width_goal and v.chain_certified and v.symbols >= need:
                leaves.append((a, b))
                continue
            if w <= floor_width:
                raise PrecisionExhausted("pieces shrank below the working precision without certifying the target")
            m = (a + b) >> 1
            nxt += [(a, m), (m, b)]
        if len(nxt) > MAX_NODES:
            raise PrecisionExhausted(f"{len(nxt)} undecided pieces; the target is not being resolved")
        level = sorted(nxt)
        stats["levels"] += 1
        stats["max_nodes"] = max(stats["max_nodes"], len(level))
    if not leaves:
        raise TargetNotRealized(f"no parameter in the window follows prefix {target.prefix!r}")
    leaves.sort()
    clusters = [[leaves[0][0], leaves[0][1]]]
    for a, b in leaves[1:]:
        if a <= clusters[-1][1]:
            clusters[-1][1] = max(clusters[-1][1], b)
        else:
            clusters.append([a, b])
    if len(clusters) > 1:
        raise AmbiguousBracket(f"{len(clusters)} separate parameter clusters follow the target")
    a, b = clusters[0]
    hull = Interval(a, b, P)
    if hull.width_log2() >= -(precision_bits // 2):
        raise PrecisionExhausted(f"result interval 2^{hull.width_log2():.1f} is wider than 2^-{precision_bits // 2}")
    v = _follow(hull, target.n, target.symbol, 4 * need + 64)
    if v.contradiction or not v.chain_certified or v.symbols < need:
        raise TargetNotRealized("hull of the leaves does not certify the target")
    ctx = mpmath.MPContext()
    ctx.prec = P + 8
    c_lo, c_hi = hull.to_mpf_pair(ctx)
    residuals = [{"levels": stats["levels"], "max_nodes": stats["max_nodes"],
                  "width_log2": round(hull.width_log2(), 3)}]
    return SearchResult(c_lo, c_hi, v.symbols, target.depth, target, precision_bits, residuals)
