"""Real dynamics of f_c(z) = z^2 + c near c = -2.

Everything here is built from closed-form inverse branches.  For x in the
central interval P1 = (alpha, -alpha), f^3(x) lies in P1 exactly when

    f^2(x) in (-alpha, sqrt(-alpha - c)),   f(x) < alpha,

which pins the signs of every square root in the inverse of f^3 and leaves
two components, Y on the negative side and Ytilde = -Y.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import mpmath

from .errors import (BranchResolutionFailure, PrecisionExhausted, RootNotBracketed,
                     ThetaNotAboveOne)
from .interval import Interval

ASSUMPTION_GAMMA = ("gamma taken as the negative root of f^2(x) = -alpha with f(x) < alpha "
                    "(stands in for the landing point of the 7/24 and 17/24 rays)")


class QuadMap:
    """f_c(z) = z^2 + c with its own mpmath context at ``precision_bits``."""

    def __init__(self, c, precision_bits: int = 256):
        if precision_bits < 64:
            raise ValueError("precision_bits must be at least 64")
        self.precision_bits = precision_bits
        self.ctx = mpmath.MPContext()
        self.ctx.prec = precision_bits
        self.c_exact = _exact(c)
        self.c = self.ctx.mpf(self.c_exact.numerator) / self.c_exact.denominator \
            if isinstance(self.c_exact, Fraction) else self.ctx.mpf(c)

    def __call__(self, z):
        return z * z + self.c

    def iterate(self, z, n: int):
        for _ in range(n):
            z = z * z + self.c
        return z

    def mpf(self, x):
        return self.ctx.mpf(x.numerator) / x.denominator if isinstance(x, Fraction) else self.ctx.mpf(x)

    def c_interval(self, P: int) -> Interval:
        return Interval.point(self.c_exact if isinstance(self.c_exact, Fraction) else self.c, P)

    def __repr__(self) -> str:
        return f"QuadMap(c={self.ctx.nstr(self.c, 20)}, bits={self.precision_bits})"


def _exact(c):
    """Decimal strings, ints and Fractions are kept exact; mpf/float values are used as given."""
    if isinstance(c, (int, Fraction)):
        return Fraction(c)
    if isinstance(c, str):
        return Fraction(c)
    return c


# ------------------------------------------------------------ orbits

@dataclass(frozen=True)
class OrbitData:
    points: list
    log_derivative: list  # log|Df^k(z0)| for k = 0..n
    certified_bits: list  # significant bits of x_k guaranteed by interval arithmetic

    def rows(self) -> list[dict]:
        return [{"j": j, "x_j": mpmath.nstr(x, 30), "cumulative_log_deriv": _fmt_log(L),
                 "certified_bits": b}
                for j, (x, L, b) in enumerate(zip(self.points, self.log_derivative, self.certified_bits))]


def _fmt_log(L) -> str:
    return "-inf" if L == -mpmath.inf else mpmath.nstr(L, 30)


def orbit_log_derivative(fmap: QuadMap, z0, n: int, min_bits: int = 8) -> OrbitData:
    """Orbit z0..z_n and log|Df^k(z0)| = sum_{j<k} log|2 z_j|.

    A parallel interval orbit certifies how many bits of each point are
    trustworthy; PrecisionExhausted is raised once that drops below min_bits.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    ctx = fmap.ctx
    z = fmap.mpf(_exact(z0) if isinstance(z0, (str, int, Fraction)) else z0)
    P = fmap.precision_bits
    zi = Interval.point(_exact(z0) if isinstance(z0, (str, int, Fraction)) else z, P)
    ci = fmap.c_interval(P)
    pts, logs, bits = [z], [ctx.zero], [_bits(zi)]
    total = ctx.zero
    for j in range(n):
        if total != -ctx.inf:
            total = -ctx.inf if z == 0 else total + ctx.log(abs(2 * z))
        z = z * z + fmap.c
        zi = zi.square() + ci
        b = _bits(zi)
        if b < min_bits:
            raise PrecisionExhausted(f"only {b} certified bits left at iterate {j + 1}")
        pts.append(z)
        logs.append(total)
        bits.append(b)
    return OrbitData(pts, logs, bits)


def _bits(iv: Interval) -> int:
    w = iv.width_log2()
    if w == float("-inf"):
        return iv.P
    mag = max(abs(iv.lo), abs(iv.hi), 1 << iv.P).bit_length() - 1 - iv.P
    return max(int(math.floor(mag - w)), 0)


def fixed_points(fmap: QuadMap) -> tuple:
    """(alpha, beta) = ((1 - sqrt(1-4c))/2, (1 + sqrt(1-4c))/2)."""
    ctx = fmap.ctx
    d = 1 - 4 * fmap.c
    if d <= 0:
        raise ValueError("fixed points are real only for c < 1/4")
    r = ctx.sqrt(d)
    return (1 - r) / 2, (1 + r) / 2


# ------------------------------------------------------------ Green's function

@dataclass(frozen=True)
class GreenValue:
    value: object
    error_bound: object
    escaped_at: int | None


def green_function(fmap: QuadMap, z, escape_radius=None, n_max: int = 200) -> GreenValue:
    """G_c(z) = lim 2^-n log|f^n(z)|, read off at the first exit from the disc of radius R."""
    ctx = fmap.ctx
    # a large default radius makes the truncation error ~ |c| R^-2 2^-n negligible
    R = ctx.mpf(escape_radius) if escape_radius is not None else ctx.ldexp(1, 32)
    if R < 2 + abs(fmap.c):
        raise ValueError("escape radius must be at least 2 + |c|")
    w = ctx.convert(z)
    for n in range(n_max + 1):
        if abs(w) > R:
            g = ctx.log(abs(w)) / ctx.mpf(2) ** n
            err = ctx.log(1 + abs(fmap.c) / R ** 2) / ctx.mpf(2) ** n / (1 - ctx.mpf(1) / 2)
            return GreenValue(g, err, n)
        w = w * w + fmap.c
    return GreenValue(ctx.zero, ctx.zero, None)


# ------------------------------------------------------------ puzzle traces

@dataclass(frozen=True)
class PuzzleIntervalsR:
    alpha: object
    beta: object
    P1: tuple
    Y: tuple
    Ytilde: tuple
    gamma: object
    assumptions: tuple = (ASSUMPTION_GAMMA,)

    def in_Y(self, x) -> bool:
        return self.Y[0] <= x <= self.Y[1]

    def in_Ytilde(self, x) -> bool:
        return self.Ytilde[0] <= x <= self.Ytilde[1]

    def as_dict(self) -> dict:
        s = lambda v: mpmath.nstr(v, 60)
        return {"alpha": s(self.alpha), "beta": s(self.beta), "P1": [s(v) for v in self.P1],
                "Y": [s(v) for v in self.Y], "Ytilde": [s(v) for v in self.Ytilde],
                "gamma": s(self.gamma), "assumptions": list(self.assumptions)}


def puzzle_intervals(fmap: QuadMap) -> PuzzleIntervalsR:
    """P1 = (alpha, -alpha), the two components Y < 0 < Ytilde of f^-3(P1) in P1, and gamma."""
    ctx, c = fmap.ctx, fmap.c
    if not (-2 <= c < ctx.mpf(-3) / 4):
        raise BranchResolutionFailure("c must lie in [-2, -3/4)")
    alpha, beta = fixed_points(fmap)
    u1, u2 = -alpha, ctx.sqrt(-alpha - c)
    # f(x) must stay in [c, alpha): needs sqrt(-alpha - c) <= f(c)
    if u2 > c * c + c:
        raise BranchResolutionFailure("f^3 has no full branch over P1 at this parameter")
    lo = -ctx.sqrt(-ctx.sqrt(u1 - c) - c)
    hi = -ctx.sqrt(-ctx.sqrt(u2 - c) - c)
    if not (alpha < lo < hi < 0):
        raise BranchResolutionFailure("Y is not a proper subinterval of P1")
    gamma = lo
    return PuzzleIntervalsR(alpha, beta, (alpha, -alpha), (lo, hi), (-hi, -lo), gamma)


def certified_Y(c_iv: Interval) -> tuple[Interval, Interval] | None:
    """Interval enclosures of the endpoints of Y for all c in c_iv (Ytilde = -Y).

    Returns None when a square-root argument is not certainly nonnegative.
    """
    try:
        one = Interval.point(1, c_iv.P)
        four_c = Interval(4 * c_iv.lo, 4 * c_iv.hi, c_iv.P)
        r = (one - four_c).sqrt()
        # -alpha = (r - 1)/2
        neg_alpha = Interval((r.lo - one.lo) >> 1, -((one.lo - r.hi) >> 1), c_iv.P)
        u2 = (neg_alpha - c_iv).sqrt()
        lo = -((-((neg_alpha - c_iv).sqrt()) - c_iv).sqrt())
        hi = -((-((u2 - c_iv).sqrt()) - c_iv).sqrt())
    except ValueError:
        return None
    return lo, hi


def central_interval(fmap: QuadMap, n: int) -> tuple:
    """Real trace (-v, v) of the depth-(n+1) puzzle piece at 0.

    The depth-k piece at beta has trace (r_k, beta] with r_0 = alpha and
    r_k = sqrt(r_{k-1} - c); its mirror at -beta is [-beta, -r_k), and the
    central piece one level deeper is its f-preimage {x^2 + c < -r_n}.
    """
    ctx, c = fmap.ctx, fmap.c
    r = puzzle_depth_points(fmap, n)[-1]
    d = -r - c
    if d <= 0:
        raise BranchResolutionFailure("central piece is empty at this depth")
    v = ctx.sqrt(d)
    return -v, v


def puzzle_depth_points(fmap: QuadMap, n: int) -> list:
    """r_0 = alpha, r_k = sqrt(r_{k-1} - c) for k <= n."""
    alpha, _ = fixed_points(fmap)
    out = [alpha]
    for _ in range(n):
        out.append(fmap.ctx.sqrt(out[-1] - fmap.c))
    return out


# ------------------------------------------------------------ periodic points of g = f^3

@dataclass(frozen=True)
class PeriodicPoint:
    x: object
    period_f: int
    log_multiplier: object
    chi: object
    residual: object

    def as_dict(self) -> dict:
        return {"x": mpmath.nstr(self.x, 40), "period_f": self.period_f,
                "log_multiplier": mpmath.nstr(self.log_multiplier, 30),
                "chi": mpmath.nstr(self.chi, 30), "residual": mpmath.nstr(self.residual, 5)}


def _contract(fmap: QuadMap, step, x0, what: str):
    ctx = fmap.ctx
    x = x0
    tol = ctx.ldexp(1, -fmap.precision_bits + 6)
    for _ in range(4 * fmap.precision_bits):
        try:
            nx = step(x)
        except (ValueError, ZeroDivisionError) as exc:
            raise RootNotBracketed(f"{what}: inverse branch left its domain") from exc
        if abs(nx - x) <= tol * max(1, abs(nx)):
            return nx
        x = nx
    raise RootNotBracketed(f"{what}: inverse-branch iteration did not settle")


def _periodic(fmap: QuadMap, x, period: int) -> PeriodicPoint:
    orb = orbit_log_derivative(fmap, x, period, min_bits=0)
    L = orb.log_derivative[-1]
    return PeriodicPoint(x, period, L, L / period, abs(orb.points[-1] - x))


def g_periodic_points(fmap: QuadMap, puzzle: PuzzleIntervalsR | None = None):
    """p in Y and p+ in Ytilde fixed by g = f^3; p- in Ytilde of period 2 under g.

    Each is the attracting fixed point of a composition of inverse branches of
    g, so plain iteration converges at rate about 1/8 per step.
    """
    puzzle = puzzle or puzzle_intervals(fmap)
    ctx, c = fmap.ctx, fmap.c

    def real_sqrt(v):
        if v < 0:
            raise ValueError("negative")
        return ctx.sqrt(v)

    def inv_Y(y):
        return -real_sqrt(-real_sqrt(real_sqrt(y - c) - c) - c)

    mid_Y = (puzzle.Y[0] + puzzle.Y[1]) / 2
    p = _contract(fmap, inv_Y, mid_Y, "p")
    p_plus = _contract(fmap, lambda y: -inv_Y(y), -mid_Y, "p+")
    # g(p-) lies in Y, so p- = invYtilde(invY(p-))
    p_minus = _contract(fmap, lambda y: -inv_Y(inv_Y(y)), -mid_Y, "p-")
    for name, x, box in (("p", p, puzzle.Y), ("p+", p_plus, puzzle.Ytilde), ("p-", p_minus, puzzle.Ytilde)):
        if not box[0] <= x <= box[1]:
            raise RootNotBracketed(f"{name} fell outside its interval")
    return _periodic(fmap, p, 3), _periodic(fmap, p_plus, 3), _periodic(fmap, p_minus, 6)


@dataclass(frozen=True)
class ThetaData:
    theta: object
    t_star: object
    chi_p: object
    chi_p_plus: object
    chi_p_minus: object
    admissibility_gap: object

    def as_dict(self) -> dict:
        s = lambda v: mpmath.nstr(v, 30)
        return {"theta": s(self.theta), "t_star": s(self.t_star), "chi_p": s(self.chi_p),
                "chi_p_plus": s(self.chi_p_plus), "chi_p_minus": s(self.chi_p_minus),
                "admissibility_gap": s(self.admissibility_gap)}


def theta_and_tstar(fmap: QuadMap, puzzle: PuzzleIntervalsR | None = None) -> ThetaData:
    """theta = |Dg(p)/Dg(p+)|^(1/2) and t_* = log 2 / log theta."""
    p, pp, pm = g_periodic_points(fmap, puzzle)
    ctx = fmap.ctx
    log_theta = (p.log_multiplier - pp.log_multiplier) / 2
    # the multipliers carry about precision_bits - 16 good bits
    if log_theta <= ctx.ldexp(1, -fmap.precision_bits // 2):
        raise ThetaNotAboveOne(f"log theta = {ctx.nstr(log_theta, 8)} is not positive")
    return ThetaData(ctx.exp(log_theta), ctx.ln2 / log_theta, p.chi, pp.chi, pm.chi,
                     abs(pp.chi - pm.chi))


@dataclass(frozen=True)
class CriticalData:
    n_used: int
    chi_crit_estimate: object
    identity_check: object | None

    def as_dict(self) -> dict:
        return {"n_used": self.n_used, "chi_crit_estimate": mpmath.nstr(self.chi_crit_estimate, 30),
                "identity_check": None if self.identity_check is None else mpmath.nstr(self.identity_check, 10)}


def chi_crit(fmap: QuadMap, n: int, puzzle: PuzzleIntervalsR | None = None) -> CriticalData:
    """(1/n) log|Df^n(c)|; with puzzle data also the gap to (1/3) log|Dg(p+)|."""
    orb = orbit_log_derivative(fmap, fmap.c, n)
    est = orb.log_derivative[-1] / n
    check = None
    if puzzle is not None:
        _, pp, _ = g_periodic_points(fmap, puzzle)
        check = est - pp.log_multiplier / 3
    return CriticalData(n, est, check)
