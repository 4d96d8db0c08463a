"""Geometric pressure of real quadratic maps, by two independent routes.

* Periodic orbits: P_N(t) = (1/N) log sum over f^N x = x in I(f) of |Df^N(x)|^-t.
* Inducing: first-return branches to a central interval V, summed into the
  partition functions Z_l(t, p); the pressure is the root p of (1/l) log Z_l = 0.

Derivative bounds on return branches come from three tracked points per
branch (the preimages of the two ends and the centre of V).  They are not
certified; every report says so.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import mpmath
import numpy as np
from scipy.optimize import brentq

from .dynamics import QuadMap, central_interval, fixed_points
from .errors import BranchInversionFailure, NoBracket, PrecisionExhausted
from .logvalue import LogValue, ctx as lctx

NONRIGOROUS = "branch derivative bounds from endpoint and midpoint evaluation (not certified)"
TAIL_FLAG = "return-time tail extrapolated geometrically from the last complete shells (estimate)"
LN2 = math.log(2.0)


def _logsumexp(x: np.ndarray) -> float:
    if x.size == 0:
        return -math.inf
    m = float(np.max(x))
    if m == -math.inf:
        return -math.inf
    return m + math.log(float(np.sum(np.exp(x - m))))


def _as_float(c) -> float:
    return float(mpmath.mpf(c)) if not isinstance(c, (int, float, Fraction)) else float(c)


# ------------------------------------------------------------ periodic orbits

@dataclass(frozen=True)
class PeriodicSet:
    period: int
    points: np.ndarray
    log_deriv: np.ndarray  # log|Df^N| at each point

    def pressure(self, t: float) -> float:
        return _logsumexp(-t * self.log_deriv) / self.period


def _turning_points(c: float, N: int) -> np.ndarray:
    """All real x with f^j(x) = 0 for some 0 <= j < N, sorted."""
    level = np.array([0.0])
    out = [level]
    for _ in range(N - 1):
        d = level - c
        d = d[d >= 0]
        r = np.sqrt(d)
        level = np.concatenate([-r, r])
        out.append(level)
    return np.unique(np.concatenate(out))


def _iterate(x: np.ndarray, c: float, n: int) -> np.ndarray:
    for _ in range(n):
        x = x * x + c
    return x


def periodic_points(fmap: QuadMap, N: int) -> PeriodicSet:
    """Fixed points of f^N in I(f) = [c, f(c)], one per lap of f^N at most.

    f^N is monotone between consecutive turning points; on each lap a sign
    change of f^N(x) - x is located by vectorised bisection.
    """
    if not 1 <= N <= 24:
        raise ValueError("N must be in [1, 24]")
    c = _as_float(fmap.c)
    beta = (1 + math.sqrt(1 - 4 * c)) / 2
    cuts = _turning_points(c, N)
    edges = np.unique(np.concatenate([[-beta], cuts[(cuts > -beta) & (cuts < beta)], [beta]]))
    a, b = edges[:-1].copy(), edges[1:].copy()
    ga, gb = _iterate(a, c, N) - a, _iterate(b, c, N) - b
    has = (ga * gb <= 0)
    a, b, ga = a[has], b[has], ga[has]
    for _ in range(70):
        m = 0.5 * (a + b)
        gm = _iterate(m, c, N) - m
        left = np.sign(gm) == np.sign(ga)
        a = np.where(left, m, a)
        ga = np.where(left, gm, ga)
        b = np.where(left, b, m)
    x = np.sort(0.5 * (a + b))
    # a root on a shared lap edge is found from both sides; drop the repeat
    if x.size:
        x = x[np.concatenate([[True], np.diff(x) > 1e-13])]
    lo, hi = c, c * c + c
    tol = 1e-12
    x = x[(x >= lo - tol) & (x <= hi + tol)]
    resid = np.abs(_iterate(x, c, N) - x)
    ld = np.zeros_like(x)
    y = x.copy()
    for _ in range(N):
        ld += np.log(np.abs(2 * y))
        y = y * y + c
    if x.size and np.max(resid / np.maximum(1.0, np.exp(ld - 40))) > 1e-6:
        raise BranchInversionFailure("periodic point residual too large")
    return PeriodicSet(N, x, ld)


def periodic_orbit_pressure(fmap: QuadMap, t: float, N: int = 14) -> float:
    return periodic_points(fmap, N).pressure(t)


# ------------------------------------------------------------ inducing scheme

@dataclass(frozen=True)
class InducingBudget:
    max_return: int = 22
    min_width: float = 1e-13
    max_alive: int = 3_000_000
    central_samples: int = 0
    central_ratio: float = 0.8
    central_max_return: int = 600
    central_max_shadow: int | None = None
    shadow_tolerance: float = 0.05


@dataclass(frozen=True)
class ReturnBranch:
    lo: float
    hi: float
    return_time: int
    log_deriv_min: float
    log_deriv_max: float
    level: int

    @property
    def cylinder(self) -> tuple:
        return (self.lo, self.hi)


@dataclass
class InducedSystem:
    c: float
    n: int
    V: tuple
    m: np.ndarray
    x_lo: np.ndarray  # preimage of -v
    x_hi: np.ndarray  # preimage of +v
    x_mid: np.ndarray  # preimage of 0
    L_lo: np.ndarray
    L_hi: np.ndarray
    L_mid: np.ndarray
    level: np.ndarray
    central: np.ndarray  # bool: found by the high-precision search near 0
    complete_through: int
    budget: InducingBudget
    diagnostics: dict = field(default_factory=dict)
    central_orbits: dict = field(default_factory=dict)
    flags: tuple = (NONRIGOROUS,)
    cache: dict = field(default_factory=dict, repr=False)

    @property
    def size(self) -> int:
        return int(self.m.size)

    @property
    def lo(self) -> np.ndarray:
        return np.minimum(self.x_lo, self.x_hi)

    @property
    def hi(self) -> np.ndarray:
        return np.maximum(self.x_lo, self.x_hi)

    def _quadratic(self):
        # log|DF| along the image coordinate y in V, through the three tracked values
        v = self.V[1]
        A = (self.L_lo + self.L_hi - 2 * self.L_mid) / (2 * v * v)
        B = (self.L_hi - self.L_lo) / (2 * v)
        return A, B, self.L_mid

    def _extremes(self):
        if "extremes" not in self.cache:
            A, B, C = self._quadratic()
            v = self.V[1]
            with np.errstate(divide="ignore", invalid="ignore"):
                y = np.where(A != 0, -B / (2 * A), np.inf)
            vert = np.where(np.abs(y) < v, C - B * B / (4 * np.where(A != 0, A, 1.0)), np.nan)
            ends = np.stack([self.L_lo, self.L_hi, self.L_mid])
            lo = np.fmin(ends.min(axis=0), vert)
            hi = np.fmax(ends.max(axis=0), vert)
            self.cache["extremes"] = (lo, hi)
        return self.cache["extremes"]

    @property
    def L_min(self) -> np.ndarray:
        return self._extremes()[0]

    @property
    def L_max(self) -> np.ndarray:
        return self._extremes()[1]

    @property
    def branches(self) -> list[ReturnBranch]:
        lo, hi, a, b = self.lo, self.hi, self.L_min, self.L_max
        return [ReturnBranch(float(lo[i]), float(hi[i]), int(self.m[i]), float(a[i]), float(b[i]),
                             int(self.level[i])) for i in range(self.size)]

    def distortion(self) -> float:
        return float(np.max(self.L_max - self.L_min)) if self.size else 0.0

    def orbit_of(self, i: int) -> np.ndarray:
        """f^j(x_mid) for 0 <= j < m of branch i."""
        if i in self.central_orbits:
            return self.central_orbits[i]
        out = np.empty(int(self.m[i]))
        x = float(self.x_mid[i])
        for j in range(out.size):
            out[j] = x
            x = x * x + self.c
        return out


def critical_piece_radii(fmap: QuadMap, depth: int) -> list:
    """Half-widths u_d of the central puzzle pieces P_d(0) = (-u_d, u_d), d = 1..depth.

    P_d(0) is the f-preimage of the depth-(d-1) piece around c, and the
    piece around f^i(c) at depth e is the preimage component of the depth-(e-1)
    piece around f^(i+1)(c).  Depth-0 pieces are (alpha, beta] and [-beta, alpha).
    """
    ctx, c = fmap.ctx, fmap.c
    alpha, beta = fixed_points(fmap)
    orbit = [c]
    for _ in range(depth):
        orbit.append(orbit[-1] ** 2 + c)
    radii = []
    for d in range(1, depth + 1):
        # piece around f^(d-1)(0)... built from the bottom
        z = orbit[d - 1]
        lo, hi = (alpha, beta) if z > alpha else (-beta, alpha)
        for i in range(d - 2, -1, -1):
            z = orbit[i]
            if lo - c <= 0:
                r = ctx.sqrt(hi - c)
                lo, hi = -r, r
            else:
                a, b = ctx.sqrt(lo - c), ctx.sqrt(hi - c)
                lo, hi = (a, b) if z > 0 else (-b, -a)
        # preimage around 0
        radii.append(ctx.sqrt(hi - c))
    return radii


def _pullback_tree(c: float, v: float, budget: InducingBudget):
    xm = np.array([-v]); xp = np.array([v]); x0 = np.array([0.0])
    Lm = np.zeros(1); Lp = np.zeros(1); L0 = np.zeros(1)
    found = []
    diag = {"pruned": 0, "folds": 0, "straddles": 0, "alive_per_level": []}
    complete = budget.max_return
    for j in range(1, budget.max_return + 1):
        lo = np.minimum(xm, xp)
        hi = np.maximum(xm, xp)
        fold = (lo < c) & (hi > c)
        diag["folds"] += int(fold.sum())
        keep = lo >= c
        xm, xp, x0, Lm, Lp, L0 = (a[keep] for a in (xm, xp, x0, Lm, Lp, L0))
        parts = []
        for s in (1.0, -1.0):
            ym, yp, y0 = (s * np.sqrt(np.maximum(a - c, 0.0)) for a in (xm, xp, x0))
            parts.append((ym, yp, y0, Lm + np.log(np.abs(2 * ym)), Lp + np.log(np.abs(2 * yp)),
                          L0 + np.log(np.abs(2 * y0))))
        xm, xp, x0, Lm, Lp, L0 = (np.concatenate([p[k] for p in parts]) for k in range(6))
        lo = np.minimum(xm, xp)
        hi = np.maximum(xm, xp)
        ret = (lo >= -v * (1 + 1e-12)) & (hi <= v * (1 + 1e-12))
        out = (hi <= -v * (1 - 1e-12)) | (lo >= v * (1 - 1e-12))
        diag["straddles"] += int((~ret & ~out).sum())
        if ret.any():
            found.append((np.full(int(ret.sum()), j), xm[ret], xp[ret], x0[ret], Lm[ret], Lp[ret], L0[ret]))
        wide = out & ((hi - lo) >= budget.min_width)
        diag["pruned"] += int((out & ~wide).sum())
        xm, xp, x0, Lm, Lp, L0 = (a[wide] for a in (xm, xp, x0, Lm, Lp, L0))
        diag["alive_per_level"].append(int(xm.size))
        if xm.size > budget.max_alive:
            complete = j
            diag["stopped"] = f"alive domains exceeded {budget.max_alive} at depth {j}"
            break
        if xm.size == 0:
            break
    if diag["pruned"]:
        diag["note"] = "width pruning active; shells past the pruning depth are incomplete"
    cols = [np.concatenate([f[k] for f in found]) if found else np.empty(0) for k in range(7)]
    return cols, complete, diag


def _central_branches(fmap: QuadMap, v, budget: InducingBudget):
    """Return branches near 0 found by forward iteration of sample points at full precision."""
    ctx, c = fmap.ctx, fmap.c
    vv = ctx.mpf(v)
    rows, orbits = [], []
    crit = [c]
    x = vv
    for k in range(budget.central_samples):
        x = x * budget.central_ratio
        if budget.central_max_shadow is not None:
            # stop once f(x) follows the critical orbit longer than allowed
            y, shadow = x * x + c, 0
            while shadow <= budget.central_max_shadow:
                while len(crit) <= shadow:
                    crit.append(crit[-1] ** 2 + c)
                if abs(y - crit[shadow]) > budget.shadow_tolerance:
                    break
                y, shadow = y * y + c, shadow + 1
            if shadow > budget.central_max_shadow:
                break
        for s in (1, -1):
            z = s * x
            orbit = [z]
            y = z
            m = 0
            for m in range(1, budget.central_max_return + 1):
                y = y * y + c
                if abs(y) < vv:
                    break
                orbit.append(y)
            else:
                continue
            signs = [1 if o > 0 else -1 for o in orbit]
            pts, logs = [], []
            for target in (-vv, vv, ctx.zero):
                w = target
                L = ctx.zero
                for sg in reversed(signs):
                    d = w - c
                    if d < 0:
                        raise PrecisionExhausted("pullback of a central branch left the real line")
                    w = sg * ctx.sqrt(d)
                    L += ctx.log(abs(2 * w))
                pts.append(w)
                logs.append(L)
            rows.append((m, *pts, *logs))
            orbits.append(np.array([float(o) for o in orbit]))
    return rows, orbits


def build_induced_system(fmap: QuadMap, n: int, budget: InducingBudget | None = None) -> InducedSystem:
    """First-return branches to V = P_(n+1)(0), discovered by pulling V back.

    Every component of f^-j(V) is either inside V (a return branch of time j)
    or disjoint from it, so the pullback tree enumerates all branches of
    return time <= max_return, up to width pruning.  With central_samples > 0,
    branches near 0 that shadow the critical orbit are added from a
    high-precision forward search.
    """
    budget = budget or InducingBudget()
    lo_v, hi_v = central_interval(fmap, n)
    v = float(hi_v)
    c = _as_float(fmap.c)
    cols, complete, diag = _pullback_tree(c, v, budget)
    m, xm, xp, x0, Lm, Lp, L0 = cols
    m = m.astype(np.int64)
    central = np.zeros(m.size, dtype=bool)
    central_orbits: dict = {}
    if budget.central_samples:
        rows, orbits = _central_branches(fmap, hi_v, budget)
        lo_t, hi_t = np.minimum(xm, xp), np.maximum(xm, xp)
        order = np.argsort(lo_t)
        seen = set()
        extra = []
        for row, orb in zip(rows, orbits):
            mm, a, b, z, La, Lb, Lz = row
            fa, fb = float(min(a, b)), float(max(a, b))
            key = (mm, fa, fb)
            if key in seen:
                continue
            seen.add(key)
            # skip branches already found by the tree: branches are disjoint, so
            # overlapping the tree branch under our midpoint by half the width means
            # the same branch (float64 and full-precision endpoints differ slightly)
            i = np.searchsorted(lo_t[order], 0.5 * (fa + fb), side="right") - 1
            if 0 <= i < order.size:
                j = order[i]
                if min(hi_t[j], fb) - max(lo_t[j], fa) > 0.5 * (fb - fa):
                    continue
            extra.append((mm, float(a), float(b), float(z), float(La), float(Lb), float(Lz), orb))
        if extra:
            base = m.size
            m = np.concatenate([m, [e[0] for e in extra]]).astype(np.int64)
            xm = np.concatenate([xm, [e[1] for e in extra]])
            xp = np.concatenate([xp, [e[2] for e in extra]])
            x0 = np.concatenate([x0, [e[3] for e in extra]])
            Lm = np.concatenate([Lm, [e[4] for e in extra]])
            Lp = np.concatenate([Lp, [e[5] for e in extra]])
            L0 = np.concatenate([L0, [e[6] for e in extra]])
            central = np.concatenate([central, np.ones(len(extra), dtype=bool)])
            for k, e in enumerate(extra):
                central_orbits[base + k] = e[7]
        diag["central_added"] = len(extra)
    # canonical order: by left endpoint
    lo_all = np.minimum(xm, xp)
    order = np.lexsort((m, lo_all))
    remap = {int(old): new for new, old in enumerate(order)}
    central_orbits = {remap[k]: o for k, o in central_orbits.items()}
    m, xm, xp, x0, Lm, Lp, L0, central = (a[order] for a in (m, xm, xp, x0, Lm, Lp, L0, central))
    level = _levels(fmap, n, np.maximum(np.abs(xm), np.abs(xp)), int(m.max()) if m.size else 0)
    diag["branches"] = int(m.size)
    return InducedSystem(c, n, (float(lo_v), v), m, xm, xp, x0, Lm, Lp, L0, level, central,
                         complete, budget, diag, central_orbits)


def _levels(fmap: QuadMap, n: int, radius: np.ndarray, max_m: int) -> np.ndarray:
    """Largest k with the branch inside P_(n+3k+2)(0); -1 when not even inside P_(n+2)(0)."""
    kmax = max((max_m - n) // 3 + 1, 1)
    try:
        radii = critical_piece_radii(fmap, n + 3 * kmax + 2)
    except (ValueError, ZeroDivisionError):
        return np.full(radius.size, -1, dtype=np.int64)
    u = np.array([float(radii[n + 3 * k + 1]) for k in range(kmax + 1)])
    # u is decreasing in k; count how many radii contain the branch
    level = np.full(radius.size, -1, dtype=np.int64)
    for k in range(u.size):
        level = np.where(radius <= u[k], k, level)
    return level


# ------------------------------------------------------------ partition functions

N_BINS = 64


def _log_weights(system: InducedSystem, t: float, p: float) -> np.ndarray:
    """log of exp(-m p) sup|D phi_W|^t, with sup|D phi| = exp(-L_min)."""
    return -system.m * p - t * system.L_min


def _bin_profile(system: InducedSystem, bins: int = N_BINS):
    """Lower bounds for log|DF_W| on the part of W whose image lies in each bin of V.

    log|DF_W| along V is modelled by the quadratic through its three tracked
    values; its minimum over a bin bounds the derivative there.  Cached on
    the system since it does not depend on (t, p).
    """
    key = ("bins", bins)
    if key in system.cache:
        return system.cache[key]
    v = system.V[1]
    edges = np.linspace(-v, v, bins + 1)
    A, B, C = system._quadratic()

    def q(y):
        return A[:, None] * y * y + B[:, None] * y + C[:, None]

    y0, y1 = edges[:-1][None, :], edges[1:][None, :]
    vals = np.minimum(q(y0), q(y1))
    with np.errstate(divide="ignore", invalid="ignore"):
        vert = np.where(A > 0, -B / (2 * A), np.nan)[:, None]
    inside = (vert > y0) & (vert < y1)
    Lbin = np.where(inside, np.minimum(vals, q(np.where(inside, vert, 0.0))), vals)
    # each branch sits in V and so in one bin as the first letter of a word
    mid = 0.5 * (system.lo + system.hi)
    src = np.clip(np.searchsorted(edges, mid, side="right") - 1, 0, bins - 1)
    system.cache[key] = (Lbin, src)
    return Lbin, src


def _group_logsumexp(values: np.ndarray, groups: np.ndarray, n: int) -> np.ndarray:
    out = np.full(n, -math.inf)
    np.maximum.at(out, groups, values)
    safe = np.where(np.isfinite(out), out, 0.0)
    acc = np.zeros(n)
    np.add.at(acc, groups, np.exp(values - safe[groups]))
    with np.errstate(divide="ignore"):
        return np.where(acc > 0, safe + np.log(acc), -math.inf)


def _tail_factor(system: InducedSystem, t: float, p: float, window: int = 4):
    """Geometric extrapolation of the shells beyond the last complete return time.

    Returns (log of tail multiplier applied to the last shell, log tail mass)
    or None when there are too few shells.
    """
    M = min(system.complete_through, int(system.m.max()) if system.size else 0)
    if M - window < 1:
        return None
    lw = _log_weights(system, t, p)
    key = ("shells", M, window)
    if key not in system.cache:
        tree = ~system.central
        system.cache[key] = {k: tree & (system.m == k) for k in (M - window, M)}
    S = {k: _logsumexp(lw[sel]) for k, sel in system.cache[key].items()}
    if S[M] == -math.inf or S[M - window] == -math.inf:
        return None
    log_rho = (S[M] - S[M - window]) / window
    if log_rho >= 0:
        return (math.inf, math.inf)
    rho = math.exp(log_rho)
    mult = math.log(rho / (1 - rho))
    return (mult, S[M] + mult)


def partition_function_Z(system: InducedSystem, ell: int, t: float, p: float,
                         include_tail: bool = False) -> LogValue:
    """Z_ell(t, p): sum over words of ell branches of exp(-m p) (sup|D phi|)^t.

    ell = 1 is an exact sum over branches.  For ell = 2, 3 the composition
    is bounded through a bin transfer matrix, which is exact pairwise when the
    bins resolve the branches and an upper bound otherwise.
    """
    if ell not in (1, 2, 3):
        raise ValueError("ell must be 1, 2 or 3")
    if system.size == 0:
        return LogValue.ZERO
    lw = _log_weights(system, t, p)
    tail = _tail_factor(system, t, p) if include_tail else None
    if tail is not None and tail[0] == math.inf:
        return LogValue(lctx.inf)
    # sums below are natural logs; LogValue holds log2
    if tail is not None:
        M = system.complete_through
        shell = (~system.central) & (system.m == M)
        lw = lw.copy()
        lw[shell] = np.logaddexp(lw[shell], lw[shell] + tail[0])
    if ell == 1:
        return LogValue(_logsumexp(lw) / LN2)
    Lbin, src = _bin_profile(system)
    logw_bin = -system.m[:, None] * p - t * Lbin
    if tail is not None:
        logw_bin[shell] = np.logaddexp(logw_bin[shell], logw_bin[shell] + tail[0])
    bins = Lbin.shape[1]
    # z_1[b]: branches located in bin b; z_(k+1)[b] = sum_(W in b) sum_b' w(W, b') z_k[b']
    z = _group_logsumexp(lw, src, bins)
    for _ in range(ell - 1):
        comb = logw_bin + z[None, :]
        mx = np.max(comb, axis=1)
        ok = np.isfinite(mx)
        row = np.full(comb.shape[0], -math.inf)
        row[ok] = mx[ok] + np.log(np.sum(np.exp(comb[ok] - mx[ok, None]), axis=1))
        z = _group_logsumexp(row, src, bins)
    return LogValue(_logsumexp(z) / LN2)


@dataclass(frozen=True)
class BowenResult:
    t: float
    p: float
    p_ell1: float
    ell: int
    defect_log2: float | None
    warnings: tuple
    flags: tuple

    def as_dict(self) -> dict:
        return {"t": repr(self.t), "p": repr(self.p), "p_ell1": repr(self.p_ell1), "ell": self.ell,
                "defect_log2": None if self.defect_log2 is None else repr(self.defect_log2),
                "warnings": list(self.warnings), "flags": list(self.flags)}


def _induced_log_pressure(system, ell, t, p, include_tail) -> float:
    z = partition_function_Z(system, ell, t, p, include_tail)
    if z.is_zero:
        return -math.inf
    return float(z.log2) * LN2 / ell


def bowen_pressure(system: InducedSystem, t: float, bracket: tuple | None = None, ell: int = 2,
                   include_tail: bool = True, tol: float = 1e-11) -> BowenResult:
    """Root p of (1/ell) log Z_ell(t, p) = 0 by bisection.

    The default bracket comes from the single-branch roots p_W = -t L_W / m_W:
    at the smallest of them Z_1 >= 1, and far enough above the largest one Z
    drops below 1.
    """
    if system.size == 0:
        raise NoBracket("no return branches")
    warnings = []

    def f(p, l):
        # finite stand-ins keep the root finder away from infinities
        return min(max(_induced_log_pressure(system, l, t, p, include_tail), -1e6), 1e6)

    def root(l):
        if bracket is None:
            pw = -t * system.L_min / system.m
            lo, hi = float(np.min(pw)) - 1.0, float(np.max(pw)) + 1.0
        else:
            lo, hi = bracket
        for _ in range(60):
            if f(lo, l) >= 0:
                break
            lo -= max(1.0, abs(lo))
        else:
            raise NoBracket("could not find p with induced pressure >= 0")
        for _ in range(60):
            if f(hi, l) < 0:
                break
            hi += max(1.0, abs(hi))
        else:
            raise NoBracket("could not find p with induced pressure < 0")
        if f(lo, l) == 0:
            return lo
        return brentq(f, lo, hi, args=(l,), xtol=tol, rtol=4 * np.finfo(float).eps)

    p = root(ell)
    p1 = root(1) if ell != 1 else p
    if abs(p - p1) > 0.02:
        warnings.append(f"ell=1 and ell={ell} roots differ by {abs(p - p1):.3g}")
    defect = None
    flags = [NONRIGOROUS]
    if include_tail:
        tf = _tail_factor(system, t, p)
        if tf is not None:
            defect = tf[1] / LN2
            flags.append(TAIL_FLAG)
    else:
        tf = _tail_factor(system, t, p)
        defect = None if tf is None else tf[1] / LN2
    return BowenResult(t, p, p1, ell, defect, tuple(warnings), tuple(flags))


# ------------------------------------------------------------ postcritical series

@dataclass(frozen=True)
class PostcriticalSeries:
    terms: list  # LogValue terms
    partial_sums: list  # LogValue partial sums
    verdict: str
    ratio_window: tuple


def postcritical_series(fmap: QuadMap, n: int, t, p, K: int, window: int = 8,
                        margin: float = 1e-3) -> PostcriticalSeries:
    """Terms exp(-(n+3k)p) |Df^(n+3k)(c)|^(-t/2) for k < K, with a tail-ratio verdict."""
    from .dynamics import orbit_log_derivative
    if K < 1:
        raise ValueError("K must be at least 1")
    orb = orbit_log_derivative(fmap, fmap.c, n + 3 * (K - 1))
    ctx = fmap.ctx
    t, p = ctx.mpf(t), ctx.mpf(p)
    terms, sums = [], []
    total = LogValue.ZERO
    for k in range(K):
        j = n + 3 * k
        e = (-j * p - t / 2 * orb.log_derivative[j]) / ctx.ln2
        term = LogValue(e)
        total = total + term
        terms.append(term)
        sums.append(total)
    w = min(window, K - 1)
    verdict = "undecided"
    if w >= 1:
        ratios = [terms[k + 1].log2 - terms[k].log2 for k in range(K - 1 - w, K - 1)]
        lm = math.log2(1 - margin)
        lp = math.log2(1 + margin)
        if max(ratios) < lm:
            verdict = "converging"
        elif min(ratios) > lp:
            verdict = "diverging"
    return PostcriticalSeries(terms, sums, verdict, (max(K - 1 - w, 0), K - 1))


# ------------------------------------------------------------ envelopes

@dataclass(frozen=True)
class EnvelopeParams:
    q: int
    xi: Fraction
    Xi: int
    Delta: Fraction
    Omega: Fraction
    t_star: Fraction
    chi_crit: Fraction

    @property
    def t0(self) -> Fraction:
        return (1 - Fraction(1, 400 * self.q)) * self.t_star


@dataclass(frozen=True)
class Envelope:
    t: object
    delta_minus: LogValue
    delta_plus: LogValue
    P_minus: object
    P_plus: object


def pressure_envelope(env: EnvelopeParams, t) -> Envelope:
    """delta+-(t) and P+-(t) = -t chi_crit/2 + delta+-(t) for t > t_0."""
    t = Fraction(t) if not isinstance(t, Fraction) else t
    if t <= env.t0:
        raise ValueError(f"t must exceed t_0 = {env.t0}")
    ctx = lctx

    def mp(x: Fraction):
        return ctx.mpf(x.numerator) / x.denominator

    base = -mp(t) * mp(Fraction(env.chi_crit)) / 2
    if t >= env.t_star:
        return Envelope(t, LogValue.ZERO, LogValue.ZERO, base, base)
    gap = env.t_star - t
    sp = ctx.sqrt(mp(env.t_star * (env.Xi - 2 * env.xi) / (env.q * gap)))
    sm = ctx.sqrt(mp(env.t_star * (env.Xi + 2 * env.xi) / (env.q * gap)))
    # (2 log 2 / 3) 2^(-q (s+ - 1)^3) and (log 2 / 3) 2^(-q (s- + Delta)^3)
    dplus = LogValue.of(2 * ctx.ln2 / 3) * LogValue(-env.q * (sp - 1) ** 3)
    dminus = LogValue.of(ctx.ln2 / 3) * LogValue(-env.q * (sm + mp(Fraction(env.Delta))) ** 3)
    return Envelope(t, dminus, dplus, base + dminus.to_mpf(), base + dplus.to_mpf())


# ------------------------------------------------------------ Peierls margins

@dataclass(frozen=True)
class PeierlsReport:
    margins: np.ndarray
    min_margin: float
    argmin: int


def peierls_margins(system: InducedSystem, kappa: float, upsilon: float, chi_crit: float) -> PeierlsReport:
    """log|DL| - log kappa - (chi_crit/2 + upsilon) m for every discovered branch."""
    if kappa <= 0:
        raise ValueError("kappa must be positive")
    margins = system.L_min - math.log(kappa) - (chi_crit / 2 + upsilon) * system.m
    i = int(np.argmin(margins)) if margins.size else -1
    return PeierlsReport(margins, float(margins[i]) if i >= 0 else math.inf, i)
