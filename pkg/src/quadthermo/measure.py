"""Gibbs weights on return branches, their spread along orbits, and atomic conformal measures."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dynamics import QuadMap, fixed_points, g_periodic_points
from .errors import PrecisionExhausted, SeriesDiverging, WeightOverflow
from .pressure import NONRIGOROUS, InducedSystem, _logsumexp

FULL_BRANCH_NOTE = ("every branch maps onto V, so the normalized weights serve as both the conformal "
                    "and the invariant approximation; the density factor between them is not resolved")


@dataclass
class GibbsApprox:
    system: InducedSystem
    t: float
    p: float
    weights: np.ndarray
    sandwich: tuple  # (lower, upper) arrays, same normalizer as weights
    diagnostics: dict = field(default_factory=dict)

    def sandwich_ok(self, rel: float = 1e-12) -> bool:
        lo, hi = self.sandwich
        return bool(np.all(lo <= self.weights * (1 + rel)) and np.all(self.weights <= hi * (1 + rel)))


def gibbs_weights(system: InducedSystem, t: float, p: float) -> GibbsApprox:
    """Weights proportional to exp(-p m) |DF|^-t at the branch centre, normalized to 1."""
    if system.size == 0:
        raise WeightOverflow("no branches to weigh")
    lw = -system.m * p - t * system.L_mid
    lse = _logsumexp(lw)
    if not math.isfinite(lse):
        raise WeightOverflow(f"log of the weight sum is {lse}")
    w = np.exp(lw - lse)
    total = math.fsum(w)
    if total == 0:
        raise WeightOverflow("all weights vanish")
    w = w / total
    lo = np.exp(-system.m * p - t * system.L_max - lse) / total
    hi = np.exp(-system.m * p - t * system.L_min - lse) / total
    if t < 0:
        lo, hi = hi, lo
    diag = {"log_normalizer": lse + math.log(total), "note": FULL_BRANCH_NOTE, "flags": [NONRIGOROUS],
            "effective_branches": float(1.0 / np.sum(w * w))}
    return GibbsApprox(system, t, p, w, (lo, hi), diag)


@dataclass
class SpreadMeasure:
    x: np.ndarray
    mass: np.ndarray
    total_before_normalization: float
    diagnostics: dict = field(default_factory=dict)

    @property
    def atoms(self) -> list[tuple[float, float]]:
        return list(zip(self.x.tolist(), self.mass.tolist()))

    def as_dict(self) -> dict:
        return {"atoms": [{"x": repr(a), "mass": repr(b)} for a, b in self.atoms],
                "total_before_normalization": repr(self.total_before_normalization),
                "diagnostics": self.diagnostics}


def _sorted(x: np.ndarray, mass: np.ndarray):
    order = np.lexsort((mass, x))
    return x[order], mass[order]


def spread_measure(fmap: QuadMap, system: InducedSystem, gibbs: GibbsApprox) -> SpreadMeasure:
    """Atoms of mass weight(W) at f^j(centre of W) for 0 <= j < m(W), then normalized."""
    m = system.m
    total = math.fsum((m * gibbs.weights).tolist())
    if not math.isfinite(total) or total <= 0:
        raise PrecisionExhausted("time-weighted sum is not finite and positive")
    c = system.c
    tree = np.flatnonzero(~system.central)
    xs, ms = [], []
    if tree.size:
        # iterate all tree centres together; each stops contributing after m steps
        x = system.x_mid[tree].astype(float)
        mm, w = m[tree], gibbs.weights[tree]
        for j in range(int(mm.max())):
            live = mm > j
            xs.append(x[live])
            ms.append(w[live])
            x = x * x + c
    for i in np.flatnonzero(system.central):
        orb = system.orbit_of(int(i))
        xs.append(orb)
        ms.append(np.full(orb.size, gibbs.weights[i]))
    x = np.concatenate(xs) if xs else np.empty(0)
    mass = np.concatenate(ms) / total if ms else np.empty(0)
    x, mass = _sorted(x, mass)
    widths = system.hi - system.lo
    diag = {"atom_count": int(x.size), "expected_atom_count": int(m.sum()),
            "width_max": float(widths.max()), "width_median": float(np.median(widths))}
    return SpreadMeasure(x, mass, total, diag)


@dataclass(frozen=True)
class MassReport:
    radius: float
    mass_plus: float
    mass_minus: float
    mass_other: float
    orbit_plus: tuple
    orbit_minus: tuple

    def as_dict(self) -> dict:
        return {"radius": repr(self.radius), "mass_plus": repr(self.mass_plus),
                "mass_minus": repr(self.mass_minus), "mass_other": repr(self.mass_other),
                "orbit_plus": [repr(v) for v in self.orbit_plus],
                "orbit_minus": [repr(v) for v in self.orbit_minus]}


def orbit_sets(fmap: QuadMap) -> tuple[list, list]:
    """The f-orbits of p+ (3 points) and p- (6 points)."""
    _, pp, pm = g_periodic_points(fmap)
    plus = [pp.x]
    for _ in range(2):
        plus.append(fmap(plus[-1]))
    minus = [pm.x]
    for _ in range(5):
        minus.append(fmap(minus[-1]))
    return [float(v) for v in plus], [float(v) for v in minus]


def mass_near_orbits(spread: SpreadMeasure, orbit_plus, orbit_minus, radius: float) -> MassReport:
    """Split the mass by the nearer orbit within ``radius``; ties and far atoms are 'other'."""
    if radius <= 0:
        raise ValueError("radius must be positive")
    dp = np.min(np.abs(spread.x[:, None] - np.asarray(orbit_plus)[None, :]), axis=1)
    dm = np.min(np.abs(spread.x[:, None] - np.asarray(orbit_minus)[None, :]), axis=1)
    plus = (dp <= radius) & (dp < dm)
    minus = (dm <= radius) & (dm < dp)
    mp = math.fsum(spread.mass[plus].tolist())
    mm = math.fsum(spread.mass[minus].tolist())
    mo = math.fsum(spread.mass[~(plus | minus)].tolist())
    return MassReport(radius, mp, mm, mo, tuple(orbit_plus), tuple(orbit_minus))


def _preimage_levels(fmap: QuadMap, depth: int):
    """Real preimages of 0 level by level, with log|Df^j| at each."""
    c = float(fmap.c)
    y, L = np.array([0.0]), np.array([0.0])
    levels = [(y, L)]
    for _ in range(depth):
        d = y - c
        keep = d >= 0
        r = np.sqrt(d[keep])
        Lk = L[keep]
        logd = np.log(2 * r) if r.size else r
        y = np.concatenate([-r, r])
        L = np.concatenate([Lk + logd, Lk + logd])
        levels.append((y, L))
    return levels


def atomic_conformal_measure(fmap: QuadMap, t: float, p: float, depth: int,
                             window: int = 4) -> SpreadMeasure:
    """Atoms at y in f^-j(0), j <= depth, of mass exp(-j p) |Df^j(y)|^-t, normalized.

    The per-level masses are kept in the diagnostics; the truncation is
    rejected when they are not decreasing over the last ``window`` levels.
    """
    if depth < 0:
        raise ValueError("depth must be nonnegative")
    if depth > 26:
        raise ValueError("depth above 26 would need more than 2^27 atoms")
    c = float(fmap.c)
    fc = c * c + c
    levels = _preimage_levels(fmap, depth)
    xs, lws, level_log = [], [], []
    for j, (y, L) in enumerate(levels):
        lw = -j * p - t * L
        level_log.append(_logsumexp(lw))
        inside = (y >= c - 1e-15) & (y <= fc + 1e-15)
        xs.append(y[inside])
        lws.append(lw[inside])
    ratios = [b - a for a, b in zip(level_log, level_log[1:])]
    tail = ratios[-window:]
    verdict = "undecided"
    if tail and max(tail) < 0:
        verdict = "converging"
    elif tail and min(tail) >= 0:
        verdict = "diverging"
        raise SeriesDiverging(f"level masses grow over the last {len(tail)} levels")
    x = np.concatenate(xs)
    lw = np.concatenate(lws)
    lse = _logsumexp(lw)
    mass = np.exp(lw - lse)
    s = math.fsum(mass.tolist())
    mass = mass / s
    x, mass = _sorted(x, mass)
    diag = {"level_log_mass": level_log, "log_total": lse + math.log(s), "verdict": verdict,
            "atoms_outside_I": int(sum(len(y) for y, _ in levels) - x.size)}
    return SpreadMeasure(x, mass, math.exp(lse) * s if lse < 700 else math.inf, diag)


def conformality_audit(fmap: QuadMap, t: float, p: float, depth: int) -> dict:
    """Compare mu(f(U)) with exp(p) sum_U |Df|^t mu on U = (0, beta], using raw atom masses.

    f maps U injectively onto (c, beta]; atoms of f(U) at the deepest level
    have no preimage inside the truncation, so they are excluded from mu(f(U)).
    """
    c = float(fmap.c)
    beta = float(fixed_points(fmap)[1])
    levels = _preimage_levels(fmap, depth)
    lhs, rhs = [], []
    for j, (y, L) in enumerate(levels):
        lw = -j * p - t * L
        if j < depth:
            sel = (y > c) & (y <= beta)
            lhs.append(lw[sel])
        if j >= 1:
            sel = (y > 0) & (y <= beta)
            rhs.append(p + t * np.log(2 * y[sel]) + lw[sel])
    a = _logsumexp(np.concatenate(lhs))
    b = _logsumexp(np.concatenate(rhs))
    return {"log_mu_fU": a, "log_rhs": b, "relative_residual": abs(math.expm1(b - a))}
