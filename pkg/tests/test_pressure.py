import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from quadthermo.dynamics import QuadMap
from quadthermo.logvalue import LogValue
from quadthermo.pressure import (EnvelopeParams, InducingBudget, bowen_pressure, build_induced_system,
                                 partition_function_Z, peierls_margins, periodic_orbit_pressure,
                                 periodic_points, postcritical_series, pressure_envelope)

from conftest import C_ZERO
from oracles import chebyshev_periodic_pressure

FMAP = QuadMap(C_ZERO)
SYSTEM = build_induced_system(FMAP, 3, InducingBudget(max_return=14))
CENTRAL = build_induced_system(FMAP, 3, InducingBudget(max_return=14, central_samples=60, central_max_shadow=20))


@pytest.mark.parametrize("N", [6, 10, 12])
def test_chebyshev_periodic_points_match_closed_form(N):
    per = periodic_points(QuadMap(-2), N)
    assert per.points.size == 2 ** N
    for t in (0.0, 0.5, 1.0, 2.0):
        assert per.pressure(t) == pytest.approx(chebyshev_periodic_pressure(N, t), abs=1e-9)


def test_periodic_points_reject_bad_period():
    with pytest.raises(ValueError):
        periodic_points(QuadMap(-2), 0)


def test_periodic_pressure_decreases_at_toy_parameter():
    vals = [periodic_orbit_pressure(FMAP, t, N=12) for t in (0.0, 0.5, 1.0, 1.5)]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    assert vals[0] < math.log(2)


def test_Z1_counts_branches_at_zero():
    z = partition_function_Z(SYSTEM, 1, 0.0, 0.0)
    assert float(z.log2) == pytest.approx(math.log2(SYSTEM.size), abs=1e-12)


@pytest.mark.parametrize("system", [SYSTEM, CENTRAL])
@pytest.mark.parametrize("t,p", [(0.0, 0.5), (1.0, 0.0), (2.0, -0.3)])
def test_composed_sums_bounded_by_powers(system, t, p):
    z1 = partition_function_Z(system, 1, t, p)
    z2 = partition_function_Z(system, 2, t, p)
    z3 = partition_function_Z(system, 3, t, p)
    assert z2 <= z1 * z1 * LogValue(1e-9)
    assert z3 <= z1 * z1 * z1 * LogValue(1e-9)


@given(st.floats(0, 3), st.floats(-1, 2), st.floats(0.01, 1))
def test_Z_decreases_in_p(t, p, dp):
    for ell in (1, 2):
        assert partition_function_Z(SYSTEM, ell, t, p + dp) <= partition_function_Z(SYSTEM, ell, t, p)


def test_branch_geometry():
    for system in (SYSTEM, CENTRAL):
        v = system.V[1]
        assert np.all(system.lo >= -v * (1 + 1e-9)) and np.all(system.hi <= v * (1 + 1e-9))
        assert np.all(np.diff(system.lo) >= 0)
        # branches are pairwise disjoint
        assert np.all(system.lo[1:] >= system.hi[:-1] - 1e-15)
        deep = system.level >= 0
        assert np.all(system.m[deep] >= system.n + 2 + 3 * system.level[deep])
        assert np.all(system.L_min <= system.L_mid) and np.all(system.L_mid <= system.L_max)
        assert 0 < system.distortion() < math.inf
    assert CENTRAL.central.sum() > 0


def test_bowen_root_solves_induced_equation():
    res = bowen_pressure(SYSTEM, 1.0, ell=1, include_tail=False)
    z = partition_function_Z(SYSTEM, 1, 1.0, res.p)
    assert abs(float(z.log2)) < 1e-8
    assert res.flags and res.defect_log2 is not None and res.defect_log2 < 0


def test_postcritical_series_closed_form_at_zero_temperature():
    n, p = 5, 1.0
    s = postcritical_series(FMAP, n, 0, p, K=40)
    exact = math.exp(-n * p) / (1 - math.exp(-3 * p))
    # partial sum of the geometric series up to K terms
    partial = exact * (1 - math.exp(-3 * p * 40))
    assert float(s.partial_sums[-1].log2) == pytest.approx(math.log2(partial), abs=2.0 ** -40)
    assert s.verdict == "converging"


def test_postcritical_series_verdicts():
    assert postcritical_series(FMAP, 5, 1.0, -1.0, K=30).verdict == "diverging"
    # at c = -2 the orbit sits on beta with |Df| = 4: ratio exp(-3p) 4^(-3t/2) is exactly 1 at p = -t log 2
    assert postcritical_series(QuadMap(-2), 3, 1.0, -math.log(2), K=30).verdict == "undecided"


ENV = EnvelopeParams(400, Fraction(1), 3, Fraction(2), Fraction(0), Fraction(1), Fraction(1))


def test_envelope_basics():
    with pytest.raises(ValueError):
        pressure_envelope(ENV, ENV.t0)
    at_star = pressure_envelope(ENV, 1)
    assert at_star.delta_plus.is_zero and at_star.delta_minus.is_zero
    e = pressure_envelope(ENV, Fraction(999999, 1000000))
    assert e.delta_minus <= e.delta_plus
    assert e.P_minus <= e.P_plus


def test_peierls_margins():
    flat = peierls_margins(SYSTEM, 1e-300, 0.0, 0.0)
    assert flat.min_margin > 600
    m1 = peierls_margins(SYSTEM, 1.0, 0.1, 1.0).margins
    m2 = peierls_margins(SYSTEM, 1.0, 0.2, 1.0).margins
    assert np.all(m2 < m1)
    with pytest.raises(ValueError):
        peierls_margins(SYSTEM, 0.0, 0.1, 1.0)
