import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from quadthermo.dynamics import QuadMap
from quadthermo.errors import SeriesDiverging
from quadthermo.measure import (SpreadMeasure, atomic_conformal_measure, conformality_audit, gibbs_weights,
                                mass_near_orbits, orbit_sets, spread_measure)
from quadthermo.pressure import InducingBudget, build_induced_system

from conftest import C_ZERO

FMAP = QuadMap(C_ZERO)
SYSTEM = build_induced_system(FMAP, 3, InducingBudget(max_return=12, central_samples=40, central_max_shadow=20))


def test_uniform_weights_at_zero():
    g = gibbs_weights(SYSTEM, 0.0, 0.0)
    assert np.allclose(g.weights, 1.0 / SYSTEM.size, rtol=1e-12, atol=0)
    assert g.sandwich_ok()


def test_weight_ratio_follows_derivative():
    t = 1.7
    g = gibbs_weights(SYSTEM, t, 0.3)
    i, j = 0, SYSTEM.size - 1
    expected = -0.3 * (SYSTEM.m[i] - SYSTEM.m[j]) - t * (SYSTEM.L_mid[i] - SYSTEM.L_mid[j])
    assert math.log(g.weights[i] / g.weights[j]) == pytest.approx(expected, abs=1e-9)
    assert g.sandwich_ok()


def test_spread_bookkeeping():
    g = gibbs_weights(SYSTEM, 1.0, 0.0)
    sp = spread_measure(FMAP, SYSTEM, g)
    assert sp.x.size == int(SYSTEM.m.sum()) == sp.diagnostics["expected_atom_count"]
    assert abs(math.fsum(sp.mass.tolist()) - 1) < 2.0 ** -30
    assert np.all(sp.mass >= 0) and np.all(np.diff(sp.x) >= 0)
    # every orbit point stays in [c, f(c)]
    c = float(FMAP.c)
    assert sp.x.min() >= c - 1e-9 and sp.x.max() <= c * c + c + 1e-9


@given(st.floats(0.001, 1.0))
def test_mass_report_is_a_partition(radius):
    g = gibbs_weights(SYSTEM, 2.0, 0.0)
    sp = spread_measure(FMAP, SYSTEM, g)
    plus, minus = orbit_sets(FMAP)
    rep = mass_near_orbits(sp, plus, minus, radius)
    assert rep.mass_plus + rep.mass_minus + rep.mass_other == pytest.approx(1.0, abs=1e-12)
    assert min(rep.mass_plus, rep.mass_minus, rep.mass_other) >= 0


def test_mass_report_trivial_cases():
    sp = SpreadMeasure(np.array([0.0, 1.0, 5.0]), np.array([0.25, 0.5, 0.25]), 1.0)
    rep = mass_near_orbits(sp, [0.0], [1.0], 0.1)
    assert (rep.mass_plus, rep.mass_minus, rep.mass_other) == (0.25, 0.5, 0.25)
    tie = mass_near_orbits(SpreadMeasure(np.array([0.5]), np.array([1.0]), 1.0), [0.0], [1.0], 1.0)
    assert tie.mass_other == 1.0
    with pytest.raises(ValueError):
        mass_near_orbits(sp, [0.0], [1.0], 0.0)


def test_orbit_sets_sizes():
    plus, minus = orbit_sets(FMAP)
    assert len(plus) == 3 and len(minus) == 6
    assert abs(FMAP.iterate(FMAP.mpf(plus[0]), 3) - plus[0]) < 1e-12


def test_atomic_measure_depth_zero():
    sp = atomic_conformal_measure(QuadMap(-2), 0.0, 1.0, 0)
    assert sp.atoms == [(0.0, 1.0)]


def test_atomic_measure_level_masses_at_zero_temperature():
    p = math.log(2) + 0.1
    sp = atomic_conformal_measure(QuadMap(-2), 0.0, p, 16)
    for j, lm in enumerate(sp.diagnostics["level_log_mass"]):
        assert lm == pytest.approx(j * math.log(2 * math.exp(-p)), abs=1e-12)
    assert sp.diagnostics["verdict"] == "converging"
    with pytest.raises(SeriesDiverging):
        atomic_conformal_measure(QuadMap(-2), 0.0, math.log(2) - 0.1, 10)


@pytest.mark.parametrize("t,p", [(0.0, 1.0), (1.0, 0.2), (0.5, 0.8)])
def test_conformality_audit(t, p):
    audit = conformality_audit(QuadMap(-2), t, p, 14)
    assert audit["relative_residual"] < 1e-12
