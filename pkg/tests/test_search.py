import pytest

from quadthermo.errors import OrbitEscapedCantorSet
from quadthermo.search import (KneadingTarget, find_parameter, itinerary_of_parameter, kn_membership)


def test_round_trip_and_disjointness(toy_parameters):
    for prefix, res in toy_parameters.items():
        assert res.c_lo < res.c_hi
        assert itinerary_of_parameter(res.midpoint(), 5, len(prefix), bits=512) == [int(prefix)]
        assert res.achieved_length >= res.depth
        assert res.assumption_flags
    a, b = toy_parameters["0"], toy_parameters["1"]
    assert a.c_hi < b.c_lo or b.c_hi < a.c_lo


def test_round_trip_longer_prefix():
    res = find_parameter(KneadingTarget(5, "0110"), 512)
    assert itinerary_of_parameter(res.midpoint(), 5, 4, bits=512) == [0, 1, 1, 0]
    assert float(res.c_hi - res.c_lo) < 2.0 ** -256


def test_membership_of_found_parameter(toy_parameters):
    mem = kn_membership(toy_parameters["0"].midpoint(), 5, depth=8, bits=512)
    assert mem.member and mem.chain_ok


def test_airplane_parameter_fails_chain():
    # the period-3 superattracting parameter has f^3(0) = 0, so its orbit never reaches Y or Ytilde
    mem = kn_membership("-1.7548776662466927", 5, depth=4)
    assert not mem.member and not mem.chain_ok and mem.chain_failure


def test_empty_itinerary():
    assert itinerary_of_parameter("-1.99", 5, 0) == []


def test_escaping_parameter_raises():
    with pytest.raises(OrbitEscapedCantorSet):
        itinerary_of_parameter("-1.95", 5, 4)


def test_target_validation():
    with pytest.raises(ValueError):
        KneadingTarget(2, "0")
    with pytest.raises(ValueError):
        KneadingTarget(5, "012")
    assert KneadingTarget(5, "01").symbol(7) == 0
