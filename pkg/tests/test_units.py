import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sedlab.errors import NonPositiveInput, StrongCouplingOutOfScope
from sedlab.units import (
    DIMENSIONS,
    ELECTRON_CHARGE_G,
    ELECTRON_MASS,
    SPEED_OF_LIGHT,
    PhysicalScale,
    UnitSystem,
    dissipation_time,
    electron_scale,
    make_scale,
    natural_scale,
)


def test_electron_tau_order_of_magnitude():
    s = electron_scale(4.1e16)
    assert s.tau == pytest.approx(6.26e-24, rel=2e-3)
    assert 1e-24 < s.tau < 1e-22


def test_electron_dissipation_time_atomic():
    td = dissipation_time(electron_scale(4.1e16))
    assert 1e-12 < td < 1e-10


def test_zero_charge_rejected():
    with pytest.raises(NonPositiveInput):
        make_scale(0.0, 1.0, 1.0, 1.0)


@pytest.mark.parametrize("bad", [-1.0, float("nan"), float("inf")])
def test_non_positive_or_nonfinite_rejected(bad):
    with pytest.raises(NonPositiveInput):
        make_scale(1.0, bad, 1.0, 1.0)


def test_strong_coupling_rejected():
    with pytest.raises(StrongCouplingOutOfScope):
        natural_scale(0.1)


def test_natural_identity():
    s = natural_scale(1e-3)
    assert s.tau == pytest.approx(1e-3, rel=1e-14)
    assert (s.hbar, s.mass, s.omega0) == (1.0, 1.0, 1.0)
    assert dissipation_time(s) == pytest.approx(1000.0, rel=1e-12)


def test_dissipation_time_decreases_with_epsilon():
    eps = [1e-4, 1e-3, 1e-2, 5e-2]
    tds = [dissipation_time(natural_scale(e)) for e in eps]
    assert all(a > b for a, b in zip(tds, tds[1:]))


@settings(max_examples=60, deadline=None)
@given(
    charge=st.floats(1e-3, 1e3),
    mass=st.floats(1e-3, 1e3),
    c=st.floats(1.0, 1e3),
    omega0=st.floats(1e-3, 1e3),
)
def test_tau_recomputed(charge, mass, c, omega0):
    tau = 2 * charge**2 / (3 * mass * c**3)
    if tau * omega0 >= 0.1:
        with pytest.raises(StrongCouplingOutOfScope):
            make_scale(charge, mass, c, omega0)
        return
    s = make_scale(charge, mass, c, omega0)
    assert abs(s.tau - tau) / tau < 1e-14
    assert s.epsilon == pytest.approx(tau * omega0, rel=1e-14)


@settings(max_examples=40, deadline=None)
@given(value=st.floats(1e-30, 1e30), quantity=st.sampled_from(sorted(DIMENSIONS)))
def test_unit_round_trip(value, quantity):
    s = electron_scale(4.1e16)
    back = s.from_natural(s.to_natural(value, quantity), quantity)
    assert abs(back - value) <= 1e-12 * abs(value)


def test_natural_view_preserves_epsilon():
    s = electron_scale(4.1e16)
    n = s.natural()
    assert n.system is UnitSystem.NATURAL
    assert n.epsilon == pytest.approx(s.epsilon, rel=1e-12)
    assert (n.hbar, n.mass, n.omega0) == (1.0, 1.0, 1.0)


def test_natural_time_unit():
    s = electron_scale(4.1e16)
    assert s.to_natural(dissipation_time(s), "time") == pytest.approx(dissipation_time(s.natural()), rel=1e-12)


def test_dict_round_trip():
    s = make_scale(ELECTRON_CHARGE_G, ELECTRON_MASS, SPEED_OF_LIGHT, 4.1e16, 1.054571817e-34, UnitSystem.SI)
    t = PhysicalScale.from_dict(s.as_dict())
    assert t == s
    assert t.tau == s.tau


def test_scale_is_immutable():
    s = natural_scale()
    with pytest.raises(Exception):
        s.mass = 2.0


def test_unknown_quantity():
    with pytest.raises(KeyError):
        natural_scale().unit_of("temperature")


def test_gamma_definition():
    s = make_scale(0.02, 2.0, 1.5, 3.0)
    assert s.gamma == pytest.approx(s.tau * 9.0, rel=1e-14)
    assert math.isclose(dissipation_time(s), 1 / s.gamma)
