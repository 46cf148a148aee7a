from decimal import Decimal

import pytest
from hypothesis import given
from hypothesis import strategies as st

from bevcharge.units import EmissionQuantity, EnergyQuantity

finite_nonneg = st.floats(min_value=0, max_value=1e300, allow_nan=False, allow_infinity=False)


def test_gwh_conversion():
    q = EnergyQuantity(3_053_600_000.0)
    assert q.gwh == 3053.6
    assert q.to_gwh() == Decimal("3053.6")
    assert EnergyQuantity.from_gwh("858.2").kwh == 858_200_000.0


def test_mt_conversion():
    q = EmissionQuantity.from_mt("1.73")
    assert q.kg == 1_730_000_000.0
    assert q.mt == pytest.approx(1.73, rel=1e-15)


@given(finite_nonneg)
def test_energy_round_trip_is_exact(x):
    assert EnergyQuantity.from_gwh(EnergyQuantity(x).to_gwh()).kwh == x


@given(finite_nonneg)
def test_emission_round_trip_is_exact(x):
    assert EmissionQuantity.from_mt(EmissionQuantity(x).to_mt()).kg == x


@pytest.mark.parametrize("bad", [-1.0, float("nan"), float("inf")])
def test_rejects_negative_and_non_finite(bad):
    with pytest.raises(ValueError):
        EnergyQuantity(bad)
    with pytest.raises(ValueError):
        EmissionQuantity(bad)


def test_arithmetic():
    assert EnergyQuantity(1.0) + EnergyQuantity(2.0) == EnergyQuantity(3.0)
    assert 2 * EmissionQuantity(1.5) == EmissionQuantity(3.0)
    with pytest.raises(TypeError):
        EnergyQuantity(1.0) + EmissionQuantity(1.0)
