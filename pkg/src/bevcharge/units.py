"""Energy and emission quantities in base units (kWh, kgCO2).

Unit conversions go through :mod:`decimal` so that a kWh -> GWh -> kWh round
trip reproduces the original float bit for bit.
"""

from __future__ import annotations

import decimal
import math
from dataclasses import dataclass
from decimal import Decimal

KWH_PER_GWH = 1_000_000
KG_PER_MT = 1_000_000_000

# Wide enough to hold the full decimal expansion of any double.
_EXACT = decimal.Context(prec=1100, Emin=-99999, Emax=99999)


def _shift(value, places: int) -> Decimal:
    return _EXACT.scaleb(Decimal(value), places)


def _check(value: float, what: str) -> float:
    value = float(value)
    if not math.isfinite(value) or value < 0:
        raise ValueError(f"{what} must be finite and non-negative, got {value!r}")
    return value


@dataclass(frozen=True, order=True)
class EnergyQuantity:
    """Electricity in kilowatt-hours."""

    kwh: float

    def __post_init__(self):
        object.__setattr__(self, "kwh", _check(self.kwh, "energy"))

    @classmethod
    def from_gwh(cls, gwh) -> "EnergyQuantity":
        return cls(float(_shift(gwh, 6)))

    def to_gwh(self) -> Decimal:
        """Exact value in GWh."""
        return _shift(self.kwh, -6)

    @property
    def gwh(self) -> float:
        return self.kwh / KWH_PER_GWH

    def __add__(self, other):
        if not isinstance(other, EnergyQuantity):
            return NotImplemented
        return EnergyQuantity(self.kwh + other.kwh)

    def __mul__(self, factor):
        if isinstance(factor, (EnergyQuantity, EmissionQuantity)):
            return NotImplemented
        return EnergyQuantity(self.kwh * factor)

    __rmul__ = __mul__


@dataclass(frozen=True, order=True)
class EmissionQuantity:
    """Carbon dioxide in kilograms."""

    kg: float

    def __post_init__(self):
        object.__setattr__(self, "kg", _check(self.kg, "emissions"))

    @classmethod
    def from_mt(cls, mt) -> "EmissionQuantity":
        return cls(float(_shift(mt, 9)))

    def to_mt(self) -> Decimal:
        """Exact value in mega-tons."""
        return _shift(self.kg, -9)

    @property
    def mt(self) -> float:
        return self.kg / KG_PER_MT

    def __add__(self, other):
        if not isinstance(other, EmissionQuantity):
            return NotImplemented
        return EmissionQuantity(self.kg + other.kg)

    def __mul__(self, factor):
        if isinstance(factor, (EnergyQuantity, EmissionQuantity)):
            return NotImplemented
        return EmissionQuantity(self.kg * factor)

    __rmul__ = __mul__
