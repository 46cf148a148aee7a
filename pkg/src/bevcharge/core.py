"""Fleet records and the bottom-up charging-demand arithmetic.

Energy for one vehicle version in one climate zone is split into a mild
season (spring/autumn) and a harsh season (summer/winter). Each season's
distance is driven at the NEDC-rated consumption ``battery_kwh / nedc_km``
corrected by a seasonal degradation coefficient that shrinks the effective
range::

    mild  = share * units * (f * mileage * battery_kwh) / (lam * nedc_km)
    harsh = share * units * ((1 - f) * mileage * battery_kwh) / (rho * nedc_km)

Version totals roll up to models, zones and the nation by plain summation;
zone emissions are the zone's grid emission factor times zone energy.
"""

from __future__ import annotations

import math
from collections import Counter
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field

from .errors import ComputationError, UsageError, ValidationError
from .units import EmissionQuantity, EnergyQuantity

#: Hard upper bound on both degradation coefficients.
DEGRADATION_MAX = 1.5
#: Coefficients outside ``(low, high]`` are legal but flagged.
DEGRADATION_TYPICAL = (0.5, 1.0)
#: Version shares of one (model, year) must sum to one within this.
SHARE_TOLERANCE = 1e-6
YEAR_RANGE = (1990, 2100)

__all__ = [
    "VehicleVersion",
    "SalesRecord",
    "ZoneParameters",
    "SeasonalConsumption",
    "canonical_sum",
    "mild_season_energy",
    "harsh_season_energy",
    "version_annual_energy",
    "model_energy",
    "zone_energy",
    "national_energy",
    "zone_emissions",
    "national_emissions",
]


def _positive(value, name):
    if not (math.isfinite(value) and value > 0):
        raise ValidationError(f"{name} must be > 0, got {value!r}", code="UNIT_VIOLATION")


def _year(value):
    lo, hi = YEAR_RANGE
    if not (lo <= value <= hi):
        raise ValidationError(f"year {value} outside {lo}-{hi}", code="YEAR_RANGE")


@dataclass(frozen=True)
class VehicleVersion:
    model_id: str
    version_id: str
    year: int
    battery_energy: float
    nedc_range: float
    sales_share: float
    mild_degradation: float
    harsh_degradation: float
    source_row: int | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        _year(self.year)
        _positive(self.battery_energy, "battery_energy")
        _positive(self.nedc_range, "nedc_range")
        if not (0.0 <= self.sales_share <= 1.0):
            raise ValidationError(
                f"sales_share must lie in [0, 1], got {self.sales_share!r}",
                code="UNIT_VIOLATION",
            )
        for name in ("mild_degradation", "harsh_degradation"):
            value = getattr(self, name)
            if not (0.0 < value <= DEGRADATION_MAX):
                raise ValidationError(
                    f"{name} must lie in (0, {DEGRADATION_MAX}], got {value!r}",
                    code="DEGRADATION_BOUND",
                )

    @property
    def key(self):
        return (self.model_id, self.version_id, self.year)

    def atypical_degradation(self) -> list[str]:
        """Names of coefficients outside the typical range."""
        lo, hi = DEGRADATION_TYPICAL
        return [
            name
            for name in ("mild_degradation", "harsh_degradation")
            if not (lo < getattr(self, name) <= hi)
        ]


@dataclass(frozen=True)
class SalesRecord:
    model_id: str
    zone_id: str
    year: int
    units: int
    source_row: int | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        _year(self.year)
        if isinstance(self.units, bool) or int(self.units) != self.units or self.units < 0:
            raise ValidationError(
                f"units must be a non-negative integer, got {self.units!r}",
                code="UNIT_VIOLATION",
            )

    @property
    def key(self):
        return (self.model_id, self.zone_id, self.year)


@dataclass(frozen=True)
class ZoneParameters:
    zone_id: str
    year: int
    annual_mileage: float
    mild_season_fraction: float = 0.5
    emission_factor: float = 0.0
    source_row: int | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        _year(self.year)
        _positive(self.annual_mileage, "annual_mileage")
        if not (0.0 <= self.mild_season_fraction <= 1.0):
            raise ValidationError(
                f"mild_season_fraction must lie in [0, 1], got {self.mild_season_fraction!r}",
                code="UNIT_VIOLATION",
            )
        if not (math.isfinite(self.emission_factor) and self.emission_factor >= 0):
            raise ValidationError(
                f"emission_factor must be >= 0, got {self.emission_factor!r}",
                code="UNIT_VIOLATION",
            )

    @property
    def key(self):
        return (self.zone_id, self.year)


@dataclass(frozen=True)
class SeasonalConsumption:
    """Mild, harsh and annual kWh of one version; ``annual == mild + harsh``."""

    mild: float
    harsh: float

    @property
    def annual(self) -> float:
        return self.mild + self.harsh

    @property
    def energy(self) -> EnergyQuantity:
        return EnergyQuantity(self.annual)


def canonical_sum(values: Mapping | Iterable) -> float:
    """Sum floats (or quantities) in sorted-key order.

    Accepts a mapping ``key -> value`` or an iterable of ``(key, value)``
    pairs; keys are compared as strings so mixed id types still order.
    """
    items = values.items() if isinstance(values, Mapping) else values
    ordered = sorted(items, key=lambda kv: _sort_key(kv[0]))
    return math.fsum(_magnitude(v) for _, v in ordered)


def _sort_key(key):
    if isinstance(key, tuple):
        return tuple(str(k) for k in key)
    return (str(key),)


def _magnitude(value):
    if isinstance(value, EnergyQuantity):
        return value.kwh
    if isinstance(value, EmissionQuantity):
        return value.kg
    if isinstance(value, SeasonalConsumption):
        return value.annual
    return float(value)


def _check_alignment(version: VehicleVersion, sales: SalesRecord, zone: ZoneParameters):
    if version.model_id != sales.model_id:
        raise UsageError(
            f"version belongs to model {version.model_id!r}, sales to {sales.model_id!r}"
        )
    if sales.zone_id != zone.zone_id:
        raise UsageError(f"sales zone {sales.zone_id!r} != zone {zone.zone_id!r}")
    if not (version.year == sales.year == zone.year):
        raise UsageError(
            f"year mismatch: version {version.year}, sales {sales.year}, zone {zone.year}"
        )


def _finite(value: float, what: str) -> float:
    if not math.isfinite(value):
        raise ComputationError(f"{what} is not finite ({value!r})")
    return value


def _season_kwh(version, sales, distance_km, degradation):
    return (
        version.sales_share
        * sales.units
        * (distance_km * version.battery_energy)
        / (degradation * version.nedc_range)
    )


def mild_season_energy(version, sales, zone) -> EnergyQuantity:
    """Spring/autumn charging energy of one version in one zone-year."""
    _check_alignment(version, sales, zone)
    km = zone.mild_season_fraction * zone.annual_mileage
    kwh = _season_kwh(version, sales, km, version.mild_degradation)
    return EnergyQuantity(_finite(kwh, "mild-season energy"))


def harsh_season_energy(version, sales, zone) -> EnergyQuantity:
    """Summer/winter charging energy of one version in one zone-year."""
    _check_alignment(version, sales, zone)
    km = (1.0 - zone.mild_season_fraction) * zone.annual_mileage
    kwh = _season_kwh(version, sales, km, version.harsh_degradation)
    return EnergyQuantity(_finite(kwh, "harsh-season energy"))


def version_annual_energy(version, sales, zone) -> SeasonalConsumption:
    mild = mild_season_energy(version, sales, zone).kwh
    harsh = harsh_season_energy(version, sales, zone).kwh
    return SeasonalConsumption(mild=mild, harsh=harsh)


def check_shares(versions: Iterable[VehicleVersion]) -> float:
    """Return the share sum, raising ``SHARE_SUM`` when it is not 1 within tolerance."""
    versions = list(versions)
    total = math.fsum(v.sales_share for v in versions)
    if abs(total - 1.0) > SHARE_TOLERANCE:
        first = versions[0] if versions else None
        raise ValidationError(
            f"version shares sum to {total:.6g}, expected 1",
            code="SHARE_SUM",
            file="versions.csv",
            row=first.source_row if first else None,
        )
    return total


def model_energy(versions: Iterable[VehicleVersion], sales, zone) -> EnergyQuantity:
    """Annual energy of one model: the sum of its versions' annual energy."""
    versions = list(versions)
    if not versions:
        raise UsageError("model_energy needs at least one version")
    ids = {(v.model_id, v.year) for v in versions}
    if len(ids) != 1:
        raise UsageError(f"versions span several (model, year) pairs: {sorted(ids)}")
    seen = [v.version_id for v in versions]
    if len(set(seen)) != len(seen):
        raise UsageError(f"duplicate version ids in {seen}")
    check_shares(versions)
    per_version = [(v.version_id, version_annual_energy(v, sales, zone)) for v in versions]
    return EnergyQuantity(canonical_sum(per_version))


def _unique_pairs(results, what):
    items = list(results.items() if isinstance(results, Mapping) else results)
    counts = Counter(k for k, _ in items)
    dupes = sorted(str(k) for k, n in counts.items() if n > 1)
    if dupes:
        raise UsageError(f"duplicate {what} in input: {', '.join(dupes)}")
    return items


def zone_energy(model_results) -> EnergyQuantity:
    """Sum model energies (``model_id -> EnergyQuantity``) of one zone-year."""
    return EnergyQuantity(canonical_sum(_unique_pairs(model_results, "model")))


def national_energy(zone_results) -> EnergyQuantity:
    """Sum zone energies (``zone_id -> EnergyQuantity``) of one year."""
    return EnergyQuantity(canonical_sum(_unique_pairs(zone_results, "zone")))


def zone_emissions(energy: EnergyQuantity, zone: ZoneParameters | float) -> EmissionQuantity:
    """Grid emissions of a zone's charging energy.

    ``zone`` may be a :class:`ZoneParameters` or a bare emission factor in
    kgCO2/kWh.
    """
    factor = zone.emission_factor if isinstance(zone, ZoneParameters) else float(zone)
    if not factor >= 0:
        raise UsageError(f"emission factor must be >= 0, got {factor!r}")
    kwh = energy.kwh if isinstance(energy, EnergyQuantity) else float(energy)
    return EmissionQuantity(_finite(factor * kwh, "zone emissions"))


def national_emissions(zone_results) -> EmissionQuantity:
    """Sum zone emissions (``zone_id -> EmissionQuantity``) of one year."""
    return EmissionQuantity(canonical_sum(_unique_pairs(zone_results, "zone")))
