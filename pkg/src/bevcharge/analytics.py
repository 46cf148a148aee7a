"""Result tree and the metrics derived from it.

:func:`build_result_tree` evaluates every (year, zone, model, version) cell
of a dataset and folds the cells upward in sorted key order, so the totals
do not depend on input row order or on how many workers evaluated cells.
"""

from __future__ import annotations

import math
from collections.abc import Mapping
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from . import core
from .core import canonical_sum
from .errors import UsageError, ValidationError
from .units import EmissionQuantity, EnergyQuantity

TARGETS = ("stock", "all-sales")
INTENSITY_MODES = ("cumulative", "annual")
DEFAULT_UNCERTAINTY = 0.10


@dataclass(frozen=True)
class ScalingRatios:
    """Top-20-to-population multipliers for one year."""

    year: int
    stock_to_top20: float
    all_sales_to_top20: float
    source_row: int | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        core._year(self.year)
        stock, sales = self.stock_to_top20, self.all_sales_to_top20
        if not (math.isfinite(stock) and math.isfinite(sales)):
            raise ValidationError("ratios must be finite", code="UNIT_VIOLATION")
        if not (stock >= sales >= 1.0):
            raise ValidationError(
                f"need stock_to_top20 >= all_sales_to_top20 >= 1, got {stock:g}, {sales:g}",
                code="RATIO_ORDER",
            )

    def ratio(self, target: str) -> float:
        target = _target(target)
        return self.stock_to_top20 if target == "stock" else self.all_sales_to_top20


def _target(target):
    norm = str(target).replace("_", "-").lower()
    if norm not in TARGETS:
        raise UsageError(f"scaling target must be one of {TARGETS}, got {target!r}")
    return norm


@dataclass(frozen=True)
class Band:
    low: float
    mid: float
    high: float

    def __iter__(self):
        return iter((self.low, self.mid, self.high))


# -- result tree ------------------------------------------------------------


@dataclass(frozen=True)
class VersionNode:
    version_id: str
    mild_kwh: float
    harsh_kwh: float
    emissions_kg: float

    @property
    def energy_kwh(self) -> float:
        return self.mild_kwh + self.harsh_kwh


@dataclass(frozen=True)
class ModelNode:
    model_id: str
    units: int
    energy_kwh: float
    emissions_kg: float
    versions: tuple[VersionNode, ...]


@dataclass(frozen=True)
class ZoneNode:
    zone_id: str
    emission_factor: float
    units: int
    energy_kwh: float
    emissions_kg: float
    models: tuple[ModelNode, ...]

    def model(self, model_id) -> ModelNode:
        for m in self.models:
            if m.model_id == model_id:
                return m
        raise KeyError(model_id)


@dataclass(frozen=True)
class YearNode:
    """National totals for one year."""

    year: int
    units: int
    energy_kwh: float
    emissions_kg: float
    zones: tuple[ZoneNode, ...]
    energy_band: Band | None = None
    emissions_band: Band | None = None

    def zone(self, zone_id) -> ZoneNode:
        for z in self.zones:
            if z.zone_id == zone_id:
                return z
        raise KeyError(zone_id)

    @property
    def energy(self) -> EnergyQuantity:
        return EnergyQuantity(self.energy_kwh)

    @property
    def emissions(self) -> EmissionQuantity:
        return EmissionQuantity(self.emissions_kg)


LEVELS = ("version", "model", "zone", "national")


@dataclass(frozen=True)
class ResultTree:
    years: tuple[YearNode, ...] = ()
    uncertainty: float | None = None
    dataset_checksum: str | None = None

    def __getitem__(self, year) -> YearNode:
        for node in self.years:
            if node.year == year:
                return node
        raise KeyError(year)

    def __iter__(self):
        return iter(self.years)

    def __len__(self):
        return len(self.years)

    @property
    def year_ids(self) -> tuple[int, ...]:
        return tuple(n.year for n in self.years)

    def rows(self, levels=LEVELS):
        """Yield ``(level, scope, year, metric, value)`` tuples in a fixed order.

        Scopes are ``"national"``, ``zone``, ``zone/model`` and
        ``zone/model/version``.
        """
        for y in self.years:
            if "national" in levels:
                yield ("national", "national", y.year, "units", y.units)
                yield ("national", "national", y.year, "energy_kwh", y.energy_kwh)
                yield ("national", "national", y.year, "emissions_kg", y.emissions_kg)
                for name, band in (("energy_kwh", y.energy_band), ("emissions_kg", y.emissions_band)):
                    if band is not None:
                        yield ("national", "national", y.year, f"{name}_low", band.low)
                        yield ("national", "national", y.year, f"{name}_high", band.high)
            for z in y.zones:
                if "zone" in levels:
                    yield ("zone", z.zone_id, y.year, "units", z.units)
                    yield ("zone", z.zone_id, y.year, "energy_kwh", z.energy_kwh)
                    yield ("zone", z.zone_id, y.year, "emissions_kg", z.emissions_kg)
                    yield ("zone", z.zone_id, y.year, "emission_factor", z.emission_factor)
                for m in z.models:
                    scope = f"{z.zone_id}/{m.model_id}"
                    if "model" in levels:
                        yield ("model", scope, y.year, "units", m.units)
                        yield ("model", scope, y.year, "energy_kwh", m.energy_kwh)
                        yield ("model", scope, y.year, "emissions_kg", m.emissions_kg)
                    if "version" in levels:
                        for v in m.versions:
                            vscope = f"{scope}/{v.version_id}"
                            yield ("version", vscope, y.year, "mild_kwh", v.mild_kwh)
                            yield ("version", vscope, y.year, "harsh_kwh", v.harsh_kwh)
                            yield ("version", vscope, y.year, "energy_kwh", v.energy_kwh)
                            yield ("version", vscope, y.year, "emissions_kg", v.emissions_kg)

    def to_dict(self) -> dict:
        def band(b):
            return None if b is None else {"low": b.low, "mid": b.mid, "high": b.high}

        return {
            "dataset_checksum": self.dataset_checksum,
            "uncertainty": self.uncertainty,
            "units": {"energy": "kWh", "emissions": "kgCO2", "emission_factor": "kgCO2/kWh"},
            "years": [
                {
                    "year": y.year,
                    "units": y.units,
                    "energy_kwh": y.energy_kwh,
                    "emissions_kg": y.emissions_kg,
                    "energy_band": band(y.energy_band),
                    "emissions_band": band(y.emissions_band),
                    "zones": [
                        {
                            "zone_id": z.zone_id,
                            "emission_factor": z.emission_factor,
                            "units": z.units,
                            "energy_kwh": z.energy_kwh,
                            "emissions_kg": z.emissions_kg,
                            "models": [
                                {
                                    "model_id": m.model_id,
                                    "units": m.units,
                                    "energy_kwh": m.energy_kwh,
                                    "emissions_kg": m.emissions_kg,
                                    "versions": [
                                        {
                                            "version_id": v.version_id,
                                            "mild_kwh": v.mild_kwh,
                                            "harsh_kwh": v.harsh_kwh,
                                            "energy_kwh": v.energy_kwh,
                                            "emissions_kg": v.emissions_kg,
                                        }
                                        for v in m.versions
                                    ],
                                }
                                for m in z.models
                            ],
                        }
                        for z in y.zones
                    ],
                }
                for y in self.years
            ],
        }


def _evaluate_cell(dataset, sale):
    zone = dataset.zone(sale.zone_id, sale.year)
    nodes = []
    for version in dataset.versions_for(sale.model_id, sale.year):
        seasonal = core.version_annual_energy(version, sale, zone)
        nodes.append(
            VersionNode(
                version.version_id,
                seasonal.mild,
                seasonal.harsh,
                core.zone_emissions(EnergyQuantity(seasonal.annual), zone).kg,
            )
        )
    return sale, zone, tuple(nodes)


def _check_years(dataset, years):
    available = set(dataset.years)
    if years is None:
        return tuple(sorted(available))
    years = sorted({int(y) for y in years})
    missing = [y for y in years if y not in available]
    if missing:
        raise ValidationError(
            f"no sales data for year(s) {missing}; dataset covers {sorted(available)}",
            code="NO_DATA_YEAR",
            file="sales.csv",
        )
    return tuple(years)


def build_result_tree(dataset, years=None, *, uncertainty=None, n_jobs=1) -> ResultTree:
    """Compute version, model, zone and national totals for ``years``.

    ``years=None`` means every year with sales; an empty collection gives
    an empty tree. ``uncertainty`` attaches a symmetric band to the national
    totals. ``n_jobs`` > 1 evaluates cells on a thread pool; results are
    identical for any worker count.
    """
    years = _check_years(dataset, years)
    if uncertainty is not None:
        _check_fraction(uncertainty)
    cells = [s for y in years for z in dataset.zones_for(y) for s in dataset.sales_for(z, y)]
    if n_jobs is not None and n_jobs > 1 and len(cells) > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            evaluated = list(pool.map(lambda s: _evaluate_cell(dataset, s), cells))
    else:
        evaluated = [_evaluate_cell(dataset, s) for s in cells]

    by_key = {(s.year, s.zone_id, s.model_id): (s, z, nodes) for s, z, nodes in evaluated}
    year_nodes = []
    for year in years:
        zone_nodes = []
        for zone_id in dataset.zones_for(year):
            zone = dataset.zone(zone_id, year)
            model_nodes = []
            for sale in dataset.sales_for(zone_id, year):
                _, _, versions = by_key[(year, zone_id, sale.model_id)]
                energy = canonical_sum((v.version_id, v.energy_kwh) for v in versions)
                model_nodes.append(
                    ModelNode(
                        sale.model_id,
                        sale.units,
                        energy,
                        core.zone_emissions(EnergyQuantity(energy), zone).kg,
                        versions,
                    )
                )
            model_nodes.sort(key=lambda m: m.model_id)
            e_zone = core.zone_energy((m.model_id, EnergyQuantity(m.energy_kwh)) for m in model_nodes)
            zone_nodes.append(
                ZoneNode(
                    zone_id,
                    zone.emission_factor,
                    sum(m.units for m in model_nodes),
                    e_zone.kwh,
                    core.zone_emissions(e_zone, zone).kg,
                    tuple(model_nodes),
                )
            )
        zone_nodes.sort(key=lambda z: z.zone_id)
        e_nat = core.national_energy((z.zone_id, EnergyQuantity(z.energy_kwh)) for z in zone_nodes)
        x_nat = core.national_emissions(
            (z.zone_id, EmissionQuantity(z.emissions_kg)) for z in zone_nodes
        )
        bands = {}
        if uncertainty is not None:
            bands = dict(
                energy_band=uncertainty_band(e_nat.kwh, uncertainty),
                emissions_band=uncertainty_band(x_nat.kg, uncertainty),
            )
        year_nodes.append(
            YearNode(
                year,
                sum(z.units for z in zone_nodes),
                e_nat.kwh,
                x_nat.kg,
                tuple(zone_nodes),
                **bands,
            )
        )
    return ResultTree(tuple(year_nodes), uncertainty, getattr(dataset, "checksum", None))


def recompute_from_leaves(tree: ResultTree) -> ResultTree:
    """Rebuild every aggregate of ``tree`` from its version leaves alone."""
    years = []
    for y in tree:
        zones = []
        for z in y.zones:
            models = []
            for m in z.models:
                energy = canonical_sum((v.version_id, v.mild_kwh + v.harsh_kwh) for v in m.versions)
                models.append(
                    ModelNode(m.model_id, m.units, energy, z.emission_factor * energy, m.versions)
                )
            energy = canonical_sum((m.model_id, m.energy_kwh) for m in models)
            zones.append(
                ZoneNode(
                    z.zone_id, z.emission_factor, sum(m.units for m in models), energy,
                    z.emission_factor * energy, tuple(models),
                )
            )
        years.append(
            YearNode(
                y.year,
                sum(z.units for z in zones),
                canonical_sum((z.zone_id, z.energy_kwh) for z in zones),
                canonical_sum((z.zone_id, z.emissions_kg) for z in zones),
                tuple(zones),
                y.energy_band,
                y.emissions_band,
            )
        )
    return ResultTree(tuple(years), tree.uncertainty, tree.dataset_checksum)


# -- derived metrics --------------------------------------------------------


@dataclass(frozen=True)
class IntensityResult:
    scope: str
    year: int | None
    energy_intensity: float
    carbon_intensity: float
    fleet_count: int

    @property
    def energy_kwh(self) -> float:
        return self.energy_intensity * self.fleet_count

    @property
    def emissions_kg(self) -> float:
        return self.carbon_intensity * self.fleet_count


def _kwh(value):
    if isinstance(value, EnergyQuantity):
        return value.kwh
    if hasattr(value, "energy_kwh"):
        return value.energy_kwh
    return float(value)


def _kg(value):
    if isinstance(value, EmissionQuantity):
        return value.kg
    if hasattr(value, "emissions_kg"):
        return value.emissions_kg
    return float(value)


def energy_intensity(scope_result, fleet_count, *, emissions=None, scope="national", year=None):
    """Per-vehicle electricity and carbon for one scope.

    ``scope_result`` is a :class:`YearNode` or :class:`ZoneNode`, or an
    energy value (kWh or :class:`EnergyQuantity`) with ``emissions`` given
    separately.
    """
    if not fleet_count > 0:
        raise ValidationError(f"fleet count for {scope} must be > 0", code="ZERO_FLEET")
    energy = _kwh(scope_result)
    if emissions is None:
        emissions = getattr(scope_result, "emissions_kg", 0.0)
    carbon = _kg(emissions)
    if year is None:
        year = getattr(scope_result, "year", None)
    if hasattr(scope_result, "zone_id"):
        scope = scope_result.zone_id
    return IntensityResult(scope, year, energy / fleet_count, carbon / fleet_count, int(fleet_count))


def fleet_count(dataset, year, zone_id=None, mode="cumulative") -> int:
    """Vehicles used as the intensity denominator.

    ``cumulative`` counts sales of in-scope models from the first dataset
    year through ``year``; ``annual`` counts only ``year``'s sales.
    """
    if mode not in INTENSITY_MODES:
        raise UsageError(f"intensity mode must be one of {INTENSITY_MODES}, got {mode!r}")
    return sum(
        s.units
        for s in dataset.sales
        if (zone_id is None or s.zone_id == zone_id)
        and (s.year <= year if mode == "cumulative" else s.year == year)
    )


def intensity_for(tree, dataset, year, zone_id=None, mode="cumulative") -> IntensityResult:
    """Intensity of a national (``zone_id=None``) or zone scope from a built tree."""
    node = tree[year] if zone_id is None else tree[year].zone(zone_id)
    count = fleet_count(dataset, year, zone_id, mode)
    try:
        return energy_intensity(node, count, year=year)
    except ValidationError as exc:
        rows = sorted(
            s.source_row
            for s in dataset.sales
            if (zone_id is None or s.zone_id == zone_id) and s.source_row is not None
        )
        exc.file, exc.row = "sales.csv", rows[0] if rows else None
        raise


def growth_rate(previous, current) -> float:
    """Percentage change from ``previous`` to ``current``."""
    prev, cur = _magnitude(previous), _magnitude(current)
    if not prev > 0:
        raise ValidationError(f"growth rate undefined for base {prev!r}", code="UNDEFINED_BASE")
    return 100.0 * (cur - prev) / prev


def _magnitude(value):
    if isinstance(value, EnergyQuantity):
        return value.kwh
    if isinstance(value, EmissionQuantity):
        return value.kg
    return float(value)


def growth_series(values: Mapping) -> list[tuple[int, int, float]]:
    """``(from_year, to_year, percent)`` for consecutive years of ``values``."""
    years = sorted(values)
    return [(a, b, growth_rate(values[a], values[b])) for a, b in zip(years, years[1:])]


@dataclass(frozen=True)
class ScaledResult:
    year: int
    target: str
    ratio: float
    energy_kwh: float
    emissions_kg: float
    zones: tuple[tuple[str, float, float], ...] = ()
    # Zone rows reuse the national ratio; the data gives no zone-level ratios.
    uniform_ratio_estimate: bool = True


def _find_ratios(ratios, year):
    if isinstance(ratios, ScalingRatios):
        candidates = [ratios]
    elif hasattr(ratios, "ratios_for"):
        found = ratios.ratios_for(year)
        candidates = [found] if found is not None else []
    elif isinstance(ratios, Mapping):
        candidates = [ratios[year]] if year in ratios else []
    else:
        candidates = list(ratios or ())
    for r in candidates:
        if r.year == year:
            return r
    raise ValidationError(f"no scaling ratios for {year}", code="NO_RATIO", file="ratios.csv")


def scale_to_population(result: YearNode, ratios, target="stock") -> ScaledResult:
    """Extrapolate a year's top-20 totals to the stock or to all sales.

    ``ratios`` may be a :class:`ScalingRatios`, an iterable or year-keyed
    mapping of them, or a dataset.
    """
    target = _target(target)
    found = _find_ratios(ratios, result.year)
    k = found.ratio(target)
    zones = tuple((z.zone_id, z.energy_kwh * k, z.emissions_kg * k) for z in result.zones)
    return ScaledResult(
        result.year, target, k, result.energy_kwh * k, result.emissions_kg * k, zones
    )


def _check_fraction(u):
    if not (0.0 <= u < 1.0):
        raise UsageError(f"uncertainty fraction must lie in [0, 1), got {u!r}")


def uncertainty_band(result, u=DEFAULT_UNCERTAINTY) -> Band:
    """Symmetric ``mid * (1 -/+ u)`` band around a value or quantity."""
    _check_fraction(u)
    mid = _magnitude(result)
    return Band(mid * (1.0 - u), mid, mid * (1.0 + u))


def iter_zone_series(tree: ResultTree, attr="energy_kwh") -> dict[str, dict[int, float]]:
    """``zone_id -> {year: value}`` for ``attr`` across the tree."""
    series: dict[str, dict[int, float]] = {}
    for y in tree:
        for z in y.zones:
            series.setdefault(z.zone_id, {})[y.year] = getattr(z, attr)
    return series


def national_series(tree: ResultTree, attr="energy_kwh") -> dict[int, float]:
    return {y.year: getattr(y, attr) for y in tree}
