"""Regenerate the calibrated reference dataset in src/bevcharge/data/reference.

Only published aggregates are available (zone energy per year, zone/national
emissions, per-vehicle intensities, growth rates), so the per-model inputs are
synthetic and the free parameters are solved so the aggregates come out right:

* zone-year mileage is solved so zone energy hits its target;
* zone-year emission factors are solved from emission/energy pairs;
* yearly sales are differences of cumulative fleets solved from intensities.

Run from the repository root: ``python scripts/build_reference_dataset.py``.
"""

from pathlib import Path

from bevcharge.core import SalesRecord, VehicleVersion, ZoneParameters
from bevcharge.analytics import ScalingRatios
from bevcharge.dataset import FleetDataset, write_dataset

GWH = 1e6
MT = 1e9
YEARS = (2020, 2021, 2022)
ZONES = ("MLRYR", "North", "South")

# Zone energy targets, GWh. MLRYR 2021 is the national total minus the others.
ENERGY = {
    ("MLRYR", 2020): 155.7, ("MLRYR", 2022): 858.2,
    ("North", 2020): 187.0, ("North", 2021): 465.52, ("North", 2022): 760.9,
    ("South", 2020): 259.0, ("South", 2021): 851.7, ("South", 2022): 1434.5,
}
ENERGY[("MLRYR", 2021)] = 1806.5 - ENERGY[("North", 2021)] - ENERGY[("South", 2021)]

# Cumulative in-scope fleet per zone, from kWh/vehicle intensities.
south_2021_intensity = 1024.9 / (1 - 0.113)
CUMULATIVE = {
    ("North", 2020): 187.0 * GWH / 1796.1,
    ("MLRYR", 2020): 155.7 * GWH / 1209.1,
    ("South", 2020): 259.0 * GWH / 1243.5,
    ("North", 2021): 465.52 * GWH / 1446.1,
    ("South", 2021): 851.7 * GWH / south_2021_intensity,
    ("South", 2022): 1434.5 * GWH / 1024.9,
    # Not published: assumed intensities of 1150 (MLRYR 2021) and 1300 (North 2022).
    ("MLRYR", 2021): ENERGY[("MLRYR", 2021)] * GWH / 1150.0,
    ("North", 2022): 760.9 * GWH / 1300.0,
}
national_2022 = 3053.6 * GWH / 1095.0
CUMULATIVE[("MLRYR", 2022)] = (
    national_2022 - CUMULATIVE[("North", 2022)] - CUMULATIVE[("South", 2022)]
)
CUMULATIVE = {k: round(v) for k, v in CUMULATIVE.items()}

# Emissions. North follows its 2022 pair and the reported growth rates.
north_x = {2022: 0.53 * MT}
north_x[2021] = north_x[2022] / 1.610
north_x[2020] = north_x[2021] / 2.445
FACTOR = {("North", y): north_x[y] / (ENERGY[("North", y)] * GWH) for y in YEARS}
FACTOR[("MLRYR", 2020)] = 0.08 * MT / (155.7 * GWH)
FACTOR[("South", 2020)] = (0.35 * MT - 0.08 * MT - north_x[2020]) / (259.0 * GWH)
shared_2021 = (1.04 * MT - north_x[2021]) / (
    (ENERGY[("MLRYR", 2021)] + ENERGY[("South", 2021)]) * GWH
)
FACTOR[("MLRYR", 2021)] = FACTOR[("South", 2021)] = shared_2021
FACTOR[("MLRYR", 2022)] = 0.42 * MT / (858.2 * GWH)
FACTOR[("South", 2022)] = (1.73 - 0.42 - 0.53) * MT / (1434.5 * GWH)

MILD_FRACTION = {"MLRYR": 0.5, "North": 0.45, "South": 0.55}

# (version_id, battery kWh, NEDC km, share, lambda, rho)
MODELS = {
    "model_a": [("std", 60.0, 556.0, 0.6, 0.9, 0.75), ("long", 78.4, 675.0, 0.4, 0.9, 0.72)],
    "model_b": [("base", 13.9, 170.0, 0.7, 0.92, 0.8), ("plus", 26.5, 300.0, 0.3, 0.9, 0.78)],
    "model_c": [("std", 60.5, 605.0, 1.0, 0.88, 0.7)],
    "model_d": [("std", 44.9, 401.0, 1.0, 0.9, 0.76)],
}
MIX = {"model_a": 0.4, "model_b": 0.3, "model_c": 0.2, "model_d": 0.1}

RATIOS = {2020: (7.9, 2.1), 2021: (4.2, 1.8), 2022: (4.0, 1.6)}


def kwh_per_km(model, f):
    return sum(
        share * kwh / km * (f / lam + (1 - f) / rho)
        for _, kwh, km, share, lam, rho in MODELS[model]
    )


def main(out=Path(__file__).resolve().parents[1] / "src/bevcharge/data/reference"):
    versions = [
        VehicleVersion(m, vid, y, kwh, km, share, lam, rho)
        for y in YEARS
        for m, vs in MODELS.items()
        for vid, kwh, km, share, lam, rho in vs
    ]
    sales, zones = [], []
    for zone in ZONES:
        previous = 0
        for y in YEARS:
            units = CUMULATIVE[(zone, y)] - previous
            previous = CUMULATIVE[(zone, y)]
            split = {m: int(units * p) for m, p in MIX.items()}
            split["model_a"] += units - sum(split.values())
            sales += [SalesRecord(m, zone, y, n) for m, n in split.items()]
            f = MILD_FRACTION[zone]
            per_km = sum(n * kwh_per_km(m, f) for m, n in split.items())
            mileage = ENERGY[(zone, y)] * GWH / per_km
            zones.append(ZoneParameters(zone, y, mileage, f, FACTOR[(zone, y)]))
    ratios = [ScalingRatios(y, *r) for y, r in RATIOS.items()]
    write_dataset(FleetDataset(versions, sales, zones, ratios), out)
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
