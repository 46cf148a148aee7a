import csv
import random
from pathlib import Path

import pytest

from bevcharge import reference_dataset_path
from bevcharge.analytics import ScalingRatios
from bevcharge.core import SalesRecord, VehicleVersion, ZoneParameters
from bevcharge.dataset import SCHEMAS, FleetDataset, load_dataset

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda l: int(l.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)


HEADERS = {name: [c for c, _ in cols] for name, cols in SCHEMAS.items()}


def write_csvs(directory, *, versions=None, sales=None, zones=None, ratios=None, headers=None):
    """Write whichever tables are given (lists of row tuples) into ``directory``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    headers = headers or {}
    for name, rows in (
        ("versions.csv", versions),
        ("sales.csv", sales),
        ("zones.csv", zones),
        ("ratios.csv", ratios),
    ):
        if rows is None:
            continue
        with open(directory / name, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(headers.get(name, HEADERS[name]))
            w.writerows(rows)
    return directory


CLEAN = dict(
    versions=[
        ("m1", "a", 2021, 60, 450, 0.6, 0.9, 0.8),
        ("m1", "b", 2021, 80, 500, 0.4, 0.85, 0.7),
        ("m2", "a", 2021, 30, 300, 1.0, 0.95, 0.75),
        ("m1", "a", 2022, 60, 450, 0.5, 0.9, 0.8),
        ("m1", "b", 2022, 80, 500, 0.5, 0.85, 0.7),
        ("m2", "a", 2022, 30, 300, 1.0, 0.95, 0.75),
    ],
    sales=[
        ("m1", "North", 2021, 1000),
        ("m2", "North", 2021, 500),
        ("m1", "MLRYR", 2021, 800),
        ("m2", "South", 2021, 1200),
        ("m1", "North", 2022, 1500),
        ("m2", "North", 2022, 700),
        ("m1", "MLRYR", 2022, 900),
        ("m2", "MLRYR", 2022, 300),
        ("m1", "South", 2022, 2000),
    ],
    zones=[
        ("North", 2021, 12000, 0.45, 0.70),
        ("MLRYR", 2021, 11000, 0.5, 0.55),
        ("South", 2021, 10000, 0.55, 0.52),
        ("North", 2022, 12500, 0.45, 0.68),
        ("MLRYR", 2022, 11500, 0.5, 0.50),
        ("South", 2022, 10500, 0.55, 0.50),
    ],
    ratios=[(2021, 4.2, 1.8), (2022, 4.0, 1.6)],
)


@pytest.fixture
def clean_dir(tmp_path):
    return write_csvs(tmp_path / "clean", **CLEAN)


@pytest.fixture
def clean_dataset(clean_dir):
    return load_dataset(clean_dir)


@pytest.fixture(scope="session")
def reference_dir():
    return Path(str(reference_dataset_path()))


@pytest.fixture(scope="session")
def reference_dataset(reference_dir):
    return load_dataset(reference_dir)


def random_dataset(rng: random.Random, max_models=20, max_versions=5, max_vehicles=10_000,
                   zones=("MLRYR", "North", "South"), years=(2020, 2021)):
    """A small valid dataset with random parameters and at most ``max_vehicles`` sold."""
    versions, sales, zone_params = [], [], []
    n_models = rng.randint(1, max_models)
    for year in years:
        for z in zones:
            zone_params.append(
                ZoneParameters(
                    z, year, rng.uniform(3000, 30000), rng.uniform(0, 1), rng.uniform(0, 1.2)
                )
            )
        for m in range(n_models):
            k = rng.randint(1, max_versions)
            weights = [rng.uniform(0.05, 1) for _ in range(k)]
            total = sum(weights)
            shares = [w / total for w in weights]
            shares[-1] = 1.0 - sum(shares[:-1])
            for i, share in enumerate(shares):
                versions.append(
                    VehicleVersion(
                        f"m{m:02d}", f"v{i}", year, rng.uniform(10, 110), rng.uniform(150, 700),
                        min(max(share, 0.0), 1.0), rng.uniform(0.55, 1.0), rng.uniform(0.55, 1.0),
                    )
                )
    budget = max_vehicles
    cells = [(f"m{m:02d}", z, y) for y in years for z in zones for m in range(n_models)]
    rng.shuffle(cells)
    for model, zone, year in cells:
        if rng.random() < 0.3:
            continue
        units = rng.randint(0, min(budget, max_vehicles // 10))
        budget -= units
        sales.append(SalesRecord(model, zone, year, units))
    if not sales:
        sales.append(SalesRecord("m00", zones[0], years[0], 1))
    return FleetDataset(versions, sales, zone_params, [ScalingRatios(y, 4.0, 1.5) for y in years])
