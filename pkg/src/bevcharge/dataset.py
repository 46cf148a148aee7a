"""Load and validate a fleet dataset from a directory of CSV files.

Expected files (UTF-8, comma separated, header row, ``.`` decimal point)::

    versions.csv  model_id,version_id,year,battery_kwh,nedc_km,share,lambda,rho
    sales.csv     model_id,zone_id,year,units
    zones.csv     zone_id,year,annual_mileage_km,mild_season_fraction,emission_factor_kgco2_per_kwh
    ratios.csv    year,stock_to_top20,all_sales_to_top20        (optional)

Row numbers in diagnostics are 1-based physical line numbers, so the header
is row 1 and the first record is row 2. Lines starting with ``#`` are
comments and are skipped (the report writers use them for provenance).
"""

from __future__ import annotations

import csv
import hashlib
import io
import math
import os
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from types import MappingProxyType

from .analytics import ScalingRatios
from .core import (
    SHARE_TOLERANCE,
    SalesRecord,
    VehicleVersion,
    ZoneParameters,
)
from .errors import DatasetInvalid, ValidationError

REQUIRED_FILES = ("versions.csv", "sales.csv", "zones.csv")
OPTIONAL_FILES = ("ratios.csv",)

SCHEMAS = {
    "versions.csv": (
        ("model_id", str),
        ("version_id", str),
        ("year", int),
        ("battery_kwh", float),
        ("nedc_km", float),
        ("share", float),
        ("lambda", float),
        ("rho", float),
    ),
    "sales.csv": (
        ("model_id", str),
        ("zone_id", str),
        ("year", int),
        ("units", int),
    ),
    "zones.csv": (
        ("zone_id", str),
        ("year", int),
        ("annual_mileage_km", float),
        ("mild_season_fraction", float),
        ("emission_factor_kgco2_per_kwh", float),
    ),
    "ratios.csv": (
        ("year", int),
        ("stock_to_top20", float),
        ("all_sales_to_top20", float),
    ),
}

CSV_FORMAT = dict(delimiter=",", quotechar='"', lineterminator="\n")


@dataclass(frozen=True)
class Issue:
    file: str
    row: int | None
    code: str
    message: str

    def __str__(self):
        where = self.file if self.row is None else f"{self.file}:{self.row}"
        return f"{where}: {self.code}: {self.message}"


@dataclass
class ValidationReport:
    errors: list[Issue] = field(default_factory=list)
    warnings: list[Issue] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors

    def error(self, file, row, code, message):
        self.errors.append(Issue(file, row, code, message))

    def warn(self, file, row, code, message):
        self.warnings.append(Issue(file, row, code, message))

    def codes(self) -> set[str]:
        return {i.code for i in self.errors} | {i.code for i in self.warnings}

    def summary(self) -> str:
        return f"{len(self.errors)} errors, {len(self.warnings)} warnings"

    def render(self) -> str:
        lines = [f"error   {i}" for i in self.errors]
        lines += [f"warning {i}" for i in self.warnings]
        lines.append(self.summary())
        return "\n".join(lines)


@dataclass(frozen=True)
class Provenance:
    directory: str
    checksums: dict

    @property
    def digest(self) -> str:
        """SHA-256 over the per-file checksums; identifies the dataset content."""
        h = hashlib.sha256()
        for name in sorted(self.checksums):
            h.update(f"{name}:{self.checksums[name]}\n".encode())
        return h.hexdigest()


@dataclass(frozen=True)
class FleetDataset:
    """A validated, read-only fleet dataset.

    Build it with :func:`load_dataset` or directly from records; the direct
    constructor runs the same cross-reference checks and raises
    :class:`~bevcharge.errors.DatasetInvalid` on failure.
    """

    versions: tuple
    sales: tuple
    zones: tuple
    scaling: tuple = ()
    provenance: Provenance | None = None

    def __post_init__(self):
        for name in ("versions", "sales", "zones", "scaling"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        report = ValidationReport()
        _cross_check(self.versions, self.sales, self.zones, self.scaling, report)
        if report.errors:
            raise DatasetInvalid(report)
        by_model = defaultdict(list)
        for v in self.versions:
            by_model[(v.model_id, v.year)].append(v)
        by_zone_year = defaultdict(list)
        for s in self.sales:
            by_zone_year[(s.zone_id, s.year)].append(s)
        object.__setattr__(
            self,
            "_versions",
            MappingProxyType(
                {k: tuple(sorted(vs, key=lambda v: v.version_id)) for k, vs in by_model.items()}
            ),
        )
        object.__setattr__(
            self,
            "_sales",
            MappingProxyType(
                {k: tuple(sorted(ss, key=lambda s: s.model_id)) for k, ss in by_zone_year.items()}
            ),
        )
        object.__setattr__(self, "_zones", MappingProxyType({z.key: z for z in self.zones}))
        object.__setattr__(self, "_ratios", MappingProxyType({r.year: r for r in self.scaling}))

    @property
    def years(self) -> tuple[int, ...]:
        """Years with at least one sales record."""
        return tuple(sorted({s.year for s in self.sales}))

    @property
    def zone_ids(self) -> tuple[str, ...]:
        return tuple(sorted({z.zone_id for z in self.zones}))

    @property
    def model_ids(self) -> tuple[str, ...]:
        return tuple(sorted({v.model_id for v in self.versions}))

    def versions_for(self, model_id, year) -> tuple:
        return self._versions.get((model_id, year), ())

    def sales_for(self, zone_id, year) -> tuple:
        return self._sales.get((zone_id, year), ())

    def zone(self, zone_id, year) -> ZoneParameters:
        return self._zones[(zone_id, year)]

    def zones_for(self, year) -> tuple[str, ...]:
        """Zones with sales in ``year``."""
        return tuple(sorted(z for (z, y) in self._sales if y == year))

    def ratios_for(self, year) -> ScalingRatios | None:
        return self._ratios.get(year)

    @property
    def checksum(self) -> str | None:
        return self.provenance.digest if self.provenance else None


# -- CSV reading ------------------------------------------------------------


def read_rows(text: str):
    """Yield ``(line_number, row)`` for non-comment CSV rows of ``text``.

    Shared by dataset ingestion and by readers of the tool's own reports.
    """
    position = [0]

    def lines():
        for number, line in enumerate(io.StringIO(text, newline=""), start=1):
            position[0] = number
            if line.lstrip().startswith("#"):
                continue
            yield line

    reader = csv.reader(lines(), delimiter=CSV_FORMAT["delimiter"], quotechar=CSV_FORMAT["quotechar"])
    for row in reader:
        if not row or all(not cell.strip() for cell in row):
            continue
        yield position[0], row


def read_table(path) -> list[dict]:
    """Read a CSV table written by this package into a list of dicts."""
    text = Path(path).read_text(encoding="utf-8")
    rows = read_rows(text)
    try:
        _, header = next(rows)
    except StopIteration:
        return []
    return [dict(zip(header, row)) for _, row in rows]


def write_rows(handle, header, rows):
    writer = csv.writer(handle, **CSV_FORMAT)
    writer.writerow(header)
    writer.writerows(rows)


def _convert(raw: str, kind):
    raw = raw.strip()
    if raw == "":
        raise ValueError("empty value")
    if kind is str:
        return raw
    if kind is int:
        return int(raw)
    value = float(raw)
    if not math.isfinite(value):
        raise ValueError(f"non-finite number {raw!r}")
    return value


def _parse_file(name: str, text: str, report: ValidationReport) -> list[tuple[int, dict]]:
    schema = SCHEMAS[name]
    rows = read_rows(text)
    try:
        header_line, header = next(rows)
    except StopIteration:
        report.error(name, 1, "MISSING_COLUMN", "file is empty (no header row)")
        return []
    header = [h.strip() for h in header]
    required = [col for col, _ in schema]
    missing = [c for c in required if c not in header]
    if missing:
        report.error(name, header_line, "MISSING_COLUMN", f"missing column(s): {', '.join(missing)}")
        return []
    for col in header:
        if col not in required:
            report.warn(name, header_line, "UNKNOWN_COLUMN", f"ignoring unknown column {col!r}")
    dupes = sorted({c for c in header if header.count(c) > 1})
    if dupes:
        report.error(name, header_line, "MALFORMED_ROW", f"repeated column(s): {', '.join(dupes)}")
        return []
    index = {col: header.index(col) for col in required}
    parsed = []
    for line, row in rows:
        if len(row) != len(header):
            report.error(
                name, line, "MALFORMED_ROW", f"expected {len(header)} fields, found {len(row)}"
            )
            continue
        values = {}
        for col, kind in schema:
            try:
                values[col] = _convert(row[index[col]], kind)
            except ValueError as exc:
                report.error(name, line, "MALFORMED_ROW", f"column {col!r}: {exc}")
                break
        else:
            parsed.append((line, values))
    return parsed


def _build(name, line, factory, report):
    try:
        return factory()
    except ValidationError as exc:
        report.error(name, line, exc.code, str(exc.args[0]))
        return None


def _records(parsed, report):
    versions, sales, zones, ratios = [], [], [], []
    for line, r in parsed.get("versions.csv", ()):
        v = _build(
            "versions.csv",
            line,
            lambda: VehicleVersion(
                r["model_id"], r["version_id"], r["year"], r["battery_kwh"], r["nedc_km"],
                r["share"], r["lambda"], r["rho"], source_row=line,
            ),
            report,
        )
        if v is not None:
            versions.append(v)
            for coeff in v.atypical_degradation():
                value = getattr(v, coeff)
                report.warn(
                    "versions.csv", line, "DEGRADATION_RANGE",
                    f"{coeff}={value:g} outside the typical range (0.5, 1.0]",
                )
    for line, r in parsed.get("sales.csv", ()):
        s = _build(
            "sales.csv", line,
            lambda: SalesRecord(r["model_id"], r["zone_id"], r["year"], r["units"], source_row=line),
            report,
        )
        if s is not None:
            sales.append(s)
            if s.units == 0:
                report.warn("sales.csv", line, "ZERO_SALES", f"zero units for {s.key}")
    for line, r in parsed.get("zones.csv", ()):
        z = _build(
            "zones.csv", line,
            lambda: ZoneParameters(
                r["zone_id"], r["year"], r["annual_mileage_km"], r["mild_season_fraction"],
                r["emission_factor_kgco2_per_kwh"], source_row=line,
            ),
            report,
        )
        if z is not None:
            zones.append(z)
    for line, r in parsed.get("ratios.csv", ()):
        q = _build(
            "ratios.csv", line,
            lambda: ScalingRatios(
                r["year"], r["stock_to_top20"], r["all_sales_to_top20"], source_row=line
            ),
            report,
        )
        if q is not None:
            ratios.append(q)
    return versions, sales, zones, ratios


def _unique(records, name, key, report):
    seen = {}
    for rec in records:
        k = key(rec)
        if k in seen:
            report.error(
                name, rec.source_row, "DUPLICATE_KEY",
                f"duplicate key {k} (first seen at row {seen[k]})",
            )
        else:
            seen[k] = rec.source_row


def _cross_check(versions, sales, zones, ratios, report):
    _unique(versions, "versions.csv", lambda v: v.key, report)
    _unique(sales, "sales.csv", lambda s: s.key, report)
    _unique(zones, "zones.csv", lambda z: z.key, report)
    _unique(ratios, "ratios.csv", lambda q: q.year, report)

    groups = defaultdict(list)
    for v in versions:
        groups[(v.model_id, v.year)].append(v)
    for (model, year), group in sorted(groups.items()):
        total = math.fsum(v.sales_share for v in group)
        if abs(total - 1.0) > SHARE_TOLERANCE:
            rows = sorted(v.source_row for v in group if v.source_row is not None)
            report.error(
                "versions.csv", rows[0] if rows else None, "SHARE_SUM",
                f"shares of model {model!r} in {year} sum to {total:.6g} (rows {rows}); expected 1",
            )

    zone_keys = {z.key for z in zones}
    for s in sales:
        if (s.model_id, s.year) not in groups:
            report.error(
                "sales.csv", s.source_row, "DANGLING_MODEL",
                f"model {s.model_id!r} has no versions for {s.year}",
            )
        if (s.zone_id, s.year) not in zone_keys:
            report.error(
                "sales.csv", s.source_row, "DANGLING_ZONE",
                f"zone {s.zone_id!r} has no parameters for {s.year}",
            )
    if not sales:
        report.warn("sales.csv", None, "EMPTY", "no sales records; nothing to compute")


def _sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _read_directory(directory):
    """Return ``(dataset or None, report)``. Raises OSError for unusable paths."""
    directory = Path(directory)
    if not directory.exists():
        raise FileNotFoundError(f"data directory not found: {directory}")
    if not directory.is_dir():
        raise NotADirectoryError(f"not a directory: {directory}")

    report = ValidationReport()
    parsed, checksums = {}, {}
    for name in REQUIRED_FILES + OPTIONAL_FILES:
        path = directory / name
        if not path.is_file():
            if name in REQUIRED_FILES:
                report.error(name, None, "MISSING_FILE", f"required file {name} not found")
            continue
        data = path.read_bytes()
        checksums[name] = _sha256(data)
        try:
            text = data.decode("utf-8-sig")
        except UnicodeDecodeError as exc:
            report.error(name, None, "ENCODING", f"not valid UTF-8: {exc}")
            continue
        parsed[name] = _parse_file(name, text, report)

    versions, sales, zones, ratios = _records(parsed, report)
    _cross_check(versions, sales, zones, ratios, report)
    if report.errors:
        return None, report
    dataset = FleetDataset(
        versions, sales, zones, ratios,
        provenance=Provenance(os.fspath(directory), dict(sorted(checksums.items()))),
    )
    return dataset, report


def validate_only(directory) -> ValidationReport:
    """Validate a dataset directory and return every error and warning found."""
    return _read_directory(directory)[1]


def load_dataset(directory, *, report: ValidationReport | None = None) -> FleetDataset:
    """Load a dataset directory.

    Raises :class:`~bevcharge.errors.DatasetInvalid` (carrying the full
    :class:`ValidationReport`) when any error is found, and :class:`OSError`
    when the directory itself cannot be read. Warnings never block; pass a
    ``report`` to collect them.
    """
    dataset, found = _read_directory(directory)
    if report is not None:
        report.errors.extend(found.errors)
        report.warnings.extend(found.warnings)
    if dataset is None:
        raise DatasetInvalid(found)
    return dataset


def write_dataset(dataset: FleetDataset, directory) -> Path:
    """Write ``dataset`` as the four CSV files into ``directory``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    tables = {
        "versions.csv": [
            (v.model_id, v.version_id, v.year, repr(v.battery_energy), repr(v.nedc_range),
             repr(v.sales_share), repr(v.mild_degradation), repr(v.harsh_degradation))
            for v in dataset.versions
        ],
        "sales.csv": [(s.model_id, s.zone_id, s.year, s.units) for s in dataset.sales],
        "zones.csv": [
            (z.zone_id, z.year, repr(z.annual_mileage), repr(z.mild_season_fraction),
             repr(z.emission_factor))
            for z in dataset.zones
        ],
    }
    if dataset.scaling:
        tables["ratios.csv"] = [
            (q.year, repr(q.stock_to_top20), repr(q.all_sales_to_top20)) for q in dataset.scaling
        ]
    for name, rows in tables.items():
        with open(directory / name, "w", encoding="utf-8", newline="") as fh:
            write_rows(fh, [col for col, _ in SCHEMAS[name]], rows)
    return directory
