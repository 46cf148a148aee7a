"""Serialisers for result trees and the figure-style report tables."""

from __future__ import annotations

import io
import json
import math
import os
import tempfile
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from . import __version__, analytics
from .dataset import read_rows, write_rows
from .errors import UsageError
from .units import KG_PER_MT, KWH_PER_GWH

FORMATS = ("json", "csv", "md")
LEVELS = analytics.LEVELS
COMPUTE_COLUMNS = ("level", "scope", "year", "metric", "value")
REPORT_COLUMNS = ("table", "scope", "year", "metric", "value")


@dataclass(frozen=True)
class ReportSpec:
    level: str = "zone"
    format: str = "md"
    years: tuple = ()
    uncertainty: float | None = analytics.DEFAULT_UNCERTAINTY
    scale: str | None = None
    intensity_mode: str = "cumulative"
    intensity: bool = False
    growth: bool = False

    def __post_init__(self):
        if self.level not in LEVELS:
            raise UsageError(f"level must be one of {LEVELS}, got {self.level!r}")
        if self.format not in FORMATS:
            raise UsageError(f"format must be one of {FORMATS}, got {self.format!r}")
        if self.intensity_mode not in analytics.INTENSITY_MODES:
            raise UsageError(f"intensity mode must be one of {analytics.INTENSITY_MODES}")
        if self.scale is not None:
            object.__setattr__(self, "scale", analytics._target(self.scale))
        if self.intensity and self.level not in ("zone", "national"):
            raise UsageError("--intensity needs --level zone or national")
        if self.scale and self.level not in ("zone", "national"):
            raise UsageError("--scale needs --level zone or national")

    def options(self) -> dict:
        return {
            "level": self.level,
            "format": self.format,
            "years": list(self.years),
            "uncertainty": self.uncertainty,
            "scale": self.scale,
            "intensity_mode": self.intensity_mode,
            "intensity": self.intensity,
            "growth": self.growth,
        }


def provenance(dataset_checksum, options) -> dict:
    return {
        "dataset_checksum": dataset_checksum,
        "tool": "bevcharge",
        "tool_version": __version__,
        "options": options,
    }


def write_atomic(path, text: str) -> Path:
    """Write ``text`` to ``path`` via a temporary file and rename."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent or ".")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def _comment_header(prov) -> str:
    lines = [
        f"# dataset_checksum: {prov['dataset_checksum']}",
        f"# tool: {prov['tool']} {prov['tool_version']}",
        f"# options: {json.dumps(prov['options'], sort_keys=True)}",
    ]
    return "\n".join(lines) + "\n"


# -- compute ------------------------------------------------------------------


def result_to_json(tree, options) -> str:
    payload = {"provenance": provenance(tree.dataset_checksum, options), **tree.to_dict()}
    return json.dumps(payload, indent=2, sort_keys=False, allow_nan=False) + "\n"


def result_to_csv(tree, options) -> str:
    buf = io.StringIO()
    buf.write(_comment_header(provenance(tree.dataset_checksum, options)))
    write_rows(buf, COMPUTE_COLUMNS, [_csv_row(r) for r in tree.rows()])
    return buf.getvalue()


def _csv_row(row):
    return tuple(repr(v) if isinstance(v, float) else v for v in row)


def result_schema() -> dict:
    """The JSON schema that :func:`result_to_json` output conforms to."""
    text = resources.files("bevcharge").joinpath("schemas/result_tree.schema.json").read_text()
    return json.loads(text)


# -- report tables ------------------------------------------------------------


@dataclass
class Table:
    name: str
    title: str
    metrics: list
    rows: list = field(default_factory=list)  # (scope, year, {metric: value})
    digits: dict = field(default_factory=dict)

    def add(self, scope, year, **values):
        self.rows.append((scope, year, values))


def _scopes(node_year, level):
    """``(scope, parent_scope, node)`` at ``level`` for one year node."""
    if level == "national":
        yield "national", None, node_year
        return
    for z in node_year.zones:
        if level == "zone":
            yield z.zone_id, "national", z
            continue
        for m in z.models:
            mscope = f"{z.zone_id}/{m.model_id}"
            if level == "model":
                yield mscope, z.zone_id, m
                continue
            for v in m.versions:
                yield f"{mscope}/{v.version_id}", mscope, v


def rounded_shares(values: dict, digits=1) -> dict:
    """Percent shares rounded by largest remainder so they sum to exactly 100."""
    total = math.fsum(values.values())
    if total <= 0:
        return {k: 0.0 for k in values}
    scale = 10**digits
    exact = {k: 100.0 * scale * v / total for k, v in values.items()}
    floors = {k: math.floor(x) for k, x in exact.items()}
    short = 100 * scale - sum(floors.values())
    for k in sorted(exact, key=lambda k: (floors[k] - exact[k], str(k)))[:short]:
        floors[k] += 1
    return {k: floors[k] / scale for k in values}


def build_tables(tree, dataset, spec: ReportSpec) -> list[Table]:
    level = spec.level
    totals = Table("totals", "Electricity consumption", ["energy_gwh"], digits={"energy_gwh": 1})
    emissions = Table(
        "emissions", "Carbon emissions", ["emissions_mtco2"], digits={"emissions_mtco2": 2}
    )
    contribution = Table(
        "contribution", "Contribution to parent electricity consumption", ["share_pct"],
        digits={"share_pct": 1},
    )
    energy_series, carbon_series = {}, {}
    for y in tree:
        groups = {}
        for scope, parent, node in _scopes(y, level):
            totals.add(scope, y.year, energy_gwh=node.energy_kwh / KWH_PER_GWH)
            emissions.add(scope, y.year, emissions_mtco2=node.emissions_kg / KG_PER_MT)
            energy_series.setdefault(scope, {})[y.year] = node.energy_kwh
            carbon_series.setdefault(scope, {})[y.year] = node.emissions_kg
            if parent is not None:
                groups.setdefault(parent, {})[scope] = node.energy_kwh
        for parent, members in groups.items():
            exact_total = math.fsum(members.values())
            for scope, energy in members.items():
                share = 100.0 * energy / exact_total if exact_total > 0 else 0.0
                contribution.add(scope, y.year, share_pct=share, parent=parent)
    tables = [totals, emissions]
    if level != "national":
        tables.append(contribution)

    if spec.growth:
        growth = Table(
            "growth", "Annual change rate",
            ["energy_change_pct", "emissions_change_pct"],
            digits={"energy_change_pct": 1, "emissions_change_pct": 1},
        )
        for scope in energy_series:
            e, c = energy_series[scope], carbon_series[scope]
            years = sorted(e)
            for a, b in zip(years, years[1:]):
                growth.add(
                    scope, b,
                    energy_change_pct=_safe_growth(e[a], e[b]),
                    emissions_change_pct=_safe_growth(c[a], c[b]),
                )
        tables.append(growth)

    if spec.intensity:
        inten = Table(
            "intensity", "Average intensity per vehicle",
            ["energy_kwh_per_vehicle", "carbon_kg_per_vehicle", "fleet_count"],
            digits={"energy_kwh_per_vehicle": 1, "carbon_kg_per_vehicle": 1, "fleet_count": 0},
        )
        for y in tree:
            zones = [None] if level == "national" else [z.zone_id for z in y.zones]
            for zone_id in zones:
                r = analytics.intensity_for(tree, dataset, y.year, zone_id, spec.intensity_mode)
                inten.add(
                    zone_id or "national", y.year,
                    energy_kwh_per_vehicle=r.energy_intensity,
                    carbon_kg_per_vehicle=r.carbon_intensity,
                    fleet_count=r.fleet_count,
                )
        tables.append(inten)

    if spec.scale:
        scaled = Table(
            "scaled", f"Top-20 versus {spec.scale} estimates",
            ["ratio", "top20_energy_gwh", "scaled_energy_gwh", "top20_emissions_mtco2",
             "scaled_emissions_mtco2"],
            digits={"ratio": 2, "top20_energy_gwh": 1, "scaled_energy_gwh": 1,
                    "top20_emissions_mtco2": 2, "scaled_emissions_mtco2": 2},
        )
        for y in tree:
            s = analytics.scale_to_population(y, dataset, spec.scale)
            scaled.add(
                "national", y.year, ratio=s.ratio,
                top20_energy_gwh=y.energy_kwh / KWH_PER_GWH,
                scaled_energy_gwh=s.energy_kwh / KWH_PER_GWH,
                top20_emissions_mtco2=y.emissions_kg / KG_PER_MT,
                scaled_emissions_mtco2=s.emissions_kg / KG_PER_MT,
            )
            if level == "zone":
                for z, (zone_id, e, x) in zip(y.zones, s.zones):
                    scaled.add(
                        zone_id, y.year, ratio=s.ratio,
                        top20_energy_gwh=z.energy_kwh / KWH_PER_GWH,
                        scaled_energy_gwh=e / KWH_PER_GWH,
                        top20_emissions_mtco2=z.emissions_kg / KG_PER_MT,
                        scaled_emissions_mtco2=x / KG_PER_MT,
                    )
        tables.append(scaled)
    return tables


def _safe_growth(prev, cur):
    return analytics.growth_rate(prev, cur) if prev > 0 else None


def tables_to_csv(tables, prov) -> str:
    buf = io.StringIO()
    buf.write(_comment_header(prov))
    rows = []
    for t in tables:
        for scope, year, values in t.rows:
            for metric in t.metrics:
                value = values.get(metric)
                rows.append((t.name, scope, year, metric, "" if value is None else repr(value)))
    write_rows(buf, REPORT_COLUMNS, rows)
    return buf.getvalue()


def _fmt(value, digits):
    if value is None:
        return "n/a"
    if digits == 0:
        return f"{value:,.0f}"
    return f"{value:,.{digits}f}"


def tables_to_markdown(tables, prov) -> str:
    out = [
        "# BEV charging demand report",
        "",
        f"- dataset checksum: `{prov['dataset_checksum']}`",
        f"- tool: {prov['tool']} {prov['tool_version']}",
        f"- options: `{json.dumps(prov['options'], sort_keys=True)}`",
    ]
    for t in tables:
        out += ["", f"## {t.title}", ""]
        if t.name == "contribution":
            out += _contribution_markdown(t)
            continue
        out.append("| scope | year | " + " | ".join(t.metrics) + " |")
        out.append("|---|---|" + "---:|" * len(t.metrics))
        for scope, year, values in t.rows:
            cells = [_fmt(values.get(m), t.digits.get(m, 3)) for m in t.metrics]
            out.append(f"| {scope} | {year} | " + " | ".join(cells) + " |")
    return "\n".join(out) + "\n"


def _contribution_markdown(t):
    groups = {}
    for scope, year, values in t.rows:
        groups.setdefault((values["parent"], year), {})[scope] = values["share_pct"]
    lines = ["| parent | year | scope | share_pct |", "|---|---|---|---:|"]
    for (parent, year), shares in groups.items():
        for scope, pct in rounded_shares(shares).items():
            lines.append(f"| {parent} | {year} | {scope} | {pct:.1f} |")
    return lines


def render_report(tree, dataset, spec: ReportSpec) -> str:
    tables = build_tables(tree, dataset, spec)
    prov = provenance(tree.dataset_checksum, spec.options())
    if spec.format == "csv":
        return tables_to_csv(tables, prov)
    if spec.format == "md":
        return tables_to_markdown(tables, prov)
    raise UsageError("report format must be md or csv")


def parse_report_csv(text: str) -> list[dict]:
    """Parse CSV emitted by this module (compute or report) back into dicts."""
    rows = read_rows(text)
    try:
        _, header = next(rows)
    except StopIteration:
        return []
    return [dict(zip(header, r)) for _, r in rows]
