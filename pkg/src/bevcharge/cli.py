"""Command line interface: ``bevcharge validate | compute | report``.

Exit codes: 0 success, 2 validation or usage error, 3 I/O error.
"""

from __future__ import annotations

import dataclasses
import re
import sys
from pathlib import Path

import click

from . import __version__, analytics, report
from .dataset import load_dataset, validate_only
from .errors import BevChargeError, DatasetInvalid

EXIT_OK, EXIT_INVALID, EXIT_IO = 0, 2, 3

CONFIG_KEYS = {
    "data", "years", "format", "level", "uncertainty", "scale", "intensity_mode", "jobs",
}


def read_config(path) -> dict:
    """Parse a ``key=value`` config file; ``#`` starts a comment."""
    values = {}
    for number, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise click.UsageError(f"{path}:{number}: expected key=value")
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in CONFIG_KEYS:
            raise click.UsageError(f"{path}:{number}: unknown config key {key!r}")
        values[key] = value
    return values


def parse_years(text):
    """``2020``, ``2020,2022``, ``2020..2022`` or ``2020-2022``."""
    if text is None:
        return None
    years = set()
    for part in str(text).split(","):
        part = part.strip()
        if not part:
            continue
        m = re.fullmatch(r"(\d{4})\s*(?:\.\.|-)\s*(\d{4})", part)
        if m:
            lo, hi = int(m.group(1)), int(m.group(2))
            if lo > hi:
                raise click.BadParameter(f"empty year range {part!r}", param_hint="--years")
            years.update(range(lo, hi + 1))
        elif part.isdigit():
            years.add(int(part))
        else:
            raise click.BadParameter(f"cannot parse {part!r}", param_hint="--years")
    if not years:
        raise click.BadParameter("no years given", param_hint="--years")
    return tuple(sorted(years))


def _fail(message, code):
    click.echo(message, err=True)
    sys.exit(code)


def _load(data):
    try:
        return load_dataset(data)
    except DatasetInvalid as exc:
        click.echo(exc.report.render(), err=True)
        sys.exit(EXIT_INVALID)
    except OSError as exc:
        _fail(f"error: {exc}", EXIT_IO)


def _emit(text, out):
    if out is None:
        click.echo(text, nl=False)
        return
    try:
        report.write_atomic(out, text)
    except OSError as exc:
        _fail(f"error: cannot write {out}: {exc}", EXIT_IO)


def _data_option(f):
    return click.option(
        "--data", "data", envvar="BEV_DATA_DIR", required=True,
        type=click.Path(file_okay=False, path_type=Path),
        help="Dataset directory (default: $BEV_DATA_DIR).",
    )(f)


@click.group()
@click.version_option(__version__, prog_name="bevcharge")
@click.option("--config", type=click.Path(dir_okay=False, path_type=Path),
              help="key=value file with option defaults; flags override it.")
@click.pass_context
def main(ctx, config):
    """Bottom-up BEV charging demand and emissions accounting."""
    if config is None:
        return
    try:
        values = read_config(config)
    except OSError as exc:
        _fail(f"error: cannot read config {config}: {exc}", EXIT_IO)
    if "format" in values:
        values["fmt"] = values.pop("format")
    ctx.default_map = {name: dict(values) for name in ("validate", "compute", "report")}


@main.command()
@_data_option
def validate(data):
    """Check a dataset directory and list errors and warnings."""
    try:
        found = validate_only(data)
    except OSError as exc:
        _fail(f"error: {exc}", EXIT_IO)
    click.echo(found.render())
    sys.exit(EXIT_OK if found.ok else EXIT_INVALID)


@main.command()
@_data_option
@click.option("--years", help="Years to compute, e.g. 2020..2022.")
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path),
              help="Output file (default: stdout).")
@click.option("--format", "fmt", type=click.Choice(["json", "csv"]), default="json",
              show_default=True)
@click.option("--uncertainty", type=float, default=analytics.DEFAULT_UNCERTAINTY,
              show_default=True, help="Relative half-width of the national band.")
@click.option("--jobs", type=click.IntRange(min=1), default=1, show_default=True)
def compute(data, years, out, fmt, uncertainty, jobs):
    """Compute the full result tree and write it as JSON or CSV."""
    years = parse_years(years)
    dataset = _load(data)
    try:
        tree = analytics.build_result_tree(dataset, years, uncertainty=uncertainty, n_jobs=jobs)
    except BevChargeError as exc:
        _fail(f"error: {exc}", EXIT_INVALID)
    options = {"years": list(tree.year_ids), "format": fmt, "uncertainty": uncertainty}
    if fmt == "json":
        text = report.result_to_json(tree, options)
    else:
        text = report.result_to_csv(tree, options)
    _emit(text, out)


@main.command(name="report")
@_data_option
@click.option("--level", type=click.Choice(report.LEVELS), default="zone", show_default=True)
@click.option("--format", "fmt", type=click.Choice(["md", "csv"]), default="md",
              show_default=True)
@click.option("--years", help="Years to include, e.g. 2020..2022.")
@click.option("--intensity", is_flag=True, help="Add per-vehicle intensity tables.")
@click.option("--growth", is_flag=True, help="Add annual change-rate tables.")
@click.option("--scale", type=click.Choice(["stock", "all-sales"]),
              help="Add population-scaled series.")
@click.option("--intensity-mode", type=click.Choice(analytics.INTENSITY_MODES),
              default="cumulative", show_default=True)
@click.option("--uncertainty", type=float, default=analytics.DEFAULT_UNCERTAINTY,
              show_default=True)
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path))
def report_cmd(data, level, fmt, years, intensity, growth, scale, intensity_mode,
               uncertainty, out):
    """Figure-style tables: totals, emissions, shares, growth, intensity, scaling."""
    years = parse_years(years)
    try:
        spec = report.ReportSpec(
            level=level, format=fmt, years=years or (), uncertainty=uncertainty, scale=scale,
            intensity_mode=intensity_mode, intensity=intensity, growth=growth,
        )
    except BevChargeError as exc:
        raise click.UsageError(str(exc.args[0]))
    dataset = _load(data)
    try:
        tree = analytics.build_result_tree(dataset, years, uncertainty=uncertainty)
        spec = dataclasses.replace(spec, years=tree.year_ids)
        text = report.render_report(tree, dataset, spec)
    except BevChargeError as exc:
        _fail(f"error: {exc}", EXIT_INVALID)
    _emit(text, out)


if __name__ == "__main__":
    main()
