import json

import pytest
from click.testing import CliRunner

from bevcharge.cli import main, parse_years
from bevcharge.report import parse_report_csv

from conftest import CLEAN, write_csvs


@pytest.fixture
def runner():
    return CliRunner()


def test_validate_clean(runner, clean_dir):
    r = runner.invoke(main, ["validate", "--data", str(clean_dir)])
    assert r.exit_code == 0
    assert "0 errors, 0 warnings" in r.output


def test_validate_share_sum(runner, tmp_path):
    versions = list(CLEAN["versions"])
    versions[1] = ("m1", "b", 2021, 80, 500, 0.37, 0.85, 0.7)
    d = write_csvs(tmp_path, **{**CLEAN, "versions": versions})
    r = runner.invoke(main, ["validate", "--data", str(d)])
    assert r.exit_code == 2
    assert "versions.csv:2: SHARE_SUM" in r.output


def test_validate_missing_directory(runner, tmp_path):
    r = runner.invoke(main, ["validate", "--data", str(tmp_path / "missing")])
    assert r.exit_code == 3


def test_data_from_environment(runner, clean_dir):
    r = runner.invoke(main, ["validate"], env={"BEV_DATA_DIR": str(clean_dir)})
    assert r.exit_code == 0


def test_compute_json(runner, reference_dir, tmp_path):
    out = tmp_path / "tree.json"
    r = runner.invoke(main, ["compute", "--data", str(reference_dir), "--years", "2020..2022",
                             "--out", str(out)])
    assert r.exit_code == 0, r.output
    doc = json.loads(out.read_text())
    gwh = [round(y["energy_kwh"] / 1e6, 1) for y in doc["years"]]
    assert gwh == [601.7, 1806.5, 3053.6]


def test_compute_is_byte_identical(runner, reference_dir, tmp_path):
    for fmt in ("json", "csv"):
        outs = [tmp_path / f"{fmt}{i}" for i in (1, 2)]
        for i, out in enumerate(outs):
            args = ["compute", "--data", str(reference_dir), "--format", fmt, "--out", str(out)]
            assert runner.invoke(main, args + ["--jobs", str(1 + 3 * i)]).exit_code == 0
        assert outs[0].read_bytes() == outs[1].read_bytes()


def test_compute_csv_rows(runner, clean_dir, tmp_path):
    out = tmp_path / "tree.csv"
    r = runner.invoke(main, ["compute", "--data", str(clean_dir), "--format", "csv",
                             "--out", str(out)])
    assert r.exit_code == 0
    rows = parse_report_csv(out.read_text())
    assert {r["level"] for r in rows} == {"national", "zone", "model", "version"}


def test_compute_no_data_year(runner, clean_dir):
    r = runner.invoke(main, ["compute", "--data", str(clean_dir), "--years", "1995..1996"])
    assert r.exit_code == 2
    assert "NO_DATA_YEAR" in r.output


def test_compute_invalid_dataset(runner, tmp_path):
    d = write_csvs(tmp_path, **{**CLEAN, "sales": CLEAN["sales"] + [("m1", "Z9", 2021, 1)]})
    r = runner.invoke(main, ["compute", "--data", str(d)])
    assert r.exit_code == 2
    assert "DANGLING_ZONE" in r.output


def test_compute_unwritable_output(runner, clean_dir, tmp_path):
    r = runner.invoke(main, ["compute", "--data", str(clean_dir), "--out",
                             str(tmp_path / "no" / "such" / "dir.json")])
    assert r.exit_code == 3


def test_report_growth_reproduces_south(runner, reference_dir):
    r = runner.invoke(main, ["report", "--data", str(reference_dir), "--level", "zone",
                             "--format", "csv", "--growth"])
    assert r.exit_code == 0
    rows = parse_report_csv(r.output)
    south = [float(x["value"]) for x in rows if x["table"] == "growth" and x["scope"] == "South"
             and x["year"] == "2021" and x["metric"] == "energy_change_pct"]
    assert south == [pytest.approx(229.0, abs=0.2)]


def test_report_markdown(runner, reference_dir):
    r = runner.invoke(main, ["report", "--data", str(reference_dir), "--level", "national",
                             "--intensity", "--scale", "all-sales"])
    assert r.exit_code == 0
    assert "dataset checksum" in r.output
    assert "## Average intensity per vehicle" in r.output
    assert "| national | 2022 | 1,095.0 |" in r.output


def test_report_incompatible_flags(runner, reference_dir):
    r = runner.invoke(main, ["report", "--data", str(reference_dir), "--level", "model",
                             "--intensity"])
    assert r.exit_code == 2


def test_config_defaults_and_flag_precedence(runner, reference_dir, tmp_path):
    cfg = tmp_path / "bev.cfg"
    cfg.write_text(f"# defaults\ndata = {reference_dir}\nlevel = national\nformat = csv\n")
    r = runner.invoke(main, ["--config", str(cfg), "report"])
    assert r.exit_code == 0, r.output
    assert {x["scope"] for x in parse_report_csv(r.output)} == {"national"}
    r = runner.invoke(main, ["--config", str(cfg), "report", "--level", "zone"])
    assert "North" in {x["scope"] for x in parse_report_csv(r.output)}


def test_bad_config(runner, tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("colour = blue\n")
    assert runner.invoke(main, ["--config", str(cfg), "validate"]).exit_code == 2


@pytest.mark.parametrize(
    "text,years",
    [("2020", (2020,)), ("2020..2022", (2020, 2021, 2022)), ("2021-2022", (2021, 2022)),
     ("2022, 2020", (2020, 2022))],
)
def test_parse_years(text, years):
    assert parse_years(text) == years
