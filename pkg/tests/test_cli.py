import csv

import orjson
import pytest
from typer.testing import CliRunner

from app import app
from services.report_service import SURFACE_HEADER, TRAJECTORY_HEADER


runner = CliRunner()

AY_ALPHA = [1.0, 0.5, 2.0]
AY_BETA = [1.4, 0.2, 1.5]


@pytest.fixture
def write_config(tmp_path):

    def write(document, name="run.json"):
        path = tmp_path / name
        path.write_bytes(orjson.dumps(document))
        return str(path)

    return write


def test_verify_writes_a_passing_report(tmp_path):

    out = tmp_path / "verify.json"
    result = runner.invoke(app, ["verify", "--map", "ay", "--samples", "5", "--seed", "42", "--out", str(out)])

    assert result.exit_code == 0, result.output

    report = orjson.loads(out.read_bytes())

    assert report["schema"] == "1"
    assert report["map"] == "ay"
    assert report["passed"] is True
    assert report["checks"]["integrals"]["samples"] == 5


def test_unknown_map_is_a_config_error(event_log):

    result = runner.invoke(app, ["verify", "--map", "nope", "--samples", "5"])

    assert result.exit_code == 2
    assert orjson.loads(result.stdout)["error"]["type"] == "ConfigError"
    assert event_log.event_counts()["CONFIG_ERROR"] == 1


def test_missing_config_file(tmp_path):

    result = runner.invoke(app, ["verify", "--config", str(tmp_path / "none.json")])

    assert result.exit_code == 2


def test_evaluate_with_equal_parameters_exchanges(write_config):

    path = write_config({"map": "ay", "x": [0.3, -0.4], "y": [0.5, 0.2], "alpha": AY_ALPHA, "beta": AY_ALPHA})

    result = runner.invoke(app, ["evaluate", "--config", path])

    assert result.exit_code == 0, result.output

    doc = orjson.loads(result.stdout)

    assert doc["u"]["re"] == pytest.approx([0.5, 0.2])
    assert doc["v"]["re"] == pytest.approx([0.3, -0.4])


def test_evaluate_at_a_pole_exits_with_degeneracy(write_config):

    path = write_config({
        "map": "ay",
        "x": [1.0, 0.2],
        "y": [0.4, -1.0],
        "alpha": [1.0, 0.5, 1.0],
        "beta": [1.0, 0.3, 1.0]
    })

    result = runner.invoke(app, ["evaluate", "--config", path])

    assert result.exit_code == 3
    assert orjson.loads(result.stdout)["error"]["type"] == "PoleError"


def test_evaluate_with_wrong_arity(write_config):

    path = write_config({"map": "ay", "x": [0.3], "y": [0.5, 0.2], "alpha": AY_ALPHA, "beta": AY_BETA})

    assert runner.invoke(app, ["evaluate", "--config", path]).exit_code == 2


def test_lattice_writes_trajectory_and_report(tmp_path, write_config):

    path = write_config({
        "command": "lattice",
        "map": "ay",
        "x_sites": [{"coords": [0.3, -0.4], "params": AY_ALPHA}],
        "y_sites": [{"coords": [0.5, 0.2], "params": AY_BETA}]
    })

    trajectory = tmp_path / "trajectory.csv"
    result = runner.invoke(app, ["lattice", "--config", path, "--steps", "5", "--out", str(trajectory)])

    assert result.exit_code == 0, result.output

    with open(trajectory, newline="") as handle:
        rows = list(csv.reader(handle))

    assert tuple(rows[0]) == TRAJECTORY_HEADER
    assert len(rows) == 1 + 6 * 4

    report = orjson.loads(result.stdout)

    assert report["steps"] == 5
    assert report["j1_drift"] <= 1e-8


def test_evaluate_records_the_seed_override(write_config):

    path = write_config({"map": "ay", "x": [0.3, -0.4], "y": [0.5, 0.2], "alpha": AY_ALPHA, "beta": AY_BETA})

    result = runner.invoke(app, ["evaluate", "--config", path, "--seed", "9", "--samples", "3"])

    assert result.exit_code == 0, result.output
    assert orjson.loads(result.stdout)["seed"] == 9


def test_lattice_takes_the_map_from_the_command_line(tmp_path, write_config):

    path = write_config({
        "command": "lattice",
        "x_sites": [{"coords": [0.3, -0.4], "params": AY_ALPHA}],
        "y_sites": [{"coords": [0.5, 0.2], "params": AY_BETA}]
    })

    result = runner.invoke(app, [
        "lattice", "--config", path, "--map", "ay", "--seed", "4", "--samples", "2",
        "--steps", "3", "--out", str(tmp_path / "trajectory.csv")
    ])

    assert result.exit_code == 0, result.output

    report = orjson.loads(result.stdout)

    assert report["map"] == "ay"
    assert report["seed"] == 4
    assert report["steps"] == 3


def test_surface_scan_along_a_curve(tmp_path):

    out = tmp_path / "surface.csv"
    result = runner.invoke(app, ["surface-scan", "--curve", "boussinesq", "--out", str(out)])

    assert result.exit_code == 0, result.output

    with open(out, newline="") as handle:
        rows = list(csv.reader(handle))

    assert tuple(rows[0]) == SURFACE_HEADER
    assert len(rows) == 4


def test_surface_scan_with_no_points(tmp_path, write_config):

    path = write_config({"command": "surface-scan", "grid": {"curve": "gv", "alphas": []}})
    out = tmp_path / "surface.csv"

    result = runner.invoke(app, ["surface-scan", "--config", path, "--out", str(out)])

    assert result.exit_code == 0, result.output
    assert out.read_text().strip() == ",".join(SURFACE_HEADER)


def test_maps_lists_every_id():

    result = runner.invoke(app, ["maps"])

    assert result.exit_code == 0
    assert "gv-vector" in result.stdout


def test_logs_command(event_log):

    event_log.log("VERIFY_START", {"map": "ay"})

    result = runner.invoke(app, ["logs", "--limit", "5"])

    assert result.exit_code == 0
    assert "VERIFY_START" in result.stdout
