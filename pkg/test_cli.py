""" Testing the command-line surface end to end. """
import json
from pathlib import Path

import numpy
import pytest
import yaml
from typer.testing import CliRunner

from scripts.cli import app
from scripts.sfs.formats import read_points_csv

CONFIGS = Path(__file__).parent / "configs"
POLYGON = str(CONFIGS / "cubic_polygon.csv")

runner = CliRunner()


def _run(*args):
    return runner.invoke(app, [str(arg) for arg in args])


def _json(path: Path):
    return json.loads(path.read_text())


def test_catalog_list():
    result = _run("catalog", "list")
    assert result.exit_code == 0
    for name in ("cubic", "expspline", "random4pt", "koch", "halves"):
        assert name in result.output


def test_attractor_koch(tmp_path):
    result = _run("attractor", "--scheme", "koch", "--depth", 8, "-o", tmp_path / "koch.csv")
    assert result.exit_code == 0, result.output
    rows = len(read_points_csv(tmp_path / "koch.csv"))
    assert 4**8 + 1 <= rows <= 2 * 4**8
    meta = _json(tmp_path / "koch_meta.json")
    assert meta["iterations"] == 8 and meta["converged"]
    assert meta["contraction_factor"] == pytest.approx(1 / 3)
    assert len(meta["maps"]["maps"]) == 4


def test_attractor_cantor_tolerance(tmp_path):
    result = _run("attractor", "--scheme", "cantor", "--tol", 1e-6, "-o", tmp_path / "cantor.csv")
    assert result.exit_code == 0, result.output
    meta = _json(tmp_path / "cantor_meta.json")
    assert meta["final_h_step"] < 1e-6
    assert meta["error_bound"] == pytest.approx(0.5)


def test_attractor_not_converged_writes_partial_result(tmp_path):
    result = _run(
        "attractor", "--scheme", "cantor", "--tol", 1e-12, "--max-iter", 3, "-o", tmp_path / "cantor.csv"
    )
    assert result.exit_code == 3
    assert len(read_points_csv(tmp_path / "cantor.csv")) == 16
    assert not _json(tmp_path / "cantor_meta.json")["converged"]


def test_attractor_depth_zero(tmp_path):
    result = _run("attractor", "--scheme", "cantor", "--depth", 0, "-o", tmp_path / "start.csv")
    assert result.exit_code == 0
    assert numpy.array_equal(read_points_csv(tmp_path / "start.csv"), [[0.0], [1.0]])


@pytest.mark.parametrize("scheme", ["no-such-scheme", "expspline:foo=1", "halves"])
def test_attractor_usage_errors(tmp_path, scheme):
    result = _run("attractor", "--scheme", scheme, "-o", tmp_path / "out.csv")
    assert result.exit_code == 2
    assert list(tmp_path.iterdir()) == []


def test_attractor_is_deterministic(tmp_path):
    for name in ("a", "b"):
        assert _run("attractor", "--scheme", "koch", "--depth", 5, "-o", tmp_path / f"{name}.csv").exit_code == 0
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_attractor_formats(tmp_path):
    svg = _run("attractor", "--scheme", "koch", "--depth", 3, "--format", "svg", "-o", tmp_path / "k.csv")
    assert svg.exit_code == 0
    assert (tmp_path / "k.csv").exists() and (tmp_path / "k.svg").exists()
    points = _run("attractor", "--scheme", "dyadic", "--depth", 3, "--format", "json", "-o", tmp_path / "d")
    assert points.exit_code == 0
    assert len(_json(tmp_path / "d.json")["points"]) == 8
    assert _run("attractor", "--scheme", "koch", "--format", "png", "-o", tmp_path / "x.csv").exit_code == 2


def test_trajectory_halves_forward(tmp_path):
    result = _run(
        "trajectory", "--schedule", "halves", "--direction", "forward", "--depths", "39,40",
        "--epsilon", 0, "-o", tmp_path / "halves",
    )
    assert result.exit_code == 0, result.output
    assert read_points_csv(tmp_path / "halves_forward_39.csv")[0, 0] == pytest.approx(2.0, abs=1e-6)
    assert read_points_csv(tmp_path / "halves_forward_40.csv")[0, 0] == pytest.approx(4.0, abs=1e-6)
    diagnostics = _json(tmp_path / "halves_forward_diagnostics.json")
    assert diagnostics["h_steps"][0] == pytest.approx(2.0, abs=1e-5)
    assert diagnostics["epsilon"] == 0.0


def test_trajectory_halves_descriptor(tmp_path):
    result = _run(
        "trajectory", "--schedule", CONFIGS / "halves.yaml", "--depths", 40, "--epsilon", 0, "-o", tmp_path / "h"
    )
    assert result.exit_code == 0, result.output
    assert read_points_csv(tmp_path / "h_backward_40.csv")[0, 0] == pytest.approx(2.0, abs=1e-9)


def test_trajectory_random_fourpoint(tmp_path):
    result = _run(
        "trajectory", "--schedule", "random4pt:b=0.4", "--seed", 7, "--depths", "2,3", "-o", tmp_path / "r"
    )
    assert result.exit_code == 0, result.output
    diagnostics = _json(tmp_path / "r_backward_diagnostics.json")
    assert {"scheme", "direction", "depths", "epsilon", "points", "h_steps", "product", "maps"} <= set(diagnostics)
    assert diagnostics["scheme"] == "random4pt:b=0.4,seed=7"
    assert diagnostics["depths"] == [2, 3]
    assert len(diagnostics["product"]["factors"]) == 3
    assert read_points_csv(tmp_path / "r_backward_3.csv").shape[1] == 2

    again = _run("trajectory", "--schedule", "random4pt:b=0.4,seed=7", "--depths", "2,3", "-o", tmp_path / "s")
    assert again.exit_code == 0
    assert (tmp_path / "r_backward_3.csv").read_bytes() == (tmp_path / "s_backward_3.csv").read_bytes()


def test_trajectory_usage_errors(tmp_path):
    assert _run("trajectory", "--schedule", "halves", "--depths", "5,3", "-o", tmp_path / "x").exit_code == 2
    assert _run("trajectory", "--schedule", "halves", "-o", tmp_path / "x").exit_code == 2
    assert _run("trajectory", "--schedule", "halves", "--depths", "a,b", "-o", tmp_path / "x").exit_code == 2
    assert _run("trajectory", "--schedule", "halves", "--depths", 3, "--direction", "up").exit_code == 2


def test_subdivide(tmp_path):
    result = _run("subdivide", "--input", POLYGON, "--mask", "cubic", "--depth", 6, "-o", tmp_path / "cubic.csv")
    assert result.exit_code == 0, result.output
    assert len(read_points_csv(tmp_path / "cubic.csv")) == 131
    convergence = _json(tmp_path / "cubic_convergence.json")
    assert convergence["depth"] == 6 and convergence["points"] == 131
    assert convergence["convergence"]["classification"] == "c0-like"

    laurent = _run(
        "subdivide", "-i", POLYGON, "--mask", "1/8 + 1/2 z + 3/4 z^2 + 1/2 z^3 + 1/8 z^4", "--depth", 6,
        "-o", tmp_path / "laurent.csv",
    )
    assert laurent.exit_code == 0, laurent.output
    assert (tmp_path / "laurent.csv").read_bytes() == (tmp_path / "cubic.csv").read_bytes()


def test_subdivide_depth_zero_copies_input(tmp_path):
    result = _run("subdivide", "-i", POLYGON, "--mask", "cubic", "--depth", 0, "-o", tmp_path / "copy.csv")
    assert result.exit_code == 0
    assert numpy.array_equal(read_points_csv(tmp_path / "copy.csv"), read_points_csv(POLYGON))
    assert _json(tmp_path / "copy_convergence.json")["convergence"] is None


def test_subdivide_input_errors(tmp_path):
    ragged = tmp_path / "ragged.csv"
    ragged.write_text("0,0\n1\n")
    assert _run("subdivide", "-i", ragged, "--mask", "cubic", "--depth", 2, "-o", tmp_path / "o.csv").exit_code == 2
    missing = tmp_path / "missing.csv"
    assert _run("subdivide", "-i", missing, "--mask", "cubic", "--depth", 2, "-o", tmp_path / "o.csv").exit_code == 2
    assert _run("subdivide", "-i", POLYGON, "--mask", "koch", "--depth", 2, "-o", tmp_path / "o.csv").exit_code == 2
    assert not (tmp_path / "o.csv").exists()


def test_diagnose(tmp_path):
    result = _run("diagnose", "--schedule", "expspline:lambda=3", "--horizon", 60, "-o", tmp_path / "report.json")
    assert result.exit_code == 0, result.output
    assert "case" in result.output
    report = _json(tmp_path / "report.json")
    assert report["case"] == "ii"
    assert len(report["level_factors"]) == 60


def test_config_file(tmp_path):
    config = tmp_path / "cantor.yaml"
    settings = {"scheme": "cantor", "tol": 1e-2, "max-iter": 50, "output": str(tmp_path / "c.csv")}
    config.write_text(yaml.safe_dump(settings))
    assert _run("attractor", "--config", config).exit_code == 0
    assert _json(tmp_path / "c_meta.json")["final_h_step"] < 1e-2

    assert _run("attractor", "--config", config, "--tol", 1e-6).exit_code == 0
    assert _json(tmp_path / "c_meta.json")["final_h_step"] < 1e-6

    bad = tmp_path / "bad.yaml"
    bad.write_text(yaml.safe_dump({"scheme": "cantor", "colour": "red"}))
    assert _run("attractor", "--config", bad, "-o", tmp_path / "b.csv").exit_code == 2


def test_diagnose_max_length(tmp_path):
    result = _run("diagnose", "--schedule", "cubic", "--horizon", 10, "--max-length", 8, "-o", tmp_path / "cubic.json")
    assert result.exit_code == 0, result.output
    report = _json(tmp_path / "cubic.json")
    assert report["case"] == "i" and report["composition"]["length"] <= 8
    assert _run("diagnose", "--schedule", "cubic", "--max-length", 0, "-o", tmp_path / "bad.json").exit_code == 2
    assert not (tmp_path / "bad.json").exists()
