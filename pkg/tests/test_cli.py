from __future__ import annotations

import csv
import math

import numpy as np
import orjson
import pytest
import yaml
from click.testing import CliRunner

from lorenz_measures.cli import cli, load_config, parse_config, run_experiment
from lorenz_measures.errors import ConfigSchemaError
from lorenz_measures.lorenz_map import load_map


@pytest.fixture
def k1_file(tmp_path, k1):
    path = tmp_path / "k1.json"
    path.write_text(k1.model_dump_json())
    return path


def _config(k1, pipeline, **blocks):
    return {"pipeline": pipeline, "map": k1.model_dump(mode="json"), **blocks}


def test_parse_config_errors(k1):
    with pytest.raises(ConfigSchemaError) as info:
        parse_config({})
    assert info.value.path == "<root>"
    with pytest.raises(ConfigSchemaError) as info:
        parse_config({"pipeline": "orbit"})
    assert info.value.path == "<root>"
    with pytest.raises(ConfigSchemaError) as info:
        parse_config(_config(k1, "orbit", bogus=1))
    assert info.value.path == "bogus"
    with pytest.raises(ConfigSchemaError, match="seed"):
        parse_config(_config(k1, "measure"))
    with pytest.raises(ConfigSchemaError) as info:
        parse_config(_config(k1, "tune-to-D", tune={"mode": "shoot"}))
    assert info.value.path.startswith("tune")


def test_load_config_yaml(tmp_path, k1):
    path = tmp_path / "orbit.yaml"
    path.write_text(yaml.safe_dump(_config(k1, "orbit", orbit={"x0": 0.3, "n": 20})))
    config = load_config(path)
    assert config.orbit.n == 20
    empty = tmp_path / "empty.yaml"
    empty.write_text("")
    with pytest.raises(ConfigSchemaError):
        load_config(empty)


def test_orbit_pipeline(tmp_path, k1):
    outcome = run_experiment(_config(k1, "orbit", orbit={"x0": 0.3, "n": 50}), tmp_path)
    assert outcome.status == 0
    names = sorted(p.name for p in outcome.artifacts)
    assert names == ["orbit.json", "orbit_orbit.csv"]
    doc = orjson.loads((tmp_path / "orbit.json").read_bytes())
    assert doc["schema"] == "lorenz-measures/1"
    assert doc["error"] is None
    assert len(doc["result"]["itinerary"]) == 51


def test_reports_are_reproducible(tmp_path, k1):
    config = _config(k1, "orbit", orbit={"x0": 0.3, "n": 50})
    run_experiment(config, tmp_path / "a")
    run_experiment(config, tmp_path / "b")
    assert (tmp_path / "a" / "orbit.json").read_bytes() == (tmp_path / "b" / "orbit.json").read_bytes()
    assert (tmp_path / "a" / "orbit_orbit.csv").read_bytes() == (tmp_path / "b" / "orbit_orbit.csv").read_bytes()


def test_singular_orbit_from_map_file(tmp_path, k1_file):
    config = {"pipeline": "orbit", "map_file": str(k1_file), "orbit": {"side": "left", "n": 5}}
    outcome = run_experiment(config, tmp_path)
    assert outcome.status == 0
    result = outcome.report["result"]
    assert len(result["points"]) == 5
    assert len(result["itinerary"]) == 5


def test_schema_errors_exit_with_two(tmp_path, k1):
    assert run_experiment({}, tmp_path).status == 2
    bad_map = tmp_path / "bad.json"
    bad_map.write_text('{"c": 0.5, "alpha": 0.6, "beta": 0.6, "d0": 1, "d1": 1, "gamma": 1}')
    outcome = run_experiment({"pipeline": "orbit", "map_file": str(bad_map), "orbit": {"x0": 0.3}}, tmp_path)
    assert outcome.status == 2
    assert "map_file" in outcome.report["error"]
    outcome = run_experiment(_config(k1, "orbit"), tmp_path)
    assert outcome.status == 2
    assert "orbit.x0" in outcome.report["error"]


def test_module_errors_exit_with_one(tmp_path, k1):
    outcome = run_experiment(_config(k1, "induce"), tmp_path)
    assert outcome.status == 1
    assert "c+ connection" in outcome.report["error"]
    assert outcome.report["result"] is None


def test_tune_pipeline_writes_the_map(tmp_path, k1):
    outcome = run_experiment(_config(k1, "tune-to-D", tune={"side": "left", "eps": 0.1}), tmp_path)
    assert outcome.status == 0
    tuned = load_map((tmp_path / "tuned_map.json").read_text())
    assert tuned.d0 == pytest.approx(0.90561, abs=1e-5)
    assert outcome.report["result"]["certificate"]["t"] == {"left": 7}


def test_certify_pipeline(tmp_path, k1):
    certify = {"horizon": 500, "starts": 2, "n_max": 2, "samples": 10, "distortion_pairs": 50}
    outcome = run_experiment(_config(k1, "theorem-b-certify", seed=0, certify=certify), tmp_path)
    assert outcome.status == 0
    result = outcome.report["result"]
    assert result["constants"]["M"] == pytest.approx(math.log(2.0))
    assert result["constants"]["Upsilon"] == pytest.approx(29.58, rel=5e-3)
    assert result["violations"] == []
    assert (tmp_path / "theorem-b-certify_running_minima.csv").exists()


def test_induce_pipeline_with_connection(tmp_path, k1):
    config = _config(k1, "induce", connect={"side": "right", "t_target": 5}, induce={"r_max": 20, "n_depth": 8})
    outcome = run_experiment(config, tmp_path)
    assert outcome.status == 0
    result = outcome.report["result"]
    assert result["t0"] == 5
    assert result["nice_interval"]["word"] == "RL"
    assert result["tower"]["depth"] == 8


def test_srb_pipeline(tmp_path, k1):
    outcome = run_experiment(_config(k1, "srb-diagnostic", seed=1, srb={"n": 100, "samples": 4}), tmp_path)
    assert outcome.status == 0
    assert len(outcome.report["result"]["diagnostic"]["singular"]) == 2


@pytest.mark.slow
def test_construct_pipeline(tmp_path, k1):
    config = _config(
        k1,
        "theorem-a-construct",
        seed=42,
        connect={"side": "right", "t_target": 5},
        induce={"r_max": 20, "n_depth": 10},
        measure={"segments": 2000, "entropy_block_len": 8},
    )
    outcome = run_experiment(config, tmp_path)
    assert outcome.status == 0, outcome.report["error"]
    result = outcome.report["result"]
    assert result["report"]["int_Rc_sq_divergent"]
    assert "entropy_oracle" in result


def test_command_line(tmp_path, k1, k1_file):
    runner = CliRunner()
    out = tmp_path / "out"
    result = runner.invoke(cli, ["orbit", "--map", str(k1_file), "--x0", "0.3", "--steps", "20", "--out", str(out)])
    assert result.exit_code == 0, result.output
    assert (out / "orbit.json").exists()
    result = runner.invoke(cli, ["tune", "--map", str(k1_file), "--eps", "0.1", "--out", str(out)])
    assert result.exit_code == 0, result.output
    result = runner.invoke(cli, ["tune", "--map", str(k1_file), "--shoot-t", "2", "--side", "right", "--out", str(out)])
    assert result.exit_code == 1
    config = tmp_path / "run.yaml"
    config.write_text(yaml.safe_dump(_config(k1, "orbit", orbit={"x0": 0.2, "n": 10})))
    result = runner.invoke(cli, ["run", str(config), "--out", str(out)])
    assert result.exit_code == 0, result.output
    empty = tmp_path / "empty.yaml"
    empty.write_text("")
    assert runner.invoke(cli, ["run", str(empty)]).exit_code == 2


def test_orbit_series_carries_symbols_and_derivatives(tmp_path, k1):
    config = _config(k1, "orbit", precision="double", orbit={"x0": 0.3, "n": 6})
    assert run_experiment(config, tmp_path).status == 0
    with (tmp_path / "orbit_orbit.csv").open() as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["step", "x", "symbol", "f'", "cumulative_log_derivative"]
    body = rows[1:]
    assert len(body) == 7
    derivs = np.array([float(r[3]) for r in body])
    assert np.all(derivs >= 1.2 - 1e-12)
    assert [float(r[4]) for r in body] == pytest.approx(np.cumsum(np.log(derivs)))
    for r in body:
        assert r[2] == ("L" if float(r[1]) < 0.5 else "R")
    assert float(body[0][3]) == pytest.approx(k1.deriv(0.3))
    assert float(body[1][3]) == pytest.approx(k1.deriv(float(body[1][1])))


def test_orbit_command_threads_ctol(tmp_path, k1_file):
    out = tmp_path / "out"
    args = ["orbit", "--map", str(k1_file), "--x0", "0.3", "--steps", "20", "--ctol", "0.1", "--precision", "double"]
    result = CliRunner().invoke(cli, [*args, "--out", str(out)])
    assert result.exit_code == 0, result.output
    doc = orjson.loads((out / "orbit.json").read_bytes())
    assert doc["result"]["hit_c_at"] == 1
    with (out / "orbit_orbit.csv").open() as fh:
        rows = list(csv.reader(fh))
    assert len(rows) == 3
    assert rows[-1][2:] == ["", "", ""]


def test_recurrence_command_levels_and_samples(tmp_path, k1_file):
    out = tmp_path / "out"
    args = ["recurrence", "--map", str(k1_file), "--horizon", "500", "--starts", "1", "--seed", "0"]
    result = CliRunner().invoke(cli, [*args, "--nmax", "2", "--samples", "5", "--out", str(out)])
    assert result.exit_code == 0, result.output
    doc = orjson.loads((out / "theorem-b-certify.json").read_bytes())
    levels = doc["result"]["corollaries"]["levels"]
    assert [level["n"] for level in levels] == [1, 2]
    assert all(level["samples"] == 5 for level in levels)


def test_induce_command_caps_return_times(tmp_path, k2):
    map_file = tmp_path / "k2.json"
    map_file.write_text(k2.model_dump_json())
    out = tmp_path / "out"
    args = ["induce", "--map", str(map_file), "--rcap", "0.25", "--rmax", "20", "--depth", "8", "--out", str(out)]
    result = CliRunner().invoke(cli, args)
    assert result.exit_code == 0, result.output
    doc = orjson.loads((out / "induce.json").read_bytes())
    assert doc["result"]["tower"]["depth"] == 8
    with (out / "induce_branches.csv").open() as fh:
        returns = [int(r["R"]) for r in csv.DictReader(fh)]
    assert returns and max(returns) <= 20
    legacy = ["induce", "--map", str(map_file), "--r-cap", "0.25", "--r-max", "20", "--depth", "8"]
    assert CliRunner().invoke(cli, [*legacy, "--out", str(tmp_path / "legacy")]).exit_code == 0
