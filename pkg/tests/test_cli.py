import csv
import io
import json
import math

import pytest

from heightlab import cli
from heightlab.cli import Config, main
from heightlab.harness import golden


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def run_json(capsys, *argv):
    code, out, _ = run(capsys, *argv, "--format", "json")
    return code, json.loads(out)


@pytest.fixture(autouse=True)
def _no_env_config(monkeypatch):
    monkeypatch.delenv(cli.CONFIG_ENV, raising=False)


# --- height ----------------------------------------------------------------------------------


def test_height_z_squared(capsys, validate):
    code, doc = run_json(capsys, "height", "0,0,1", "2", "both")
    validate(doc, "command_result")
    assert code == 0 and doc["pass"] and doc["result"]["agree"]
    loc = doc["result"]["local"]
    assert abs(loc["value"] - math.log(2)) <= loc["error"] + 1e-12


def test_height_half_z_squared_local(capsys, validate):
    code, doc = run_json(capsys, "height", "0,0,1/2", "4", "local")
    validate(doc, "command_result")
    assert code == 0 and "naive" not in doc["result"]
    loc = doc["result"]["local"]
    assert abs(loc["value"] - math.log(2)) <= loc["error"] + 1e-12


def test_height_preperiodic_negative_coefficients(capsys):
    code, doc = run_json(capsys, "height", "-1,0,1", "0")
    assert code == 0 and doc["result"]["method"] == "both"
    assert doc["result"]["local"]["value"] == pytest.approx(0, abs=1e-9)


def test_height_normal_form_entry(capsys):
    code, doc = run_json(capsys, "height", "--normal-form", "2;0", "4", "local")
    assert code == 0 and doc["result"]["poly"] == "0/1,0/1,1/2"


def test_height_text_and_csv(capsys):
    code, out, _ = run(capsys, "height", "0,0,1", "2", "naive")
    assert code == 0 and "result.naive.value:" in out
    code, out, _ = run(capsys, "height", "0,0,1", "2", "naive", "--format", "csv")
    (row,) = csv.DictReader(io.StringIO(out))
    assert row["result.poly"] == "0/1,0/1,1/1" and float(row["result.naive.value"]) == pytest.approx(math.log(2))


# --- green / normal form / bad places ------------------------------------------------------------


def test_green_places(capsys, validate):
    code, doc = run_json(capsys, "green", "0,0,1/2", "1/2", "2")
    validate(doc, "command_result")
    assert code == 0 and doc["result"]["place"] == "2"
    code, doc = run_json(capsys, "green", "0,0,1", "3", "inf")
    assert code == 0 and doc["result"]["green"]["value"] == pytest.approx(math.log(3), abs=1e-9)


def test_normal_form_commands(capsys, validate):
    code, doc = run_json(capsys, "normal-form", "0,0,2")
    validate(doc, "command_result")
    assert code == 0 and doc["result"]["c_exact"] == ["0/1"]
    code, doc = run_json(capsys, "normal-form", "0,0,1/2")
    assert code == 0 and doc["result"]["c_exact"] == ["0/1"]


@pytest.mark.parametrize("poly,expect", [("1,0,1", []), ("0,0,1/2", [2]), ("1/5,0,3", [3, 5])])
def test_bad_places(capsys, validate, poly, expect):
    code, doc = run_json(capsys, "bad-places", poly)
    validate(doc, "command_result")
    assert code == 0 and doc["result"]["bad_places"] == expect


# --- errors and exit codes ---------------------------------------------------------------------


@pytest.mark.parametrize("argv", [
    ["height", "0,0,x", "2"],
    ["height", "0,0,1", "1/0"],
    ["height", "0,0,1", "2", "sideways"],
    ["green", "0,0,1", "2", "4"],
    ["height", "--normal-form", "2;0", "0,0,1", "2"],
    ["verify", "no-such-check"],
    [],
])
def test_usage_errors(capsys, argv):
    try:
        code = main(argv)
    except SystemExit as exc:  # argparse rejects bad choices itself
        code = exc.code
    assert code == 2
    assert capsys.readouterr().err


def test_degree_cap_is_resource_error(capsys):
    code, _, err = run(capsys, "height", "0,0,0,1", "2", "--degree-cap", "2")
    assert code == 3 and "cap" in err


def test_verify_exit_codes(capsys, tmp_path, validate):
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps({"samples": 10, "rng_seed": 4}))
    code, doc = run_json(capsys, "verify", "transformation-rule", str(spec))
    validate(doc, "lemma_report")
    assert code == 0 and doc["pass"] and doc["samples"] == 10 and doc["spec"]["rng_seed"] == 4
    code, _, _ = run(capsys, "verify", "eps-bounds")
    assert code == 1


def test_verify_bad_spec_file(capsys, tmp_path):
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps({"sample": 10}))
    code, _, err = run(capsys, "verify", "bookkeeping", str(spec))
    assert code == 2 and "unknown" in err


def test_seed_flag_overrides_spec(capsys):
    code, doc = run_json(capsys, "verify", "bookkeeping", "--seed", "17")
    assert doc["spec"]["rng_seed"] == 17


def test_experiment_writes_out(capsys, tmp_path, validate):
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps({"samples": 20, "coefficient_height_bound": 16}))
    out = tmp_path / "report.csv"
    code, stdout, _ = run(capsys, "experiment", "min-height", str(spec), "--out", str(out), "--format", "csv")
    assert stdout == "" and out.read_text().startswith("alpha,")
    code2, doc = run_json(capsys, "experiment", "min-height", str(spec))
    validate(doc, "lemma_report")
    assert code == code2 == (0 if doc["pass"] else 1)


# --- config -----------------------------------------------------------------------------------


def test_config_round_trip(tmp_path, validate):
    cfg = Config(precision=200, max_iter=30, format="json", seed=5, slope_tolerance=0.1)
    validate(cfg.to_json(), "config")
    path = tmp_path / "c.json"
    path.write_text(cfg.dumps())
    assert Config.load(path) == cfg
    assert Config.from_json(json.loads(Config().dumps())) == Config()


@pytest.mark.parametrize("bad", [{"format": "yaml"}, {"precision": 4}, {"max_iter": 0}, {"extra": 1}])
def test_config_rejects(bad):
    with pytest.raises(ValueError):
        Config.from_json(bad)


def test_env_config_and_flag_override(capsys, tmp_path, monkeypatch):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"format": "json", "naive_n": 12}))
    monkeypatch.setenv(cli.CONFIG_ENV, str(path))
    code, out, _ = run(capsys, "height", "0,0,1", "3", "naive")
    assert json.loads(out)["result"]["naive_n"] == 12
    code, out, _ = run(capsys, "height", "0,0,1", "3", "naive", "--format", "text")
    assert out.startswith("command: height")


def test_bad_config_file(capsys, tmp_path):
    path = tmp_path / "c.json"
    path.write_text("{not json")
    code, _, err = run(capsys, "bad-places", "0,0,1", "--config", str(path))
    assert code == 2 and "config" in err


def test_same_inputs_same_bytes(capsys, tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"format": "json"}))
    outs = [run(capsys, "verify", "good-reduction", "--config", str(path))[1] for _ in range(2)]
    assert outs[0] == outs[1]
    outs = [run(capsys, "height", "0,1/3,2", "5/7", "--config", str(path))[1] for _ in range(2)]
    assert outs[0] == outs[1]


# --- fixtures ------------------------------------------------------------------------------------


def test_fixtures_regen_only_on_request(capsys, tmp_path, monkeypatch):
    monkeypatch.setattr(golden, "FIXTURE_DIR", tmp_path)
    monkeypatch.setattr(golden, "CASES", {"pigeonhole-c10": golden.CASES["pigeonhole-c10"]})
    run(capsys, "bad-places", "0,0,1")
    assert list(tmp_path.iterdir()) == []
    code, _, err = run(capsys, "--fixtures-regen")
    assert code == 0 and "wrote" in err
    assert (tmp_path / "pigeonhole-c10.json").read_text() == golden.render("pigeonhole-c10")
