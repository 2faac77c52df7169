import json
import math

import pytest

from cgalab.cli import (DRIFT_COLUMNS, SCALING_COLUMNS, ConfigError, fmt, parse_and_dispatch,
                        resolve_config)


def _run(capsys, argv):
    code = parse_and_dispatch(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def _csv_parts(text):
    lines = text.splitlines()
    config = json.loads(next(l for l in lines if l.startswith("# config: "))[len("# config: "):])
    derived = json.loads(next(l for l in lines if l.startswith("# derived: "))[len("# derived: "):])
    body = [l for l in lines if not l.startswith("#")]
    return config, derived, body


def test_run_smoke(capsys):
    code, out, _ = _run(capsys, ["run", "--benchmark", "leadingones", "--n", "32", "--mu", "500",
                                 "--budget", "1e6", "--seed", "7"])
    assert code == 0
    doc = json.loads(out)
    assert doc["schema"] == "run/v1"
    assert doc["config"]["budget"] == 1_000_000 and doc["config"]["seed"] == 7
    assert doc["derived"]["mu"] == pytest.approx(499.2)  # m = 234
    result = doc["result"]
    assert result["success"] and result["hit_time_evals"] <= 1_000_000


def test_oracle_size_limit(capsys):
    code, out, err = _run(capsys, ["oracle-check", "--n", "11", "--mu", "50", "--seed", "1"])
    assert code == 2 and out == ""
    assert "n <= 10" in err and "n:" in err


def test_genetic_drift_smoke(capsys):
    code, out, _ = _run(capsys, ["drift-check", "--theorem", "genetic", "--n", "20", "--mu", "500",
                                 "--gamma", "0.25", "--T", "2000", "--trials", "1000", "--seed", "1"])
    assert code == 0
    config, derived, body = _csv_parts(out)
    assert body[0].split(",") == DRIFT_COLUMNS
    row = dict(zip(DRIFT_COLUMNS, body[1].split(",")))
    assert float(row["bound"]) == pytest.approx(0.0403, abs=1e-4)
    assert row["pass"] == "true" and row["vacuous"] == "false"
    assert derived["mu"] == 500


def test_failed_check_exits_one(capsys):
    # c below the true step size: bound 0.287, true hit rate 0.45
    code, out, _ = _run(capsys, ["drift-check", "--theorem", "neg", "--eps", "-0.1", "--step", "1",
                                 "--b", "1", "--c", "0.2", "--horizon", "1", "--trials", "2000",
                                 "--seed", "1"])
    assert code == 1
    assert out.splitlines()[-1].endswith("false")


def test_seed_is_required(capsys):
    code, _, err = _run(capsys, ["run", "--n", "8", "--mu", "50", "--budget", "100"])
    assert code == 2 and "seed" in err


def test_unknown_flag_exits_two(capsys):
    with pytest.raises(SystemExit) as exc:
        parse_and_dispatch(["run", "--n", "8", "--bogus", "3"])
    assert exc.value.code == 2


def test_unknown_config_key(tmp_path, capsys):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"n": 8, "mu": 50, "budget": 100, "seed": 1, "colour": "red"}))
    code, _, err = _run(capsys, ["run", "--config", str(path)])
    assert code == 2 and "colour" in err


def test_inapplicable_config_key():
    with pytest.raises(ConfigError, match="n_grid"):
        resolve_config("run", {"n_grid": [8]}, {"seed": 1, "n": 8, "mu": 5, "budget": 10})


@pytest.mark.parametrize("key, value", [("n", "2"), ("budget", "-5"), ("mu", "0"), ("trials", "0")])
def test_non_positive_values_rejected(capsys, key, value):
    args = {"n": "8", "mu": "50", "budget": "100"}
    args[key] = value
    argv = ["run", "--seed", "1"] + [x for k, v in args.items() for x in (f"--{k}", v)]
    if key == "trials":
        argv = ["scaling", "--seed", "1", "--n-grid", "8", "--trials", value]
    code, _, err = _run(capsys, argv)
    assert code == 2 and key in err


def test_flags_override_file(tmp_path, capsys):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"n": 8, "mu": 50, "budget": 100, "seed": 1}))
    code, out, _ = _run(capsys, ["run", "--config", str(path), "--seed", "2"])
    assert code == 0 and json.loads(out)["config"]["seed"] == 2


def test_json_round_trip(tmp_path, capsys):
    code, first, _ = _run(capsys, ["run", "--n", "12", "--mu", "80", "--budget", "50000",
                                   "--seed", "3", "--stream", "2"])
    doc_path = tmp_path / "out.json"
    doc_path.write_text(first)
    code2, second, _ = _run(capsys, ["run", "--config", str(doc_path)])
    assert code == code2 == 0 and first == second


def test_csv_round_trip(tmp_path, capsys):
    argv = ["scaling", "--n-grid", "8", "10", "12", "--trials", "3", "--seed", "5"]
    code, first, _ = _run(capsys, argv)
    config, derived, body = _csv_parts(first)
    assert body[0].split(",") == SCALING_COLUMNS
    assert body[-1].startswith("fit,")
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(config))
    code2, second, _ = _run(capsys, ["scaling", "--config", str(cfg_path)])
    assert code == code2 == 0 and first == second


def test_output_file(tmp_path, capsys):
    out_path = tmp_path / "report.csv"
    code, out, _ = _run(capsys, ["compare", "--n-grid", "8", "--trials", "2", "--seed", "1",
                                 "--output", str(out_path)])
    assert code == 0 and out == ""
    config, _, body = _csv_parts(out_path.read_text())
    assert config["output"] == str(out_path)
    assert [line.split(",")[0] for line in body[1:]] == ["cga", "umda"]


def test_oracle_check_csv_and_steps(capsys):
    code, out, _ = _run(capsys, ["oracle-check", "--n", "4", "--mu", "30", "--k", "3", "5", "7", "9",
                                 "--steps", "1000", "--seed", "1", "--format", "json"])
    assert code == 0
    payload = json.loads(out)["result"]
    assert payload["total"] == pytest.approx(1.0)
    assert all(row["abs_error"] <= 1e-10 for row in payload["positions"] if row["interior"])
    assert 0 <= payload["tv_distance"] <= 1


def test_fmt_full_precision():
    assert fmt(0.1) == "0.10000000000000001"
    assert float(fmt(1 / 3)) == 1 / 3
    assert fmt(None) == ""
    assert fmt(True) == "true"
    assert fmt(math.nan) == "nan"
