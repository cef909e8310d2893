import json
import os
import sys
from unittest.mock import patch

import pytest

# Add project root to path
sys.path.append(os.getcwd())

from cli import main
from tools.errors import NumericError
from tools.ledger import TRAJECTORY_COLUMNS
from tools.reports import BEHAVIOR_COLUMNS


@pytest.fixture
def defectors(tmp_path):
    path = tmp_path / "defectors.json"
    path.write_text(json.dumps([{"agent_id": f"D{i}", "kind": "defector"} for i in range(6)]), encoding="utf-8")
    return path


@pytest.fixture
def mixed(tmp_path):
    path = tmp_path / "mixed.json"
    roster = [{"agent_id": f"R{i}", "kind": "random"} for i in range(5)]
    roster.append({"agent_id": "X", "kind": "playbook", "params": {"victims": ["R0"], "good_f": 0.8}})
    path.write_text(json.dumps(roster), encoding="utf-8")
    return path


@pytest.fixture
def simulated_log(tmp_path, mixed):
    out = tmp_path / "sim"
    assert main(["simulate", "--roster", str(mixed), "--seed", "4", "--condition", "all", "--sessions", "3", "--out", str(out)]) == 0
    return out / "rounds.csv"


def test_simulate_is_deterministic(tmp_path, defectors):
    for name in ("a", "b"):
        code = main(["simulate", "--seed", "1", "--roster", str(defectors), "--condition", "simple", "--out", str(tmp_path / name)])
        assert code == 0
    for name in ("rounds.csv", "trust_trajectory.csv", "reputation_trajectory.csv", "manifest.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes(), name


def test_manifest_records_provenance(tmp_path, defectors):
    main(["simulate", "--seed", "1", "--roster", str(defectors), "--out", str(tmp_path)])
    manifest = json.loads((tmp_path / "manifest.json").read_text(encoding="utf-8"))
    assert manifest["seed"] == 1
    assert len(manifest["config_hash"]) == 64
    assert manifest["run_config"]["roster"][0] == {"agent_id": "D0", "kind": "defector", "params": {}}
    assert "rounds.csv" in manifest["outputs"]


def test_score_writes_one_row_per_update(tmp_path):
    log = tmp_path / "log.csv"
    log.write_text(
        "session_id,game_condition,round,sender_id,receiver_id,amount_sent,amount_returned\n"
        "s1,simple,1,A,B,7,11\n"
        "s1,simple,1,C,D,0,0\n"
        "s1,simple,2,B,C,10,15\n",
        encoding="utf-8",
    )
    assert main(["score", "--in", str(log), "--params", "default", "--out", str(tmp_path / "out")]) == 0
    lines = (tmp_path / "out" / "trust_trajectory.csv").read_text(encoding="utf-8").splitlines()
    assert lines[0] == ",".join(TRAJECTORY_COLUMNS)
    # two updates per positive exchange, one for the zero transaction
    assert len(lines) - 1 == 5


def test_score_json_format(tmp_path, simulated_log):
    assert main(["score", "--in", str(simulated_log), "--format", "json", "--out", str(tmp_path / "json")]) == 0
    rows = json.loads((tmp_path / "json" / "trust_trajectory.json").read_text(encoding="utf-8"))
    assert set(rows[0]) == set(TRAJECTORY_COLUMNS)


def test_compare_prints_table_and_writes_report(tmp_path, simulated_log, capsys):
    assert main(["compare", "--in", str(simulated_log), "--start-round", "4", "--out", str(tmp_path / "cmp")]) == 0
    header = (tmp_path / "cmp" / "regression_report.csv").read_text(encoding="utf-8").splitlines()[0]
    assert header == "dataset,game_condition,round,role,df,t_trust,adj_r2_trust,t_reputation,adj_r2_reputation,n"
    assert "t trust" in capsys.readouterr().out


def test_compare_keeps_games_apart(tmp_path, simulated_log):
    assert main(["compare", "--in", str(simulated_log), "--out", str(tmp_path / "all")]) == 0
    games = {line.split(",")[1] for line in (tmp_path / "all" / "regression_report.csv").read_text(encoding="utf-8").splitlines()[1:]}
    assert len(games) > 1

    assert main(["compare", "--in", str(simulated_log), "--condition", "score", "--out", str(tmp_path / "one")]) == 0
    rows = (tmp_path / "one" / "regression_report.csv").read_text(encoding="utf-8").splitlines()[1:]
    assert rows
    assert {row.split(",")[1] for row in rows} == {"score"}


def test_compare_json_ships_schema(tmp_path, simulated_log):
    out = tmp_path / "js"
    assert main(["compare", "--in", str(simulated_log), "--format", "json", "--out", str(out)]) == 0
    schema = json.loads((out / "regression_report.schema.json").read_text(encoding="utf-8"))
    assert "rows" in schema["properties"]
    manifest = json.loads((out / "manifest.json").read_text(encoding="utf-8"))
    assert "regression_report.schema.json" in manifest["outputs"]


@pytest.mark.parametrize("level", ["average", "round"])
def test_compare_behavior_models(tmp_path, simulated_log, capsys, level):
    out = tmp_path / level
    assert main(["compare", "--in", str(simulated_log), "--model", "behavior", "--level", level, "--out", str(out)]) == 0
    lines = (out / "behavior_regressions.csv").read_text(encoding="utf-8").splitlines()
    assert lines[0] == ",".join(BEHAVIOR_COLUMNS)
    assert len(lines) > 1
    assert all(line.split(",")[2] == level for line in lines[1:])
    assert "partner_trust" in capsys.readouterr().out


def test_analyze_outputs(tmp_path, simulated_log):
    out = tmp_path / "an"
    assert main(["analyze", "--in", str(simulated_log), "--against", str(simulated_log), "--out", str(out)]) == 0
    for name in ("dependent_measures.csv", "zero_send_rates.csv", "comparisons.csv", "external_comparison.csv", "manifest.json"):
        assert (out / name).exists(), name


def test_plots(tmp_path, simulated_log):
    assert main(["score", "--in", str(simulated_log), "--plot", "--out", str(tmp_path / "p")]) == 0
    assert (tmp_path / "p" / "trust_trajectory.png").stat().st_size > 0
    assert main(["analyze", "--in", str(simulated_log), "--plot", "--out", str(tmp_path / "q")]) == 0
    assert (tmp_path / "q" / "condition_means.png").stat().st_size > 0


def test_unknown_flag_is_usage_error(capsys):
    assert main(["simulate", "--bogus"]) == 1
    assert "usage:" in capsys.readouterr().err


def test_missing_subcommand_is_usage_error():
    assert main([]) == 1


def test_bad_round_log_is_data_error(tmp_path):
    log = tmp_path / "bad.csv"
    log.write_text("session_id,game_condition,round,sender_id,receiver_id,amount_sent,amount_returned\ns1,simple,1,A,B,7,30\n", encoding="utf-8")
    assert main(["score", "--in", str(log), "--out", str(tmp_path / "o")]) == 2


def test_ragged_round_log_is_data_error(tmp_path, caplog):
    log = tmp_path / "ragged.csv"
    log.write_text(
        "session_id,game_condition,round,sender_id,receiver_id,amount_sent,amount_returned\n"
        "s1,simple,1,A,B,7,11\ns1,simple,2,A,B,7,11,99\n",
        encoding="utf-8",
    )
    assert main(["score", "--in", str(log), "--out", str(tmp_path / "o")]) == 2
    assert "line 3" in caplog.text


def test_missing_input_is_data_error(tmp_path):
    assert main(["compare", "--in", str(tmp_path / "nope.csv"), "--out", str(tmp_path / "o")]) == 2


def test_bad_params_is_data_error(tmp_path, defectors):
    params = tmp_path / "params.json"
    params.write_text('{"c": 2}', encoding="utf-8")
    assert main(["simulate", "--roster", str(defectors), "--params", str(params), "--out", str(tmp_path / "o")]) == 2


def test_odd_group_is_data_error(tmp_path, defectors):
    assert main(["simulate", "--roster", str(defectors), "--group-size", "5", "--out", str(tmp_path / "o")]) == 2


def test_numeric_error_exit_code(tmp_path, simulated_log):
    with patch("cli.predictive_comparison", side_effect=NumericError("nan")):
        assert main(["compare", "--in", str(simulated_log), "--out", str(tmp_path / "o")]) == 3
