import logging
import os
import sys

import pytest

# Add project root to path
sys.path.append(os.getcwd())

from tools.agents import parse_roster
from tools.analysis import dependent_measures, predictive_comparison
from tools.errors import DataFormatError, ProtocolError
from tools.game_engine import GameCondition, GameConfig
from tools.round_log import ROUND_LOG_COLUMNS, parse_round_log, write_round_log
from tools.simulation import run_experiment

HEADER = ",".join(ROUND_LOG_COLUMNS)


def write(tmp_path, *rows, header=HEADER):
    path = tmp_path / "rounds.csv"
    path.write_text("\n".join([header, *rows]) + "\n", encoding="utf-8")
    return path


def test_parse_valid_row(tmp_path):
    (record,) = parse_round_log(write(tmp_path, "s1,simple,1,A,B,7,11"))
    assert record.amount_sent == 7 and record.amount_returned == 11
    assert record.sender_payoff == 4 and record.receiver_payoff == 10
    assert record.game_condition is GameCondition.SIMPLE


def test_return_above_tripled_amount_is_rejected(tmp_path):
    with pytest.raises(ProtocolError) as err:
        parse_round_log(write(tmp_path, "s1,simple,1,A,B,7,11", "s1,simple,2,B,A,7,30"))
    assert err.value.row == 3
    assert err.value.field == "amount_returned"
    assert "line 3" in str(err.value)


def test_custom_multiplier(tmp_path):
    path = write(tmp_path, "s1,simple,1,A,B,7,28")
    assert parse_round_log(path, multiplier=4)[0].receiver_payoff == 0
    with pytest.raises(ProtocolError):
        parse_round_log(path)


def test_header_only(tmp_path, caplog):
    with caplog.at_level(logging.WARNING):
        assert parse_round_log(write(tmp_path)) == []
    assert "no rows" in caplog.text


def test_empty_file(tmp_path):
    path = tmp_path / "empty.csv"
    path.write_text("", encoding="utf-8")
    with pytest.raises(DataFormatError) as err:
        parse_round_log(path)
    assert err.value.line == 1


@pytest.mark.parametrize("row, column", [
    ("s1,simple,1,A,B,seven,0", "amount_sent"),
    ("s1,simple,1,A,B,7,1.5", "amount_returned"),
    ("s1,simple,0,A,B,7,0", "round"),
    ("s1,ultimatum,1,A,B,7,0", "game_condition"),
    (",simple,1,A,B,7,0", "session_id"),
    ("s1,simple,1,,B,7,0", "sender_id"),
])
def test_malformed_cells_point_at_line_and_column(tmp_path, row, column):
    with pytest.raises(DataFormatError) as err:
        parse_round_log(write(tmp_path, "s1,simple,1,A,B,1,1", row))
    assert err.value.line == 3
    assert err.value.column == column


def test_extra_field_points_at_line(tmp_path):
    with pytest.raises(DataFormatError) as err:
        parse_round_log(write(tmp_path, "s1,simple,1,A,B,7,11", "s1,simple,2,A,B,7,11,99"))
    assert err.value.line == 3


def test_non_utf8_bytes_point_at_line(tmp_path):
    path = tmp_path / "latin1.csv"
    path.write_bytes((HEADER + "\ns1,simple,1,A,B,7,11\ns1,simple,2,J\xf6rg,B,7,11\n").encode("latin-1"))
    with pytest.raises(DataFormatError) as err:
        parse_round_log(path)
    assert err.value.line == 3
    assert "UTF-8" in str(err.value)


def test_missing_column(tmp_path):
    with pytest.raises(DataFormatError) as err:
        parse_round_log(write(tmp_path, "s1,simple,1,A,B,7", header="session_id,game_condition,round,sender_id,receiver_id,amount_sent"))
    assert "amount_returned" in str(err.value)


def test_self_play_is_a_protocol_error(tmp_path):
    with pytest.raises(ProtocolError):
        parse_round_log(write(tmp_path, "s1,simple,1,A,A,5,5"))


def test_nonzero_return_on_zero_send(tmp_path):
    with pytest.raises(ProtocolError):
        parse_round_log(write(tmp_path, "s1,simple,1,A,B,0,1"))


def test_written_log_uses_lf_and_canonical_header(tmp_path):
    records = parse_round_log(write(tmp_path, "s1,simple,1,A,B,7,11"))
    out = write_round_log(records, tmp_path / "out.csv")
    assert out.read_bytes() == f"{HEADER}\ns1,simple,1,A,B,7,11\n".encode("utf-8")


def test_simulate_write_parse_analyze_matches_memory(tmp_path):
    roster = parse_roster([{"agent_id": f"P{i}", "kind": "random"} for i in range(6)])
    records = run_experiment(GameConfig(rng_seed=17), roster, sessions=3, conditions=list(GameCondition)).records
    path = write_round_log(records, tmp_path / "sim.csv")
    parsed = parse_round_log(path)
    assert parsed == records
    assert dependent_measures(parsed) == dependent_measures(records)
    assert predictive_comparison(parsed) == predictive_comparison(records)
