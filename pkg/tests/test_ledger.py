import json

import pytest

from nomiclaw.agents import ScriptedAgent
from nomiclaw.ledger import (
    COLUMNS,
    LoadError,
    dumps_log,
    export_csv,
    load_run_log,
    load_run_logs,
    log_filename,
    read_table,
    verify_balance,
    write_run_log,
    write_table,
)
from nomiclaw.protocol import Condition, GameConfig, run_game
from nomiclaw.synthetic import random_logs
from nomiclaw.vignettes import BUILTIN


def small_log(run_index=3, vignette=BUILTIN[1], fail_round=None, condition=Condition.HETEROGENEOUS):
    ids = ("Agent_1", "Agent_2", "Agent_3")
    fixture = {fail_round: {"fail_vote": 3}} if fail_round else {}
    models = ["m"] * 3 if condition is Condition.HOMOGENEOUS else ["m1", "m2", "m3"]
    agents = [
        ScriptedAgent(a, m, "vote_for_seat", {"seat": 2, "fixture": fixture}) for a, m in zip(ids, models)
    ]
    cfg = GameConfig(3, ids, condition=condition)
    return run_game(cfg, vignette, agents, run_index=run_index)


def test_filename_convention():
    assert log_filename(small_log()) == "nomiclaw_hetero_v2_run03.json"
    homo = small_log(12, BUILTIN[3], condition=Condition.HOMOGENEOUS)
    assert log_filename(homo) == "nomiclaw_homo_v4_run12.json"
    assert homo.run_id == "homo_v4_run12"


def test_round_trip(tmp_path):
    log = small_log(fail_round=4)
    path = write_run_log(log, tmp_path)
    again = load_run_log(path)
    assert again == log
    assert dumps_log(again) == path.read_text()
    body = json.loads(path.read_text())
    assert body["schema_version"] == 1
    assert [f.name for f in tmp_path.iterdir()] == [path.name]


def test_corrupt_and_mismatched_files(tmp_path):
    good = write_run_log(small_log(), tmp_path)
    (tmp_path / "nomiclaw_hetero_v2_run04.json").write_text("{ not json")
    renamed = tmp_path / "nomiclaw_homo_v2_run05.json"
    renamed.write_text(good.read_text())
    logs, errors = load_run_logs(tmp_path)
    assert len(logs) == 1
    reasons = sorted(e.path.name for e in errors)
    assert reasons == ["nomiclaw_hetero_v2_run04.json", "nomiclaw_homo_v2_run05.json"]
    with pytest.raises(LoadError, match="naming convention"):
        load_run_log(tmp_path / "other.json")


def test_tampered_outcome_rejected(tmp_path):
    path = write_run_log(small_log(), tmp_path)
    body = json.loads(path.read_text())
    body["rounds"][0]["outcome"]["winners"] = ["Agent_1"]
    path.write_text(json.dumps(body))
    with pytest.raises(LoadError):
        load_run_log(path)


def test_export_rows_and_types(tmp_path):
    log = small_log()
    df = export_csv([log], tmp_path / "t.csv")
    assert list(df.columns) == COLUMNS
    assert len(df) == 15
    first = df.iloc[0]
    assert (first["round"], first["agent_id"], first["seat"], first["vote_target"]) == (1, "Agent_1", 1, "Agent_2")
    assert df.loc[df["agent_id"] == "Agent_2", "points"].tolist() == [10] * 5
    text = (tmp_path / "t.csv").read_text()
    assert "true" in text and "True" not in text
    back = read_table(tmp_path / "t.csv")
    assert back[["round", "points"]].equals(df[["round", "points"]])
    assert back["won"].tolist() == df["won"].tolist()


def test_excluded_round_dropped_from_csv():
    df = export_csv([small_log(fail_round=2)])
    assert len(df) == 12
    assert sorted(df["round"].unique()) == [1, 3, 4, 5]
    report = verify_balance(df, num_rounds=5)
    assert report.is_balanced and report.excluded_rounds == 1


def test_unbalanced_detected():
    df = export_csv([small_log()])
    df = df.drop(index=4)
    report = verify_balance(df)
    assert not report.is_balanced
    assert report.offending == [("hetero_v2_run03", "Agent_2")]


def test_export_deterministic(tmp_path):
    logs = random_logs(5, seed=3)
    export_csv(logs, tmp_path / "a.csv")
    export_csv(list(reversed(logs)), tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_text_with_commas_and_newlines(tmp_path):
    df = export_csv([small_log()])
    df.loc[0, "rule_text"] = 'A "quoted", multi\nline rule'
    write_table(df, tmp_path / "x.csv")
    assert read_table(tmp_path / "x.csv").loc[0, "rule_text"] == 'A "quoted", multi\nline rule'


def test_read_table_missing_columns(tmp_path):
    (tmp_path / "bad.csv").write_text("run_id,round\nx,1\n")
    with pytest.raises(ValueError, match="missing columns"):
        read_table(tmp_path / "bad.csv")
