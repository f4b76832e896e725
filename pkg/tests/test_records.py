import json
import warnings
from pathlib import Path

import numpy as np
import pytest

from drivelab.config import DriverParams, ScenarioConfig
from drivelab.harness import run_autonomy_in_control, run_human_in_control
from drivelab.records import (
    MODE_AUTONOMY,
    MODE_HUMAN,
    MalformedRecordError,
    RecordMigrationWarning,
    SchemaVersionError,
    TrajectoryRecord,
    config_hash,
    load_record,
    record_columns,
    save_record,
)

FIXTURES = Path(__file__).parent / "fixtures"


def short_record(mode=MODE_HUMAN, seed=0):
    cfg = ScenarioConfig(mode=mode, duration=2.0, seed=seed)
    if mode == MODE_HUMAN:
        return run_human_in_control(cfg)
    return run_autonomy_in_control(cfg)


def test_record_columns_mode_dependent():
    human = record_columns(2, MODE_HUMAN)
    auto = record_columns(2, MODE_AUTONOMY)
    assert "w_h0" not in human
    assert auto[-2:] == ["w_h0", "w_h1"]
    assert "phi_h1" in human
    assert human.index("u_source") == human.index("stale") + 1


def test_config_hash_is_canonical():
    a = config_hash({"x": 1, "y": [1, 2]})
    b = config_hash({"y": [1, 2], "x": 1})
    assert a == b
    assert len(a) == 64
    assert a != config_hash({"x": 2, "y": [1, 2]})


def test_text_round_trip(tmp_path):
    rec = short_record()
    p = tmp_path / "run.rec"
    save_record(rec, p)
    again = load_record(p)
    assert again == rec
    assert np.array_equal(again.data, rec.data)


def test_npz_round_trip(tmp_path):
    rec = short_record(mode=MODE_AUTONOMY)
    p = tmp_path / "run.npz"
    save_record(rec, p)
    again = load_record(p)
    assert again == rec


def test_text_save_is_byte_deterministic(tmp_path):
    rec = short_record(seed=7)
    p1, p2 = tmp_path / "a.rec", tmp_path / "b.rec"
    save_record(rec, p1)
    save_record(rec, p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_rerun_reproduces_bytes(tmp_path):
    paths = []
    for name in ("one.rec", "two.rec"):
        cfg = ScenarioConfig(mode=MODE_HUMAN, duration=2.0, seed=3)
        rec = run_human_in_control(cfg)
        p = tmp_path / name
        save_record(rec, p)
        paths.append(p)
    assert paths[0].read_bytes() == paths[1].read_bytes()


def test_truncated_record_rejected(tmp_path):
    rec = short_record()
    p = tmp_path / "cut.rec"
    save_record(rec, p)
    lines = p.read_text().rstrip("\n").split("\n")
    p.write_text("\n".join(lines[:-3]) + "\n")
    with pytest.raises(MalformedRecordError):
        load_record(p)


def test_ragged_row_rejected(tmp_path):
    rec = short_record()
    p = tmp_path / "ragged.rec"
    save_record(rec, p)
    lines = p.read_text().rstrip("\n").split("\n")
    lines[5] = lines[5] + " 1.0"
    p.write_text("\n".join(lines) + "\n")
    with pytest.raises(MalformedRecordError):
        load_record(p)


def test_bad_header_rejected(tmp_path):
    p = tmp_path / "junk.rec"
    p.write_text("not json\n1 2 3\n")
    with pytest.raises(MalformedRecordError):
        load_record(p)
    p.write_text("")
    with pytest.raises(MalformedRecordError):
        load_record(p)


def test_missing_header_key_rejected(tmp_path):
    rec = short_record()
    p = tmp_path / "nokey.rec"
    header = dict(rec.header)
    del header["n_hypotheses"]
    lines = [json.dumps(header, sort_keys=True, separators=(",", ":"))]
    lines += [" ".join(repr(float(v)) for v in row) for row in rec.data]
    p.write_text("\n".join(lines) + "\n")
    with pytest.raises(MalformedRecordError):
        load_record(p)


def test_future_schema_version_rejected(tmp_path):
    rec = short_record()
    p = tmp_path / "future.rec"
    header = dict(rec.header)
    header["schema_version"] = 3
    lines = [json.dumps(header, sort_keys=True, separators=(",", ":"))]
    lines += [" ".join(repr(float(v)) for v in row) for row in rec.data]
    p.write_text("\n".join(lines) + "\n")
    with pytest.raises(SchemaVersionError):
        load_record(p)


def test_v1_record_migrates_with_warning():
    with pytest.warns(RecordMigrationWarning):
        rec = load_record(FIXTURES / "record_v1.rec")
    assert rec.header["schema_version"] == 2
    assert "u_source" in rec.columns
    assert rec.columns.index("u_source") == rec.columns.index("stale") + 1
    assert np.all(rec.column("u_source") == 0.0)  # human mode: driver-sourced


def test_v2_load_emits_no_migration_warning(tmp_path):
    rec = short_record()
    p = tmp_path / "v2.rec"
    save_record(rec, p)
    with warnings.catch_warnings():
        warnings.simplefilter("error", RecordMigrationWarning)
        load_record(p)


def test_time_grid_tamper_rejected(tmp_path):
    rec = short_record()
    p = tmp_path / "grid.rec"
    data = rec.data.copy()
    data[4, 0] += 0.03  # break the Ts grid
    save_record(TrajectoryRecord(rec.header, data), p)
    with pytest.raises(MalformedRecordError):
        load_record(p)


def test_column_access():
    rec = short_record(mode=MODE_AUTONOMY)
    assert len(rec.column("y")) == rec.n_steps
    assert np.array_equal(rec.weights(0), rec.column("w_h0"))
    with pytest.raises(KeyError):
        rec.column("no_such_column")


def test_mode_isolation_columns():
    human = short_record(mode=MODE_HUMAN)
    auto = short_record(mode=MODE_AUTONOMY)
    assert set(np.unique(human.column("u_source"))) == {0.0}
    assert set(np.unique(auto.column("u_source"))) == {1.0}
    assert "w_h0" not in human.columns
    with pytest.raises(KeyError):
        human.weights(0)


def test_trajectory_id_shape():
    rec = short_record(seed=12)
    tid = rec.trajectory_id
    assert tid.endswith("-12")
    assert len(tid.split("-")[0]) == 12
    assert tid.split("-")[0] == rec.header["config_hash"][:12]


def test_record_shape_validation():
    rec = short_record()
    with pytest.raises(MalformedRecordError):
        TrajectoryRecord(rec.header, rec.data[:, :-1])


def test_header_contents():
    rec = short_record(mode=MODE_AUTONOMY, seed=5)
    h = rec.header
    assert h["format"] == "drivelab-trajectory"
    assert h["mode"] == MODE_AUTONOMY
    assert h["Ts"] == 0.1
    assert h["n_steps"] == rec.n_steps == 20
    assert h["n_hypotheses"] == 2
    assert h["seed"] == 5
    assert h["partial"] is False
    assert h["config_hash"] == config_hash(h["config"])
    assert h["columns"] == record_columns(2, MODE_AUTONOMY)
