import json

import numpy as np
import pytest
import yaml

from drivelab.cli import main
from drivelab.config import ScenarioConfig, save_config
from drivelab.records import load_record
from drivelab.steering import DEFAULT_DRIVER_COEFFICIENTS


def test_simulate_writes_record(tmp_path, capsys):
    out = tmp_path / "run.rec"
    code = main([
        "simulate", "--mode", "human-in-control", "--seed", "3",
        "--out", str(out),
    ])
    assert code == 0
    rec = load_record(out)
    assert rec.n_steps == 300
    assert rec.header["seed"] == 3
    text = capsys.readouterr().out
    assert "human-in-control: 300 steps" in text
    assert "seed=3" in text


def test_simulate_config_with_overrides(tmp_path):
    cfg_path = tmp_path / "scenario.yaml"
    save_config(ScenarioConfig(duration=5.0, seed=1), cfg_path)
    out = tmp_path / "run.rec"
    main([
        "simulate", "--config", str(cfg_path),
        "--mode", "autonomy-in-control", "--seed", "9", "--out", str(out),
    ])
    rec = load_record(out)
    assert rec.mode == "autonomy-in-control"
    assert rec.header["seed"] == 9
    assert rec.header["duration"] == 5.0
    assert "w_h0" in rec.columns


def test_analyze_report(tmp_path, capsys):
    paths = []
    for seed in (0, 1, 2):
        p = tmp_path / f"run{seed}.rec"
        main(["simulate", "--mode", "human-in-control", "--seed", str(seed),
              "--out", str(p)])
        paths.append(str(p))
    capsys.readouterr()
    report = tmp_path / "analysis.json"
    code = main(["analyze", "--records", *paths, "--report", str(report)])
    assert code == 0
    out = capsys.readouterr().out
    assert out.count("white=") == 3
    assert "central CDF: index" in out
    data = json.loads(report.read_text())
    assert len(data["records"]) == 3
    assert data["alpha"] == 0.05
    assert "central_index" in data
    for row in data["records"]:
        assert row["mode"] == "human-in-control"
        assert isinstance(row["is_white"], bool)


def test_analyze_with_explicit_coeffs(tmp_path, capsys):
    rec_path = tmp_path / "run.rec"
    main(["simulate", "--mode", "human-in-control", "--out", str(rec_path)])
    coeff_path = tmp_path / "coeffs.yaml"
    vec = [float(v) for v in DEFAULT_DRIVER_COEFFICIENTS.as_vector()]
    coeff_path.write_text(yaml.safe_dump(vec))
    code = main(["analyze", "--records", str(rec_path),
                 "--coeffs", str(coeff_path)])
    assert code == 0
    assert "white=yes" in capsys.readouterr().out


def test_fit_round_trip(tmp_path, capsys):
    rec_paths = []
    for i, y0 in enumerate((-0.5, 1.2, -1.5)):
        cfg = ScenarioConfig(duration=30.0, seed=50 + i)
        cfg.initial.y = y0
        cfg.initial.theta = 0.03 * (i - 1)
        cfg.initial.v = 13.0 + i
        cfg_path = tmp_path / f"cfg{i}.yaml"
        save_config(cfg, cfg_path)
        p = tmp_path / f"fit{i}.rec"
        main(["simulate", "--config", str(cfg_path), "--out", str(p)])
        rec_paths.append(str(p))
    out = tmp_path / "fitted.yaml"
    code = main(["fit", "--records", *rec_paths, "--out", str(out)])
    assert code == 0
    assert "fitted [" in capsys.readouterr().out
    payload = yaml.safe_load(out.read_text())
    fitted = np.array(
        payload["a"] + payload["b"] + [payload["c0"]] + payload["d"]
    )
    assert fitted.shape == (9,)
    assert np.all(np.isfinite(fitted))
    diag = payload["diagnostics"]
    assert diag["n_samples"] == 3 * 297
    assert len(diag["stderr"]) == 9
    # the dumped mapping is directly consumable by analyze
    code = main(["analyze", "--records", rec_paths[0], "--coeffs", str(out)])
    assert code == 0


def test_batch_summary_and_records(tmp_path, capsys):
    out_dir = tmp_path / "records"
    report = tmp_path / "summary.json"
    code = main([
        "batch", "--runs", "3", "--out-dir", str(out_dir),
        "--report", str(report),
    ])
    assert code == 0
    out = capsys.readouterr().out
    assert out.count("white=") == 3
    assert "summary hash " in out
    assert len(list(out_dir.glob("*.rec"))) == 3
    summary = json.loads(report.read_text())
    assert summary["n_completed"] == 3
    assert summary["seeds"] == [0, 1, 2]


def test_batch_reports_errors_with_exit_code(tmp_path, capsys):
    cfg = ScenarioConfig(duration=5.0)
    cfg.driver.kind = "live-session"  # no driver object -> every run fails
    cfg_path = tmp_path / "broken.yaml"
    save_config(cfg, cfg_path)
    code = main(["batch", "--config", str(cfg_path), "--runs", "2"])
    assert code == 1
    err = capsys.readouterr().err
    assert err.count("FAILED") == 2


def test_batch_explicit_seeds(tmp_path):
    report = tmp_path / "s.json"
    main(["batch", "--runs", "2", "--seeds", "7", "11",
          "--report", str(report)])
    assert json.loads(report.read_text())["seeds"] == [7, 11]


def test_serve_requires_config_source(capsys):
    code = main(["serve", "--port", "1"])
    assert code == 2
    assert "--config" in capsys.readouterr().err


def test_parser_rejects_unknown_mode():
    with pytest.raises(SystemExit):
        main(["simulate", "--mode", "telepathy"])
    with pytest.raises(SystemExit):
        main(["batch"])  # --runs is required
    with pytest.raises(SystemExit):
        main([])
