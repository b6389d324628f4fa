"""End-to-end artifact and command-line tests."""

import hashlib
import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

import stolab as sl
from stolab.cli import main as cli_main
from stolab.errors import AnalysisError

TRAJ = {
    "schema_version": 1,
    "experiment": "trajectory",
    "device": {"temperature": 0.0},
    "network": {"i_dc": 2.2e-4},
    "analysis": {"duration": 4.0e-7, "settle_time": 1.0e-7,
                 "segment_len": 4096, "check_parseval": False},
    "master_seed": 3,
}

MIX = {
    "schema_version": 1,
    "experiment": "mixer_sweep",
    "device": {"temperature": 0.0},
    "network": {"i_dc": 2.2e-4},
    "analysis": {"f_carrier_hint": 9.0e8, "sample_stride": 16},
    "sweep": {"i_ac": [6.32e-6, 1.0e-5, 1.59e-5, 2.52e-5, 4.0e-5],
              "f_rf": 2.0e8, "settle_time": 3.0e-7, "measure_time": 6.0e-7},
    "master_seed": 0,
}


def _write(tmp: Path, doc: dict, name: str = "cfg.json") -> Path:
    path = tmp / name
    path.write_text(json.dumps(doc))
    return path


def _read_manifest(out: Path) -> dict:
    return json.loads((out / "manifest.json").read_text())


def _files_equal(a: Path, b: Path) -> bool:
    return a.read_bytes() == b.read_bytes()


# ---------------------------------------------------------------------------
# run_experiment


def test_run_experiment_writes_declared_artifacts(tmp_path):
    cfg = sl.parse_config(json.dumps(TRAJ))
    out = tmp_path / "run"
    man = sl.run_experiment(cfg, out_dir=str(out))
    assert man.experiment == "trajectory"
    assert man.master_seed == 3
    for name in man.artifacts:
        assert (out / name).is_file()
    assert set(man.artifacts) >= {"trace.csv", "spectrum.csv",
                                  "metrics.json", "config.json"}
    assert (out / "manifest.json").is_file()
    # manifest hash covers the canonical config copy byte for byte
    digest = hashlib.sha256((out / "config.json").read_bytes()).hexdigest()
    assert man.config_sha256 == digest
    assert man.wall_time_s > 0.0


def test_artifact_headers_and_float_round_trip(tmp_path):
    cfg = sl.parse_config(json.dumps(TRAJ))
    out = tmp_path / "run"
    sl.run_experiment(cfg, out_dir=str(out))
    spec_lines = (out / "spectrum.csv").read_text().splitlines()
    assert spec_lines[0] == "freq_hz,psd_v2_per_hz"
    trace_lines = (out / "trace.csv").read_text().splitlines()
    assert trace_lines[0] == "time_s,m_x_0,m_y_0,m_z_0,v_0,i_inj_0"
    # %.17g cells reproduce the in-memory doubles exactly
    from stolab.config import build_network, build_stepper
    net = build_network(cfg)
    st = build_stepper(cfg)
    tr = sl.simulate_network(net, st, cfg.analysis.duration,
                             sample_stride=cfg.analysis.sample_stride,
                             master_seed=cfg.master_seed)
    row = trace_lines[1].split(",")
    assert float(row[0]) == tr.time()[0]
    assert float(row[1]) == tr.m[0, 0, 0]
    assert float(row[4]) == tr.voltage[0, 0]
    k = len(trace_lines) - 2  # last sample
    row_last = trace_lines[-1].split(",")
    assert float(row_last[2]) == tr.m[0, k, 1]
    assert float(row_last[4]) == tr.voltage[0, k]


def test_metrics_content(tmp_path):
    cfg = sl.parse_config(json.dumps(TRAJ))
    out = tmp_path / "run"
    sl.run_experiment(cfg, out_dir=str(out))
    metrics = json.loads((out / "metrics.json").read_text())
    assert 3e8 < metrics["f_carrier_hz"] < 3e9
    assert metrics["carrier_band_power_w"] > 0.0
    assert metrics["linewidth_hz"] > 0.0
    assert metrics["resolution_bw_hz"] > 0.0


def test_rerun_is_byte_identical(tmp_path):
    cfg = sl.parse_config(json.dumps(TRAJ))
    out1 = tmp_path / "a"
    out2 = tmp_path / "b"
    man1 = sl.run_experiment(cfg, out_dir=str(out1))
    man2 = sl.run_experiment(cfg, out_dir=str(out2))
    for name in man1.artifacts:
        assert _files_equal(out1 / name, out2 / name), name
    d1 = _read_manifest(out1)
    d2 = _read_manifest(out2)
    d1.pop("wall_time_s")
    d2.pop("wall_time_s")
    assert d1 == d2
    assert man1.artifacts == man2.artifacts


def test_seed_override_changes_run_and_manifest(tmp_path):
    doc = dict(TRAJ)
    doc["device"] = {"temperature": 300.0}
    cfg = sl.parse_config(json.dumps(doc))
    out1 = tmp_path / "a"
    out2 = tmp_path / "b"
    sl.run_experiment(cfg, out_dir=str(out1))
    man2 = sl.run_experiment(cfg, out_dir=str(out2), seed=7)
    assert man2.master_seed == 7
    assert not _files_equal(out1 / "trace.csv", out2 / "trace.csv")
    # the stored config copy reflects the effective seed and re-parses
    stored = sl.parse_config((out2 / "config.json").read_text())
    assert stored.master_seed == 7
    digest = hashlib.sha256((out2 / "config.json").read_bytes()).hexdigest()
    assert man2.config_sha256 == digest


def test_mixer_sweep_threads_agree(tmp_path):
    cfg = sl.parse_config(json.dumps(MIX))
    out1 = tmp_path / "t1"
    out2 = tmp_path / "t4"
    man1 = sl.run_experiment(cfg, out_dir=str(out1), threads=1)
    man2 = sl.run_experiment(cfg, out_dir=str(out2), threads=4)
    assert set(man1.artifacts) == set(man2.artifacts)
    for name in man1.artifacts:
        assert _files_equal(out1 / name, out2 / name), name
    points = json.loads((out1 / "mixer_points.json").read_text())
    assert len(points) == len(MIX["sweep"]["i_ac"])
    assert all("conversion_gain_db" in pt for pt in points)
    curves = (out1 / "mixer_curves.csv").read_text().splitlines()
    assert curves[0].startswith("p_in_dbm,i_ac_a,f_osc_hz")
    assert len(curves) == 1 + len(MIX["sweep"]["i_ac"])


# ---------------------------------------------------------------------------
# command line


def test_cli_validate_and_simulate(tmp_path, capsys):
    path = _write(tmp_path, TRAJ)
    assert cli_main(["validate", "--config", str(path)]) == 0
    out = capsys.readouterr().out
    assert "ok:" in out and "experiment=trajectory" in out

    run_dir = tmp_path / "run"
    rc = cli_main(["simulate", "--config", str(path), "--out", str(run_dir)])
    assert rc == 0
    out = capsys.readouterr().out
    assert "manifest.json" in out
    assert (run_dir / "trace.csv").is_file()


def test_cli_rejects_bad_documents(tmp_path, capsys):
    bad = _write(tmp_path, {**TRAJ, "bogus": 1}, "bad.json")
    assert cli_main(["simulate", "--config", str(bad)]) == 1
    err = capsys.readouterr().err
    assert err.startswith("config error:")
    assert "bogus" in err

    missing = tmp_path / "missing.json"
    assert cli_main(["validate", "--config", str(missing)]) == 1

    # verb/experiment mismatch
    mix_path = _write(tmp_path, MIX, "mix.json")
    assert cli_main(["simulate", "--config", str(mix_path)]) == 1
    assert "mixer_sweep" in capsys.readouterr().err


def test_cli_simulation_failure_exit_code(tmp_path, capsys):
    doc = dict(TRAJ)
    doc["network"] = {"i_dc": 1e130}  # drives m to non-finite values
    path = _write(tmp_path, doc, "blow.json")
    rc = cli_main(["simulate", "--config", str(path),
                   "--out", str(tmp_path / "x")])
    assert rc == 2
    assert "simulation error:" in capsys.readouterr().err


def test_cli_analysis_failure_exit_code(tmp_path, capsys):
    doc = dict(MIX)
    doc["experiment"] = "iip3"
    doc["sweep"] = dict(doc["sweep"], measure_time=5e-8)  # too short to resolve
    path = _write(tmp_path, doc, "short.json")
    rc = cli_main(["iip3", "--config", str(path), "--out", str(tmp_path / "x")])
    assert rc == 3
    assert "analysis error:" in capsys.readouterr().err


def test_cli_seed_flag(tmp_path, capsys):
    doc = dict(TRAJ)
    doc["device"] = {"temperature": 300.0}
    path = _write(tmp_path, doc)
    run_dir = tmp_path / "seeded"
    rc = cli_main(["simulate", "--config", str(path), "--out", str(run_dir),
                   "--seed", "11"])
    assert rc == 0
    capsys.readouterr()
    assert _read_manifest(run_dir)["master_seed"] == 11


def test_console_entry_point(tmp_path):
    # the installed command must behave like the in-process main
    path = _write(tmp_path, TRAJ)
    proc = subprocess.run(
        [sys.executable, "-m", "stolab.cli", "validate", "--config", str(path)],
        capture_output=True, text=True)
    assert proc.returncode == 0
    assert "ok:" in proc.stdout
