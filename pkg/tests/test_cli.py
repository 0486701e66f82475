from __future__ import annotations

import hashlib
import json
import subprocess
import sys

import pytest

from gossipsim.cli import EXIT_OK, EXIT_RUNTIME, EXIT_USAGE, main
from gossipsim.diagnostics import read_trace_csv

SMALL = {
    "n": 4,
    "rounds": 5,
    "seed": 7,
    "churn": {"dropout_p": 0.2, "lambda": 1.0},
    "partition": {"scheme": "dirichlet", "alpha": 1.0},
    "suite": {"classes": 3, "dim": 4, "total": 40},
}


def _write_config(tmp_path, payload, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return str(path)


def _sha(path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def test_run_default_config_produces_fifty_rows(tmp_path):
    cfg = _write_config(tmp_path, {})
    out = tmp_path / "out"
    assert main(["run", "--config", cfg, "--out", str(out)]) == EXIT_OK
    rows = read_trace_csv(out / "trace.csv")
    assert len(rows) == 50
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["config"]["n"] == 14
    assert manifest["seeds"] == [0]
    assert len(manifest["suite_sha256"]) == 64


def test_run_rejects_zero_eta_naming_field(tmp_path, capsys):
    cfg = _write_config(tmp_path, dict(SMALL, eta=0.0))
    code = main(["run", "--config", cfg, "--out", str(tmp_path / "out")])
    assert code == EXIT_USAGE
    assert "eta" in capsys.readouterr().err


def test_run_rejects_unknown_field(tmp_path, capsys):
    cfg = _write_config(tmp_path, dict(SMALL, learning_rate=0.1))
    code = main(["run", "--config", cfg, "--out", str(tmp_path / "out")])
    assert code == EXIT_USAGE
    assert "learning_rate" in capsys.readouterr().err


def test_run_rejects_malformed_json_with_line_info(tmp_path, capsys):
    path = tmp_path / "broken.json"
    path.write_text('{"n": 4,,}')
    code = main(["run", "--config", str(path), "--out", str(tmp_path / "out")])
    assert code == EXIT_USAGE
    assert "line" in capsys.readouterr().err


def test_run_same_seed_twice_identical_sha(tmp_path):
    cfg = _write_config(tmp_path, SMALL)
    out1, out2 = tmp_path / "o1", tmp_path / "o2"
    assert main(["run", "--config", cfg, "--out", str(out1)]) == EXIT_OK
    assert main(["run", "--config", cfg, "--out", str(out2)]) == EXIT_OK
    assert _sha(out1 / "trace.csv") == _sha(out2 / "trace.csv")
    assert (out1 / "manifest.json").read_bytes() == (out2 / "manifest.json").read_bytes()


def test_run_seed_flag_overrides(tmp_path):
    cfg = _write_config(tmp_path, SMALL)
    out1, out2 = tmp_path / "o1", tmp_path / "o2"
    assert main(["run", "--config", cfg, "--out", str(out1), "--seed", "8"]) == EXIT_OK
    assert main(["run", "--config", cfg, "--out", str(out2)]) == EXIT_OK
    assert _sha(out1 / "trace.csv") != _sha(out2 / "trace.csv")
    assert json.loads((out1 / "manifest.json").read_text())["seeds"] == [8]


def test_sweep_layout_and_summary(tmp_path):
    cfg = _write_config(tmp_path, SMALL)
    out = tmp_path / "sweep"
    code = main([
        "sweep", "--config", cfg, "--axis", "dropout_p",
        "--values", "0,0.1,0.2", "--seeds", "1,2", "--out", str(out),
    ])
    assert code == EXIT_OK
    traces = sorted(out.glob("runs/*/*/trace.csv"))
    assert len(traces) == 6
    lines = (out / "summary.csv").read_text().splitlines()
    assert len(lines) == 4  # header + one row per value
    assert lines[0].startswith("axis,value,runs,")
    assert all(line.split(",")[2] == "2" for line in lines[1:])


def test_sweep_summary_matches_recomputation(tmp_path):
    import numpy as np

    cfg = _write_config(tmp_path, SMALL)
    out = tmp_path / "sweep"
    main(["sweep", "--config", cfg, "--axis", "lambda",
          "--values", "0.5,1", "--seeds", "1,2,3", "--out", str(out)])
    lines = (out / "summary.csv").read_text().splitlines()[1:]
    for line in lines:
        cells = line.split(",")
        label = cells[1]
        finals = [
            read_trace_csv(p)[-1].dist_wtilde_sq
            for p in sorted(out.glob(f"runs/lambda={label}/seed=*/trace.csv"))
        ]
        assert float(cells[3]) == pytest.approx(np.mean(finals), rel=1e-10)
        assert float(cells[4]) == pytest.approx(np.std(finals, ddof=1), rel=1e-10)


def test_sweep_alpha_axis_accepts_inf(tmp_path):
    cfg = _write_config(tmp_path, SMALL)
    out = tmp_path / "sweep"
    code = main(["sweep", "--config", cfg, "--axis", "alpha",
                 "--values", "1,inf", "--seeds", "1", "--out", str(out)])
    assert code == EXIT_OK
    assert (out / "runs" / "alpha=inf" / "seed=1" / "trace.csv").exists()


def test_sweep_unknown_axis_exits_two(tmp_path, capsys):
    cfg = _write_config(tmp_path, SMALL)
    code = main(["sweep", "--config", cfg, "--axis", "gravity",
                 "--values", "1", "--seeds", "1", "--out", str(tmp_path / "s")])
    assert code == EXIT_USAGE
    assert "axis" in capsys.readouterr().err


def test_sweep_empty_values_exits_two(tmp_path):
    cfg = _write_config(tmp_path, SMALL)
    code = main(["sweep", "--config", cfg, "--axis", "dropout_p",
                 "--values", "", "--seeds", "1", "--out", str(tmp_path / "s")])
    assert code == EXIT_USAGE


def test_check_passes_on_fresh_sweep_and_is_stable(tmp_path, capsys):
    cfg = _write_config(tmp_path, SMALL)
    out = tmp_path / "sweep"
    main(["sweep", "--config", cfg, "--axis", "dropout_p",
          "--values", "0,0.2", "--seeds", "1,2", "--out", str(out)])
    assert main(["check", "--out", str(out)]) == EXIT_OK
    first = capsys.readouterr().out
    assert main(["check", "--out", str(out)]) == EXIT_OK
    second = capsys.readouterr().out
    assert first == second
    assert "PASS" in first and "FAIL" not in first


def test_check_flags_tampered_trace(tmp_path, capsys):
    cfg = _write_config(tmp_path, SMALL)
    out = tmp_path / "run"
    main(["run", "--config", cfg, "--out", str(out)])
    trace = out / "trace.csv"
    lines = trace.read_text().splitlines()
    cells = lines[1].split(",")
    cells[3] = "-1.0"  # negative dist_wbar_sq
    lines[1] = ",".join(cells)
    trace.write_text("\n".join(lines) + "\n")
    assert main(["check", "--out", str(out)]) == EXIT_RUNTIME
    assert "nonnegative distances" in capsys.readouterr().out


def test_check_missing_outputs_exits_two(tmp_path):
    assert main(["check", "--out", str(tmp_path / "nothing")]) == EXIT_USAGE
    empty = tmp_path / "empty"
    empty.mkdir()
    assert main(["check", "--out", str(empty)]) == EXIT_USAGE


def test_sweep_parallel_jobs_match_serial(tmp_path, monkeypatch):
    cfg = _write_config(tmp_path, SMALL)
    serial, parallel = tmp_path / "serial", tmp_path / "parallel"
    args = ["sweep", "--config", cfg, "--axis", "dropout_p",
            "--values", "0,0.2", "--seeds", "1,2"]
    assert main(args + ["--out", str(serial)]) == EXIT_OK
    monkeypatch.setenv("GOSSIPSIM_JOBS", "2")
    assert main(args + ["--out", str(parallel)]) == EXIT_OK
    assert (serial / "summary.csv").read_bytes() == (parallel / "summary.csv").read_bytes()
    for trace in serial.glob("runs/*/*/trace.csv"):
        twin = parallel / trace.relative_to(serial)
        assert trace.read_bytes() == twin.read_bytes()


def test_module_entrypoint_runs():
    proc = subprocess.run(
        [sys.executable, "-m", "gossipsim", "--version"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0
    assert "gossipsim" in proc.stdout
