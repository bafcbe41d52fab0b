import json
import os

import numpy as np
import pytest

from vortexberry.cli import main, run


def _cfg(tmp_path, payload, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return str(path)


def test_solve_report_and_exit(tmp_path):
    cfg = {"experiment": "solve", "grid": {"n": 64, "side_length": 1.0},
           "tau_over_tau0": 2.0, "divisor": [[0.5, 0.5]], "tol": 0.02}
    out = tmp_path / "out"
    code = run(cfg, str(out))
    assert code == 0
    report = json.loads((out / "report.json").read_text())
    assert 0.99 <= report["energy_over_bound"] <= 1.01
    assert all(report["checks"].values())
    assert report["conventions_version"]
    assert (out / "phi.dat").exists()


def test_malformed_config_exit2_no_outputs(tmp_path):
    out = tmp_path / "out"
    code = run({"experiment": "solve", "grid": {"n": 7},
                "divisor": [[0.5, 0.5]]}, str(out))
    assert code == 2
    assert not out.exists() or not any(out.iterdir())
    code = run({"experiment": "solve", "grid": {"n": 64},
                "divisor": [[0.5, 0.5]], "tau_over_tau0": 0.5}, str(out))
    assert code == 2


def test_solver_failure_exit3(tmp_path):
    # under-resolved grid: configuration error -> exit 2
    cfg = {"experiment": "solve", "grid": {"n": 8, "side_length": 1.0},
           "tau_over_tau0": 2.0, "divisor": [[0.5, 0.5]]}
    assert run(cfg, str(tmp_path / "o1")) == 2
    # unreachable tolerance -> solver error -> exit 3
    cfg = {"experiment": "solve", "grid": {"n": 64, "side_length": 1.0},
           "tau_over_tau0": 2.0, "divisor": [[0.5, 0.5]], "tol": 1e-9}
    assert run(cfg, str(tmp_path / "o2")) == 3


def test_report_determinism(tmp_path):
    cfg = {"experiment": "solve", "grid": {"n": 32, "side_length": 1.0},
           "tau_over_tau0": 2.0, "divisor": [[0.52, 0.48]], "tol": 0.05}
    run(cfg, str(tmp_path / "a"))
    run(cfg, str(tmp_path / "b"))
    assert (tmp_path / "a" / "report.json").read_bytes() == \
        (tmp_path / "b" / "report.json").read_bytes()
    assert (tmp_path / "a" / "phi.dat").read_bytes() == \
        (tmp_path / "b" / "phi.dat").read_bytes()


def test_main_entry(tmp_path, capsys):
    cfg = _cfg(tmp_path, {"grid": {"n": 32, "side_length": 1.0},
                          "tau_over_tau0": 2.0, "divisor": [[0.52, 0.48]],
                          "tol": 0.05, "experiment": "solve"})
    code = main(["solve", "--config", cfg, "--out", str(tmp_path / "out")])
    assert code == 0
    assert "all configured checks passed" in capsys.readouterr().out
    assert main(["solve", "--config", str(tmp_path / "missing.json")]) == 2


def test_frame_runner(tmp_path):
    cfg = {"experiment": "frame", "grid": {"n": 48, "side_length": 1.0},
           "tau_over_tau0": 4.0, "divisor": [[0.5, 0.5]], "tol": 0.02}
    out = tmp_path / "frame"
    assert run(cfg, str(out)) == 0
    report = json.loads((out / "report.json").read_text())
    assert report["checks"]["gram_symmetric"]
    assert (out / "xy_diff.csv").exists()


def test_curvature_runner(tmp_path):
    cfg = {"experiment": "curvature", "grid": {"n": 48, "side_length": 1.0},
           "tau_over_tau0": 4.0, "divisor": [[0.5, 0.5]], "tol": 0.02}
    out = tmp_path / "curv"
    assert run(cfg, str(out)) == 0
    assert (out / "curvature_profile.csv").exists()
